"""Force-field fits: printed values, symmetries, zero sets and derivatives."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from zelf.forcefield import (
    RECT_1X2,
    RECT_2X1,
    DomainError,
    cross_section,
    drag,
    drag_jacobian,
    lift,
    lift_jacobian,
)

from conftest import interior_points

CS = [RECT_2X1, RECT_1X2]


# Independent re-typing of the printed fits, one expression per component.
def lr_2x1_ref(r, z):
    return r * (1 - 0.0643 * r**6 - 25.5128 * z**6 - 31.1 * (1 - 0.4006 * r**2) * z**4) * math.exp(
        0.505 + 0.427 * r**2 - 5.081 * z**2 - 0.2 * r**4 + 1.518 * r**2 * z**2 + 0.594 * z**4
        + 0.042 * r**6 + 0.007 * r**4 * z**2 - 2.283 * r**2 * z**4 + 2.8 * z**6)


def lz_2x1_ref(r, z):
    return z * (1 - 9.0878 * z**6 - 0.0316 * r**8 - 1.6 * (1 - 0.1778 * r**4) * z**2) * math.exp(
        3.030 - 1.168 * z**2 - 0.536 * r**2 - 2.199 * z**4 + 0.476 * r**2 * z**2 + 0.104 * r**4
        + 2.094 * z**6 + 0.051 * r**2 * z**4 - 0.212 * r**4 * z**2 - 0.033 * r**6)


def drag_1x2_ref(r, z):
    C = 0.018542
    return (6 * math.pi * C * (1 - r**2) ** 2 * (1 - 0.25 * z**2) * (1 - 1.25 * z**2),
            24 * math.pi * C * r * z * (1 - r**2) * (1 - 0.25 * z**2) ** 2)


def drag_2x1_ref(r, z):
    C = 0.02319
    return (6 * math.pi * C * (1 - 0.25 * r**2) ** 2 * (1 - z**2) * (1 - 5 * z**2),
            6 * math.pi * C * r * z * (1 - 0.25 * r**2) * (1 - z**2) ** 2)


def test_lift_vanishes_at_origin():
    assert lift(RECT_2X1, 0.0, 0.0) == (0.0, 0.0)


def test_lift_root_near_table_node():
    # the stable node at (0, 0.6): L_z has a root within 1e-3 of 0.6
    from scipy.optimize import brentq

    root = brentq(lambda z: lift(RECT_2X1, 0.0, z).fz, 0.5, 0.7)
    assert abs(root - 0.6) < 1e-3
    assert abs(lift(RECT_2X1, 0.0, root).fz) < 1e-12


def test_lift_rotation_example():
    a = lift(RECT_1X2, 0.3, 1.2)
    b = lift(RECT_2X1, 1.2, 0.3)
    assert (a.fr, a.fz) == (b.fz, b.fr)


@pytest.mark.parametrize("r,z", [(0.7, 0.3), (-1.3, 0.45), (1.9, -0.95), (0.0, 0.99)])
def test_lift_matches_independent_retyping(r, z):
    got = lift(RECT_2X1, r, z)
    assert got.fr == pytest.approx(lr_2x1_ref(r, z), rel=1e-13, abs=1e-15)
    assert got.fz == pytest.approx(lz_2x1_ref(r, z), rel=1e-13, abs=1e-15)


def test_drag_at_origin():
    d = drag(RECT_2X1, 0.0, 0.0)
    assert d.fr == pytest.approx(6 * math.pi * 0.02319, rel=1e-15)
    assert d.fz == 0.0


def test_drag_zero_at_center_point():
    d = drag(RECT_2X1, 0.0, 1 / math.sqrt(5))
    assert abs(d.fr) < 1e-15 and d.fz == 0.0


@pytest.mark.parametrize("r,z", [(0.5, 0.5), (-0.3, 1.7), (0.9, -0.2)])
def test_drag_1x2_matches_independent_retyping(r, z):
    got = drag(RECT_1X2, r, z)
    ref = drag_1x2_ref(r, z)
    assert got.fr == pytest.approx(ref[0], rel=1e-13, abs=1e-16)
    assert got.fz == pytest.approx(ref[1], rel=1e-13, abs=1e-16)


def test_drag_2x1_matches_independent_retyping(rng):
    for r, z in zip(*interior_points(rng, RECT_2X1, 50)):
        got = drag(RECT_2X1, r, z)
        ref = drag_2x1_ref(r, z)
        assert got.fr == pytest.approx(ref[0], rel=1e-12, abs=1e-15)
        assert got.fz == pytest.approx(ref[1], rel=1e-12, abs=1e-15)


def test_drag_jacobian_axis_example():
    assert drag_jacobian(RECT_2X1, 0.0, 0.0).d_fr_dr == 0.0


@pytest.mark.parametrize("cs", CS, ids=str)
def test_domain_errors(cs):
    with pytest.raises(DomainError):
        lift(cs, cs.half_width + 1e-9, 0.0)
    with pytest.raises(DomainError):
        drag(cs, 0.0, -cs.half_height - 1e-9)
    # closed domain for values, open for derivatives
    lift(cs, cs.half_width, cs.half_height)
    with pytest.raises(DomainError):
        lift_jacobian(cs, cs.half_width, 0.0)


def test_cross_section_lookup():
    assert cross_section("1x2") is RECT_1X2
    with pytest.raises(ValueError):
        cross_section("3x1")


def test_vectorised_matches_scalar(rng):
    r, z = interior_points(rng, RECT_2X1, 20)
    v = lift(RECT_2X1, r, z)
    for k in range(20):
        s = lift(RECT_2X1, float(r[k]), float(z[k]))
        assert v.fr[k] == s.fr and v.fz[k] == s.fz


# ---------------------------------------------------------------------------
# Symmetries and zero sets


@pytest.mark.parametrize("cs", CS, ids=str)
def test_parity(cs, rng):
    r, z = interior_points(rng, cs, 1000)
    L, Lm_r, Lm_z = lift(cs, r, z), lift(cs, -r, z), lift(cs, r, -z)
    D, Dm_r, Dm_z = drag(cs, r, z), drag(cs, -r, z), drag(cs, r, -z)
    assert np.max(np.abs(L.fr + Lm_r.fr)) < 1e-12
    assert np.max(np.abs(L.fr - Lm_z.fr)) < 1e-12
    assert np.max(np.abs(L.fz - Lm_r.fz)) < 1e-12
    assert np.max(np.abs(L.fz + Lm_z.fz)) < 1e-12
    assert np.max(np.abs(D.fr - Dm_r.fr)) < 1e-12
    assert np.max(np.abs(D.fr - Dm_z.fr)) < 1e-12
    assert np.max(np.abs(D.fz + Dm_r.fz)) < 1e-12
    assert np.max(np.abs(D.fz + Dm_z.fz)) < 1e-12


def test_rotation_identity_exact(rng):
    r, z = interior_points(rng, RECT_1X2, 500)
    a = lift(RECT_1X2, r, z)
    b = lift(RECT_2X1, z, r)
    assert np.array_equal(a.fr, b.fz) and np.array_equal(a.fz, b.fr)


@pytest.mark.parametrize("cs", CS, ids=str)
def test_drag_divergence_free(cs, rng):
    r, z = interior_points(rng, cs, 1000)
    J = drag_jacobian(cs, r, z)
    assert np.max(np.abs(J.d_fr_dr + J.d_fz_dz)) < 1e-12


def test_zero_level_anchors(rng):
    r = rng.uniform(-2, 2, 200)
    for zz in (1 / math.sqrt(5), -1 / math.sqrt(5), 1.0, -1.0):
        assert np.max(np.abs(drag(RECT_2X1, r, np.full_like(r, zz)).fr)) < 1e-14
    r = rng.uniform(-1, 1, 200)
    z = rng.uniform(-2, 2, 200)
    for zz in (2 / math.sqrt(5), -2 / math.sqrt(5)):
        assert np.max(np.abs(drag(RECT_1X2, r, np.full_like(r, zz)).fr)) < 1e-14
    for rr in (1.0, -1.0):
        assert np.max(np.abs(drag(RECT_1X2, np.full_like(z, rr), z).fr)) < 1e-14


# ---------------------------------------------------------------------------
# Jacobians against central differences


def _fd(f, cs, r, z, h=1e-5):
    pr, mr = f(cs, r + h, z), f(cs, r - h, z)
    pz, mz = f(cs, r, z + h), f(cs, r, z - h)
    return ((pr.fr - mr.fr) / (2 * h), (pz.fr - mz.fr) / (2 * h),
            (pr.fz - mr.fz) / (2 * h), (pz.fz - mz.fz) / (2 * h))


def _rel_err(an, fd):
    an = np.asarray(an, dtype=float)
    fd = np.asarray(fd, dtype=float)
    # relative to the Jacobian's overall scale at the point, so entries that
    # vanish by symmetry do not divide by zero
    return np.max(np.abs(an - fd)) / np.max(np.abs(an))


def test_lift_jacobian_example_point():
    an = lift_jacobian(RECT_2X1, 0.7, 0.3)
    assert _rel_err(an, _fd(lift, RECT_2X1, 0.7, 0.3)) < 1e-5


@pytest.mark.parametrize("cs", CS, ids=str)
@pytest.mark.parametrize("field,jac", [(lift, lift_jacobian), (drag, drag_jacobian)],
                         ids=["lift", "drag"])
def test_jacobian_vs_finite_differences(cs, field, jac, rng):
    r, z = interior_points(rng, cs, 100, margin=0.95)
    for a, b in zip(r, z):
        assert _rel_err(jac(cs, a, b), _fd(field, cs, a, b)) < 1e-5


@given(r=st.floats(-0.999, 0.999), z=st.floats(-0.999, 0.999))
def test_parity_property(r, z):
    for cs in CS:
        rr, zz = r * cs.half_width, z * cs.half_height
        L, M = lift(cs, rr, zz), lift(cs, -rr, -zz)
        assert L.fr == pytest.approx(-M.fr, abs=1e-12)
        assert L.fz == pytest.approx(-M.fz, abs=1e-12)
        D, E = drag(cs, rr, zz), drag(cs, -rr, -zz)
        assert D.fr == pytest.approx(E.fr, abs=1e-12)
        assert D.fz == pytest.approx(E.fz, abs=1e-12)


@given(r=st.floats(-0.99, 0.99), z=st.floats(-0.99, 0.99))
def test_divergence_property(r, z):
    for cs in CS:
        J = drag_jacobian(cs, r * cs.half_width, z * cs.half_height)
        assert abs(J.d_fr_dr + J.d_fz_dz) < 1e-12


@given(r=st.floats(-0.99, 0.99), z=st.floats(-0.99, 0.99))
def test_jacobian_rotation_property(r, z):
    a = lift_jacobian(RECT_1X2, r, 2 * z)
    b = lift_jacobian(RECT_2X1, 2 * z, r)
    assert (a.d_fr_dr, a.d_fr_dz, a.d_fz_dr, a.d_fz_dz) == (
        b.d_fz_dz, b.d_fz_dr, b.d_fr_dz, b.d_fr_dr)
