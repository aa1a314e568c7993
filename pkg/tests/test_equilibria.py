"""Multistart Newton, classification and eigen-data."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from zelf.dynamics import ModelParams, rhs
from zelf.equilibria import (
    Kind,
    _eig2,
    classify,
    eigensystem,
    equilibria_to_csv,
    equilibria_to_json,
    find_equilibria,
    newton,
)
from zelf.forcefield import RECT_1X2, RECT_2X1

A = 0.05
LIST_2X1 = [(0.0, 0.0), (0.0, 0.6), (0.0, -0.6), (1.58, 0.0), (-1.58, 0.0),
            (1.5303, 0.4094), (1.5303, -0.4094), (-1.5303, 0.4094), (-1.5303, -0.4094)]


def _match(points, eqs, tol):
    for p in points:
        assert min(math.dist(p, e.location) for e in eqs) < tol, p


def test_lift_only_2x1_nine_points():
    eqs = find_equilibria(ModelParams(RECT_2X1, A))
    assert len(eqs) == 9
    _match(LIST_2X1, eqs, 1e-3)


def test_lift_only_1x2_is_swap():
    a = find_equilibria(ModelParams(RECT_2X1, A))
    b = find_equilibria(ModelParams(RECT_1X2, A))
    assert len(b) == 9
    for e in a:
        f = min(b, key=lambda q: math.dist(q.location, (e.z, e.r)))
        assert math.dist(f.location, (e.z, e.r)) < 1e-10
        assert f.eigenvalues == pytest.approx(e.eigenvalues, rel=1e-9)


def test_drag_only_centers():
    eqs = find_equilibria(ModelParams(RECT_2X1, r_tilde=100.0, drag_only=True))
    assert eqs.wall_continuum
    assert len(eqs) == 2
    for e, z in zip(eqs, (-1 / math.sqrt(5), 1 / math.sqrt(5))):
        assert abs(e.r) < 1e-10 and abs(e.z - z) < 1e-10
        assert e.kind == Kind.CENTER


def test_full_model_three_equilibria_at_r100():
    eqs = find_equilibria(ModelParams(RECT_2X1, A, 100.0))
    kinds = sorted(e.kind.value for e in eqs)
    assert kinds == ["Saddle", "StableSpiral", "StableSpiral"]
    saddle = next(e for e in eqs if e.kind == Kind.SADDLE)
    assert saddle.r > 1.5 and saddle.z == 0.0
    for e in eqs:
        if e.kind.is_spiral:
            assert abs(e.r) < 0.5


@pytest.mark.parametrize("mp", [
    ModelParams(RECT_2X1, A), ModelParams(RECT_1X2, A), ModelParams(RECT_2X1, A, 2500.0),
    ModelParams(RECT_1X2, A, 5000.0), ModelParams(RECT_2X1, A, 100.0),
], ids=lambda m: f"{m.cs}-{m.r_tilde}")
def test_invariants(mp):
    eqs = find_equilibria(mp)
    for e in eqs:
        v = rhs(mp, e.r, e.z)
        assert math.hypot(v.fr, v.fz) < 1e-12
        # trace / determinant consistency
        l1, l2 = e.eigenvalues
        assert (l1 + l2).real == pytest.approx(e.trace, rel=1e-12, abs=1e-300)
        assert (l1 * l2).real == pytest.approx(e.det, rel=1e-12, abs=1e-300)
        # mirror closure
        if e.z != 0.0:
            m = min(eqs, key=lambda q: math.dist(q.location, (e.r, -e.z)))
            assert math.dist(m.location, (e.r, -e.z)) < 1e-9
            assert m.eigenvalues == pytest.approx(e.eigenvalues, rel=1e-9)
    # no duplicates
    for i, e in enumerate(eqs):
        for f in eqs[i + 1:]:
            assert math.dist(e.location, f.location) >= 1e-6


def test_lift_eigenvalues_scale_as_cube():
    a = find_equilibria(ModelParams(RECT_2X1, 0.02))
    b = find_equilibria(ModelParams(RECT_2X1, 0.04))
    for e, f in zip(a, b):
        assert e.location == pytest.approx(f.location, abs=1e-12)
        for x, y in zip(e.eigenvalues, f.eigenvalues):
            assert (y / x).real == pytest.approx(8.0, rel=1e-12)


def _coeffs(cs, loc):
    lam, vecs, _ = eigensystem(ModelParams(cs, A), loc)
    return sorted(v.real / A**3 for v in lam), vecs


def test_eigensystem_table_rows():
    eqs = find_equilibria(ModelParams(RECT_2X1, A))
    node = min(eqs, key=lambda e: math.dist(e.location, (1.58, 0.0)))
    lam, vecs = _coeffs(RECT_2X1, node.location)
    assert lam == pytest.approx([-0.1059, -0.0094], abs=1e-3)
    assert {tuple(np.round(np.abs(v), 12)) for v in vecs} == {(1.0, 0.0), (0.0, 1.0)}

    lam, _ = _coeffs(RECT_1X2, (0.0, 0.0))
    assert lam == pytest.approx([0.0110, 0.1373], abs=1e-3)

    saddle = min(eqs, key=lambda e: math.dist(e.location, (1.5304, 0.4092)))
    lam_c, vecs, _ = eigensystem(ModelParams(RECT_2X1, A), saddle.location)
    k = int(np.argmin([v.real for v in lam_c]))
    assert lam_c[k].real / A**3 == pytest.approx(-0.0770, abs=1e-3)
    assert np.abs(vecs[k]) == pytest.approx([0.7380, 0.6748], abs=1e-3)


def test_classify_examples():
    a3 = A**3
    assert classify((-0.0092 * a3, -0.2762 * a3)) == Kind.STABLE_NODE
    assert classify((-0.0770 * a3, 0.0283 * a3)) == Kind.SADDLE
    w = 4 * 0.02319 / 100 * 0.4**1.5
    assert classify((complex(0, -w), complex(0, w)), drag_only=True) == Kind.CENTER
    assert classify((complex(0, -w), complex(0, w))) == Kind.DEGENERATE
    assert classify((complex(-1e-3, -1), complex(-1e-3, 1))) == Kind.STABLE_SPIRAL
    assert classify((complex(2e-3, -1), complex(2e-3, 1))) == Kind.UNSTABLE_SPIRAL
    assert classify((1.0, 2.0)) == Kind.UNSTABLE_NODE
    assert classify((1e-9, 2.0)) == Kind.DEGENERATE


def test_defective_matrix_flagged():
    lam, vecs, defective = _eig2(np.array([[1.0, 1.0], [0.0, 1.0]]))
    assert defective and len(vecs) == 1
    assert lam == (1.0, 1.0)


def test_grid_density_validation():
    with pytest.raises(ValueError):
        find_equilibria(ModelParams(RECT_2X1), grid_density=5)


def test_newton_reports_nonconvergence():
    # start on a wall-adjacent point of the lift-only field: still converges;
    # a single iteration cannot reach 1e-12 from far away
    roots, ok = newton(ModelParams(RECT_2X1), np.array([[1.0, 0.9]]), maxiter=1)
    assert not ok[0]


def test_serialisation_deterministic():
    mp = ModelParams(RECT_2X1, A, 100.0)
    a = equilibria_to_json(find_equilibria(mp), mp, {"k": 1})
    b = equilibria_to_json(find_equilibria(mp), mp, {"k": 1})
    assert a == b
    text = equilibria_to_csv(find_equilibria(mp), mp)
    assert text.splitlines()[1].startswith("r,z,")
    assert len(text.splitlines()) == 2 + 3


@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1))
def test_eig2_matches_numpy(a, b, c, d):
    m = np.array([[a, b], [c, d]])
    lam, vecs, defective = _eig2(m)
    ref = np.linalg.eigvals(m)
    got = sorted(lam, key=lambda v: (v.real, v.imag))
    ref = sorted(ref, key=lambda v: (v.real, v.imag))
    scale = max(1.0, np.max(np.abs(m)))
    # eigenvalues are ill-conditioned near a double root: sqrt of roundoff
    assert np.allclose(got, ref, atol=1e-7 * scale)
    if vecs is not None and not defective:
        for l, v in zip(lam, vecs):
            res = m @ v - l.real * v
            assert np.linalg.norm(res) < 1e-6 * scale
