"""Fitted inertial-lift and secondary-drag force fields (ZeLF model).

Both cross-sections share one lift fit: the 1x2 lift is the 2x1 lift with
the roles of ``r`` and ``z`` exchanged.  The drag fits are separable
polynomials, ``D = K * f(r) * g(z)``, which makes their derivatives exact.

All evaluators accept scalars or numpy arrays (broadcast together).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.polynomial import Polynomial

__all__ = [
    "CrossSection",
    "RECT_2X1",
    "RECT_1X2",
    "DomainError",
    "FieldVector",
    "FieldJacobian",
    "cross_section",
    "lift",
    "drag",
    "lift_jacobian",
    "drag_jacobian",
]


class DomainError(ValueError):
    """Raised when a sample point lies outside the duct cross-section."""


@dataclass(frozen=True)
class CrossSection:
    kind: str  # "2x1" or "1x2"
    half_width: float
    half_height: float
    drag_constant: float

    @property
    def min_bend_radius(self) -> float:
        # smallest physically possible R~ is W/l
        return self.half_width / min(self.half_width, self.half_height)

    def contains(self, r, z, strict: bool = False) -> bool:
        r = np.asarray(r, dtype=float)
        z = np.asarray(z, dtype=float)
        if strict:
            ok = (np.abs(r) < self.half_width) & (np.abs(z) < self.half_height)
        else:
            ok = (np.abs(r) <= self.half_width) & (np.abs(z) <= self.half_height)
        return bool(np.all(ok))

    def check(self, r, z, strict: bool = False) -> None:
        if not self.contains(r, z, strict=strict):
            where = "strictly inside" if strict else "inside"
            raise DomainError(
                f"point(s) ({r!r}, {z!r}) not {where} the {self.kind} cross-section "
                f"|r| <= {self.half_width}, |z| <= {self.half_height}"
            )

    def __str__(self) -> str:
        return self.kind


RECT_2X1 = CrossSection("2x1", 2.0, 1.0, 0.02319)
RECT_1X2 = CrossSection("1x2", 1.0, 2.0, 0.018542)

_BY_NAME = {"2x1": RECT_2X1, "1x2": RECT_1X2, "Rect2x1": RECT_2X1, "Rect1x2": RECT_1X2}


def cross_section(name: str | CrossSection) -> CrossSection:
    """Look up a cross-section by name ("2x1" or "1x2")."""
    if isinstance(name, CrossSection):
        return name
    try:
        return _BY_NAME[name]
    except KeyError:
        raise ValueError(f"unknown cross-section {name!r}; expected '2x1' or '1x2'") from None


class FieldVector(NamedTuple):
    fr: float | np.ndarray
    fz: float | np.ndarray


class FieldJacobian(NamedTuple):
    d_fr_dr: float | np.ndarray
    d_fr_dz: float | np.ndarray
    d_fz_dr: float | np.ndarray
    d_fz_dz: float | np.ndarray

    def matrix(self) -> np.ndarray:
        """2x2 matrix ``[[d_fr_dr, d_fr_dz], [d_fz_dr, d_fz_dz]]`` (scalar samples only)."""
        return np.array([[self.d_fr_dr, self.d_fr_dz], [self.d_fz_dr, self.d_fz_dz]], dtype=float)

    def scaled(self, w: float) -> "FieldJacobian":
        return FieldJacobian(*(w * v for v in self))

    def __add__(self, other):  # elementwise, not tuple concatenation
        if not isinstance(other, FieldJacobian):
            return NotImplemented
        return FieldJacobian(*(a + b for a, b in zip(self, other)))


# ---------------------------------------------------------------------------
# 2x1 lift fit.  Each component is  prefactor * bracket(r, z) * exp(expo(r, z))
# with bracket/expo stored as sparse {(i, j): c} maps for c * r**i * z**j.


class _Poly2:
    """Sparse bivariate polynomial: sum of c * r**i * z**j."""

    def __init__(self, terms: dict[tuple[int, int], float]):
        self.terms = [(c, i, j) for (i, j), c in sorted(terms.items()) if c != 0.0]
        self.deg_r = max((i for _, i, _ in self.terms), default=0)
        self.deg_z = max((j for _, _, j in self.terms), default=0)

    def __call__(self, r, z):
        rp = [1.0, r]
        for _ in range(self.deg_r - 1):
            rp.append(rp[-1] * r)
        zp = [1.0, z]
        for _ in range(self.deg_z - 1):
            zp.append(zp[-1] * z)
        out = 0.0
        for c, i, j in self.terms:
            out = out + c * rp[i] * zp[j]
        return out

    def d_dr(self) -> "_Poly2":
        return _Poly2({(i - 1, j): c * i for c, i, j in self.terms if i > 0})

    def d_dz(self) -> "_Poly2":
        return _Poly2({(i, j - 1): c * j for c, i, j in self.terms if j > 0})


# L_r = r [1 - 0.0643 r^6 - 25.5128 z^6 - 31.1 (1 - 0.4006 r^2) z^4] exp(...)
_LR_BRACKET = _Poly2({
    (0, 0): 1.0,
    (6, 0): -0.0643,
    (0, 6): -25.5128,
    (0, 4): -31.1,
    (2, 4): 31.1 * 0.4006,
})
_LR_EXPO = _Poly2({
    (0, 0): 0.505,
    (2, 0): 0.427,
    (0, 2): -5.081,
    (4, 0): -0.2,
    (2, 2): 1.518,
    (0, 4): 0.594,
    (6, 0): 0.042,
    (4, 2): 0.007,
    (2, 4): -2.283,
    (0, 6): 2.8,
})

# L_z = z [1 - 9.0878 z^6 - 0.0316 r^8 - 1.6 (1 - 0.1778 r^4) z^2] exp(...)
_LZ_BRACKET = _Poly2({
    (0, 0): 1.0,
    (0, 6): -9.0878,
    (8, 0): -0.0316,
    (0, 2): -1.6,
    (4, 2): 1.6 * 0.1778,
})
_LZ_EXPO = _Poly2({
    (0, 0): 3.030,
    (0, 2): -1.168,
    (2, 0): -0.536,
    (0, 4): -2.199,
    (2, 2): 0.476,
    (4, 0): 0.104,
    (0, 6): 2.094,
    (2, 4): 0.051,
    (4, 2): -0.212,
    (6, 0): -0.033,
})


class _ExpFit:
    """``x_k * B(r, z) * exp(E(r, z))`` with ``x_k`` one of r or z."""

    def __init__(self, axis: int, bracket: _Poly2, expo: _Poly2):
        self.axis = axis  # 0: prefactor r, 1: prefactor z
        self.b = bracket
        self.e = expo
        self.b_r, self.b_z = bracket.d_dr(), bracket.d_dz()
        self.e_r, self.e_z = expo.d_dr(), expo.d_dz()

    def value(self, r, z):
        pre = r if self.axis == 0 else z
        return pre * self.b(r, z) * np.exp(self.e(r, z))

    def grad(self, r, z):
        ex = np.exp(self.e(r, z))
        b = self.b(r, z)
        pre = r if self.axis == 0 else z
        d_r = pre * (self.b_r(r, z) + b * self.e_r(r, z))
        d_z = pre * (self.b_z(r, z) + b * self.e_z(r, z))
        if self.axis == 0:
            d_r = d_r + b
        else:
            d_z = d_z + b
        return d_r * ex, d_z * ex


_LR_2X1 = _ExpFit(0, _LR_BRACKET, _LR_EXPO)
_LZ_2X1 = _ExpFit(1, _LZ_BRACKET, _LZ_EXPO)


# ---------------------------------------------------------------------------
# Drag fits: D_k = K_k * f_k(r) * g_k(z)


def _horner(p: Polynomial):
    coef = tuple(float(c) for c in p.coef[::-1])

    def ev(x):
        out = coef[0]
        for c in coef[1:]:
            out = out * x + c
        return out + 0.0 * x

    return ev


class _Separable:
    def __init__(self, scale: float, f: Polynomial, g: Polynomial):
        self.scale = scale
        self.f, self.g = _horner(f), _horner(g)
        self.df, self.dg = _horner(f.deriv()), _horner(g.deriv())

    def value(self, r, z):
        return self.scale * self.f(r) * self.g(z)

    def grad(self, r, z):
        return self.scale * self.df(r) * self.g(z), self.scale * self.f(r) * self.dg(z)


def _poly(*factors: Polynomial) -> Polynomial:
    out = Polynomial([1.0])
    for f in factors:
        out = out * f
    return out


_X = Polynomial([0.0, 1.0])


def _drag_2x1(C: float) -> tuple[_Separable, _Separable]:
    k = 6.0 * np.pi * C
    q_r = Polynomial([1.0, 0.0, -0.25])  # 1 - 0.25 r^2
    q_z = Polynomial([1.0, 0.0, -1.0])   # 1 - z^2
    dr = _Separable(k, q_r**2, _poly(q_z, Polynomial([1.0, 0.0, -5.0])))
    dz = _Separable(k, _X * q_r, _X * q_z**2)
    return dr, dz


def _drag_1x2(C: float) -> tuple[_Separable, _Separable]:
    q_r = Polynomial([1.0, 0.0, -1.0])   # 1 - r^2
    q_z = Polynomial([1.0, 0.0, -0.25])  # 1 - 0.25 z^2
    dr = _Separable(6.0 * np.pi * C, q_r**2, _poly(q_z, Polynomial([1.0, 0.0, -1.25])))
    dz = _Separable(24.0 * np.pi * C, _X * q_r, _X * q_z**2)
    return dr, dz


_DRAG = {
    "2x1": _drag_2x1(RECT_2X1.drag_constant),
    "1x2": _drag_1x2(RECT_1X2.drag_constant),
}


# ---------------------------------------------------------------------------
# Public evaluators


def _prep(cs: CrossSection, r, z, strict: bool = False):
    cs = cross_section(cs)
    r = np.asarray(r, dtype=float)
    z = np.asarray(z, dtype=float)
    cs.check(r, z, strict=strict)
    if r.ndim == 0 and z.ndim == 0:
        return cs, float(r), float(z)
    return cs, r, z


def lift(cs: CrossSection | str, r, z) -> FieldVector:
    """Dimensionless inertial lift ``(L_r, L_z)`` at ``(r, z)``."""
    cs, r, z = _prep(cs, r, z)
    if cs.kind == "2x1":
        return FieldVector(_LR_2X1.value(r, z), _LZ_2X1.value(r, z))
    # 90 degree rotation of the 2x1 field
    return FieldVector(_LZ_2X1.value(z, r), _LR_2X1.value(z, r))


def drag(cs: CrossSection | str, r, z) -> FieldVector:
    """Dimensionless secondary drag ``(D_r, D_z)`` at ``(r, z)``."""
    cs, r, z = _prep(cs, r, z)
    dr, dz = _DRAG[cs.kind]
    return FieldVector(dr.value(r, z), dz.value(r, z))


def lift_jacobian(cs: CrossSection | str, r, z) -> FieldJacobian:
    cs, r, z = _prep(cs, r, z, strict=True)
    if cs.kind == "2x1":
        a, b = _LR_2X1.grad(r, z)
        c, d = _LZ_2X1.grad(r, z)
        return FieldJacobian(a, b, c, d)
    # L_r(r, z) = Lz2x1(z, r): d/dr -> d/dz of the 2x1 component and vice versa
    lz_dr, lz_dz = _LZ_2X1.grad(z, r)
    lr_dr, lr_dz = _LR_2X1.grad(z, r)
    return FieldJacobian(lz_dz, lz_dr, lr_dz, lr_dr)


def drag_jacobian(cs: CrossSection | str, r, z) -> FieldJacobian:
    cs, r, z = _prep(cs, r, z, strict=True)
    dr, dz = _DRAG[cs.kind]
    a, b = dr.grad(r, z)
    c, d = dz.grad(r, z)
    return FieldJacobian(a, b, c, d)
