"""Fixed points of the particle dynamics and their linear stability."""

from __future__ import annotations

import cmath
import csv
import io
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .dynamics import ModelParams, rhs, rhs_jacobian
from .forcefield import FieldJacobian

__all__ = [
    "Kind",
    "Equilibrium",
    "EquilibriumSet",
    "classify",
    "eigensystem",
    "newton",
    "find_equilibria",
    "equilibrium_at",
    "equilibria_to_json",
    "equilibria_to_csv",
    "NEWTON_TOL",
    "DEDUP_RADIUS",
    "DEGENERACY_BAND",
]

NEWTON_TOL = 1e-12
NEWTON_MAXITER = 50
DEDUP_RADIUS = 1e-6
DEGENERACY_BAND = 1e-4
_WALL_EPS = 1e-6


class Kind(str, Enum):
    STABLE_NODE = "StableNode"
    UNSTABLE_NODE = "UnstableNode"
    SADDLE = "Saddle"
    STABLE_SPIRAL = "StableSpiral"
    UNSTABLE_SPIRAL = "UnstableSpiral"
    CENTER = "Center"
    DEGENERATE = "Degenerate"

    @property
    def is_spiral(self) -> bool:
        return self in (Kind.STABLE_SPIRAL, Kind.UNSTABLE_SPIRAL)


def classify(eigenvalues: Sequence[complex], drag_only: bool = False,
             band: float = DEGENERACY_BAND) -> Kind:
    """Classify a planar fixed point from the eigenvalues of its Jacobian.

    Eigenvalues whose real part is below ``band * max|lambda|`` are treated as
    zero.  A purely imaginary pair is a genuine center only in the drag-only
    limit, where the flow conserves an explicit first integral; otherwise
    the linearisation is inconclusive and the point is ``Degenerate``.
    """
    lam = [complex(v) for v in eigenvalues]
    scale = max(abs(v) for v in lam)
    if scale == 0.0:
        return Kind.DEGENERATE
    tiny = band * scale
    is_complex = any(abs(v.imag) > tiny for v in lam)
    if is_complex:
        re = lam[0].real
        if abs(re) < tiny:
            return Kind.CENTER if drag_only else Kind.DEGENERATE
        return Kind.STABLE_SPIRAL if re < 0 else Kind.UNSTABLE_SPIRAL
    re = sorted(v.real for v in lam)
    if min(abs(v) for v in re) < tiny:
        return Kind.DEGENERATE
    if re[1] < 0:
        return Kind.STABLE_NODE
    if re[0] > 0:
        return Kind.UNSTABLE_NODE
    return Kind.SADDLE


def _normalise(v: np.ndarray) -> np.ndarray:
    v = v / np.linalg.norm(v)
    lead = v[0] if abs(v[0]) > 1e-14 else v[1]
    return -v if lead < 0 else v


def _eig2(m: np.ndarray):
    """Closed-form eigen-decomposition of a real 2x2 matrix.

    Returns ``(eigenvalues, eigenvectors, defective)``; eigenvalues sorted by
    real part then imaginary part, eigenvectors (unit, first nonzero
    component positive) only for real eigenvalues.
    """
    a, b = m[0]
    c, d = m[1]
    half_tr = 0.5 * (a + d)
    det = a * d - b * c
    disc = half_tr * half_tr - det
    scale = max(abs(a), abs(b), abs(c), abs(d), 1e-300)
    if disc < 0:
        s = math.sqrt(-disc)
        return (complex(half_tr, -s), complex(half_tr, s)), None, False
    s = math.sqrt(disc)
    # avoid cancellation in the smaller-magnitude root
    big = half_tr + math.copysign(s, half_tr) if half_tr != 0 else s
    small = det / big if big != 0 else half_tr - s
    lams = sorted((big, small))
    vecs = []
    for lam in lams:
        u1 = np.array([b, lam - a])
        u2 = np.array([lam - d, c])
        u = u1 if np.linalg.norm(u1) >= np.linalg.norm(u2) else u2
        if np.linalg.norm(u) <= 1e-13 * scale:
            # m - lam I vanishes: any direction works
            u = np.array([1.0, 0.0]) if lam == lams[0] else np.array([0.0, 1.0])
        vecs.append(_normalise(u))
    defective = False
    if s <= 1e-10 * scale and max(abs(b), abs(c), abs(a - d)) > 1e-10 * scale:
        defective = True
        vecs = vecs[:1]
    return (complex(lams[0]), complex(lams[1])), tuple(vecs), defective


def eigensystem(mp: ModelParams, location: Sequence[float]):
    """Eigenvalues and (real-case) eigenvectors of the linear stability
    matrix at ``location``.  Returns ``(eigenvalues, eigenvectors, defective)``."""
    jac = rhs_jacobian(mp, location[0], location[1])
    return _eig2(jac.matrix())


@dataclass
class Equilibrium:
    location: tuple[float, float]
    jac: FieldJacobian
    eigenvalues: tuple[complex, complex]
    eigenvectors: tuple[np.ndarray, ...] | None
    kind: Kind
    residual: float = 0.0
    defective: bool = False

    @property
    def r(self) -> float:
        return self.location[0]

    @property
    def z(self) -> float:
        return self.location[1]

    @property
    def trace(self) -> float:
        return float(self.jac.d_fr_dr + self.jac.d_fz_dz)

    @property
    def det(self) -> float:
        j = self.jac
        return float(j.d_fr_dr * j.d_fz_dz - j.d_fr_dz * j.d_fz_dr)

    def as_dict(self) -> dict:
        out = {
            "r": self.r,
            "z": self.z,
            "kind": self.kind.value,
            "eig_re": [v.real for v in self.eigenvalues],
            "eig_im": [v.imag for v in self.eigenvalues],
            "residual": self.residual,
        }
        if self.eigenvectors is not None:
            out["eigenvectors"] = [[float(c) for c in v] for v in self.eigenvectors]
        if self.defective:
            out["defective"] = True
        return out


def equilibrium_at(mp: ModelParams, location: Sequence[float]) -> Equilibrium:
    """Build an :class:`Equilibrium` record (no root finding)."""
    r, z = float(location[0]), float(location[1])
    jac = rhs_jacobian(mp, r, z)
    lam, vecs, defective = _eig2(jac.matrix())
    v = rhs(mp, r, z)
    return Equilibrium(
        (r, z), jac, lam, vecs, classify(lam, drag_only=mp.drag_only),
        float(math.hypot(v.fr, v.fz)), defective,
    )


# ---------------------------------------------------------------------------
# Damped Newton (vectorised over seeds)


def _interior_clip(mp: ModelParams, r, z):
    hw = mp.cs.half_width * (1 - 1e-12)
    hh = mp.cs.half_height * (1 - 1e-12)
    return np.clip(r, -hw, hw), np.clip(z, -hh, hh)


def newton(mp: ModelParams, seeds: np.ndarray, tol: float = NEWTON_TOL,
           maxiter: int = NEWTON_MAXITER) -> tuple[np.ndarray, np.ndarray]:
    """Damped Newton from each row of ``seeds`` (shape ``(n, 2)``).

    Backtracking line search on ``|rhs|^2``.  Returns ``(roots, converged)``.
    """
    x = np.array(seeds, dtype=float).reshape(-1, 2)
    r, z = _interior_clip(mp, x[:, 0], x[:, 1])
    F = rhs(mp, r, z)
    fr = np.asarray(F.fr, dtype=float) * np.ones_like(r)
    fz = np.asarray(F.fz, dtype=float) * np.ones_like(r)
    norm2 = fr * fr + fz * fz
    # iterate past |F| < tol until the Newton step itself is negligible, so
    # roots are located to roundoff (slow directions make |F| a poor proxy)
    settled = np.zeros(r.shape, dtype=bool)
    stuck = np.zeros_like(settled)
    for _ in range(maxiter):
        act = ~(settled | stuck)
        if not act.any():
            break
        ra, za = r[act], z[act]
        J = rhs_jacobian(mp, ra, za)
        a, b, c, d = (np.asarray(v, dtype=float) * np.ones_like(ra) for v in J)
        det = a * d - b * c
        with np.errstate(divide="ignore", invalid="ignore"):
            dr = -(d * fr[act] - b * fz[act]) / det
            dz = -(-c * fr[act] + a * fz[act]) / det
        bad = ~np.isfinite(dr) | ~np.isfinite(dz)
        # singular Jacobian: fall back to a short gradient step on |F|^2
        if bad.any():
            g_r = a * fr[act] + c * fz[act]
            g_z = b * fr[act] + d * fz[act]
            gn = np.hypot(g_r, g_z) + 1e-300
            dr = np.where(bad, -g_r / gn * 1e-3, dr)
            dz = np.where(bad, -g_z / gn * 1e-3, dz)
        ia = np.flatnonzero(act)
        below = norm2[act] < tol * tol
        step = np.hypot(dr, dz)
        tiny = step <= 1e-15 * (1.0 + np.hypot(ra, za))
        # a converged root one short Newton step from roundoff: take the
        # step unconditionally and stop (skips line searches on noise)
        last = below & ~tiny & ~bad & (step <= 1e-9)
        settled[ia[below & (tiny | last)]] = True
        alpha = np.ones_like(ra)
        n0 = norm2[act]
        pending = ~tiny
        stuck[ia[tiny]] = True
        new_r, new_z = ra.copy(), za.copy()
        new_fr, new_fz, new_n = fr[act].copy(), fz[act].copy(), n0.copy()
        if last.any():
            lr, lz = _interior_clip(mp, ra[last] + dr[last], za[last] + dz[last])
            Fl = rhs(mp, lr, lz)
            lfr = np.asarray(Fl.fr, dtype=float) * np.ones_like(lr)
            lfz = np.asarray(Fl.fz, dtype=float) * np.ones_like(lr)
            new_r[last], new_z[last] = lr, lz
            new_fr[last], new_fz[last], new_n[last] = lfr, lfz, lfr * lfr + lfz * lfz
            pending &= ~last
        for _ls in range(30):
            if not pending.any():
                break
            tr, tz = _interior_clip(mp, ra[pending] + alpha[pending] * dr[pending],
                                    za[pending] + alpha[pending] * dz[pending])
            Ft = rhs(mp, tr, tz)
            tfr = np.asarray(Ft.fr, dtype=float) * np.ones_like(tr)
            tfz = np.asarray(Ft.fz, dtype=float) * np.ones_like(tr)
            tn = tfr * tfr + tfz * tfz
            # near the root |F|^2 sits at roundoff level: accept non-increase
            ok = (tn <= (1 - 1e-4 * alpha[pending]) * n0[pending]) | (
                (n0[pending] < tol * tol) & (tn <= n0[pending]))
            idx = np.flatnonzero(pending)
            acc = idx[ok]
            new_r[acc], new_z[acc] = tr[ok], tz[ok]
            new_fr[acc], new_fz[acc], new_n[acc] = tfr[ok], tfz[ok], tn[ok]
            pending[acc] = False
            alpha[pending] *= 0.5
        moved = ((~pending) & ~tiny) | last
        stuck[ia[~moved]] = True
        r[ia], z[ia] = new_r, new_z
        fr[ia], fz[ia], norm2[ia] = new_fr, new_fz, new_n
    done = norm2 < tol * tol
    return np.column_stack([r, z]), done


def _on_wall(mp: ModelParams, r: float, z: float) -> bool:
    return (abs(r) >= mp.cs.half_width * (1 - _WALL_EPS)
            or abs(z) >= mp.cs.half_height * (1 - _WALL_EPS))


def default_grid(mp: ModelParams) -> tuple[int, int]:
    return (41, 21) if mp.cs.kind == "2x1" else (21, 41)


def seed_grid(mp: ModelParams, grid: int | tuple[int, int] | None = None) -> np.ndarray:
    if grid is None:
        nr, nz = default_grid(mp)
    elif isinstance(grid, int):
        nr = nz = grid
    else:
        nr, nz = grid
    if min(nr, nz) < 8:
        raise ValueError("grid density must be at least 8 per axis")
    hw, hh = mp.cs.half_width, mp.cs.half_height
    # cell centres: interior, symmetric about both axes
    rr = hw * (2 * np.arange(nr) + 1 - nr) / nr
    zz = hh * (2 * np.arange(nz) + 1 - nz) / nz
    R, Z = np.meshgrid(rr, zz, indexing="ij")
    return np.column_stack([R.ravel(), Z.ravel()])


# lift-only equilibria of the 2x1 fit; the 1x2 ones are coordinate swaps
_KNOWN_2X1 = [(0.0, 0.0), (0.0, 0.6), (0.0, -0.6), (1.58, 0.0), (-1.58, 0.0),
              (1.5303, 0.4094), (1.5303, -0.4094), (-1.5303, 0.4094), (-1.5303, -0.4094)]


def known_seeds(mp: ModelParams) -> np.ndarray:
    pts = np.array(_KNOWN_2X1)
    return pts if mp.cs.kind == "2x1" else pts[:, ::-1].copy()


class EquilibriumSet(list):
    """List of equilibria plus the drag-only wall-continuum flag."""

    def __init__(self, items: Iterable[Equilibrium] = (), wall_continuum: bool = False):
        list.__init__(self, items)
        self.wall_continuum = wall_continuum

    def __repr__(self) -> str:
        return f"EquilibriumSet({list.__repr__(self)}, wall_continuum={self.wall_continuum})"


def _dedupe(points: np.ndarray, radius: float) -> list[np.ndarray]:
    kept: list[np.ndarray] = []
    for p in points:
        if all(np.hypot(*(p - q)) >= radius for q in kept):
            kept.append(p)
    return kept


def _symmetrise(mp: ModelParams, pts: list[np.ndarray], tol: float) -> list[np.ndarray]:
    """Snap near-axis roots onto the symmetry axis and add missing mirrors.

    The z -> -z reflection is a symmetry for every configuration; roots with
    |z| below the dedup radius are re-solved on z = 0 exactly.
    """
    out = []
    for p in pts:
        if abs(p[1]) < DEDUP_RADIUS:
            q, ok = newton(mp, np.array([[p[0], 0.0]]), tol=tol)
            if ok[0] and q[0, 1] == 0.0:
                p = q[0]
        out.append(p)
    return out


def find_equilibria(
    mp: ModelParams,
    grid_density: int | tuple[int, int] | None = None,
    *,
    extra_seeds: np.ndarray | None = None,
    tol: float = NEWTON_TOL,
    dedup_radius: float = DEDUP_RADIUS,
) -> EquilibriumSet:
    """All interior fixed points reachable by damped Newton from a uniform seed
    grid (plus the lift-only equilibria and any ``extra_seeds``).

    Roots on the duct walls are dropped; in the drag-only limit the walls are
    entire lines of fixed points and this is signalled via
    ``wall_continuum``.  Results are sorted by ``(r, z)``.
    """
    seeds = [seed_grid(mp, grid_density), known_seeds(mp)]
    if extra_seeds is not None and len(extra_seeds):
        seeds.append(np.asarray(extra_seeds, dtype=float).reshape(-1, 2))
    roots, ok = newton(mp, np.vstack(seeds), tol=tol)
    roots = roots[ok]
    interior = np.array([not _on_wall(mp, *p) for p in roots], dtype=bool)
    roots = roots[interior] if len(roots) else roots
    return _collect(mp, roots, tol, dedup_radius)


def _collect(mp: ModelParams, roots: np.ndarray, tol: float, dedup_radius: float) -> EquilibriumSet:
    # deterministic ordering before the serial dedup reduction
    if len(roots):
        order = np.lexsort((roots[:, 1], roots[:, 0]))
        roots = roots[order]
    pts = _dedupe(list(roots), dedup_radius)
    pts = _symmetrise(mp, pts, tol)
    pts = [p for p in _dedupe(pts, dedup_radius) if not _on_wall(mp, *p)]
    eqs = [equilibrium_at(mp, p) for p in pts]
    eqs.sort(key=lambda e: (round(e.r, 9), round(e.z, 9)))
    return EquilibriumSet(eqs, wall_continuum=mp.drag_only)


def refine_from(mp: ModelParams, guesses: np.ndarray, tol: float = NEWTON_TOL,
                dedup_radius: float = DEDUP_RADIUS) -> EquilibriumSet:
    """Warm-start Newton from ``guesses`` only (continuation predictor)."""
    roots, ok = newton(mp, guesses, tol=tol)
    roots = roots[ok]
    keep = np.array([not _on_wall(mp, *p) for p in roots], dtype=bool)
    roots = roots[keep] if len(roots) else roots
    return _collect(mp, roots, tol, dedup_radius)


# ---------------------------------------------------------------------------
# Serialisation


def equilibria_to_json(eqs: Sequence[Equilibrium], mp: ModelParams, meta: dict | None = None) -> str:
    doc = {"params": mp.as_dict(), "equilibria": [e.as_dict() for e in eqs]}
    if isinstance(eqs, EquilibriumSet):
        doc["wall_continuum"] = eqs.wall_continuum
    if meta:
        doc["config"] = meta
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def equilibria_to_csv(eqs: Sequence[Equilibrium], mp: ModelParams, meta: dict | None = None) -> str:
    buf = io.StringIO()
    head = {"params": mp.as_dict()}
    if meta:
        head["config"] = meta
    buf.write("# " + json.dumps(head, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["r", "z", "re1", "im1", "re2", "im2", "kind"])
    for e in eqs:
        l1, l2 = e.eigenvalues
        w.writerow([repr(e.r), repr(e.z), repr(l1.real), repr(l1.imag),
                    repr(l2.real), repr(l2.imag), e.kind.value])
    return buf.getvalue()
