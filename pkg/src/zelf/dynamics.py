"""Nondimensional equations of motion and trajectory integration.

The particle velocity in the cross-sectional plane is

    dX/dt = (1 / 6 pi) * [ (a~^3 / 8) L(X) + (1 / (2 R~)) D(X) ]

with ``R~ = inf`` meaning "lift only" and ``drag_only=True`` dropping the
lift term (the ``a~ -> 0`` limit).
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import RK45

from .forcefield import (
    CrossSection,
    DomainError,
    FieldJacobian,
    FieldVector,
    cross_section,
    drag,
    drag_jacobian,
    lift,
    lift_jacobian,
)

__all__ = [
    "ModelValidityWarning",
    "StiffnessError",
    "UnsupportedAspectRatio",
    "ModelParams",
    "PhysicalParams",
    "Trajectory",
    "TerminalReason",
    "nondimensionalize",
    "rhs",
    "rhs_jacobian",
    "integrate",
    "A_TILDE_MAX",
]

A_TILDE_MAX = 0.05  # upper end of the range where the fits are trusted


class ModelValidityWarning(UserWarning):
    pass


class StiffnessError(RuntimeError):
    pass


class UnsupportedAspectRatio(ValueError):
    pass


@dataclass(frozen=True)
class ModelParams:
    """Model configuration.

    ``r_tilde=math.inf`` selects the lift-only limit; ``drag_only=True`` the
    vanishing-particle limit (``a_tilde`` is then ignored).
    """

    cs: CrossSection
    a_tilde: float = 0.05
    r_tilde: float = math.inf
    drag_only: bool = False
    enforce_min_radius: bool = True

    def __post_init__(self):
        object.__setattr__(self, "cs", cross_section(self.cs))
        if self.drag_only:
            if not (self.r_tilde > 0 and math.isfinite(self.r_tilde)):
                raise ValueError("drag-only configuration needs a finite R~ > 0")
        else:
            if not self.a_tilde > 0:
                raise ValueError(f"a_tilde must be > 0, got {self.a_tilde}")
            if not self.r_tilde > 0:
                raise ValueError(f"r_tilde must be > 0, got {self.r_tilde}")
            if self.a_tilde > A_TILDE_MAX:
                warnings.warn(
                    f"a_tilde={self.a_tilde} exceeds {A_TILDE_MAX}; the fitted forces "
                    "are not reliable for large particles",
                    ModelValidityWarning,
                    stacklevel=3,
                )
        if self.enforce_min_radius and self.r_tilde < self.cs.min_bend_radius:
            raise ValueError(
                f"r_tilde={self.r_tilde} below the minimum {self.cs.min_bend_radius} "
                f"for the {self.cs.kind} cross-section"
            )

    @property
    def lift_only(self) -> bool:
        return not self.drag_only and math.isinf(self.r_tilde)

    @property
    def lift_weight(self) -> float:
        return 0.0 if self.drag_only else self.a_tilde**3 / (48.0 * math.pi)

    @property
    def drag_weight(self) -> float:
        return 0.0 if math.isinf(self.r_tilde) else 1.0 / (12.0 * math.pi * self.r_tilde)

    @property
    def mode(self) -> str:
        if self.drag_only:
            return "drag-only"
        return "lift-only" if self.lift_only else "full"

    def with_r_tilde(self, r_tilde: float) -> "ModelParams":
        return ModelParams(self.cs, self.a_tilde, r_tilde, self.drag_only, self.enforce_min_radius)

    def as_dict(self) -> dict:
        return {
            "cross_section": self.cs.kind,
            "a_tilde": self.a_tilde,
            "r_tilde": self.r_tilde if math.isfinite(self.r_tilde) else "inf",
            "mode": self.mode,
        }


@dataclass(frozen=True)
class PhysicalParams:
    a: float  # particle radius
    R: float  # bend radius
    W: float  # duct width
    H: float  # duct height
    rho: float = 1.0
    mu: float = 1.0
    U_m: float = 1.0

    def __post_init__(self):
        for name in ("a", "R", "W", "H", "rho", "mu", "U_m"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")

    @property
    def l(self) -> float:
        return min(self.W, self.H)


def nondimensionalize(p: PhysicalParams, **kwargs) -> tuple[ModelParams, float]:
    """Return the model parameters and the length scale ``l/2`` mapping
    dimensionless coordinates back to physical ones."""
    ar = p.W / p.H
    if math.isclose(ar, 2.0):
        cs = "2x1"
    elif math.isclose(ar, 0.5):
        cs = "1x2"
    else:
        raise UnsupportedAspectRatio(f"aspect ratio W/H = {ar:g} is not supported (need 2 or 1/2)")
    l = p.l
    return ModelParams(cs, a_tilde=2.0 * p.a / l, r_tilde=2.0 * p.R / l, **kwargs), l / 2.0


def rhs(mp: ModelParams, r, z) -> FieldVector:
    """Particle velocity (dr/dt, dz/dt)."""
    wl, wd = mp.lift_weight, mp.drag_weight
    fr = fz = 0.0
    if wl:
        L = lift(mp.cs, r, z)
        fr, fz = wl * L.fr, wl * L.fz
    if wd:
        D = drag(mp.cs, r, z)
        fr, fz = fr + wd * D.fr, fz + wd * D.fz
    if not (wl or wd):
        mp.cs.check(r, z)
    return FieldVector(fr, fz)


def rhs_jacobian(mp: ModelParams, r, z) -> FieldJacobian:
    """Linear stability matrix of the velocity field at ``(r, z)``."""
    wl, wd = mp.lift_weight, mp.drag_weight
    jac = FieldJacobian(0.0, 0.0, 0.0, 0.0)
    if wl:
        jac = jac + lift_jacobian(mp.cs, r, z).scaled(wl)
    if wd:
        jac = jac + drag_jacobian(mp.cs, r, z).scaled(wd)
    return jac


# ---------------------------------------------------------------------------
# Trajectories


class TerminalReason(str, Enum):
    TIME_EXHAUSTED = "TimeExhausted"
    CONVERGED = "ConvergedToPoint"
    HIT_BOUNDARY = "HitBoundary"
    CLOSED_ORBIT = "ClosedOrbitDetected"


@dataclass
class Trajectory:
    t: np.ndarray
    r: np.ndarray
    z: np.ndarray
    terminal_reason: TerminalReason
    params: ModelParams | None = None
    n_fallback_steps: int = 0
    info: dict = field(default_factory=dict)

    @property
    def end(self) -> tuple[float, float]:
        return float(self.r[-1]), float(self.z[-1])

    def __len__(self) -> int:
        return len(self.t)

    def to_csv(self, header: dict | None = None) -> str:
        meta = dict(self.params.as_dict()) if self.params is not None else {}
        meta["terminal_reason"] = self.terminal_reason.value
        if header:
            meta.update(header)
        buf = io.StringIO()
        buf.write("# " + json.dumps(meta, sort_keys=True) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "r", "z"])
        for row in zip(self.t, self.r, self.z):
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "Trajectory":
        lines = text.splitlines()
        meta = json.loads(lines[0][1:]) if lines and lines[0].startswith("#") else {}
        rows = list(csv.reader(lines[1:] if meta else lines))
        data = np.array([[float(v) for v in row] for row in rows[1:]])
        params = None
        if "cross_section" in meta:
            rt = meta["r_tilde"]
            params = ModelParams(
                meta["cross_section"],
                a_tilde=meta["a_tilde"],
                r_tilde=math.inf if rt == "inf" else float(rt),
                drag_only=meta.get("mode") == "drag-only",
                enforce_min_radius=False,
            )
        return cls(
            data[:, 0], data[:, 1], data[:, 2],
            TerminalReason(meta.get("terminal_reason", "TimeExhausted")),
            params,
        )


def _clip_to_box(cs: CrossSection, x: np.ndarray) -> np.ndarray:
    return np.array([np.clip(x[0], -cs.half_width, cs.half_width),
                     np.clip(x[1], -cs.half_height, cs.half_height)])


def _implicit_midpoint_step(f, jac, x: np.ndarray, h: float, newton_tol: float = 1e-14) -> np.ndarray:
    y = x + h * f(x)
    for _ in range(20):
        m = 0.5 * (x + y)
        g = y - x - h * f(m)
        J = np.eye(2) - 0.5 * h * jac(m)
        dy = np.linalg.solve(J, g)
        y = y - dy
        if np.max(np.abs(dy)) <= newton_tol * (1.0 + np.max(np.abs(y))):
            break
    return y


def integrate(
    mp: ModelParams,
    start: Sequence[float],
    t_end: float,
    rtol: float = 1e-8,
    atol: float = 1e-12,
    *,
    converge_tol: float = 1e-12,
    converge_steps: int = 10,
    detect_closed_orbit: bool = False,
    orbit_tol: float = 1e-3,
    max_orbits: int = 1,
    min_step: float | None = None,
    fallback_steps: int = 200,
    max_steps: int = 1_000_000,
    backward: bool = False,
) -> Trajectory:
    """Integrate a particle trajectory with adaptive Dormand-Prince 5(4).

    Stops on boundary contact, on convergence (``|rhs| < converge_tol`` for
    ``converge_steps`` consecutive accepted steps), on return to the start
    point after ``max_orbits`` revolutions when ``detect_closed_orbit`` is
    set, or at ``t_end``.

    When the adaptive step collapses below ``min_step`` the solver switches
    to fixed-step implicit midpoint for ``fallback_steps`` steps before
    resuming; if the stiff fallback also fails a :class:`StiffnessError` is
    raised.
    """
    cs = mp.cs
    x0 = np.asarray(start, dtype=float)
    cs.check(*x0)
    sign = -1.0 if backward else 1.0

    def f(x):
        v = rhs(mp, x[0], x[1])
        return sign * np.array([v.fr, v.fz])

    def jac(x):
        return sign * rhs_jacobian(mp, x[0], x[1]).matrix()

    def fun(t, x):
        # RK45 stages may poke just outside the closed box near walls
        return f(_clip_to_box(cs, x))

    ts, rs, zs = [0.0], [x0[0]], [x0[1]]
    reason = TerminalReason.TIME_EXHAUSTED
    n_fallback = 0
    info: dict = {}

    if np.hypot(*f(x0)) < converge_tol:
        return Trajectory(np.array(ts), np.array(rs), np.array(zs), TerminalReason.CONVERGED, mp)

    if min_step is None:
        # the adaptive first step can legitimately be tiny; by default only a
        # solver failure (step below roundoff) triggers the fallback
        min_step = 0.0

    # closed-orbit bookkeeping: signed progress along the initial direction
    v0 = f(x0)
    v0 = v0 / np.linalg.norm(v0)
    max_excursion = 0.0
    orbits = 0
    prev_s = 0.0

    def on_wall(x):
        return abs(x[0]) >= cs.half_width or abs(x[1]) >= cs.half_height

    t, x = 0.0, x0.copy()
    calm = 0
    solver = RK45(fun, t, x, t_end, rtol=rtol, atol=atol)
    for _ in range(max_steps):
        if solver.status != "running":
            break
        try:
            msg = solver.step()
        except (DomainError, ValueError) as err:  # pragma: no cover - defensive
            msg = str(err)
        if solver.status == "failed" or (solver.status == "running" and solver.step_size < min_step):
            # stiff fallback: fixed-step implicit midpoint
            h = max(min_step, solver.step_size or 0.0, 1e-9 * max(abs(t), 1.0)) * 10.0
            for _k in range(fallback_steps):
                try:
                    x = _implicit_midpoint_step(f, jac, x, h)
                except (np.linalg.LinAlgError, DomainError) as err:
                    raise StiffnessError(
                        f"step-size underflow at t={t:.6g}, state=({x[0]:.17g}, {x[1]:.17g}): {err}"
                    ) from err
                if not np.all(np.isfinite(x)):
                    raise StiffnessError(
                        f"step-size underflow at t={t:.6g}, state=({rs[-1]:.17g}, {zs[-1]:.17g})"
                    )
                t += h
                n_fallback += 1
                if on_wall(x) or t >= t_end:
                    break
                ts.append(t); rs.append(x[0]); zs.append(x[1])
            if on_wall(x):
                x = _clip_to_box(cs, x)
                ts.append(t); rs.append(x[0]); zs.append(x[1])
                reason = TerminalReason.HIT_BOUNDARY
                break
            if t >= t_end:
                break
            solver = RK45(fun, t, x, t_end, rtol=rtol, atol=atol)
            continue
        if msg is not None and solver.status == "failed":  # pragma: no cover
            raise StiffnessError(f"{msg} at state ({x[0]:.17g}, {x[1]:.17g})")

        t_new, x_new = solver.t, solver.y.copy()

        if on_wall(x_new):
            # locate the wall crossing on the dense output by bisection
            dense = solver.dense_output()
            lo, hi = t, t_new
            for _k in range(60):
                mid = 0.5 * (lo + hi)
                if on_wall(dense(mid)):
                    hi = mid
                else:
                    lo = mid
            xb = _clip_to_box(cs, dense(hi))
            ts.append(hi); rs.append(xb[0]); zs.append(xb[1])
            reason = TerminalReason.HIT_BOUNDARY
            break

        if detect_closed_orbit:
            d = x_new - x0
            max_excursion = max(max_excursion, float(np.hypot(*d)))
            s = float(d @ v0)
            if prev_s < 0.0 <= s and max_excursion > 0:
                dense = solver.dense_output()
                lo, hi = t, t_new
                for _k in range(60):
                    mid = 0.5 * (lo + hi)
                    if float((dense(mid) - x0) @ v0) < 0.0:
                        lo = mid
                    else:
                        hi = mid
                xc = dense(hi)
                gap = float(np.hypot(*(xc - x0)))
                if gap <= orbit_tol * max_excursion:
                    orbits += 1
                    if orbits >= max_orbits:
                        ts.append(hi); rs.append(xc[0]); zs.append(xc[1])
                        info["return_gap"] = gap
                        reason = TerminalReason.CLOSED_ORBIT
                        break
            prev_s = s

        ts.append(t_new); rs.append(x_new[0]); zs.append(x_new[1])
        t, x = t_new, x_new

        if np.hypot(*f(x)) < converge_tol:
            calm += 1
            if calm >= converge_steps:
                reason = TerminalReason.CONVERGED
                break
        else:
            calm = 0
    else:  # pragma: no cover
        info["max_steps_reached"] = True

    return Trajectory(np.array(ts), np.array(rs), np.array(zs), reason, mp, n_fallback, info)
