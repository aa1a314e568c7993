"""Natural-parameter continuation in the bend radius and bifurcation detection.

The sweep walks a descending ``R~`` schedule.  At every step the equilibria
are recomputed by Newton, warm-started from the previous step (full seed
grid every ``reseed_every`` steps).  Whenever the equilibrium structure
changes between two parameter values (a branch appears or disappears, or a
branch changes stability class) the interval is bisected down to a relative
width ``rel_tol``; the changes inside each such bracket are then resolved
into saddle-node, pitchfork and Hopf events.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .dynamics import ModelParams, rhs
from .equilibria import (
    DEDUP_RADIUS,
    Equilibrium,
    EquilibriumSet,
    Kind,
    equilibrium_at,
    find_equilibria,
    newton,
    refine_from,
    seed_grid,
    known_seeds,
)
from .forcefield import CrossSection, cross_section

__all__ = [
    "EventKind",
    "Branch",
    "BifurcationEvent",
    "LimitCycle",
    "SweepResult",
    "default_schedule",
    "parse_schedule",
    "sweep",
    "refine_event",
    "find_limit_cycle",
    "LimitCycleDiagnostic",
    "search_limit_cycle",
]

log = logging.getLogger(__name__)

MATCH_RADIUS = 0.1
REL_TOL = 1e-6


class EventKind(str, Enum):
    SADDLE_NODE = "SaddleNode"
    PITCHFORK = "Pitchfork"
    HOPF = "Hopf"


@dataclass
class Branch:
    id: int
    samples: list[tuple[float, Equilibrium]] = field(default_factory=list)
    birth_event: int | None = None
    death_event: int | None = None

    @property
    def r_range(self) -> tuple[float, float]:
        rs = [s[0] for s in self.samples]
        return min(rs), max(rs)

    def at(self, r_tilde: float) -> Equilibrium | None:
        for R, e in self.samples:
            if R == r_tilde:
                return e
        return None


@dataclass
class BifurcationEvent:
    kind: EventKind
    r_low: float
    r_high: float
    branch_ids: tuple[int, ...]
    location: tuple[float, float]
    criticality: str | None = None  # pitchfork only: "supercritical" | "subcritical"
    direction: str | None = None    # as R~ decreases: "emerging" | "merging" (pitchfork)
    mirror_of: int | None = None
    ambiguous: bool = False
    id: int = -1
    # participating equilibria at the bracket midpoint (set by refine_event)
    at_mid: tuple[Equilibrium, ...] = field(default=(), repr=False, compare=False)

    @property
    def r_mid(self) -> float:
        return 0.5 * (self.r_low + self.r_high)

    @property
    def width(self) -> float:
        return self.r_high - self.r_low

    def as_dict(self) -> dict:
        d = {
            "id": self.id,
            "kind": self.kind.value,
            "r_low": self.r_low,
            "r_high": self.r_high,
            "branches": list(self.branch_ids),
            "location": list(self.location),
        }
        if self.criticality:
            d["criticality"] = self.criticality
        if self.direction:
            d["direction"] = self.direction
        if self.mirror_of is not None:
            d["mirror_of"] = self.mirror_of
        if self.ambiguous:
            d["ambiguous"] = True
        return d


# ---------------------------------------------------------------------------
# Schedules


def default_schedule(cs: CrossSection | str, n: int = 400, r_max: float = 1e5) -> np.ndarray:
    cs = cross_section(cs)
    return np.geomspace(r_max, cs.min_bend_radius, n)


def parse_schedule(text: str) -> np.ndarray:
    """Parse ``"lo:hi:n"`` (log-spaced, returned descending)."""
    try:
        lo, hi, n = text.split(":")
        lo, hi, n = float(lo), float(hi), int(n)
    except ValueError:
        raise ValueError(f"bad schedule {text!r}; expected lo:hi:n") from None
    if not (0 < lo < hi) or n < 2:
        raise ValueError(f"bad schedule {text!r}; need 0 < lo < hi and n >= 2")
    return np.geomspace(hi, lo, n)


# ---------------------------------------------------------------------------
# Structural comparison of two equilibrium sets


def _side(z: float) -> int:
    return 0 if z == 0.0 else (1 if z > 0 else -1)


def _stab_class(e: Equilibrium) -> str:
    if e.det < 0:
        return "S"
    return "A" if e.trace < 0 else "R"


def _n_unstable(e: Equilibrium) -> int:
    return sum(1 for v in e.eigenvalues if v.real > 0)


@dataclass
class _Diff:
    pairs: list[tuple[int, int]]
    deaths: list[int]   # indices into the larger-R~ set without a partner
    births: list[int]   # indices into the smaller-R~ set without a partner
    class_changes: list[tuple[int, int]]
    ambiguous: bool

    @property
    def changed(self) -> bool:
        return bool(self.deaths or self.births or self.class_changes or self.ambiguous)


def _match(hi: Sequence[Equilibrium], lo: Sequence[Equilibrium], radius: float) -> _Diff:
    cand = []
    per_hi: dict[int, list[float]] = {}
    for i, a in enumerate(hi):
        for j, b in enumerate(lo):
            if _side(a.z) != _side(b.z):
                continue
            d = math.hypot(a.r - b.r, a.z - b.z)
            if d < radius:
                cand.append((d, i, j))
                per_hi.setdefault(i, []).append(d)
    cand.sort()
    used_i, used_j, pairs = set(), set(), []
    for d, i, j in cand:
        if i in used_i or j in used_j:
            continue
        used_i.add(i)
        used_j.add(j)
        pairs.append((i, j))
    ambiguous = False
    for i, j in pairs:
        ds = sorted(per_hi.get(i, []))
        if len(ds) > 1 and ds[1] < 2.0 * ds[0] + 1e-12:
            ambiguous = True
    deaths = [i for i in range(len(hi)) if i not in used_i]
    births = [j for j in range(len(lo)) if j not in used_j]
    changes = [(i, j) for i, j in pairs if _stab_class(hi[i]) != _stab_class(lo[j])]
    return _Diff(sorted(pairs), deaths, births, changes, ambiguous)


# ---------------------------------------------------------------------------
# Equilibria at one parameter value


def _seeds_from(states: Sequence[Sequence[Equilibrium]]) -> np.ndarray:
    pts = []
    for st in states:
        for e in st:
            pts.append((e.r, e.z))
            if e.eigenvectors:
                # slow direction: where a colliding partner would sit
                k = int(np.argmin([abs(v) for v in e.eigenvalues]))
                v = e.eigenvectors[min(k, len(e.eigenvectors) - 1)]
                for s in (1e-3, 1e-2, 3e-2):
                    pts.append((e.r + s * v[0], e.z + s * v[1]))
                    pts.append((e.r - s * v[0], e.z - s * v[1]))
    return np.array(pts, dtype=float).reshape(-1, 2)


def _merge(mp: ModelParams, *sets: Sequence[Equilibrium]) -> EquilibriumSet:
    pts = np.array([(e.r, e.z) for s in sets for e in s], dtype=float).reshape(-1, 2)
    return refine_from(mp, pts) if len(pts) else EquilibriumSet([])


def _solve(mp: ModelParams, neighbours: Sequence[Sequence[Equilibrium]], full: bool,
           grid=None) -> EquilibriumSet:
    seeds = _seeds_from(neighbours)
    if full:
        return find_equilibria(mp, grid, extra_seeds=seeds)
    if not len(seeds):
        return EquilibriumSet([])
    return refine_from(mp, seeds)


# ---------------------------------------------------------------------------
# Sweep


@dataclass
class SweepResult:
    cs: CrossSection
    a_tilde: float
    schedule: np.ndarray
    states: dict[float, EquilibriumSet]
    branches: list[Branch]
    events: list[BifurcationEvent]
    warnings: list[str] = field(default_factory=list)

    @property
    def r_values(self) -> list[float]:
        return sorted(self.states, reverse=True)

    def state(self, r_tilde: float) -> EquilibriumSet:
        return self.states[r_tilde]

    def final_state(self) -> EquilibriumSet:
        return self.states[min(self.states)]

    def events_sorted(self) -> list[BifurcationEvent]:
        return sorted(self.events, key=lambda e: (-e.r_mid, e.location[1], e.id))

    def to_csv(self, meta: dict | None = None, schedule_only: bool = False) -> str:
        """Branch table: one row per (R~, branch) sample."""
        buf = io.StringIO()
        head = {"cross_section": self.cs.kind, "a_tilde": self.a_tilde}
        if meta:
            head["config"] = meta
        buf.write("# " + json.dumps(head, sort_keys=True) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["r_tilde", "branch", "r", "z", "re1", "im1", "re2", "im2", "kind"])
        keep = set(float(x) for x in self.schedule) if schedule_only else None
        rows = []
        for b in self.branches:
            for R, e in b.samples:
                if keep is not None and R not in keep:
                    continue
                l1, l2 = e.eigenvalues
                rows.append((-R, b.id, [repr(float(R)), str(b.id), repr(e.r), repr(e.z),
                                        repr(l1.real), repr(l1.imag), repr(l2.real),
                                        repr(l2.imag), e.kind.value]))
        rows.sort(key=lambda t: (t[0], t[1]))
        for _, _, row in rows:
            w.writerow(row)
        return buf.getvalue()

    def events_json(self, meta: dict | None = None) -> str:
        doc = {
            "cross_section": self.cs.kind,
            "a_tilde": self.a_tilde,
            "events": [e.as_dict() for e in self.events_sorted()],
            "final_state": [e.as_dict() for e in self.final_state()],
            "final_r_tilde": min(self.states),
            "warnings": self.warnings,
        }
        if meta:
            doc["config"] = meta
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def sweep(
    cs: CrossSection | str,
    a_tilde: float,
    schedule: Sequence[float] | None = None,
    *,
    reseed_every: int = 10,
    match_radius: float = MATCH_RADIUS,
    rel_tol: float = REL_TOL,
    grid=None,
) -> SweepResult:
    """Track equilibria of the full model over a descending ``R~`` schedule
    and locate bifurcations.

    Returns branches (continuous equilibrium tracks) and events whose
    ``(r_low, r_high)`` bracket has relative width at most ``rel_tol``.
    """
    cs = cross_section(cs)
    sched = np.asarray(default_schedule(cs) if schedule is None else schedule, dtype=float)
    if len(sched) < 2 or np.any(np.diff(sched) >= 0):
        raise ValueError("schedule must be strictly descending with at least two values")
    if sched[-1] < cs.min_bend_radius or sched[0] > 1e9:
        raise ValueError(f"schedule must lie within [{cs.min_bend_radius}, 1e9]")
    if not a_tilde > 0:
        raise ValueError("a_tilde must be positive")

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # a~ validity warning: emitted once below
        base = ModelParams(cs, a_tilde, float(sched[0]))
    if a_tilde > 0.05:
        warnings.warn(f"a_tilde={a_tilde} is outside the validated range", stacklevel=2)

    states: dict[float, EquilibriumSet] = {}

    def mp_at(R: float) -> ModelParams:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return base.with_r_tilde(R)

    def bisect(hi: float, lo: float, depth: int = 0) -> None:
        s_hi, s_lo = states[hi], states[lo]
        if hi - lo <= rel_tol * lo or depth > 60:
            return
        mid = 0.5 * (hi + lo)
        wide = (hi - lo) > 1e-3 * lo
        s_mid = _solve(mp_at(mid), [s_hi, s_lo], full=wide, grid=grid)
        # cross-seed the ends so a root missed on one side is not mistaken
        # for a structural change
        states[hi] = s_hi = _merge(mp_at(hi), s_hi, _solve(mp_at(hi), [s_mid], False))
        states[lo] = s_lo = _merge(mp_at(lo), s_lo, _solve(mp_at(lo), [s_mid], False))
        states[mid] = s_mid
        if _match(s_hi, s_mid, match_radius).changed:
            bisect(hi, mid, depth + 1)
        if _match(states[mid], states[lo], match_radius).changed:
            bisect(mid, lo, depth + 1)

    prev_R = None
    for k, R in enumerate(sched):
        R = float(R)
        full = k % reseed_every == 0
        neighbours = [states[prev_R]] if prev_R is not None else []
        st = _solve(mp_at(R), neighbours, full=full, grid=grid)
        if prev_R is not None:
            d = _match(states[prev_R], st, match_radius)
            if d.changed and not full:
                st = _solve(mp_at(R), neighbours, full=True, grid=grid)
                d = _match(states[prev_R], st, match_radius)
            states[R] = st
            if d.changed:
                bisect(prev_R, R)
        else:
            states[R] = st
        prev_R = R

    branches, events, notes = _assemble(states, match_radius, rel_tol)
    log.info("sweep %s a=%g: %d states, %d branches, %d events", cs.kind, a_tilde,
             len(states), len(branches), len(events))
    return SweepResult(cs, a_tilde, sched, states, branches, events, notes)


def _clusters(states, radius: float, rel_tol: float) -> list[tuple[float, float]]:
    """Group refined brackets that sit next to each other into one interval.

    Newton can drop one root of a colliding pair a few bisection levels
    before the fold, which splits one event over adjacent brackets.
    """
    Rs = sorted(states, reverse=True)
    changed = [(lo, hi) for hi, lo in zip(Rs[:-1], Rs[1:])
               if _match(states[hi], states[lo], radius).changed]
    changed.sort(key=lambda t: -t[1])
    out: list[list[float]] = []
    for lo, hi in changed:
        gap_ok = out and out[-1][0] - hi <= 64 * rel_tol * hi
        small = hi - lo <= 2 * rel_tol * lo
        if gap_ok and small and out[-1][1] - out[-1][0] <= 256 * rel_tol * hi:
            out[-1][0] = lo
        else:
            out.append([lo, hi])
    return [(lo, hi) for lo, hi in out]


def _assemble(states: dict[float, EquilibriumSet], radius: float, rel_tol: float):
    clusters = _clusters(states, radius, rel_tol)
    inside = {R for R in states for lo, hi in clusters if lo < R < hi}
    Rs = [R for R in sorted(states, reverse=True) if R not in inside]
    cluster_set = set(clusters)
    branches: list[Branch] = []
    events: list[BifurcationEvent] = []
    notes: list[str] = []
    owner: list[int] = []  # branch id per equilibrium of the current state

    for e in states[Rs[0]]:
        b = Branch(len(branches), [(Rs[0], e)])
        branches.append(b)
        owner.append(b.id)

    for hi, lo in zip(Rs[:-1], Rs[1:]):
        s_hi, s_lo = states[hi], states[lo]
        d = _match(s_hi, s_lo, radius)
        new_owner = [-1] * len(s_lo)
        for i, j in d.pairs:
            new_owner[j] = owner[i]
        for j in d.births:
            b = Branch(len(branches))
            branches.append(b)
            new_owner[j] = b.id
        for j, e in enumerate(s_lo):
            branches[new_owner[j]].samples.append((lo, e))
        if d.changed:
            if (lo, hi) not in cluster_set or hi - lo > 256 * rel_tol * hi:
                notes.append(f"unrefined structural change between R~={lo!r} and {hi!r}")
            evs = _classify(lo, hi, s_hi, s_lo, d, owner, new_owner, notes)
            for ev in evs:
                ev.id = len(events)
                events.append(ev)
            for ev in evs:
                if isinstance(ev.mirror_of, BifurcationEvent):
                    ev.mirror_of = ev.mirror_of.id
                for bid in ev.branch_ids:
                    b = branches[bid]
                    if b.samples and b.samples[0][0] == lo and b.birth_event is None:
                        b.birth_event = ev.id
                    elif b.samples and b.samples[-1][0] == hi and b.death_event is None:
                        b.death_event = ev.id
        owner = new_owner
    return branches, events, notes


def _classify(lo, hi, s_hi, s_lo, d: _Diff, owner, new_owner, notes) -> list[BifurcationEvent]:
    evs: list[BifurcationEvent] = []
    deaths = list(d.deaths)
    births = list(d.births)
    ambiguous = d.ambiguous

    for i, j in d.class_changes:
        a, b = s_hi[i], s_lo[j]
        ca, cb = _stab_class(a), _stab_class(b)
        if ca != "S" and cb != "S":
            evs.append(BifurcationEvent(EventKind.HOPF, lo, hi, (owner[i],), (b.r, b.z),
                                        ambiguous=ambiguous))
            continue
        # real eigenvalue through zero on a surviving branch: pitchfork if a
        # mirror pair is born from / dies into it
        pool_d = [k for k in deaths if _side(s_hi[k].z) != 0]
        pool_b = [k for k in births if _side(s_lo[k].z) != 0]
        best = None
        for pool, st, direction in ((pool_d, s_hi, "merging"), (pool_b, s_lo, "emerging")):
            for p in pool:
                for q in pool:
                    if p >= q or _side(st[p].z) != -_side(st[q].z):
                        continue
                    if abs(st[p].r - st[q].r) > 1e-6 or abs(st[p].z + st[q].z) > 1e-6:
                        continue
                    dist = math.hypot(st[p].r - b.r, st[p].z)
                    if best is None or dist < best[0]:
                        best = (dist, p, q, direction)
        if best is None or _side(a.z) != 0:
            notes.append(f"real eigenvalue crossing without branch pair near ({b.r:.4g}, {b.z:.4g}) "
                         f"in ({lo!r}, {hi!r})")
            evs.append(BifurcationEvent(EventKind.SADDLE_NODE, lo, hi, (owner[i],), (b.r, b.z),
                                        ambiguous=True))
            continue
        _, p, q, direction = best
        if direction == "merging":
            deaths.remove(p); deaths.remove(q)
            off, on_exist = s_hi[p], a
            ids = (owner[i], owner[p], owner[q])
        else:
            births.remove(p); births.remove(q)
            off, on_exist = s_lo[p], b
            ids = (owner[i], new_owner[p], new_owner[q])
        crit = "supercritical" if _n_unstable(off) < _n_unstable(on_exist) else "subcritical"
        evs.append(BifurcationEvent(EventKind.PITCHFORK, lo, hi, ids, (b.r, b.z), crit,
                                    direction, ambiguous=ambiguous))

    # remaining unmatched equilibria annihilate / are created in pairs
    for pool, st, ids_of in ((deaths, s_hi, owner), (births, s_lo, new_owner)):
        pool = list(pool)
        while pool:
            p = pool.pop(0)
            cands = [q for q in pool if _side(st[q].z) == _side(st[p].z)]
            if not cands:
                notes.append(f"unpaired equilibrium ({st[p].r:.4g}, {st[p].z:.4g}) in ({lo!r}, {hi!r})")
                evs.append(BifurcationEvent(EventKind.SADDLE_NODE, lo, hi, (ids_of[p],),
                                            (st[p].r, st[p].z), ambiguous=True))
                continue
            q = min(cands, key=lambda k: math.hypot(st[k].r - st[p].r, st[k].z - st[p].z))
            pool.remove(q)
            saddle_pair = (_stab_class(st[p]) == "S") != (_stab_class(st[q]) == "S")
            loc = (0.5 * (st[p].r + st[q].r), 0.5 * (st[p].z + st[q].z))
            evs.append(BifurcationEvent(EventKind.SADDLE_NODE, lo, hi, (ids_of[p], ids_of[q]), loc,
                                        ambiguous=ambiguous or not saddle_pair))

    # link z-mirror partners
    for k, e in enumerate(evs):
        if e.location[1] <= 0 or e.mirror_of is not None:
            continue
        for f in evs:
            if f is not e and f.kind == e.kind and abs(f.location[0] - e.location[0]) < 1e-4 \
                    and abs(f.location[1] + e.location[1]) < 1e-4:
                e.mirror_of = f  # replaced by the event id once ids are assigned
                f.mirror_of = e
                break
    return evs


# ---------------------------------------------------------------------------
# Event refinement


def _nearest(eqs: Sequence[Equilibrium], loc, on_axis: bool | None = None,
             side: int | None = None) -> Equilibrium | None:
    pool = [e for e in eqs
            if (on_axis is None or (e.z == 0.0) == on_axis)
            and (side is None or _side(e.z) == side)]
    if not pool:
        return None
    return min(pool, key=lambda e: math.hypot(e.r - loc[0], e.z - loc[1]))


def _event_test(mp: ModelParams, ev: BifurcationEvent, loc, radius: float):
    """Signed test function of ``ev`` at ``mp`` plus the equilibria it used."""
    if ev.kind == EventKind.SADDLE_NODE:
        eqs = [e for e in find_equilibria(mp, extra_seeds=np.array([loc]))
               if _side(e.z) == _side(loc[1])]
        # the colliding pair is a saddle and a non-saddle near ``loc``
        sad = _nearest([e for e in eqs if e.det < 0], loc)
        non = _nearest([e for e in eqs if e.det >= 0], loc)
        pair = tuple(e for e in (sad, non) if e is not None)
        exists = len(pair) == 2 and all(
            math.hypot(e.r - loc[0], e.z - loc[1]) < 3 * radius for e in pair)
        return (1.0 if exists else -1.0), (pair if exists else ())
    seeds = np.array([loc, (loc[0] + 1e-3, loc[1]), (loc[0] - 1e-3, loc[1])])
    eqs = refine_from(mp, seeds)
    if ev.kind == EventKind.HOPF:
        e = _nearest(eqs, loc, side=_side(loc[1]))
        if e is None:
            e = _nearest(find_equilibria(mp, extra_seeds=seeds), loc, side=_side(loc[1]))
        return (None, ()) if e is None else (e.trace, (e,))
    e = _nearest(eqs, loc, on_axis=True)
    if e is None:
        e = _nearest(find_equilibria(mp, extra_seeds=seeds), loc, on_axis=True)
    return (None, ()) if e is None else (e.det, (e,))


def refine_event(
    event: BifurcationEvent,
    tol_r: float,
    cs: CrossSection | str,
    a_tilde: float,
    *,
    match_radius: float = MATCH_RADIUS,
    max_iter: int = 200,
) -> BifurcationEvent:
    """Shrink the bracket of ``event`` to width ``<= tol_r`` by bisection on
    its test function.

    The test function is the trace of the tracked spiral for a Hopf event,
    the determinant of the on-axis equilibrium for a pitchfork, and the
    existence of the colliding pair for a saddle-node.  If the test function
    has no sign change across the input bracket, the event is returned
    unchanged and a warning is emitted.
    """
    if tol_r <= 0:
        raise ValueError("tol_r must be positive")
    cs = cross_section(cs)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        base = ModelParams(cs, a_tilde, float(event.r_high))

    def mp_at(R: float) -> ModelParams:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return base.with_r_tilde(R)

    lo, hi = float(event.r_low), float(event.r_high)
    loc = tuple(event.location)
    f_lo, e_lo = _event_test(mp_at(lo), event, loc, match_radius)
    f_hi, e_hi = _event_test(mp_at(hi), event, loc, match_radius)
    if f_lo is None or f_hi is None or f_lo * f_hi > 0 or (f_lo == 0 and f_hi == 0):
        warnings.warn(f"{event.kind.value} test function has no sign change on "
                      f"({lo!r}, {hi!r}); bracket left unrefined", RuntimeWarning, stacklevel=2)
        return event

    for _ in range(max_iter):
        if hi - lo <= tol_r:
            break
        mid = 0.5 * (lo + hi)
        # follow the branch: re-centre on the last located equilibrium
        track = e_hi or e_lo
        guess = (float(np.mean([e.r for e in track])), float(np.mean([e.z for e in track]))) \
            if track else loc
        f_mid, e_mid = _event_test(mp_at(mid), event, guess, match_radius)
        if f_mid is None:
            warnings.warn(f"lost the {event.kind.value} branch at R~={mid!r}; "
                          "bracket refined only partially", RuntimeWarning, stacklevel=2)
            break
        if f_mid == 0.0:
            lo = hi = mid
            break
        if (f_mid > 0) == (f_hi > 0):
            hi, f_hi, e_hi = mid, f_mid, e_mid
        else:
            lo, f_lo, e_lo = mid, f_mid, e_mid

    mid = 0.5 * (lo + hi)
    track = e_hi or e_lo
    guess = (float(np.mean([e.r for e in track])), float(np.mean([e.z for e in track]))) \
        if track else loc
    _, at_mid = _event_test(mp_at(mid), event, guess, match_radius)
    if at_mid:
        new_loc = (float(np.mean([e.r for e in at_mid])), float(np.mean([e.z for e in at_mid])))
    else:
        new_loc = loc
    return BifurcationEvent(event.kind, lo, hi, event.branch_ids, new_loc, event.criticality,
                            event.direction, event.mirror_of, event.ambiguous, event.id,
                            at_mid=tuple(at_mid))


# ---------------------------------------------------------------------------
# Limit cycles


LC_OFFSET = 1e-3
LC_MAX_REVOLUTIONS = 500
LC_TOL = 1e-8


@dataclass
class LimitCycle:
    """A certified periodic orbit around one spiral equilibrium."""

    r_tilde: float
    center: tuple[float, float]
    period: float
    t: np.ndarray = field(repr=False)
    r: np.ndarray = field(repr=False)
    z: np.ndarray = field(repr=False)
    section_point: float  # distance from the spiral along the +r section ray
    residual: float
    revolutions: int
    stable: bool  # attracting in forward time

    def as_dict(self) -> dict:
        return {
            "r_tilde": self.r_tilde,
            "center": list(self.center),
            "period": self.period,
            "section_point": self.section_point,
            "residual": self.residual,
            "revolutions": self.revolutions,
            "stable": self.stable,
        }


@dataclass
class LimitCycleDiagnostic:
    reason: str  # "found", "degenerate-center", "hit-boundary", "converged-to-point",
    #              "no-return", "not-enclosing", "max-revolutions"
    detail: str = ""
    revolutions: int = 0


def _winding(r: np.ndarray, z: np.ndarray, p: tuple[float, float]) -> int:
    ang = np.unwrap(np.arctan2(z - p[1], r - p[0]))
    return int(round((ang[-1] - ang[0]) / (2 * np.pi)))


def search_limit_cycle(
    mp: ModelParams,
    spiral: Equilibrium,
    *,
    offset: float = LC_OFFSET,
    max_revolutions: int = LC_MAX_REVOLUTIONS,
    tol: float = LC_TOL,
    rtol: float = 1e-12,
    atol: float = 1e-15,
) -> tuple[LimitCycle | None, LimitCycleDiagnostic]:
    """Like :func:`find_limit_cycle` but always returns a diagnostic."""
    if spiral.kind == Kind.CENTER or mp.drag_only:
        return None, LimitCycleDiagnostic(
            "degenerate-center",
            "drag-only flow conserves an invariant: closed orbits form a continuum, "
            "no isolated cycle exists")
    if not spiral.kind.is_spiral:
        raise ValueError(f"find_limit_cycle needs a spiral equilibrium, got {spiral.kind.value}")

    cs = mp.cs
    r0, z0 = spiral.r, spiral.z
    # unstable spiral: the surrounding cycle attracts in forward time;
    # stable spiral: any cycle around it is repelling, so run time backwards
    sign = 1.0 if spiral.kind == Kind.UNSTABLE_SPIRAL else -1.0
    lim = (cs.half_width, cs.half_height)

    def fun(t, x):
        r = min(max(x[0], -lim[0]), lim[0])
        z = min(max(x[1], -lim[1]), lim[1])
        v = rhs(mp, r, z)
        fr, fz = sign * v.fr, sign * v.fz
        dr, dz = x[0] - r0, x[1] - z0
        # third component: angle swept around the spiral
        return [fr, fz, (dr * fz - dz * fr) / (dr * dr + dz * dz)]

    # one full turn around the spiral brings the orbit back to the section
    # ray z = z0, r > r0
    def section(t, x):
        return abs(x[2]) - 2.0 * np.pi
    section.terminal = True
    section.direction = 1

    def wall(t, x):
        return min(lim[0] - abs(x[0]), lim[1] - abs(x[1])) - 1e-9
    wall.terminal = True
    wall.direction = -1

    omega = max(abs(spiral.eigenvalues[0].imag), 1e-300)
    t_rev = 50.0 * 2.0 * np.pi / omega

    def ret(s: float, dense: bool = False):
        sol = solve_ivp(fun, (0.0, t_rev), [r0 + s, z0, 0.0], method="DOP853", rtol=rtol,
                        atol=atol, events=(section, wall), dense_output=dense)
        if sol.t_events[1].size:
            return None, "hit-boundary", sol
        if not sol.t_events[0].size:
            return None, "no-return", sol
        x = sol.y_events[0][0]
        return (x[0] - r0, float(sol.t_events[0][0])), "ok", sol

    s_prev, g_prev = None, None
    s = offset
    revs = 0
    while revs < max_revolutions:
        out, why, _ = ret(s)
        revs += 1
        if out is None:
            return None, LimitCycleDiagnostic(why, f"at section offset {s:.6g}", revs)
        s_next, period = out
        g = s_next - s
        if abs(g) < tol:
            break
        if s_next < 1e-3 * offset and g < 0 and (g_prev is None or g_prev < 0):
            return None, LimitCycleDiagnostic(
                "converged-to-point", "orbit spirals back into the equilibrium", revs)
        # secant on the return-map displacement once two samples exist
        # (only while the displacement shrinks: near the spiral P(s) - s is
        # linear in s and the secant would jump back to the trivial root)
        cand = s_next
        if g_prev is not None and g != g_prev and abs(g) < abs(g_prev):
            sec = s - g * (s - s_prev) / (g - g_prev)
            if 0.5 * min(s, s_next) < sec < 2.0 * max(s, s_next):
                cand = sec
        s_prev, g_prev = s, g
        s = cand
    else:
        return None, LimitCycleDiagnostic("max-revolutions",
                                          f"return map not converged (last offset {s:.6g})", revs)

    # certify: residual of the return map at the converged point
    out, why, sol = ret(s, dense=True)
    if out is None:
        return None, LimitCycleDiagnostic(why, "certification run failed", revs)
    s_ret, period = out
    residual = abs(s_ret - s)
    if residual >= tol:
        return None, LimitCycleDiagnostic("max-revolutions",
                                          f"certification residual {residual:.3g}", revs)
    ts = np.linspace(0.0, period, 2001)
    rr, zz, _ = sol.sol(ts)
    t = ts
    others = find_equilibria(mp, extra_seeds=np.array([[r0, z0]]))
    for e in others:
        w = _winding(rr, zz, e.location)
        is_self = math.hypot(e.r - r0, e.z - z0) < 1e-8
        if (is_self and abs(w) != 1) or (not is_self and w != 0):
            return None, LimitCycleDiagnostic(
                "not-enclosing", f"winding {w} around equilibrium ({e.r:.4g}, {e.z:.4g})", revs)
    cyc = LimitCycle(mp.r_tilde, (r0, z0), period, t, rr, zz, s, residual, revs, sign > 0)
    return cyc, LimitCycleDiagnostic("found", f"period {period:.6g}", revs)


def find_limit_cycle(mp: ModelParams, spiral: Equilibrium, **kwargs) -> LimitCycle | None:
    """Locate the isolated periodic orbit enclosing ``spiral``.

    Starts ``offset`` from the spiral on the ray ``z = z_spiral, r > r_spiral``
    (the Poincare section), integrates forward for an unstable spiral and
    backward for a stable one, and solves ``P(s) = s`` for the return map
    ``P`` by secant iteration.  Returns ``None`` when no cycle is certified;
    use :func:`search_limit_cycle` for the reason.
    """
    cyc, diag = search_limit_cycle(mp, spiral, **kwargs)
    log.info("limit cycle search at (%.4g, %.4g): %s %s", spiral.r, spiral.z, diag.reason,
             diag.detail)
    return cyc
