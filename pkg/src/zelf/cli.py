"""Command-line front end: ``zelf {field,simulate,equilibria,limits,sweep}``.

Every output embeds the :class:`RunConfig` that produced it, floats are
written in shortest round-trip form, and ordering is fixed, so identical
configurations give byte-identical files.

Exit codes: 0 success, 1 usage error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import math
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .analytics import drag_invariant, drag_limit_report, lift_limit_report
from .continuation import parse_schedule, sweep
from .dynamics import ModelParams, StiffnessError, integrate
from .equilibria import equilibria_to_csv, equilibria_to_json, find_equilibria
from .forcefield import cross_section, drag, lift

log = logging.getLogger("zelf")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2
SUBCOMMANDS = ("field", "simulate", "equilibria", "limits", "sweep")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    """Everything needed to reproduce a run."""

    subcommand: str
    cross_section: str = "2x1"
    a_tilde: float = 0.05
    r_tilde: float | None = None
    r_schedule: str | None = None
    lift_only: bool = False
    drag_only: bool = False
    grid: str | None = None
    tol: float | None = None
    out: str | None = None
    format: str | None = None  # csv for field, json elsewhere
    seeds: list[tuple[float, float]] = field(default_factory=list)
    random_seeds: int = 0
    rng_seed: int = 0
    t_end: float | None = None
    contours: str | None = None

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["seeds"] = [list(s) for s in self.seeds]
        return d

    def model_params(self) -> ModelParams:
        if self.lift_only and self.drag_only:
            raise UsageError("--lift-only and --drag-only are mutually exclusive")
        if self.drag_only:
            R = 100.0 if self.r_tilde is None else self.r_tilde
            return ModelParams(self.cross_section, self.a_tilde, R, drag_only=True)
        if self.lift_only or self.r_tilde is None:
            return ModelParams(self.cross_section, self.a_tilde, math.inf)
        return ModelParams(self.cross_section, self.a_tilde, self.r_tilde)

    def grid_shape(self, default: tuple[int, int]) -> tuple[int, int]:
        if self.grid is None:
            return default
        try:
            n, m = (int(v) for v in self.grid.lower().split("x"))
        except ValueError:
            raise UsageError(f"bad --grid {self.grid!r}; expected NxM") from None
        if n < 2 or m < 2:
            raise UsageError("--grid needs at least 2 points per axis")
        return n, m


# ---------------------------------------------------------------------------
# Configuration parsing


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def _parse_seeds(text: str) -> list[tuple[float, float]]:
    out = []
    for item in text.replace(" ", "").split(";"):
        if not item:
            continue
        try:
            r, z = item.split(",")
            out.append((float(r), float(z)))
        except ValueError:
            raise UsageError(f"bad seed {item!r}; expected r,z") from None
    return out


def _coerce(name: str, value):
    if name == "seeds":
        return _parse_seeds(value) if isinstance(value, str) else value
    typ = _FIELDS[name].type
    if isinstance(value, str):
        low = value.strip().lower()
        if "bool" in typ:
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise UsageError(f"bad boolean for {name}: {value!r}")
        if "float" in typ:
            return None if low in ("", "none") else float(low)
        if "int" in typ:
            return int(low)
        return value.strip()
    return value


def read_config_file(path: str) -> dict:
    """Flat ``key = value`` document; ``#`` starts a comment."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise UsageError(f"cannot read config file {path}: {err}") from None
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _FIELDS or key == "subcommand":
            raise UsageError(f"{path}:{n}: unknown key {key!r}")
        try:
            out[key] = _coerce(key, value)
        except ValueError:
            raise UsageError(f"{path}:{n}: bad value for {key}: {value!r}") from None
    return out


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit with 1, not argparse's 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="flat key=value config file (CLI flags win)")
    common.add_argument("--cross-section", dest="cross_section", choices=["2x1", "1x2"])
    common.add_argument("--a-tilde", dest="a_tilde", type=float)
    common.add_argument("--r-tilde", dest="r_tilde", type=float)
    common.add_argument("--r-schedule", dest="r_schedule", metavar="LO:HI:N",
                        help="log-spaced R~ schedule (sweep)")
    common.add_argument("--lift-only", dest="lift_only", action="store_true")
    common.add_argument("--drag-only", dest="drag_only", action="store_true")
    common.add_argument("--grid", metavar="NxM", help="sample / seed grid (r points x z points)")
    common.add_argument("--tol", type=float, help="Newton or integrator tolerance")
    common.add_argument("--out", help="output file (or directory for simulate/sweep)")
    common.add_argument("--format", choices=["csv", "json"])
    common.add_argument("--seeds", help="semicolon-separated r,z pairs")
    common.add_argument("--random-seeds", dest="random_seeds", type=int,
                        help="number of uniformly random interior seeds")
    common.add_argument("--rng-seed", dest="rng_seed", type=int)
    common.add_argument("--t-end", dest="t_end", type=float)
    common.add_argument("--contours", help="field: write zero-level polylines (JSON) here")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="zelf", description="Reduced particle-focusing model in curved ducts.")
    p.add_argument("--version", action="version", version=f"zelf {__version__}")
    sub = p.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    helps = {
        "field": "sample lift and drag on a uniform grid",
        "simulate": "integrate particle trajectories from seed points",
        "equilibria": "find all interior equilibria",
        "limits": "lift-only and drag-only analytic-limit reports",
        "sweep": "continue equilibria in R~ and detect bifurcations",
    }
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return p


def resolve_config(argv: Sequence[str] | None) -> tuple[RunConfig, bool]:
    ns = vars(build_parser().parse_args(argv))
    verbose = ns.pop("verbose", False)
    sub = ns.pop("subcommand")
    merged: dict = {}
    cfg_path = ns.pop("config", None)
    if cfg_path:
        merged.update(read_config_file(cfg_path))
    for k, v in ns.items():
        merged[k] = _coerce(k, v)
    cfg = RunConfig(sub, **merged)
    try:
        cross_section(cfg.cross_section)
    except ValueError as err:
        raise UsageError(str(err)) from None
    if cfg.format is None:
        cfg.format = "csv" if sub == "field" else "json"
    if cfg.format not in ("csv", "json"):
        raise UsageError(f"bad format {cfg.format!r}")
    return cfg, verbose


# ---------------------------------------------------------------------------
# Output helpers


def _emit(text: str, path: str | Path | None) -> None:
    if path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    path = Path(path)
    try:
        if path.parent and not path.parent.exists():
            path.parent.mkdir(parents=True)
        path.write_text(text)
    except OSError as err:
        raise UsageError(f"cannot write {path}: {err}") from None


def _outdir(cfg: RunConfig) -> Path | None:
    if cfg.out is None:
        return None
    d = Path(cfg.out)
    try:
        d.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        raise UsageError(f"cannot create output directory {d}: {err}") from None
    return d


def _json(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# Subcommands


def cmd_field(cfg: RunConfig) -> int:
    cs = cross_section(cfg.cross_section)
    default = (201, 101) if cs.kind == "2x1" else (101, 201)
    nr, nz = cfg.grid_shape(default)
    r = np.linspace(-cs.half_width, cs.half_width, nr)
    z = np.linspace(-cs.half_height, cs.half_height, nz)
    R, Z = np.meshgrid(r, z, indexing="ij")
    L = lift(cs, R, Z)
    D = drag(cs, R, Z)
    cols = {"L_r": L.fr, "L_z": L.fz, "D_r": D.fr, "D_z": D.fz}
    meta = {"config": cfg.as_dict(), "shape": [nr, nz], "order": "r-major"}

    if cfg.format == "json":
        doc = dict(meta, r=r.tolist(), z=z.tolist(),
                   **{k: v.tolist() for k, v in cols.items()})
        _emit(_json(doc), cfg.out)
    else:
        buf = io.StringIO()
        buf.write("# " + json.dumps(meta, sort_keys=True) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["r", "z", *cols])
        for i in range(nr):
            for j in range(nz):
                w.writerow([repr(float(r[i])), repr(float(z[j])),
                            *(repr(float(v[i, j])) for v in cols.values())])
        _emit(buf.getvalue(), cfg.out)

    if cfg.contours:
        from skimage.measure import find_contours

        lines = {}
        for name, v in cols.items():
            segs = []
            for c in find_contours(v, 0.0):
                # fractional grid indices -> (r, z)
                rr = np.interp(c[:, 0], np.arange(nr), r)
                zz = np.interp(c[:, 1], np.arange(nz), z)
                segs.append([[float(a), float(b)] for a, b in zip(rr, zz)])
            lines[name] = segs
        _emit(_json({"config": cfg.as_dict(), "zero_level_sets": lines}), cfg.contours)
    return EXIT_OK


def _seeds(cfg: RunConfig, mp: ModelParams) -> list[tuple[float, float]]:
    seeds = list(cfg.seeds)
    if cfg.random_seeds:
        rng = np.random.default_rng(cfg.rng_seed)
        w, h = mp.cs.half_width, mp.cs.half_height
        pts = rng.uniform(-1.0, 1.0, size=(cfg.random_seeds, 2)) * 0.95 * np.array([w, h])
        seeds += [(float(a), float(b)) for a, b in pts]
    return seeds


def cmd_simulate(cfg: RunConfig) -> int:
    mp = cfg.model_params()
    seeds = _seeds(cfg, mp)
    if not seeds:
        raise UsageError("simulate needs --seeds or --random-seeds")
    for s in seeds:
        if not mp.cs.contains(*s):
            raise UsageError(f"seed {s} lies outside the {mp.cs.kind} cross-section")
    tol = 1e-10 if cfg.tol is None else cfg.tol
    if cfg.t_end is not None:
        t_end = cfg.t_end
    elif mp.drag_only:
        t_end = 1e4 * mp.r_tilde
    else:
        t_end = 1e5 / mp.lift_weight
    outdir = _outdir(cfg)
    summary = []
    failed = 0
    for k, s in enumerate(seeds):
        item = {"index": k, "seed": list(s)}
        try:
            traj = integrate(mp, s, t_end, rtol=tol, atol=tol * 1e-3,
                             detect_closed_orbit=mp.drag_only)
        except StiffnessError as err:
            failed += 1
            item.update(status="failed", error=str(err))
            summary.append(item)
            continue
        item.update(status="ok", terminal_reason=traj.terminal_reason.value,
                    end=list(traj.end), t_final=float(traj.t[-1]), n_points=len(traj))
        if mp.drag_only:
            h = drag_invariant(mp.cs, traj.r, traj.z)
            item["invariant_drift"] = float(np.max(np.abs(h - h[0])) / abs(h[0])) \
                if h[0] != 0 else float(np.max(np.abs(h)))
        if outdir is not None:
            name = f"trajectory_{k:03d}.csv"
            _emit(traj.to_csv({"config": cfg.as_dict(), "seed_index": k}), outdir / name)
            item["file"] = name
        summary.append(item)
    doc = {"config": cfg.as_dict(), "params": mp.as_dict(), "trajectories": summary,
           "failed": failed}
    _emit(_json(doc), None if outdir is None else outdir / "summary.json")
    return EXIT_NUMERIC if failed else EXIT_OK


def cmd_equilibria(cfg: RunConfig) -> int:
    mp = cfg.model_params()
    grid = None if cfg.grid is None else cfg.grid_shape((41, 21))
    kw = {} if cfg.tol is None else {"tol": cfg.tol}
    extra = np.array(cfg.seeds, dtype=float).reshape(-1, 2) if cfg.seeds else None
    eqs = find_equilibria(mp, grid, extra_seeds=extra, **kw)
    meta = cfg.as_dict()
    text = equilibria_to_json(eqs, mp, meta) if cfg.format == "json" \
        else equilibria_to_csv(eqs, mp, meta)
    _emit(text, cfg.out)
    return EXIT_OK


def cmd_limits(cfg: RunConfig) -> int:
    cs = cross_section(cfg.cross_section)
    doc: dict = {"config": cfg.as_dict()}
    if not cfg.drag_only:
        doc["lift_only"] = lift_limit_report(cs, cfg.a_tilde).as_dict()
    if not cfg.lift_only:
        R = 100.0 if cfg.r_tilde is None else cfg.r_tilde
        doc["drag_only"] = drag_limit_report(cs, R).as_dict()
    _emit(_json(doc), cfg.out)
    return EXIT_OK


def cmd_sweep(cfg: RunConfig) -> int:
    cs = cross_section(cfg.cross_section)
    if cfg.lift_only or cfg.drag_only:
        raise UsageError("sweep runs the full model; drop --lift-only/--drag-only")
    try:
        sched = None if cfg.r_schedule is None else parse_schedule(cfg.r_schedule)
    except ValueError as err:
        raise UsageError(str(err)) from None
    grid = None if cfg.grid is None else cfg.grid_shape((41, 21))
    kw = {} if cfg.tol is None else {"rel_tol": cfg.tol}
    res = sweep(cs, cfg.a_tilde, sched, grid=grid, **kw)
    meta = cfg.as_dict()
    outdir = _outdir(cfg)
    events = res.events_json(meta)
    if outdir is None:
        _emit(events, None)
    else:
        _emit(events, outdir / "events.json")
        _emit(res.to_csv(meta), outdir / "branches.csv")
    return EXIT_OK


_COMMANDS = {
    "field": cmd_field,
    "simulate": cmd_simulate,
    "equilibria": cmd_equilibria,
    "limits": cmd_limits,
    "sweep": cmd_sweep,
}


def main(argv: Sequence[str] | None = None) -> int:
    try:
        cfg, verbose = resolve_config(argv)
    except UsageError as err:
        print(f"zelf: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as ex:  # argparse --help / usage errors
        return int(ex.code or 0)
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        with warnings.catch_warnings():
            if not verbose:
                warnings.simplefilter("ignore", RuntimeWarning)
            return _COMMANDS[cfg.subcommand](cfg)
    except UsageError as err:
        print(f"zelf: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as err:  # parameter validation from the model layer
        print(f"zelf: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (StiffnessError, ArithmeticError, np.linalg.LinAlgError) as err:
        print(f"zelf: numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC


def main_entry() -> None:  # console-script wrapper
    sys.exit(main())


if __name__ == "__main__":  # pragma: no cover
    main_entry()
