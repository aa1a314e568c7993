"""Run the full R~ sweeps for both cross-sections and write plot-ready files.

    python3 scripts/reproduce_sweeps.py --out runs/sweeps

For each cross-section this writes ``branches_<cs>.csv`` (one row per branch
sample, r, z, Re and Im of the eigenvalues against R~), ``events_<cs>.json``,
and for the 1x2 section ``limit_cycles_1x2.json`` at R~ = 1000.
"""

import argparse
import json
import time
from pathlib import Path

import numpy as np

from zelf.continuation import default_schedule, find_limit_cycle, sweep
from zelf.dynamics import ModelParams
from zelf.equilibria import find_equilibria


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="runs/sweeps")
    ap.add_argument("--a-tilde", type=float, default=0.05)
    ap.add_argument("-n", type=int, default=400, help="schedule points")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    for cs in ("2x1", "1x2"):
        sched = default_schedule(cs, args.n)
        t0 = time.perf_counter()
        res = sweep(cs, args.a_tilde, sched)
        meta = {"cross_section": cs, "a_tilde": args.a_tilde, "n": args.n}
        (out / f"branches_{cs}.csv").write_text(res.to_csv(meta))
        (out / f"events_{cs}.json").write_text(res.events_json(meta))
        print(f"{cs}: {len(res.events)} events in {time.perf_counter() - t0:.1f} s")
        for e in res.events_sorted():
            extra = f" {e.criticality}/{e.direction}" if e.criticality else ""
            print(f"  {e.kind.value:<11} R~ in [{e.r_low:.2f}, {e.r_high:.2f}] "
                  f"at ({e.location[0]:+.4f}, {e.location[1]:+.4f}){extra}")
        print("  final:", sorted(e.kind.value for e in res.final_state()))

    mp = ModelParams("1x2", args.a_tilde, 1000.0)
    cycles = []
    for e in find_equilibria(mp):
        if e.kind.is_spiral:
            cyc = find_limit_cycle(mp, e)
            if cyc is not None:
                cycles.append(cyc.as_dict())
                print(f"1x2 limit cycle around ({e.r:+.4f}, {e.z:+.4f}): "
                      f"period {cyc.period:.6g}, residual {cyc.residual:.1e}")
    (out / "limit_cycles_1x2.json").write_text(json.dumps(cycles, indent=2, default=float) + "\n")


if __name__ == "__main__":
    main()
