"""Print the lift-only equilibria next to the embedded table values.

    python3 scripts/lift_limit_tables.py [--a-tilde 0.05] [--json out.json]
"""

import argparse
import json

from zelf.analytics import lift_limit_report


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--a-tilde", type=float, default=0.05)
    ap.add_argument("--json", help="also write both reports here")
    args = ap.parse_args()
    docs = {}
    for cs in ("2x1", "1x2"):
        rep = lift_limit_report(cs, args.a_tilde)
        docs[cs] = rep.as_dict()
        print(f"{cs}  ({'match' if rep.passed else 'MISMATCH'}, tol {rep.tolerance})")
        print(f"  {'r':>8} {'z':>8}  {'kind':<13} {'l1/a^3':>9} {'l2/a^3':>9}   table")
        for e in rep.entries:
            l1, l2 = e["lambda_coeff"]
            g1, g2 = e["golden_lambda_coeff"]
            print(f"  {e['found'][0]:8.4f} {e['found'][1]:8.4f}  {e['kind']:<13} "
                  f"{l1:9.4f} {l2:9.4f}   ({g1:.4f}, {g2:.4f})")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(docs, fh, indent=2, sort_keys=True)


if __name__ == "__main__":
    main()
