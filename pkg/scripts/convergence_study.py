"""Series term counts and timings versus tolerance; writes bench/convergence.csv."""

import sys
from collections import defaultdict

from scanwait.bench import run_convergence_study


def main(out_dir="bench"):
    records = run_convergence_study(out_dir=out_dir)
    worst = defaultdict(int)
    for r in records:
        key = (r.column, r.rho, r.tol)
        worst[key] = max(worst[key], r.nmin)
    for (col, rho, tol), n in sorted(worst.items()):
        print(f"{col:6s} rho={rho:<7g} tol={tol:<6g} max N_min={n}")


if __name__ == "__main__":
    main(*sys.argv[1:])
