"""Which reading of sqrt(Sigma) matches simulated branch statistics?

Runs the two standard configurations plus the near-independent one and
writes one CSV per case under results/calibration/.
"""

import sys
from pathlib import Path

from scanwait.experiments import ExperimentConfig, calibrate

CASES = [(2, 1.0, 0.5), (3, 2.0, 0.9), (2, 1.0, 1e-4)]


def main(samples=10_000_000, out="results/calibration"):
    for L, m, rho in CASES:
        cfg = ExperimentConfig(L=L, m=m, rho=rho, gbar1_db=(0.0,), samples=int(samples), seed=7)
        report, _ = calibrate(cfg, Path(out) / f"L{L}_m{m:g}_rho{rho:g}.csv")
        print("\n".join(report.lines()))


if __name__ == "__main__":
    main(*sys.argv[1:])
