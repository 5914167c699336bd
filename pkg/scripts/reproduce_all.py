"""Regenerate every figure/table grid as CSV under results/ (or the first argument)."""

import sys
import time
from pathlib import Path

from scanwait import experiments as ex


def main(out="results"):
    out = Path(out)
    for name in ex.REPRODUCIBLE:
        t = time.perf_counter()
        rows = ex.reproduce(name, out)
        bad = [r for r in rows if r.status != "ok"]
        print(f"{name:8s} {len(rows):4d} rows  {len(bad)} failed  {time.perf_counter() - t:7.1f}s")
        if name == "table1":
            for label, counts in ex.table1_nmin(rows).items():
                print(f"   {label}: {counts}")


if __name__ == "__main__":
    main(*sys.argv[1:])
