"""Convergence study: series term counts and wall time versus (L, m, rho, tol)."""

import csv
import dataclasses
import time
from dataclasses import dataclass
from pathlib import Path

from . import experiments as ex
from .error_prob import swc_error_prob
from .joint_stats import FadingModel, SeriesConfig
from .metrics import ThresholdProfile, metrics

TOLS = (1e-4, 1e-6, 1e-8)


@dataclass(frozen=True)
class BenchRecord:
    operation: str
    column: str
    L: int
    m: float
    rho: float
    gbar1_db: float
    tol: float
    gT1: float
    nmin: int
    value: float
    wall_s: float


def default_grid(rhos=(ex.CORRELATED, ex.IID_RHO), gbar1_db=ex.GBAR_TABLE):
    """The convergence-table configurations, at each correlation level."""
    grid = []
    for label, kw in ex.TABLE1_COLUMNS:
        for rho in rhos:
            grid.append((label, ex.ExperimentConfig(receiver="swc", rho=rho, gbar1_db=tuple(gbar1_db), **kw)))
    return grid


def _timed(fn):
    t = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t


def run_convergence_study(grid=None, tols=TOLS, out_dir="bench"):
    """One record per (configuration, SNR, tol, operation); writes ``convergence.csv``.

    Thresholds are solved once per point at the default tolerance so that
    only the truncation changes along the ``tol`` axis.
    """
    grid = default_grid() if grid is None else grid
    records = []
    for label, cfg in grid:
        for point in cfg.points():
            gdb = point.gbar1_db[0]
            model = FadingModel.exponential_profile(point.m, ex.db_to_linear(gdb), point.L, point.delta)
            spec = point.correlation()
            gT1 = ex._resolve_threshold(point, model, spec, point.series())
            prof = ThresholdProfile(gT1, point.delta, point.L)
            mod = point.modulation()
            for tol in tols:
                sc = SeriesConfig(tol, ex.N_MAX)
                rep, dt = _timed(lambda: metrics(model, spec, prof, sc))
                records.append(BenchRecord("anpe_awt", label, point.L, point.m, point.rho, gdb, tol, gT1,
                                           rep.nmin, rep.anpe_swc, dt))
                pe, dt = _timed(lambda: swc_error_prob(model, spec, prof, mod, sc))
                records.append(BenchRecord("swc_pe", label, point.L, point.m, point.rho, gdb, tol, gT1,
                                           pe.nmin, pe.pe, dt))
    if out_dir is not None:
        write_records(records, Path(out_dir) / "convergence.csv")
    return records


def write_records(records, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = [f.name for f in dataclasses.fields(BenchRecord)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for r in records:
            w.writerow([ex._fmt(getattr(r, n)) for n in names])
