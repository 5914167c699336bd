"""Experiment runner: configs, single points, sweeps, figure/table reproduction, CSV output.

Everything here speaks dB for SNRs; the numerical modules below it are linear.
"""

import configparser
import csv
import dataclasses
import io
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache, partial
from pathlib import Path
from typing import Optional

from .corr_model import IID_RHO, CorrelationSpec, GaussianMap
from .error_prob import Modulation, NonIntegerM, sec_error_prob, single_branch_error_prob, swc_error_prob
from .joint_stats import DegenerateThresholds, FadingModel, SeriesConfig, SeriesNotConverged
from .metrics import ThresholdProfile, anpe_sec, metrics
from .montecarlo import AcceptanceTooRare, McConfig, calibrate_convention, simulate_mrc, simulate_sec, simulate_swc
from .thresholds import SolverError, match_sec_anpe, optimize_sec_threshold, solve_anpe_constraint

log = logging.getLogger(__name__)

RECEIVERS = ("swc", "sec", "mrc")
METHODS = ("analytic", "mc")
N_MAX = 400


class ConfigError(ValueError):
    pass


def db_to_linear(db):
    return 10.0 ** (db / 10.0)


def linear_to_db(x):
    return 10.0 * math.log10(x) if x > 0 else -math.inf


def parse_range(text):
    """``start:stop:step`` in dB (stop inclusive), or a comma list, or one number."""
    text = str(text)
    sep = "," if "," in text else ":"
    try:
        vals = [float(p) for p in text.split(sep) if p.strip()]
    except ValueError as e:
        raise ConfigError(f"bad range {text!r}") from e
    if sep == ",":
        return tuple(vals)
    if len(vals) == 1:
        return (vals[0],)
    if len(vals) != 3 or vals[2] <= 0 or vals[1] < vals[0]:
        raise ConfigError(f"range must be start:stop:step with step > 0, got {text!r}")
    n = int(math.floor((vals[1] - vals[0]) / vals[2] + 1e-9)) + 1
    return tuple(round(vals[0] + k * vals[2], 10) for k in range(n))


@dataclass(frozen=True)
class ExperimentConfig:
    receiver: str = "swc"
    mod: str = "bpsk"
    M: Optional[int] = None
    m: float = 1.0
    L: int = 2
    rho: float = IID_RHO
    delta: float = 0.0
    gbar1_db: tuple = (10.0,)
    gt1_db: Optional[float] = None
    anpe_target: Optional[float] = None
    sec_matched: bool = False
    tol: float = 1e-6
    samples: int = 1_000_000
    seed: int = 2024
    method: str = "analytic"
    convention: str = "elementwise"
    experiment: str = "adhoc"
    out: Optional[str] = None

    def validate(self):
        if self.receiver not in RECEIVERS:
            raise ConfigError(f"receiver must be one of {RECEIVERS}")
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}")
        try:
            self.modulation()
            GaussianMap(self.convention)
        except ValueError as e:
            raise ConfigError(str(e)) from e
        if self.m < 0.5:
            raise ConfigError("m must be >= 0.5")
        if self.L < 1:
            raise ConfigError("L must be >= 1")
        if not 0 <= self.rho < 1:
            raise ConfigError("rho must lie in [0, 1)")
        if self.delta < 0:
            raise ConfigError("delta must be >= 0")
        if not 0 < self.tol < 1:
            raise ConfigError("tol must lie in (0, 1)")
        if self.samples < 1:
            raise ConfigError("samples must be positive")
        if not self.gbar1_db:
            raise ConfigError("empty gbar1 grid")
        policies = sum([self.gt1_db is not None, self.anpe_target is not None, self.sec_matched])
        if policies > 1:
            raise ConfigError("choose at most one of --gt1, --anpe-target, --sec-matched")
        if self.receiver in ("swc", "sec") and policies == 0:
            raise ConfigError(f"{self.receiver} needs a threshold policy (--gt1, --anpe-target or --sec-matched)")
        if self.anpe_target is not None and not 1 < self.anpe_target:
            raise ConfigError("anpe target must exceed 1")
        if self.anpe_target is not None and self.receiver == "sec":
            raise ConfigError("anpe-target pins the SWC budget; use --gt1 or --sec-matched for sec")
        return self

    def modulation(self):
        return Modulation.from_name(self.mod, self.M)

    def correlation(self):
        gm = GaussianMap(self.convention)
        if self.L == 1:
            return CorrelationSpec.iid(1, exact=True)
        if self.rho <= IID_RHO:
            return CorrelationSpec.iid(self.L, gaussian_map=gm)
        return CorrelationSpec.exponential(self.L, self.rho, gaussian_map=gm)

    def series(self):
        return SeriesConfig(self.tol, N_MAX)

    def mc(self):
        return McConfig(self.samples, self.seed)

    def points(self):
        return [dataclasses.replace(self, gbar1_db=(g,)) for g in self.gbar1_db]

    # config files: one [experiment] section of key = value lines
    def to_ini(self, section="experiment"):
        cp = configparser.ConfigParser()
        cp.optionxform = str
        d = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            d[f.name] = ",".join(repr(float(x)) for x in v) if f.name == "gbar1_db" else str(v)
        cp[section] = d
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_ini(cls, text, section="experiment"):
        cp = configparser.ConfigParser()
        cp.optionxform = str
        cp.read_string(text)
        if section not in cp:
            raise ConfigError(f"config has no [{section}] section")
        return cls.from_mapping(dict(cp[section]))

    @classmethod
    def from_mapping(cls, raw):
        types = {f.name: f for f in dataclasses.fields(cls)}
        kw = {}
        for key, value in raw.items():
            name = key.replace("-", "_")
            if name not in types:
                raise ConfigError(f"unknown config key {key!r}")
            kw[name] = _coerce(name, value)
        return cls(**kw)


_INT_KEYS = {"M", "L", "samples", "seed"}
_FLOAT_KEYS = {"m", "rho", "delta", "gt1_db", "anpe_target", "tol"}


def _coerce(name, value):
    if not isinstance(value, str):
        return tuple(value) if name == "gbar1_db" else value
    s = str(value).strip()
    try:
        if name == "gbar1_db":
            return parse_range(s)
        if name == "sec_matched":
            if s.lower() in ("1", "true", "yes", "on"):
                return True
            if s.lower() in ("0", "false", "no", "off"):
                return False
            raise ConfigError(f"bad boolean {s!r}")
        if name in _INT_KEYS:
            return int(float(s)) if s.lower() != "none" else None
        if name in _FLOAT_KEYS:
            return float(s) if s.lower() != "none" else None
    except ValueError as e:
        raise ConfigError(f"bad value for {name}: {s!r}") from e
    return s


@dataclass
class ResultRow:
    experiment: str
    receiver: str
    modulation: str
    m: float
    rho: float
    delta: float
    L: int
    gbar1_db: float
    gT1: float = math.nan
    pe: float = math.nan
    anpe: float = math.nan
    awt: float = math.nan
    nmin: int = 0
    method: str = "analytic"
    std_error: float = math.nan
    samples: int = 0
    seed: int = 0
    status: str = "ok"
    detail: str = ""

    @classmethod
    def columns(cls):
        return [f.name for f in dataclasses.fields(cls)]

    def cells(self):
        out = []
        for name in self.columns():
            v = getattr(self, name)
            out.append(_fmt(v))
        return out


def _fmt(v):
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        if math.isnan(v):
            return ""
        return repr(v)
    return str(v)


def _mod_label(cfg):
    return cfg.mod if cfg.mod == "bpsk" else f"{cfg.M}-{cfg.mod}"


@lru_cache(maxsize=256)
def _pinned_threshold(m, gbar, rho, L, convention, delta, target, tol):
    # independent of the modulation, so curves sharing a channel reuse it
    cfg = ExperimentConfig(m=m, L=L, rho=rho, convention=convention)
    model = FadingModel(m, gbar)
    return solve_anpe_constraint(model, cfg.correlation(), delta, target, SeriesConfig(tol, N_MAX)).gT1


def _resolve_threshold(cfg, model, spec, series):
    """Returns (gT1 linear, extra ANPE info)."""
    if cfg.receiver == "mrc":
        return math.nan
    if cfg.gt1_db is not None:
        return db_to_linear(cfg.gt1_db)
    if cfg.anpe_target is not None:
        return _pinned_threshold(cfg.m, model.gbar, cfg.rho, cfg.L, cfg.convention, cfg.delta, cfg.anpe_target,
                                 cfg.tol)
    mod = cfg.modulation()
    if cfg.receiver == "sec":
        return optimize_sec_threshold(model, spec, cfg.delta, mod, series).gT1
    return match_sec_anpe(model, spec, cfg.delta, mod, series).gT1


def _analytic(cfg, row, model, spec, series, mod):
    if cfg.receiver == "mrc":
        if cfg.L != 1:
            raise ConfigError("MRC is evaluated by Monte Carlo only for L > 1 (use simulate)")
        row.pe = single_branch_error_prob(cfg.m, model.gbar[0], mod)
        row.anpe, row.awt, row.nmin = 1.0, 0.0, 1
        return
    prof = ThresholdProfile(row.gT1, cfg.delta, cfg.L)
    if cfg.receiver == "swc":
        rep = metrics(model, spec, prof, series)
        pe = swc_error_prob(model, spec, prof, mod, series)
        row.pe, row.anpe, row.awt = pe.pe, rep.anpe_swc, rep.awt
        row.nmin = max(rep.nmin, pe.nmin)
    else:
        pe = sec_error_prob(model, spec, prof, mod, series)
        row.pe, row.anpe, row.awt = pe.pe, anpe_sec(model, spec, prof, series), 0.0
        row.nmin = pe.nmin


def _budget_only(cfg, row, model, spec, series):
    if cfg.receiver == "mrc":
        raise ConfigError("mrc has no switching threshold")
    prof = ThresholdProfile(row.gT1, cfg.delta, cfg.L)
    rep = metrics(model, spec, prof, series)
    if cfg.receiver == "swc":
        row.anpe, row.awt = rep.anpe_swc, rep.awt
    else:
        row.anpe, row.awt = rep.anpe_sec, 0.0
    row.nmin = rep.nmin


def _monte_carlo(cfg, row, model, spec, mod):
    mc = cfg.mc()
    row.samples, row.seed = mc.samples, mc.seed
    if cfg.receiver == "mrc":
        res = simulate_mrc(model, spec, mod, mc)
        row.anpe, row.awt = float(cfg.L), 0.0
    elif cfg.receiver == "swc":
        res = simulate_swc(model, spec, ThresholdProfile(row.gT1, cfg.delta, cfg.L), mod, mc)
        row.anpe, row.awt = res["anpe"].mean, res["awt"].mean
    else:
        res = simulate_sec(model, spec, ThresholdProfile(row.gT1, cfg.delta, cfg.L), mod, mc)
        row.anpe, row.awt = res["anpe"].mean, 0.0
    row.pe, row.std_error = res["pe"].mean, res["pe"].std_error


def run_point(cfg: ExperimentConfig, gbar1_db=None, thresholds_only=False):
    """Evaluate one grid point; numerical failures become rows with a non-ok status.

    ``thresholds_only`` stops after the threshold policy and the path-estimation
    metrics, skipping the error probability.
    """
    gdb = cfg.gbar1_db[0] if gbar1_db is None else gbar1_db
    row = ResultRow(cfg.experiment, cfg.receiver, _mod_label(cfg), float(cfg.m), float(cfg.rho),
                    float(cfg.delta), cfg.L, float(gdb), method=cfg.method)
    try:
        mod = cfg.modulation()
        model = FadingModel.exponential_profile(cfg.m, db_to_linear(gdb), cfg.L, cfg.delta)
        spec = cfg.correlation()
        series = cfg.series()
        row.gT1 = _resolve_threshold(cfg, model, spec, series)
        if thresholds_only:
            _budget_only(cfg, row, model, spec, series)
        elif cfg.method == "mc" or (cfg.receiver == "mrc" and cfg.L > 1):
            row.method = "mc"
            _monte_carlo(cfg, row, model, spec, mod)
        else:
            _analytic(cfg, row, model, spec, series, mod)
    except NonIntegerM:
        row.status, row.detail = "config-error", "integer m required for analytic error probability"
    except ConfigError as e:
        row.status, row.detail = "config-error", str(e)
    except SeriesNotConverged as e:
        row.status, row.detail = "nonconverged", str(e)
    except (SolverError, DegenerateThresholds, AcceptanceTooRare) as e:
        row.status, row.detail = "solver-failure", f"{type(e).__name__}: {e}"
    return row


def worker_count():
    env = os.environ.get("FDL_THREADS")
    n = os.cpu_count() or 1
    if env:
        try:
            n = max(1, min(n, int(env)))
        except ValueError:
            raise ConfigError(f"FDL_THREADS must be an integer, got {env!r}")
    return n


def run_many(configs, workers=None, thresholds_only=False):
    """Runs one row per config, returned in input order."""
    workers = worker_count() if workers is None else workers
    fn = partial(run_point, thresholds_only=thresholds_only)
    if workers <= 1 or len(configs) <= 1:
        return [fn(c) for c in configs]
    with ProcessPoolExecutor(max_workers=min(workers, len(configs))) as pool:
        return list(pool.map(fn, configs))


def sweep(cfg: ExperimentConfig, workers=None, thresholds_only=False):
    cfg.validate()
    return run_many(cfg.points(), workers, thresholds_only)


def write_csv(rows, path=None):
    """RFC-4180 CSV with a header row; writes to ``path`` or returns the text."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ResultRow.columns())
    for r in rows:
        w.writerow(r.cells())
    text = buf.getvalue()
    if path is not None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)
    return text


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# figure and table grids

GBAR_FIG = parse_range("0:30:2.5")
GBAR_TABLE = parse_range("0:15:2.5")
RHO_GRID = (IID_RHO, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
CORRELATED = 0.9


def _fig1(base):
    out = []
    for m in (1, 3):
        for rho in (IID_RHO, CORRELATED):
            c = dataclasses.replace(base, experiment="fig1", mod="pam", M=4, m=m, L=3, rho=rho, delta=0.0,
                                    sec_matched=True)
            out += [dataclasses.replace(c, receiver="swc"), dataclasses.replace(c, receiver="sec")]
    return out


def _fig3(base):
    out = []
    for L in (2, 5):
        for rho in (IID_RHO, CORRELATED):
            c = dataclasses.replace(base, experiment="fig3", mod="bpsk", M=None, m=1, L=L, rho=rho, delta=0.1)
            out.append(dataclasses.replace(c, receiver="swc", anpe_target=float(L)))
            out.append(dataclasses.replace(c, receiver="mrc", method="mc"))
    return out


def _fig4(base):
    out = []
    for mod, M in (("bpsk", None), ("qam", 16)):
        for L in (3, 5):
            for rho in (IID_RHO, CORRELATED):
                out.append(dataclasses.replace(base, experiment="fig4", receiver="swc", mod=mod, M=M, m=2, L=L,
                                               rho=rho, delta=0.1, anpe_target=float(L)))
    return out


def _threshold_curves(configs, name):
    return [dataclasses.replace(c, experiment=name) for c in configs if c.receiver == "swc"]


def _fig_rho(base, gbar1_db=10.0):
    out = []
    for M in (4, 64):
        for m in (1, 2, 3):
            for rho in RHO_GRID:
                out.append(dataclasses.replace(base, experiment="fig_rho", receiver="swc", mod="qam", M=M, m=m, L=3,
                                               rho=rho, delta=0.1, anpe_target=3.0, gbar1_db=(gbar1_db,)))
    return out


# the six convergence-table columns: (label, figure config)
TABLE1_COLUMNS = (
    ("L3_m1", dict(mod="pam", M=4, m=1, L=3, delta=0.0, sec_matched=True)),
    ("L3_m3", dict(mod="pam", M=4, m=3, L=3, delta=0.0, sec_matched=True)),
    ("L2_m1", dict(mod="bpsk", M=None, m=1, L=2, delta=0.1, anpe_target=2.0)),
    ("L5_m1", dict(mod="bpsk", M=None, m=1, L=5, delta=0.1, anpe_target=5.0)),
    ("L3_m2", dict(mod="bpsk", M=None, m=2, L=3, delta=0.1, anpe_target=3.0)),
    ("L5_m2", dict(mod="bpsk", M=None, m=2, L=5, delta=0.1, anpe_target=5.0)),
)


def _table1(base):
    out = []
    for label, kw in TABLE1_COLUMNS:
        c = dataclasses.replace(base, experiment=f"table1_{label}", receiver="swc", rho=CORRELATED,
                                gbar1_db=GBAR_TABLE, tol=1e-6, method="analytic", **kw)
        out.append(c)
        if kw["m"] == 2:
            # the m = 2 figure also plots 16-QAM; its series count toward the same column
            out.append(dataclasses.replace(c, mod="qam", M=16))
    return out


def table1_nmin(rows):
    """Column label -> list of N_min over the table's SNR grid (max over the column's curves)."""
    acc = {}
    for r in rows:
        label = r.experiment.removeprefix("table1_")
        key = (label, r.gbar1_db)
        acc[key] = max(acc.get(key, 0), int(r.nmin))
    out = {}
    for label, _ in TABLE1_COLUMNS:
        out[label] = [acc[(label, g)] for g in GBAR_TABLE]
    return out


REPRODUCIBLE = ("fig1", "fig3", "fig4", "fig5", "fig6", "fig_rho", "table1")


def reproduce_configs(name, base=None, gbar1_db=GBAR_FIG):
    base = base or ExperimentConfig()
    base = dataclasses.replace(base, gbar1_db=tuple(gbar1_db))
    if name == "fig1":
        return _fig1(base)
    if name == "fig3":
        return _fig3(base)
    if name == "fig4":
        return _fig4(base)
    if name == "fig5":
        return _threshold_curves(_fig1(base), "fig5")
    if name == "fig6":
        return _threshold_curves(_fig3(base), "fig6")
    if name == "fig_rho":
        return _fig_rho(base)
    if name == "table1":
        return _table1(base)
    raise ConfigError(f"unknown reproduction target {name!r}; choose from {REPRODUCIBLE}")


def reproduce(name, out_dir=None, base=None, gbar1_db=GBAR_FIG, workers=None):
    """Evaluates a figure/table grid; rows come back in grid order."""
    configs = reproduce_configs(name, base, gbar1_db)
    points = [p for c in configs for p in c.points()]
    rows = run_many(points, workers)
    if out_dir is not None:
        out_dir = Path(out_dir)
        write_csv(rows, out_dir / f"{name}.csv")
        (out_dir / f"{name}.ini").write_text("".join(c.to_ini(f"{name}.{k}") for k, c in enumerate(configs)))
    return rows


def calibrate(cfg: ExperimentConfig, out_path=None, points=None):
    """Runs the sqrt(Sigma) convention calibration; the CSV has one row per convention."""
    if cfg.L < 2:
        raise ConfigError("calibration needs L >= 2")
    model = FadingModel.exponential_profile(cfg.m, db_to_linear(cfg.gbar1_db[0]), cfg.L, cfg.delta)
    spec = CorrelationSpec.exponential(cfg.L, max(cfg.rho, IID_RHO))
    report = calibrate_convention(model, spec, cfg.mc(), SeriesConfig(min(cfg.tol, 1e-10), N_MAX), points)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["convention", "L", "m", "rho", "samples", "seed", "max_abs_z", "matches", "status"])
    for conv, z in report.max_abs_z.items():
        w.writerow([conv, cfg.L, _fmt(float(cfg.m)), _fmt(report.rho), report.samples, report.seed, _fmt(z),
                    str(conv in report.matching).lower(), report.status])
    if out_path is not None:
        Path(out_path).parent.mkdir(parents=True, exist_ok=True)
        Path(out_path).write_text(buf.getvalue())
    return report, buf.getvalue()


def exit_status(rows):
    """CLI exit code for a set of rows: worst failure wins."""
    statuses = {r.status for r in rows}
    if "config-error" in statuses:
        return 2
    if "solver-failure" in statuses:
        return 4
    if "nonconverged" in statuses:
        return 3
    return 0
