"""Monte Carlo oracle for correlated Nakagami-m diversity receivers.

Branch SNRs come from the Gaussian decomposition: ``2m`` independent
zero-mean Gaussian vectors, each correlated across branches, are squared and
summed.  Receivers are simulated slot by slot and error probabilities are
averaged semi-analytically (``A Q(sqrt(B g))`` at the selected SNR).

Randomness is drawn per batch from a Philox stream keyed on
``(seed, batch index)``, so results are bit-identical for a given seed and
batch size.
"""

import math
from dataclasses import dataclass

import numpy as np

from .corr_model import CorrelationSpec, GaussianMap
from .joint_stats import SeriesConfig, joint_cdf


class AcceptanceTooRare(RuntimeError):
    pass


@dataclass(frozen=True)
class McConfig:
    samples: int = 1_000_000
    seed: int = 2024
    batch: int = 1 << 18

    def __post_init__(self):
        if self.samples < 1 or self.batch < 1:
            raise ValueError("samples and batch must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    samples: int

    def z(self, value):
        """z-score of ``value`` against this estimate."""
        if self.std_error == 0:
            return 0.0 if value == self.mean else math.inf
        return (value - self.mean) / self.std_error


class _Moments:
    """Running sum and sum of squares, merged batch by batch."""

    def __init__(self):
        self.n = 0
        self.s = 0.0
        self.s2 = 0.0

    def add(self, x):
        x = np.asarray(x, dtype=float)
        self.n += x.size
        self.s += float(np.sum(x))
        self.s2 += float(np.sum(x * x))

    def estimate(self):
        mean = self.s / self.n
        var = max(self.s2 / self.n - mean * mean, 0.0) * self.n / max(self.n - 1, 1)
        return McEstimate(mean, math.sqrt(var / self.n), self.n)


def batch_rng(seed, index):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(index,))))


def _batches(cfg):
    done, k = 0, 0
    while done < cfg.samples:
        size = min(cfg.batch, cfg.samples - done)
        yield size, batch_rng(cfg.seed, k)
        done += size
        k += 1


def components(m):
    """Number of Gaussian components ``2m``; ``m`` must be a half-integer."""
    two_m = 2.0 * m
    if two_m < 1 or abs(two_m - round(two_m)) > 1e-12:
        raise ValueError(f"Gaussian decomposition needs 2m to be a positive integer, got m={m}")
    return int(round(two_m))


def draw_snrs(model, spec: CorrelationSpec, size, rng):
    """``size`` x ``L`` array of correlated Gamma branch SNRs with means ``gbar``."""
    k = components(model.m)
    chol = np.linalg.cholesky(spec.gaussian_corr)
    g = np.zeros((size, model.L))
    for _ in range(k):
        x = rng.standard_normal((size, model.L)) @ chol.T
        g += x * x
    return g * (np.asarray(model.gbar) / k)


def sample_correlated_snrs(model, spec, cfg):
    """Yields batches of branch-SNR vectors, ``cfg.samples`` rows in total."""
    for size, rng in _batches(cfg):
        yield draw_snrs(model, spec, size, rng)


def _first_acceptable(g, thresholds):
    ok = g >= thresholds
    found = ok.any(axis=1)
    return found, np.argmax(ok, axis=1)


def _bpsk_errors(g, rng):
    # one antipodal symbol per slot over AWGN at SNR g
    return (np.sqrt(2.0 * g) + rng.standard_normal(g.shape) < 0).astype(float)


def simulate_swc(model, spec, profile, mod, cfg=McConfig(), counting=False):
    """Scan-and-wait receiver: returns McEstimates for ``pe``, ``anpe`` and ``awt``.

    Each channel access scans branches in order until one meets its
    threshold; a fully failed scan costs one coherence time and all branch
    SNRs are redrawn.  ``counting=True`` counts BPSK bit errors instead of
    averaging the conditional error probability.
    """
    if counting and mod.name != "bpsk":
        raise ValueError("bit counting is implemented for BPSK only")
    t = profile.values
    pe, est, wait = _Moments(), _Moments(), _Moments()
    L = model.L
    for size, rng in _batches(cfg):
        g_sel = np.empty(size)
        n_est = np.zeros(size)
        n_wait = np.zeros(size)
        pending = np.arange(size)
        while pending.size:
            g = draw_snrs(model, spec, pending.size, rng)
            found, idx = _first_acceptable(g, t)
            if pending.size >= 1000 and found.mean() < 1e-6:
                raise AcceptanceTooRare("acceptance probability below 1e-6")
            hit = pending[found]
            g_sel[hit] = g[found, idx[found]]
            n_est[hit] += idx[found] + 1
            miss = pending[~found]
            n_est[miss] += L
            n_wait[miss] += 1
            pending = miss
        pe.add(_bpsk_errors(g_sel, rng) if counting else mod.conditional(g_sel))
        est.add(n_est)
        wait.add(n_wait)
    return {"pe": pe.estimate(), "anpe": est.estimate(), "awt": wait.estimate()}


def simulate_sec(model, spec, profile, mod, cfg=McConfig()):
    """Switch-and-examine: like SWC, but a failed scan transmits on branch L."""
    t = profile.values
    pe, est = _Moments(), _Moments()
    L = model.L
    for g in sample_correlated_snrs(model, spec, cfg):
        found, idx = _first_acceptable(g, t)
        idx = np.where(found, idx, L - 1)
        pe.add(mod.conditional(g[np.arange(len(g)), idx]))
        est.add(idx + 1)
    return {"pe": pe.estimate(), "anpe": est.estimate()}


def simulate_mrc(model, spec, mod, cfg=McConfig()):
    """Maximal-ratio combining: error probability at the summed SNR."""
    pe = _Moments()
    for g in sample_correlated_snrs(model, spec, cfg):
        pe.add(mod.conditional(g.sum(axis=1)))
    return {"pe": pe.estimate()}


def simulate_single(model, mod, cfg=McConfig()):
    """Error probability of branch 1 alone."""
    pe = _Moments()
    for size, rng in _batches(cfg):
        k = components(model.m)
        g = (rng.standard_normal((size, k)) ** 2).sum(axis=1) * model.gbar[0] / k
        pe.add(mod.conditional(g))
    return {"pe": pe.estimate()}


def empirical_joint_cdf(model, spec, points, cfg=McConfig()):
    """Indicator means ``P(g <= point)`` with binomial standard errors."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    counts = np.zeros(len(points))
    n = 0
    for g in sample_correlated_snrs(model, spec, cfg):
        n += len(g)
        for k, p in enumerate(points):
            counts[k] += np.count_nonzero(np.all(g <= p, axis=1))
    out = []
    for c in counts:
        p = c / n
        out.append(McEstimate(p, math.sqrt(max(p * (1 - p), 0.0) / n), n))
    return out


def power_correlation(g):
    """Sample correlation matrix of branch SNR columns."""
    return np.corrcoef(g, rowvar=False)


def probe_grid(model):
    """Nine probe points in units of each branch's mean SNR."""
    levels = [(0.3, 0.3), (0.3, 1.0), (0.3, 2.0), (1.0, 0.3), (1.0, 1.0),
              (1.0, 2.0), (2.0, 0.3), (2.0, 1.0), (2.0, 2.0)]
    gbar = np.asarray(model.gbar)
    pts = []
    for a, b in levels:
        frac = np.where(np.arange(model.L) % 2 == 0, a, b)
        pts.append(frac * gbar)
    return np.array(pts)


@dataclass
class CalibrationReport:
    rho: float
    L: int
    m: float
    samples: int
    seed: int
    max_abs_z: dict
    matching: list
    status: str

    def lines(self):
        out = [f"calibration L={self.L} m={self.m} rho={self.rho} samples={self.samples} seed={self.seed}"]
        for conv, z in self.max_abs_z.items():
            out.append(f"  {conv:12s} max|z| = {z:.3f}")
        out.append(f"  status: {self.status} ({', '.join(self.matching) or 'none'})")
        return out


def calibrate_convention(model, spec, cfg=McConfig(10_000_000), series_cfg=SeriesConfig(1e-10, 400),
                         points=None, z_max=3.0):
    """Decide which reading of ``sqrt(Sigma)`` reproduces the branch statistics.

    The reference sample has SNR power correlation exactly ``Sigma`` (the
    defining property of the correlation matrix).  Each convention's series
    CDF is scored against it on a probe grid.
    """
    reference = spec.with_map(GaussianMap.ELEMENTWISE)
    points = probe_grid(model) if points is None else np.asarray(points, dtype=float)
    emp = empirical_joint_cdf(model, reference, points, cfg)
    max_z = {}
    for conv in GaussianMap:
        s = spec.with_map(conv)
        z = [abs(e.z(joint_cdf(model, s, p, series_cfg).value)) for e, p in zip(emp, points)]
        max_z[conv.value] = float(max(z))
    matching = [c for c, z in max_z.items() if z < z_max]
    if len(matching) == 1:
        status = "resolved"
    elif matching:
        status = "inconclusive"
    else:
        status = "no-match"
    return CalibrationReport(spec.rho, model.L, model.m, cfg.samples, cfg.seed, max_z, matching, status)
