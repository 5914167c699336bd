"""Average number of path estimations and average waiting time."""

import math
from dataclasses import dataclass

import numpy as np

from .joint_stats import SeriesConfig, check_acceptable, prefix_cdf


@dataclass(frozen=True)
class ThresholdProfile:
    """Per-branch thresholds ``gT_l = gT1 exp(-delta (l - 1))`` (linear SNR)."""

    gT1: float
    delta: float
    L: int

    def __post_init__(self):
        if not self.gT1 >= 0:
            raise ValueError("gT1 must be nonnegative")
        if self.delta < 0:
            raise ValueError("delta must be nonnegative")

    @property
    def values(self):
        return self.gT1 * np.exp(-self.delta * np.arange(self.L))


@dataclass(frozen=True)
class MetricsReport:
    anpe_swc: float
    anpe_sec: float
    awt: float
    all_fail_prob: float
    nmin: int


def _prefix_cdfs(model, spec, profile, cfg):
    t = profile.values
    return [prefix_cdf(model, spec, t, ell, cfg) for ell in range(1, model.L + 1)]


def _report(prefix, cfg):
    F = prefix[-1].value
    check_acceptable(F, cfg)
    sec = 1.0 + sum(r.value for r in prefix[:-1])
    nmin = max((r.nmin for r in prefix), default=1)
    return MetricsReport(sec / (1.0 - F), sec, F / (1.0 - F), F, nmin)


def metrics(model, spec, profile, cfg=SeriesConfig()):
    """All three metrics from one set of prefix-CDF evaluations."""
    return _report(_prefix_cdfs(model, spec, profile, cfg), cfg)


def anpe_sec(model, spec, profile, cfg=SeriesConfig()):
    """1 + sum over l < L of the joint CDF of the first l branches at their thresholds."""
    t = profile.values
    return 1.0 + sum(prefix_cdf(model, spec, t, ell, cfg).value for ell in range(1, model.L))


def anpe_swc(model, spec, profile, cfg=SeriesConfig()):
    return metrics(model, spec, profile, cfg).anpe_swc


def awt(model, spec, profile, cfg=SeriesConfig()):
    """Mean number of coherence times waited, F / (1 - F)."""
    F = prefix_cdf(model, spec, profile.values, model.L, cfg).value
    check_acceptable(F, cfg)
    return F / (1.0 - F)


def awt_from_anpe_iid(L, anpe):
    """Closed form for i.i.d. branches: per-branch failure probability from a pinned ANPE.

    Under independence ``anpe = 1 / (1 - F1)`` for every ``L``, so
    ``F = F1^L`` and the waiting time follows.
    """
    f1 = 1.0 - 1.0 / anpe
    F = f1 ** L
    return F / (1.0 - F) if F < 1 else math.inf
