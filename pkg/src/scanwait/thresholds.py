"""Threshold solvers: pin the SWC path-estimation budget, minimize SEC error."""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .error_prob import sec_error_prob
from .joint_stats import DegenerateThresholds, SeriesConfig, SeriesNotConverged
from .metrics import ThresholdProfile, anpe_sec, anpe_swc

log = logging.getLogger(__name__)

ANPE_REL_TOL = 1e-8
GOLDEN_REL_TOL = 1e-6
RISE_STOP = 4
INV_PHI = (math.sqrt(5) - 1) / 2


class SolverError(RuntimeError):
    pass


class NoBracket(SolverError):
    pass


@dataclass
class SolveResult:
    gT1: float
    target: float
    achieved: float
    iterations: int
    bracket: tuple
    details: dict = field(default_factory=dict)


def _anpe_or_inf(model, spec, delta, gT1, cfg):
    try:
        return anpe_swc(model, spec, ThresholdProfile(gT1, delta, model.L), cfg)
    except (DegenerateThresholds, SeriesNotConverged):
        return math.inf


def solve_anpe_constraint(model, spec, delta, target, cfg=SeriesConfig()):
    """Find gT1 such that the SWC average number of path estimations equals ``target``.

    The objective is monotone in gT1, so bisection (in log gT1) over
    ``[1e-8, 1e3 max gbar]`` is used; the upper end is reached by doubling
    from ``max gbar`` to avoid evaluating the series far in the tail.
    """
    if not target > 1:
        raise ValueError("target must exceed 1")
    lo_limit, hi_limit = 1e-8, 1e3 * max(model.gbar)
    lo = lo_limit
    if _anpe_or_inf(model, spec, delta, lo, cfg) >= target:
        raise NoBracket(f"ANPE already exceeds {target} at gT1={lo}")
    hi = max(model.gbar)
    while _anpe_or_inf(model, spec, delta, hi, cfg) < target:
        lo = hi
        hi *= 2.0
        if hi > hi_limit:
            raise NoBracket(f"ANPE target {target} unreachable below gT1={hi_limit:g}")
    it = 0
    while hi / lo - 1.0 > ANPE_REL_TOL:
        mid = math.sqrt(lo * hi)
        if _anpe_or_inf(model, spec, delta, mid, cfg) < target:
            lo = mid
        else:
            hi = mid
        it += 1
    gT1 = math.sqrt(lo * hi)
    achieved = anpe_swc(model, spec, ThresholdProfile(gT1, delta, model.L), cfg)
    return SolveResult(gT1, target, achieved, it, (lo_limit, hi_limit))


def golden_section(f, a, b, rel_tol=GOLDEN_REL_TOL, max_iter=200):
    """Minimize a unimodal ``f`` on ``[a, b]``; returns ``(x, f(x), iterations)``."""
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    it = 0
    while abs(b - a) > rel_tol * (abs(a) + abs(b)) and it < max_iter:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
        it += 1
    return (c, fc, it) if fc <= fd else (d, fd, it)


def optimize_sec_threshold(model, spec, delta, mod, cfg=SeriesConfig(), grid=41):
    """gT1 minimizing the SEC average error probability.

    A log-spaced grid over ``[1e-6, 1e2 gbar1]`` brackets the minimum, then
    golden-section search refines it in log gT1.  Grid points where the
    series cannot be evaluated (far tail) are skipped, and the scan stops
    early once the objective has kept rising past ``gbar1``.
    """
    lo_limit, hi_limit = 1e-6, 1e2 * model.gbar[0]

    def pe_at(log_t):
        try:
            return sec_error_prob(model, spec, ThresholdProfile(math.exp(log_t), delta, model.L), mod, cfg).pe
        except SeriesNotConverged:
            return math.inf

    xs = np.linspace(math.log(lo_limit), math.log(hi_limit), grid)
    ys = np.full(grid, np.inf)
    rising = 0
    for k, x in enumerate(xs):
        ys[k] = pe_at(x)
        # far above the mean SNR the series gets expensive; once the objective
        # has risen for several points past gbar1 the minimum is behind us
        rising = rising + 1 if k and ys[k] > ys[k - 1] else 0
        if rising >= RISE_STOP and x > math.log(model.gbar[0]):
            break
    finite = np.isfinite(ys)
    if not finite.any():
        raise SolverError("SEC error probability could not be evaluated on the grid")
    k = int(np.nanargmin(np.where(finite, ys, np.nan)))
    span = ys[finite].max() - ys[finite].min()
    flat = span < 1e-12
    if flat:
        log.warning("SEC error probability is flat in gT1 (variation %.3g)", span)
    a, b = xs[max(k - 1, 0)], xs[min(k + 1, grid - 1)]
    x, fx, it = golden_section(pe_at, a, b)
    if ys[k] < fx:
        x, fx = xs[k], ys[k]
    return SolveResult(math.exp(x), math.nan, fx, it + grid, (lo_limit, hi_limit),
                       {"flat": flat, "grid_min": float(ys[k])})


def match_sec_anpe(model, spec, delta, mod, cfg=SeriesConfig()):
    """SWC threshold whose path-estimation budget equals SEC's at SEC's optimum."""
    sec = optimize_sec_threshold(model, spec, delta, mod, cfg)
    n_sec = anpe_sec(model, spec, ThresholdProfile(sec.gT1, delta, model.L), cfg)
    swc = solve_anpe_constraint(model, spec, delta, n_sec, cfg)
    swc.details.update(sec_gT1=sec.gT1, sec_pe=sec.achieved, anpe_sec=n_sec)
    return swc
