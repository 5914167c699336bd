"""Multi-index series engine for correlated Gamma (Nakagami-m power) statistics.

The exponential-correlation series has a chain structure: the coefficient of
a multi-index factors into per-link weights ``c_j(i_j)`` and per-branch
factors that depend only on ``kappa_l = i_{l-1} + i_l + m``.  The sum over
the box ``[0, n]^(L-1)`` is therefore a product of ``(n+1) x (n+1)``
transfer matrices, evaluated here in log space.  Truncation grows the box
one hyper-shell (max-norm ``n``) at a time and stops once a full shell adds
less than ``tol`` times the running value.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, logsumexp

from .corr_model import CorrelationSpec, w_matrix
from .specfun import log_lower_inc_gamma, lower_inc_gamma


class SeriesNotConverged(ArithmeticError):
    """Raised when ``n_max`` is reached before the tail criterion holds."""

    def __init__(self, message, result):
        super().__init__(message)
        self.result = result


class DegenerateThresholds(ArithmeticError):
    """All branches fail with probability one; the SWC receiver never transmits."""


@dataclass(frozen=True)
class FadingModel:
    """Nakagami-m fading on ``L = len(gbar)`` branches (average SNRs, linear)."""

    m: float
    gbar: tuple

    def __post_init__(self):
        object.__setattr__(self, "gbar", tuple(float(g) for g in np.atleast_1d(self.gbar)))
        if not self.m >= 0.5:
            raise ValueError(f"m must be >= 0.5, got {self.m}")
        if not self.gbar or min(self.gbar) <= 0:
            raise ValueError("average SNRs must be positive")

    @property
    def L(self):
        return len(self.gbar)

    @classmethod
    def exponential_profile(cls, m, gbar1, L, delta=0.0):
        """``gbar_l = gbar1 exp(-delta (l - 1))``."""
        return cls(m, tuple(gbar1 * math.exp(-delta * k) for k in range(L)))

    def leading(self, ell):
        return FadingModel(self.m, self.gbar[:ell])


@dataclass(frozen=True)
class SeriesConfig:
    tol: float = 1e-6
    n_max: int = 80

    def __post_init__(self):
        if not 0 < self.tol < 1:
            raise ValueError("tol must lie in (0, 1)")
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")


@dataclass
class SeriesResult:
    """Truncated series value.

    ``n_used`` holds, per summation dimension, the number of terms the
    truncation rule required (``N_min``).  The returned ``value`` also
    includes the shell that was found negligible.
    """

    value: float
    n_used: tuple
    tol_achieved: float
    converged: bool
    log_value: float = field(default=-math.inf, repr=False)

    @property
    def nmin(self):
        return max(self.n_used, default=1)


def _box_log_sum(log_links, log_branches, n):
    """log of the sum over the box [0, n]^N of the chain product."""
    if not log_links:
        return log_branches[0][0]
    i = np.arange(n + 1)
    pair = i[:, None] + i[None, :]
    v = log_links[0][: n + 1] + log_branches[0][: n + 1]
    for j in range(1, len(log_links)):
        v = logsumexp(v[:, None] + log_branches[j][pair], axis=0) + log_links[j][: n + 1]
    return logsumexp(v + log_branches[-1][: n + 1])


def chain_series(spec: CorrelationSpec, m, branch_factors, cfg=SeriesConfig()):
    """Sum ``sum_i A(m, Sigma, i) prod_l h_l(kappa_l, xi_l)``.

    ``branch_factors[l](kappa, xi)`` must return ``log h_l`` for an array of
    ``kappa`` values; ``xi`` is ``m W_ll`` of this spec.  All ``h_l`` must be
    nonnegative, which keeps every term nonnegative and makes the shell
    stopping rule sound.
    """
    L = spec.L
    if len(branch_factors) != L:
        raise ValueError(f"need {L} branch factors, got {len(branch_factors)}")
    w = w_matrix(spec)
    diag = np.diag(w)
    xi = m * diag
    const = m * math.log(np.linalg.det(w)) - gammaln(m)
    n_dim = L - 1

    def tables(cap):
        kappa = np.arange(2 * cap + 1) + m
        i = np.arange(cap + 1)
        with np.errstate(divide="ignore", invalid="ignore"):
            branches = [
                np.asarray(f(kappa, xi[l]), dtype=float) - kappa * math.log(diag[l])
                for l, f in enumerate(branch_factors)
            ]
            links = []
            for j in range(n_dim):
                off = w[j, j + 1]
                lp = np.where(i == 0, 0.0, -np.inf) if off == 0.0 else 2 * i * math.log(abs(off))
                links.append(lp - gammaln(i + 1) - gammaln(i + m))
        return links, branches

    if n_dim == 0:
        _, log_branches = tables(0)
        lv = const + log_branches[0][0]
        return SeriesResult(float(np.exp(lv)), (), 0.0, True, float(lv))

    cap = min(16, cfg.n_max + 1)
    log_links, log_branches = tables(cap)
    prev = -math.inf
    rel = 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        for n in range(cfg.n_max + 1):
            if n > cap:
                cap = min(2 * cap, cfg.n_max + 1)
                log_links, log_branches = tables(cap)
            cur = _box_log_sum(log_links, log_branches, n)
            if cur == -math.inf:
                rel = 0.0
            elif prev == -math.inf:
                rel = 1.0
            else:
                rel = -math.expm1(prev - cur)
            if n > 0 and rel <= cfg.tol:
                lv = const + cur
                return SeriesResult(float(np.exp(lv)), (n,) * n_dim, rel, True, float(lv))
            prev = cur
    lv = const + prev
    res = SeriesResult(float(np.exp(lv)), (cfg.n_max + 1,) * n_dim, rel, False, float(lv))
    raise SeriesNotConverged(f"series did not reach tol={cfg.tol} within {cfg.n_max} terms", res)


def _check_dims(model, spec):
    if model.L != spec.L:
        raise ValueError(f"model has {model.L} branches, correlation spec has {spec.L}")


def cdf_factor(g, gbar):
    """Branch factor ``log gamma(kappa, xi g / gbar)``."""
    def f(kappa, xi):
        if g <= 0:
            return np.full(kappa.shape, -np.inf)
        return log_lower_inc_gamma(kappa, np.full(kappa.shape, xi * g / gbar))
    return f


def pdf_factor(g, gbar):
    """Branch factor ``log[(xi/gbar)^kappa g^(kappa-1) exp(-xi g / gbar)]``."""
    def f(kappa, xi):
        c = xi / gbar
        if g <= 0:
            return np.where(kappa == 1, math.log(c), -np.inf)
        return kappa * math.log(c) + (kappa - 1) * math.log(g) - c * g
    return f


def marginal_cdf(model, branch, g):
    """gamma(m, m g / gbar) / Gamma(m) for 0-based ``branch``."""
    if g <= 0:
        return 0.0
    m = model.m
    return float(lower_inc_gamma(m, m * g / model.gbar[branch]) / math.gamma(m))


def marginal_pdf(model, branch, g):
    m, gb = model.m, model.gbar[branch]
    if g < 0:
        return 0.0
    if g == 0:
        if m < 1:
            return math.inf
        return m / gb if m == 1 else 0.0
    return math.exp(m * math.log(m / gb) + (m - 1) * math.log(g) - m * g / gb - math.lgamma(m))


def joint_cdf(model, spec, g, cfg=SeriesConfig()):
    """Joint CDF of the ``L`` branch SNRs at the point ``g``."""
    _check_dims(model, spec)
    g = np.asarray(g, dtype=float)
    if np.any(g <= 0):
        return SeriesResult(0.0, (1,) * (spec.L - 1), 0.0, True)
    factors = [cdf_factor(gl, gb) for gl, gb in zip(g, model.gbar)]
    return chain_series(spec, model.m, factors, cfg)


def joint_pdf(model, spec, g, cfg=SeriesConfig()):
    _check_dims(model, spec)
    factors = [pdf_factor(gl, gb) for gl, gb in zip(np.asarray(g, float), model.gbar)]
    return chain_series(spec, model.m, factors, cfg)


def prefix_cdf(model, spec, thresholds, ell, cfg=SeriesConfig()):
    """CDF of the first ``ell`` branches at their thresholds, using Sigma^(ell)."""
    return joint_cdf(model.leading(ell), spec.leading(ell), thresholds[:ell], cfg)


def truncated_conditional_pdf(model, spec, thresholds, ell, g, cfg=SeriesConfig()):
    """Density of branch ``ell`` (1-based) at ``g`` jointly with earlier branches failing.

    ``thresholds`` holds at least ``ell`` entries; the ``ell``-th sets the
    support (``g >= gT_1`` for the first branch, ``g > gT_ell`` otherwise).
    Earlier branches are integrated over ``[0, gT_j]`` in closed form.
    """
    thresholds = np.asarray(thresholds, dtype=float)
    if ell == 1:
        if g < thresholds[0]:
            return SeriesResult(0.0, (), 0.0, True)
        return SeriesResult(marginal_pdf(model, 0, g), (), 0.0, True)
    if g <= thresholds[ell - 1] or np.any(thresholds[: ell - 1] <= 0):
        # conditioning on a probability-zero event contributes nothing
        return SeriesResult(0.0, (1,) * (ell - 1), 0.0, True)
    sub_model, sub_spec = model.leading(ell), spec.leading(ell)
    factors = [cdf_factor(t, gb) for t, gb in zip(thresholds[: ell - 1], sub_model.gbar)]
    factors.append(pdf_factor(g, sub_model.gbar[-1]))
    return chain_series(sub_spec, model.m, factors, cfg)


def check_acceptable(F, cfg):
    """Rejects an all-fail probability indistinguishable from 1.

    The series carries a relative error of about ``tol``, so ``1 - F`` below
    that is noise and ``1 / (1 - F)`` would be meaningless.
    """
    if 1.0 - F <= max(cfg.tol, 1e-15):
        raise DegenerateThresholds(f"joint CDF at the thresholds is 1 within tol ({F!r}); no branch is ever acceptable")


def all_fail_probability(model, spec, thresholds, cfg=SeriesConfig()):
    """F at the threshold vector: probability that every branch is unacceptable."""
    res = joint_cdf(model, spec, thresholds, cfg)
    check_acceptable(res.value, cfg)
    return res


def swc_output_pdf(model, spec, thresholds, g, cfg=SeriesConfig()):
    """Density of the scan-and-wait output SNR at ``g``."""
    _check_dims(model, spec)
    denom = all_fail_probability(model, spec, thresholds, cfg)
    total, n_used, tol_ach, ok = 0.0, [max(denom.n_used, default=1)], denom.tol_achieved, True
    for ell in range(1, model.L + 1):
        r = truncated_conditional_pdf(model, spec, thresholds, ell, g, cfg)
        total += r.value
        n_used.append(r.nmin)
        tol_ach = max(tol_ach, r.tol_achieved)
        ok &= r.converged
    return SeriesResult(total / (1.0 - denom.value), (max(n_used),), tol_ach, ok)
