"""Average error probability of SWC and SEC receivers.

For conditional error probabilities of the form ``A Q(sqrt(B g))`` every
term reduces to the kernel

    I(b, c; gT) = int_gT^inf Q(sqrt(B g)) g^(b-1) exp(-c g) dg,

which has a finite closed form for integer ``b``.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp, xlogy

from .corr_model import bivariate_rayleigh_coefficients
from .joint_stats import (
    SeriesConfig,
    SeriesNotConverged,
    cdf_factor,
    chain_series,
    check_acceptable,
    prefix_cdf,
)
from .specfun import gaussian_q, log_lower_inc_gamma, log_upper_inc_gamma

LOG_SQRT_2PI = 0.5 * math.log(2 * math.pi)
# below this relative gap between the two closed-form terms, switch to quadrature
_CANCEL_GUARD = 1e-3
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(160)


class NonIntegerM(ValueError):
    pass


@dataclass(frozen=True)
class Modulation:
    """``P(error | g) = A Q(sqrt(B g))``."""

    name: str
    A: float
    B: float
    M: int = 2

    @classmethod
    def bpsk(cls):
        return cls("bpsk", 1.0, 2.0, 2)

    @classmethod
    def pam(cls, M):
        return cls("pam", 2.0 * (1 - 1 / M), 6.0 / (M * M - 1), M)

    @classmethod
    def qam(cls, M):
        """Rectangular M-QAM, the usual tight ABEP approximation."""
        return cls("qam", 4.0 * (1 - 1 / math.sqrt(M)), 3.0 / (M - 1), M)

    @classmethod
    def from_name(cls, name, M=None):
        name = name.lower()
        if name == "bpsk":
            return cls.bpsk()
        if name in ("pam", "qam"):
            if M is None:
                raise ValueError(f"{name} needs an order M")
            return getattr(cls, name)(int(M))
        raise ValueError(f"unknown modulation {name!r}")

    def conditional(self, g):
        return self.A * gaussian_q(np.sqrt(self.B * np.asarray(g, dtype=float)))


@dataclass
class ErrorProbReport:
    pe: float
    n_used: tuple
    kernel_calls: int = 0
    converged: bool = True

    @property
    def nmin(self):
        return max(self.n_used, default=1)


def _as_int_b(b):
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if np.any(b < 1) or np.any(b != np.round(b)):
        raise NonIntegerM("the closed-form kernel needs integer b >= 1")
    return b


def _log_kernel_craig(b, c, gT, B):
    # Craig's form Q(x) = (1/pi) int_0^{pi/2} exp(-x^2 / (2 sin^2 t)) dt gives
    # I = (1/pi) int_0^{pi/2} Gamma(b, s gT) / s^b dt with s = c + B / (2 sin^2 t)
    theta = 0.25 * math.pi * (_GL_NODES + 1.0)
    s = c + B / (2.0 * np.sin(theta) ** 2)
    bb = b[:, None]
    if gT > 0:
        lg = log_upper_inc_gamma(np.broadcast_to(bb, (b.size, s.size)), np.broadcast_to(s * gT, (b.size, s.size)))
    else:
        lg = gammaln(bb)
    terms = lg - bb * np.log(s) + np.log(_GL_WEIGHTS)
    return logsumexp(terms, axis=1) + math.log(0.25)


def log_kernel_i(b, c, gT, B):
    """log I(b, c; gT) for an array of integer ``b``."""
    b = _as_int_b(b)
    if not (c > 0 and B > 0 and gT >= 0):
        raise ValueError("kernel needs c > 0, B > 0, gT >= 0")
    if math.isinf(gT):
        return np.full(b.shape, -np.inf)
    z = 0.5 * B + c
    bmax = int(b.max())
    n = np.arange(bmax, dtype=float)
    if gT > 0:
        log_gn = log_upper_inc_gamma(n + 0.5, np.full(n.shape, z * gT))
        log_t1 = math.log(gaussian_q(math.sqrt(B * gT)) or 5e-324) + log_upper_inc_gamma(b, np.full(b.shape, gT * c))
    else:
        log_gn = gammaln(n + 0.5)
        log_t1 = math.log(0.5) + gammaln(b)
    t = n * math.log(c) + log_gn - gammaln(n + 1) - (n + 0.5) * math.log(z)
    prefix = np.logaddexp.accumulate(t)
    log_t2 = math.log(0.5 * math.sqrt(B)) + gammaln(b) + prefix[b.astype(int) - 1] - LOG_SQRT_2PI
    gap = log_t2 - log_t1
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -b * math.log(c) + log_t1 + np.log(-np.expm1(np.minimum(gap, 0.0)))
    bad = ~(-np.expm1(gap) > _CANCEL_GUARD)
    if bad.any():
        out[bad] = _log_kernel_craig(b[bad], c, gT, B)
    return out


def kernel_i(b, c, gT, B):
    """The integral of ``Q(sqrt(B g)) g^(b-1) exp(-c g)`` over ``[gT, inf)``."""
    out = np.exp(log_kernel_i(b, c, gT, B))
    return float(out[0]) if np.ndim(b) == 0 else out


def log_kernel_i_complement(b, c, gT, B):
    """log of the same integral taken over ``[0, gT]``."""
    b = _as_int_b(b)
    full = log_kernel_i(b, c, 0.0, B)
    if gT <= 0:
        return np.full(b.shape, -np.inf)
    if math.isinf(gT):
        return full
    tail = log_kernel_i(b, c, gT, B)
    with np.errstate(divide="ignore"):
        out = full + np.log(-np.expm1(np.minimum(tail - full, 0.0)))
    # when the tail carries nearly all the mass, integrate the head directly
    bad = ~(-np.expm1(tail - full) > _CANCEL_GUARD)
    if bad.any():
        out[bad] = _log_head_integral(b[bad], c, gT, B)
    return out


def _log_head_integral(b, c, gT, B):
    # Gauss-Legendre on [0, gT]; integrand is smooth and bounded for b >= 1
    x = 0.5 * gT * (_GL_NODES + 1.0)
    lq = np.log(np.maximum(gaussian_q(np.sqrt(B * x)), 1e-300))
    terms = lq + xlogy(b[:, None] - 1, x) - c * x + np.log(_GL_WEIGHTS)
    return logsumexp(terms, axis=1) + math.log(gT) - math.log(2.0)


def kernel_i_complement(b, c, gT, B):
    out = np.exp(log_kernel_i_complement(b, c, gT, B))
    return float(out[0]) if np.ndim(b) == 0 else out


def kernel_factor(gT, gbar, B, complement=False):
    """Branch factor ``log[(xi/gbar)^kappa I(kappa, xi/gbar)]`` for the chain engine."""
    fn = log_kernel_i_complement if complement else log_kernel_i

    def f(kappa, xi):
        c = xi / gbar
        return kappa * math.log(c) + fn(kappa, c, gT, B)
    return f


def _require_integer_m(m):
    if m != round(m):
        raise NonIntegerM("integer m required for analytic error probability")


def _chain_terms(model, spec, thresholds, mod, cfg, last_complement=False):
    """Numerator terms: for each l, branches before l fail and l passes."""
    terms, n_used, calls = [], [], 0
    for ell in range(1, model.L + 1):
        sub_model, sub_spec = model.leading(ell), spec.leading(ell)
        factors = [cdf_factor(t, gb) for t, gb in zip(thresholds[: ell - 1], sub_model.gbar)]
        factors.append(kernel_factor(thresholds[ell - 1], sub_model.gbar[-1], mod.B))
        if ell > 1 and np.any(np.asarray(thresholds[: ell - 1]) <= 0):
            continue
        r = chain_series(sub_spec, model.m, factors, cfg)
        terms.append(r.value)
        n_used.append(r.nmin)
        calls += 1
        if last_complement and ell == model.L:
            factors[-1] = kernel_factor(thresholds[ell - 1], sub_model.gbar[-1], mod.B, complement=True)
            r = chain_series(sub_spec, model.m, factors, cfg)
            terms.append(r.value)
            n_used.append(r.nmin)
            calls += 1
    return terms, n_used, calls


def swc_error_prob(model, spec, profile, mod, cfg=SeriesConfig()):
    """Average error probability of the L-branch scan-and-wait receiver."""
    _require_integer_m(model.m)
    t = profile.values
    denom = prefix_cdf(model, spec, t, model.L, cfg)
    check_acceptable(denom.value, cfg)
    terms, n_used, calls = _chain_terms(model, spec, t, mod, cfg)
    pe = mod.A * math.fsum(terms) / (1.0 - denom.value)
    return ErrorProbReport(pe, (max([denom.nmin] + n_used),), calls)


def sec_error_prob(model, spec, profile, mod, cfg=SeriesConfig()):
    """Average error probability of switch-and-examine combining.

    Same scan as SWC; when every branch fails, the last branch is used.
    """
    _require_integer_m(model.m)
    t = profile.values
    terms, n_used, calls = _chain_terms(model, spec, t, mod, cfg, last_complement=True)
    return ErrorProbReport(mod.A * math.fsum(terms), (max(n_used, default=1),), calls)


def single_branch_error_prob(m, gbar, mod):
    """Average of ``A Q(sqrt(B g))`` over one Nakagami-m branch (integer m)."""
    _require_integer_m(m)
    c = m / gbar
    return float(mod.A * np.exp(m * math.log(c) - math.lgamma(m) + log_kernel_i(m, c, 0.0, mod.B))[0])


def rayleigh_dual_error_prob(rho, gbar, profile, mod, cfg=SeriesConfig()):
    """Dual-branch Rayleigh SWC error probability in the bivariate-series form.

    ``rho`` is in the bivariate parameterization: the series ratio is
    ``sqrt(rho)``.
    """
    if profile.L != 2 or len(gbar) != 2:
        raise ValueError("dual-branch formula needs L = 2")
    g1, g2 = map(float, gbar)
    t1, t2 = profile.values
    s = math.sqrt(rho)
    x1 = t1 / ((1 - s) * g1)
    x2 = t2 / ((1 - s) * g2)
    c2 = 1.0 / ((1 - s) * g2)

    den_terms, num_terms = [], []
    i = 0
    while True:
        coef = bivariate_rayleigh_coefficients(rho, i)
        k = coef.kappa[0]
        if coef.log_A == -math.inf:
            d = n = 0.0
        else:
            lg1 = log_lower_inc_gamma(k, x1) if x1 > 0 else -math.inf
            lg2 = log_lower_inc_gamma(k, x2) if x2 > 0 else -math.inf
            d = math.exp(coef.log_A + lg1 + lg2)
            n = math.exp(coef.log_A + lg1 + k * math.log(c2) + log_kernel_i(k, c2, t2, mod.B)[0])
        den_terms.append(d)
        num_terms.append(n)
        den_sum, num_sum = math.fsum(den_terms), math.fsum(num_terms)
        if i > 0 and d <= cfg.tol * den_sum and n <= cfg.tol * num_sum:
            break
        if i >= cfg.n_max:
            raise SeriesNotConverged("dual-branch series did not converge", None)
        i += 1
    F = den_sum
    first = math.exp(-math.log(g1) + log_kernel_i(1, 1.0 / g1, t1, mod.B)[0])
    pe = mod.A * (first + num_sum) / (1.0 - F)
    return ErrorProbReport(pe, (i,), 2 * (i + 1) + 1)
