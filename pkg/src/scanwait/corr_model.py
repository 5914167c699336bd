"""Correlation models and the series coefficients of the correlated-Gamma expansion.

For an exponential correlation matrix the joint CDF of ``L`` correlated Gamma
variates is a ``(L-1)``-fold series.  Each multi-index ``i`` contributes

    A(i) * prod_l gamma(kappa_l, xi_l * g_l / gbar_l)

with ``W = inverse(sqrt(Sigma))`` and

    A(i)     = det(W)^m / (Gamma(m) prod_l W_ll^kappa_l)
               * prod_j W_{j,j+1}^(2 i_j) / (i_j! Gamma(i_j + m))
    kappa_l  = i_{l-1} + i_l + m      (i_0 = i_L = 0)
    xi_l     = m W_ll
"""

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

import numpy as np
from scipy.linalg import sqrtm
from scipy.special import gammaln

IID_RHO = 1e-4


class GaussianMap(str, Enum):
    """How ``sqrt(Sigma)`` is read: entrywise root or principal matrix root."""

    ELEMENTWISE = "elementwise"
    MATRIX = "matrix"


class CorrelationKind(str, Enum):
    IID = "iid"
    EXPONENTIAL = "exponential"
    BIVARIATE = "bivariate"


@dataclass(frozen=True)
class CorrelationSpec:
    """Branch-SNR correlation.

    ``IID`` is an exponential matrix with ``rho = 1e-4`` unless ``exact_iid``
    is set, in which case ``rho = 0`` and the series collapses to one term.
    """

    kind: CorrelationKind
    L: int
    rho: float = 0.0
    gaussian_map: GaussianMap = GaussianMap.ELEMENTWISE
    exact_iid: bool = False
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", CorrelationKind(self.kind))
        object.__setattr__(self, "gaussian_map", GaussianMap(self.gaussian_map))
        if self.L < 1:
            raise ValueError(f"branch count must be >= 1, got {self.L}")
        if self.kind is CorrelationKind.IID:
            object.__setattr__(self, "rho", 0.0 if self.exact_iid else IID_RHO)
        if not 0.0 <= self.rho < 1.0:
            raise ValueError(f"rho must lie in [0, 1), got {self.rho}")
        if self.kind is CorrelationKind.BIVARIATE and self.L != 2:
            raise ValueError("bivariate correlation needs L = 2")
        sigma = self.sigma
        if not np.all(np.linalg.eigvalsh(sigma) > 0):
            raise ValueError("correlation matrix is not positive definite")

    @classmethod
    def iid(cls, L, exact=False, **kw):
        return cls(CorrelationKind.IID, L, exact_iid=exact, **kw)

    @classmethod
    def exponential(cls, L, rho, **kw):
        return cls(CorrelationKind.EXPONENTIAL, L, rho, **kw)

    @classmethod
    def bivariate(cls, rho, **kw):
        return cls(CorrelationKind.BIVARIATE, 2, rho, **kw)

    @property
    def sigma(self):
        """The L x L matrix with entries ``rho^|k-l|``."""
        k = np.arange(self.L)
        with np.errstate(divide="ignore"):
            return np.power(self.rho, np.abs(k[:, None] - k[None, :]), dtype=float)

    def leading(self, ell):
        """Spec of the first ``ell`` branches (principal submatrix)."""
        if ell == self.L:
            return self
        kind = CorrelationKind.EXPONENTIAL if self.kind is CorrelationKind.BIVARIATE else self.kind
        return CorrelationSpec(kind, ell, self.rho, self.gaussian_map, self.exact_iid)

    def with_map(self, gaussian_map):
        return CorrelationSpec(self.kind, self.L, self.rho, gaussian_map, self.exact_iid)

    @cached_property
    def gaussian_corr(self):
        """Unit-diagonal correlation of the underlying Gaussian components."""
        root = sqrt_sigma(self.sigma, self.gaussian_map)
        d = np.sqrt(np.diag(root))
        return root / np.outer(d, d)


def sqrt_sigma(sigma, gaussian_map=GaussianMap.ELEMENTWISE):
    gaussian_map = GaussianMap(gaussian_map)
    if gaussian_map is GaussianMap.ELEMENTWISE:
        return np.sqrt(sigma)
    root = np.real(sqrtm(sigma))
    return 0.5 * (root + root.T)


def w_matrix(spec):
    """``W = inverse(sqrt(Sigma))`` under the spec's Gaussian-map convention."""
    cached = spec._cache.get("W")
    if cached is not None:
        return cached
    root = sqrt_sigma(spec.sigma, spec.gaussian_map)
    if np.linalg.cond(root) > 1e12:
        raise np.linalg.LinAlgError("sqrt(Sigma) is numerically singular")
    w = np.linalg.inv(root)
    w = 0.5 * (w + w.T)
    w.setflags(write=False)
    spec._cache["W"] = w
    return w


@dataclass(frozen=True)
class TermCoefficients:
    """One term of the series: ``log_A`` (sign is always +1), ``kappa``, ``xi``."""

    log_A: float
    kappa: np.ndarray
    xi: np.ndarray

    @property
    def A(self):
        return float(np.exp(self.log_A))


def _log_pow(base, power):
    # 0^0 = 1 so the independent limit keeps exactly its zero-index term
    power = np.asarray(power, dtype=float)
    if base == 0.0:
        return np.where(power == 0, 0.0, -np.inf)
    return power * np.log(abs(base))


def kappa_of(idx, m):
    """kappa_l = i_{l-1} + i_l + m along a chain of L = len(idx) + 1 branches."""
    idx = np.asarray(idx, dtype=int)
    padded = np.concatenate([[0], idx, [0]])
    return padded[:-1] + padded[1:] + m


def exp_cm_coefficients(spec, m, idx):
    """Coefficients of the multi-index term ``idx`` for an exponential matrix."""
    idx = np.asarray(idx, dtype=int)
    if idx.shape != (spec.L - 1,):
        raise ValueError(f"multi-index must have {spec.L - 1} entries, got {idx.shape}")
    if m < 0.5:
        raise ValueError("m must be >= 0.5")
    w = w_matrix(spec)
    diag = np.diag(w)
    kappa = kappa_of(idx, m)
    log_a = m * np.log(np.linalg.det(w)) - gammaln(m) - np.sum(kappa * np.log(diag))
    for j, i in enumerate(idx):
        log_a += _log_pow(w[j, j + 1], 2 * i) - gammaln(i + 1) - gammaln(i + m)
    return TermCoefficients(float(log_a), kappa.astype(float), m * diag)


def bivariate_rayleigh_coefficients(rho, i1):
    """Dual-branch Rayleigh term in the bivariate-series parameterization.

    ``A = (1 - sqrt rho) rho^(i1/2) / (i1! Gamma(i1 + 1))`` and the Gamma
    arguments are ``g / ((1 - sqrt rho) gbar)``, i.e. an effective ``xi`` of
    ``1 / (1 - sqrt rho)`` on both branches.
    """
    if not 0.0 <= rho < 1.0:
        raise ValueError(f"rho must lie in [0, 1), got {rho}")
    if i1 < 0:
        raise ValueError("index must be nonnegative")
    s = np.sqrt(rho)
    log_a = np.log1p(-s) + _log_pow(rho, 0.5 * i1) - 2 * gammaln(i1 + 1)
    kappa = np.full(2, i1 + 1.0)
    return TermCoefficients(float(log_a), kappa, np.full(2, 1.0 / (1.0 - s)))
