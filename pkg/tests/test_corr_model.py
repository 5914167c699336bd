import itertools
import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from scanwait.corr_model import (
    IID_RHO,
    CorrelationKind,
    CorrelationSpec,
    GaussianMap,
    bivariate_rayleigh_coefficients,
    exp_cm_coefficients,
    kappa_of,
    w_matrix,
)


def mp_coefficient(L, rho, m, idx):
    # straight from the definition with arbitrary precision, elementwise root
    mp.mp.dps = 40
    root = mp.matrix(L, L)
    for k in range(L):
        for l in range(L):
            root[k, l] = mp.sqrt(mp.mpf(rho) ** abs(k - l))
    w = root**-1
    kap = kappa_of(idx, m)
    m = mp.mpf(float(m))
    a = mp.det(w) ** m / mp.gamma(m)
    for l in range(L):
        a /= w[l, l] ** mp.mpf(float(kap[l]))
    for j, i in enumerate(idx):
        a *= w[j, j + 1] ** (2 * int(i)) / (mp.factorial(int(i)) * mp.gamma(int(i) + m))
    return a


@pytest.mark.parametrize("L,rho,m", [(2, 0.5, 1), (3, 0.9, 2), (4, 0.3, 1.5), (5, 0.81, 3)])
def test_coefficients_match_high_precision_definition(L, rho, m):
    spec = CorrelationSpec.exponential(L, rho)
    for idx in itertools.islice(itertools.product(range(4), repeat=L - 1), 30):
        got = exp_cm_coefficients(spec, m, idx)
        ref = mp_coefficient(L, rho, m, idx)
        assert got.A == pytest.approx(float(ref), rel=1e-11)
        assert np.allclose(got.kappa, kappa_of(idx, m))


def test_elementwise_root_gives_tridiagonal_w():
    w = w_matrix(CorrelationSpec.exponential(5, 0.7))
    band = np.abs(np.subtract.outer(np.arange(5), np.arange(5))) > 1
    assert np.all(np.abs(w[band]) < 1e-12)


def test_dual_branch_matches_bivariate_form():
    # exponential form at rho equals the bivariate form at rho^2
    for rho in (0.0, 0.3, 0.81, 0.9):
        spec = CorrelationSpec.exponential(2, rho) if rho > 0 else CorrelationSpec.iid(2, exact=True)
        for i in range(21):
            e = exp_cm_coefficients(spec, 1, [i])
            b = bivariate_rayleigh_coefficients(rho**2, i)
            assert e.A == pytest.approx(b.A, rel=1e-12, abs=1e-300)
            assert np.allclose(e.kappa, b.kappa)
            assert np.allclose(e.xi, b.xi, rtol=1e-12)


def test_bivariate_independent_limit():
    c0 = bivariate_rayleigh_coefficients(0.0, 0)
    assert c0.A == 1.0 and c0.kappa[0] == 1.0 and c0.xi[0] == 1.0
    for i in range(1, 5):
        assert bivariate_rayleigh_coefficients(0.0, i).A == 0.0


def _mass_term(rho, i):
    return math.exp(bivariate_rayleigh_coefficients(rho, i).log_A + 2 * math.lgamma(i + 1))


def test_bivariate_full_mass():
    # at g = inf each lower gamma is i!, so the mass is sum (1-s) s^i with s = sqrt(rho)
    rho = 0.81
    total = math.fsum(_mass_term(rho, i) for i in range(200))
    assert total == pytest.approx(1.0, abs=1e-8)


def test_bivariate_sixty_terms_leave_geometric_tail():
    rho = 0.81
    total = math.fsum(_mass_term(rho, i) for i in range(60))
    assert 1 - total == pytest.approx(0.9**60, rel=1e-9)


def test_iid_spec():
    assert CorrelationSpec.iid(3).rho == IID_RHO
    assert CorrelationSpec.iid(3, exact=True).rho == 0.0
    w = w_matrix(CorrelationSpec.iid(3, exact=True))
    assert np.allclose(w, np.eye(3))


def test_leading_block_is_exponential():
    spec = CorrelationSpec.bivariate(0.5)
    sub = spec.leading(1)
    assert sub.kind is CorrelationKind.EXPONENTIAL and sub.L == 1
    big = CorrelationSpec.exponential(5, 0.6)
    assert np.allclose(big.leading(3).sigma, big.sigma[:3, :3])


@pytest.mark.parametrize("rho", [-0.1, 1.0, 1.5])
def test_rejects_bad_rho(rho):
    with pytest.raises(ValueError):
        CorrelationSpec.exponential(3, rho)


def test_rejects_bad_bivariate():
    with pytest.raises(ValueError):
        CorrelationSpec(CorrelationKind.BIVARIATE, 3, 0.5)


def test_conventions_coincide_near_independence():
    a = CorrelationSpec.iid(3).gaussian_corr
    b = CorrelationSpec.iid(3, gaussian_map=GaussianMap.MATRIX).gaussian_corr
    assert np.allclose(a, np.eye(3), atol=1e-2)
    assert np.allclose(b, np.eye(3), atol=1e-2)


def test_conventions_differ_when_correlated():
    e = CorrelationSpec.exponential(2, 0.5).gaussian_corr[0, 1]
    mx = CorrelationSpec.exponential(2, 0.5, gaussian_map=GaussianMap.MATRIX).gaussian_corr[0, 1]
    assert e == pytest.approx(math.sqrt(0.5))
    # principal root of [[1, r], [r, 1]] has off-diagonal ratio r / (1 + sqrt(1 - r^2))
    assert mx == pytest.approx(0.5 / (1 + math.sqrt(0.75)))


@given(st.integers(2, 6), st.floats(0.01, 0.95))
def test_w_symmetric_and_positive_diagonal(L, rho):
    for gm in GaussianMap:
        w = w_matrix(CorrelationSpec.exponential(L, rho, gaussian_map=gm))
        assert np.allclose(w, w.T)
        assert np.all(np.diag(w) > 0)
