import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, special, stats

from scanwait.corr_model import CorrelationSpec, GaussianMap
from scanwait.joint_stats import (
    FadingModel,
    SeriesConfig,
    SeriesNotConverged,
    joint_cdf,
    joint_pdf,
    marginal_cdf,
    marginal_pdf,
    swc_output_pdf,
    truncated_conditional_pdf,
)

TIGHT = SeriesConfig(1e-12, 400)


def bivariate_nakagami_pdf(x, y, m, g1, g2, rho):
    # textbook bivariate Gamma density with power correlation rho
    if x <= 0 or y <= 0:
        return 0.0
    z = 2 * m * math.sqrt(rho * x * y / (g1 * g2)) / (1 - rho)
    logc = ((m + 1) * math.log(m) + 0.5 * (m - 1) * math.log(x * y) - math.lgamma(m)
            - 0.5 * (m + 1) * math.log(g1 * g2) - math.log(1 - rho) - 0.5 * (m - 1) * math.log(rho))
    return math.exp(logc - m / (1 - rho) * (x / g1 + y / g2) + z) * special.ive(m - 1, z)


@pytest.mark.parametrize("m", [0.5, 1.0, 2.5])
def test_single_branch_is_gamma(m):
    model = FadingModel(m, (3.0,))
    for g in (0.1, 1.0, 3.0, 12.0):
        ref = stats.gamma.cdf(g, m, scale=3.0 / m)
        assert joint_cdf(model, CorrelationSpec.iid(1, exact=True), [g]).value == pytest.approx(ref, rel=1e-12)
        assert marginal_cdf(model, 0, g) == pytest.approx(ref, rel=1e-12)
        assert marginal_pdf(model, 0, g) == pytest.approx(stats.gamma.pdf(g, m, scale=3.0 / m), rel=1e-12)


def test_exact_independence_is_product():
    model = FadingModel(2.0, (1.0, 2.0, 0.5))
    g = [0.7, 1.5, 0.2]
    ref = np.prod([stats.gamma.cdf(x, 2.0, scale=gb / 2.0) for x, gb in zip(g, model.gbar)])
    res = joint_cdf(model, CorrelationSpec.iid(3, exact=True), g)
    assert res.value == pytest.approx(ref, rel=1e-13)
    assert res.nmin == 1


@pytest.mark.parametrize("m,rho", [(1.0, 0.5), (1.0, 0.9), (2.0, 0.81), (3.0, 0.3)])
def test_bivariate_cdf_against_density_quadrature(m, rho):
    g1, g2 = 2.0, 1.0
    model = FadingModel(m, (g1, g2))
    x, y = 1.5, 0.8
    ref, _ = integrate.dblquad(lambda v, u: bivariate_nakagami_pdf(u, v, m, g1, g2, rho), 0, x, 0, y,
                               epsabs=1e-13, epsrel=1e-11)
    got = joint_cdf(model, CorrelationSpec.exponential(2, rho), [x, y], TIGHT).value
    assert got == pytest.approx(ref, rel=1e-8)


@pytest.mark.parametrize("m,rho", [(1.0, 0.5), (2.0, 0.9)])
def test_bivariate_pdf_against_density(m, rho):
    model = FadingModel(m, (2.0, 1.0))
    for x, y in [(0.3, 0.2), (1.5, 0.8), (4.0, 2.5)]:
        got = joint_pdf(model, CorrelationSpec.exponential(2, rho), [x, y], TIGHT).value
        assert got == pytest.approx(bivariate_nakagami_pdf(x, y, m, 2.0, 1.0, rho), rel=1e-9)


@pytest.mark.parametrize("L,m,rho", [(2, 1.0, 0.9), (3, 1.0, 0.9), (3, 2.0, 0.5), (4, 1.0, 0.7)])
def test_full_mass(L, m, rho):
    model = FadingModel.exponential_profile(m, 1.0, L, 0.1)
    res = joint_cdf(model, CorrelationSpec.exponential(L, rho), 50 * np.asarray(model.gbar), SeriesConfig(1e-10, 400))
    assert res.value == pytest.approx(1.0, abs=1e-8)


def test_nonpositive_point_gives_zero():
    model = FadingModel(1.0, (1.0, 1.0))
    assert joint_cdf(model, CorrelationSpec.exponential(2, 0.5), [0.0, 1.0]).value == 0.0


def test_non_convergence_carries_partial_result():
    model = FadingModel(1.0, (1.0, 1.0, 1.0))
    with pytest.raises(SeriesNotConverged) as info:
        joint_cdf(model, CorrelationSpec.exponential(3, 0.95), [20.0, 20.0, 20.0], SeriesConfig(1e-12, 5))
    partial = info.value.result
    assert not partial.converged and 0 < partial.value < 1


def test_tighter_tolerance_needs_more_terms():
    model = FadingModel(2.0, (1.0, 1.0, 1.0))
    spec = CorrelationSpec.exponential(3, 0.9)
    counts = [joint_cdf(model, spec, [1.0, 1.0, 1.0], SeriesConfig(t, 400)).nmin for t in (1e-4, 1e-6, 1e-8)]
    assert counts == sorted(counts)


def test_truncated_value_increases_with_terms():
    model = FadingModel(1.0, (1.0, 1.0))
    spec = CorrelationSpec.exponential(2, 0.9)
    vals = [joint_cdf(model, spec, [2.0, 2.0], SeriesConfig(t, 400)).value for t in (1e-2, 1e-4, 1e-6, 1e-8)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


@given(st.floats(0.05, 5.0), st.floats(0.05, 5.0), st.floats(0.05, 5.0), st.floats(1e-3, 1.0))
def test_cdf_monotone_and_bounded(a, b, c, step):
    model = FadingModel(1.0, (1.0, 0.9, 0.8))
    spec = CorrelationSpec.exponential(3, 0.8)
    base = joint_cdf(model, spec, [a, b, c], TIGHT).value
    assert 0.0 <= base <= 1.0
    for k in range(3):
        g = [a, b, c]
        g[k] += step
        assert joint_cdf(model, spec, g, TIGHT).value >= base - 1e-12


def test_conventions_agree_near_independence():
    model = FadingModel(1.0, (1.0, 1.0, 1.0))
    g = [0.5, 1.0, 2.0]
    e = joint_cdf(model, CorrelationSpec.iid(3), g, TIGHT).value
    mx = joint_cdf(model, CorrelationSpec.iid(3, gaussian_map=GaussianMap.MATRIX), g, TIGHT).value
    ref = np.prod([1 - math.exp(-x) for x in g])
    assert e == pytest.approx(ref, abs=1e-4)
    assert mx == pytest.approx(ref, abs=1e-4)


def test_conditional_density_support():
    model = FadingModel(1.0, (1.0, 1.0))
    spec = CorrelationSpec.exponential(2, 0.5)
    t = [1.0, 0.8]
    assert truncated_conditional_pdf(model, spec, t, 1, 0.5).value == 0.0
    assert truncated_conditional_pdf(model, spec, t, 2, 0.7).value == 0.0
    assert truncated_conditional_pdf(model, spec, t, 2, 0.9).value > 0.0
    # no earlier branch can fail below a zero threshold
    assert truncated_conditional_pdf(model, spec, [0.0, 0.8], 2, 0.9).value == 0.0


@pytest.mark.parametrize("L,m,rho", [(2, 1.0, 0.9), (3, 2.0, 0.5)])
def test_output_density_normalized(L, m, rho):
    model = FadingModel.exponential_profile(m, 2.0, L, 0.1)
    spec = CorrelationSpec.exponential(L, rho)
    t = 1.0 * np.exp(-0.1 * np.arange(L))
    f = lambda g: swc_output_pdf(model, spec, t, g, TIGHT).value
    pts = sorted(set(t))
    total = integrate.quad(f, 0, pts[0], limit=200)[0]
    edges = pts + [60.0]
    for lo, hi in zip(edges, edges[1:]):
        total += integrate.quad(f, lo, hi, limit=200)[0]
    assert total == pytest.approx(1.0, abs=5e-4)
