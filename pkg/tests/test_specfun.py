import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import erfc, erfcx

from mlz import specfun as sf


def test_ml_at_zero_is_one():
    for nu in (0.3, 0.5, 0.8, 1.0):
        assert sf.mittag_leffler(nu, 0.0) == 1.0


def test_ml_exponential_shortcut():
    assert sf.mittag_leffler(1.0, -1.0) == pytest.approx(math.exp(-1.0), abs=1e-15)
    assert sf.mittag_leffler_composite(1.0, 2.5) == pytest.approx(math.exp(-2.5), abs=1e-15)


def test_ml_half_erfc_identity():
    # M_{1/2}(-z) = e^{z^2} erfc(z)
    assert abs(sf.mittag_leffler(0.5, -1.0) - math.e * erfc(1.0)) < 1e-12
    for z in (0.01, 0.5, 3.0, 40.0, 1e4):
        assert sf.mittag_leffler_composite(0.5, z) == pytest.approx(
            float(erfcx(math.sqrt(z))), rel=1e-11)


def test_ml_domain_errors():
    with pytest.raises(ValueError):
        sf.mittag_leffler(0.5, 0.1)
    with pytest.raises(ValueError):
        sf.mittag_leffler(1.2, -1.0)
    with pytest.raises(ValueError):
        sf.mittag_leffler(0.0, -1.0)


def test_ml_monotone_and_convex():
    for nu in (0.3, 0.5, 0.8):
        z = np.linspace(0.0, 6.0, 61)
        vals = np.array([sf.mittag_leffler_composite(nu, float(x) ** (1 / nu))
                         for x in z])  # M_nu(-x) on a grid of x
        assert np.all(np.diff(vals) < 0)
        assert np.all(np.diff(vals, 2) > 0)
        assert np.all((vals > 0) & (vals <= 1))


def test_series_quadrature_agreement():
    for nu in (0.3, 0.5, 0.8):
        for z in np.linspace(1e-9, 2.0, 41):
            series = sf._ml_series(nu, -(z ** nu))
            quadr = sf.lamperti_poisson_weight(nu, 0, float(z))
            assert abs(series - quadr) < 1e-8


def test_composite_deriv_k0_and_nu1():
    assert sf.ml_composite_deriv(0.6, 0, 2.0) == pytest.approx(
        sf.mittag_leffler(0.6, -(2.0 ** 0.6)), rel=1e-12)
    assert sf.ml_composite_deriv(1.0, 3, 1.0) == pytest.approx(-math.exp(-1.0))


def test_composite_deriv_finite_difference():
    h = 1e-5
    fd = (erfcx(math.sqrt(1 + h)) - erfcx(math.sqrt(1 - h))) / (2 * h)
    assert abs(sf.ml_composite_deriv(0.5, 1, 1.0) - fd) < 1e-6


def test_composite_deriv_sign_and_bound():
    for nu in (0.4, 0.7):
        for k in range(7):
            v = sf.ml_composite_deriv(nu, k, 2.0)
            assert v * (-1.0) ** k > 0
            assert abs(v) <= math.gamma(k + 1) / 2.0 ** k + 1e-15


def test_composite_deriv_divergence_at_zero():
    with pytest.raises(ValueError):
        sf.ml_composite_deriv(0.5, 1, 0.0)


def test_lamperti_pdf_values():
    assert sf.lamperti_pdf(0.5, 1.0) == pytest.approx(1.0 / (2.0 * math.pi), rel=1e-14)
    with pytest.raises(ValueError):
        sf.lamperti_pdf(1.0, 1.0)
    with pytest.raises(ValueError):
        sf.lamperti_pdf(0.5, -1.0)


def test_lamperti_pdf_normalization():
    val, _ = quad(lambda u: sf.lamperti_pdf(0.3, u / (1 - u)) / (1 - u) ** 2,
                  0.0, 1.0, limit=300, epsabs=1e-12)
    assert abs(val - 1.0) < 1e-8


def test_lamperti_inversion_symmetry():
    rng = np.random.default_rng(1)
    y = np.exp(rng.uniform(-6, 6, size=1000))
    for nu in (0.3, 0.7):
        lhs = sf.lamperti_pdf(nu, y)
        rhs = sf.lamperti_pdf(nu, 1.0 / y) / y ** 2
        assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_lamperti_cdf_against_pdf():
    for nu in (0.4, 0.8):
        for y in (0.2, 1.0, 3.0):
            num, _ = quad(lambda u: sf.lamperti_pdf(nu, u), 0.0, y, limit=200)
            assert sf.lamperti_cdf(nu, y) == pytest.approx(num, abs=1e-9)
    assert sf.lamperti_cdf(0.5, 1.0) == pytest.approx(0.5, abs=1e-14)


def test_lamperti_sampler_degenerate_at_one():
    rng = np.random.default_rng(0)
    assert sf.lamperti_sample(1.0, rng) == 1.0
    assert np.all(sf.lamperti_sample(1.0, rng, size=5) == 1.0)


def test_lamperti_sampler_ks_against_cdf():
    from scipy.stats import kstest
    rng = np.random.default_rng(7)
    for nu in (0.3, 0.5, 0.8):
        draws = sf.lamperti_sample(nu, rng, size=50_000)
        stat = kstest(draws, lambda y: sf.lamperti_cdf(nu, y)).statistic
        assert stat < 0.01


def test_lamperti_laplace_consistency():
    rng = np.random.default_rng(11)
    n = 1_000_000
    for nu in (0.3, 0.5, 0.8):
        draws = sf.lamperti_sample(nu, rng, size=n)
        for eta in (0.5, 1.0, 2.0):
            vals = np.exp(-eta * draws)
            se = vals.std() / math.sqrt(n)
            target = sf.mittag_leffler_composite(nu, eta)
            assert abs(vals.mean() - target) < 3.0 * se


def test_lamperti_median():
    rng = np.random.default_rng(13)
    draws = sf.lamperti_sample(0.5, rng, size=1_000_000)
    assert abs(np.median(draws) - 1.0) < 0.01


def test_stable_laplace_transform():
    rng = np.random.default_rng(3)
    n = 1_000_000
    s = sf.stable_sample(0.5, rng, size=n)
    vals = np.exp(-s)
    se = vals.std() / math.sqrt(n)
    assert abs(vals.mean() - math.exp(-1.0)) < 3.0 * se


def test_stable_half_levy_closed_form():
    # LT e^{-sqrt(eta)} is the Levy law with scale 1/2: CDF erfc(1/(2 sqrt s))
    from scipy.stats import kstest, levy
    rng = np.random.default_rng(5)
    s = sf.stable_sample(0.5, rng, size=100_000)
    stat = kstest(s, levy(scale=0.5).cdf).statistic
    assert stat < 0.005


def test_stable_scaling():
    rng = np.random.default_rng(9)
    from scipy.stats import ks_2samp
    a = 2.0 ** (1.0 / 0.5) * sf.stable_sample(0.5, rng, size=50_000)
    b = sf.stable_sample(0.5, rng, size=50_000)
    # H(2) =_d 2^{1/nu} H(1): compare via Laplace functional at eta=0.3
    va = np.exp(-0.3 * a)
    target = math.exp(-2.0 * 0.3 ** 0.5)
    assert abs(va.mean() - target) < 3.0 * va.std() / math.sqrt(a.size)
    assert ks_2samp(a, 2.0 ** 2 * b).pvalue > 0.01


def test_caputo_constant_is_zero():
    t = np.linspace(0, 1, 101)
    out = sf.caputo_l1(np.ones_like(t), t, 0.5)
    assert np.max(np.abs(out)) == 0.0


def test_caputo_linear_function():
    t = np.linspace(0, 1, 2001)
    out = sf.caputo_l1(t, t, 0.5)
    assert out[-1] == pytest.approx(1.0 / math.gamma(1.5), abs=5e-4)


def test_caputo_eigenfunction_refinement():
    # residual of the Mittag-Leffler eigenfunction identity halves at rate
    # >= 2^{-(2-nu)*0.8} per grid halving, measured away from the origin
    nu = 0.5
    res = []
    for n in (200, 400, 800):
        t = np.linspace(0, 1, n + 1)
        g = np.array([sf.mittag_leffler_composite(nu, float(x)) for x in t])
        r = sf.caputo_l1(g, t, nu) + g
        res.append(np.abs(r[n // 2:]).max())
    for a, b in zip(res[:-1], res[1:]):
        assert b <= a * 2.0 ** (-(2.0 - nu) * 0.8)


def test_caputo_rejects_nonuniform_grid():
    t = np.array([0.0, 0.1, 0.3, 0.35])
    with pytest.raises(ValueError):
        sf.caputo_l1(t ** 2, t, 0.5)


def test_quadrature_spec_validation():
    with pytest.raises(ValueError):
        sf.QuadratureSpec(abs_tol=-1.0)
    with pytest.raises(ValueError):
        sf.QuadratureSpec(max_subdivisions=2)
