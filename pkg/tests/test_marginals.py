import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from bscap.errors import DomainError
from bscap.marginals import FadingMarginal

M_VALUES = [0.3, 0.5, 1.0, 2.0, 5.0, 12.0]
ms = st.floats(0.2, 20.0)


@pytest.mark.parametrize("m", M_VALUES)
def test_pdf_and_cdf_match_scipy_gamma(m):
    marg = FadingMarginal(m)
    ref = stats.gamma(a=m, scale=1.0 / m)
    g = np.array([1e-3, 0.1, 0.7, 1.0, 2.5, 6.0])
    np.testing.assert_allclose(marg.pdf(g), ref.pdf(g), rtol=1e-12)
    np.testing.assert_allclose(marg.cdf(g), ref.cdf(g), rtol=1e-12)
    np.testing.assert_allclose(marg.sf(g), ref.sf(g), rtol=1e-11)


@pytest.mark.parametrize("m", M_VALUES)
def test_unit_mean_and_variance(m):
    marg = FadingMarginal(m)
    mass = integrate.quad(marg.pdf, 0, np.inf, limit=200)[0]
    mean = integrate.quad(lambda g: g * marg.pdf(g), 0, np.inf, limit=200)[0]
    second = integrate.quad(lambda g: g * g * marg.pdf(g), 0, np.inf, limit=200)[0]
    assert mass == pytest.approx(1.0, abs=1e-8)
    assert mean == pytest.approx(marg.mean, abs=1e-8)
    assert second - mean ** 2 == pytest.approx(marg.variance, rel=1e-7)


def test_pdf_at_origin_and_negative_gain():
    assert FadingMarginal(1.0).pdf(0.0) == 1.0
    assert FadingMarginal(2.0).pdf(0.0) == 0.0
    assert FadingMarginal(0.5).pdf(0.0) == np.inf
    assert FadingMarginal(2.0).pdf(-1.0) == 0.0
    assert FadingMarginal(2.0).cdf(-1.0) == 0.0


def test_invalid_severity():
    for m in (0.0, -1.0, np.inf, np.nan):
        with pytest.raises(DomainError):
            FadingMarginal(m)


@given(ms, st.floats(1e-12, 1.0 - 1e-12))
@settings(max_examples=80, deadline=None)
def test_quantile_roundtrip(m, p):
    marg = FadingMarginal(m)
    assert marg.cdf(marg.quantile(p)) == pytest.approx(p, rel=1e-9)
    assert marg.sf(marg.isf(p)) == pytest.approx(p, rel=1e-9)


def test_quantile_cap_is_finite():
    marg = FadingMarginal(0.5)
    assert np.isfinite(marg.quantile(1.0))
    assert marg.quantile(0.0) == 0.0
    with pytest.raises(DomainError):
        marg.quantile(1.5)


@given(ms, st.floats(0.01, 8.0))
@settings(max_examples=60, deadline=None)
def test_mirror_has_complementary_probability(m, g):
    marg = FadingMarginal(m)
    w = marg.mirror(g)
    assert marg.cdf(w) == pytest.approx(marg.sf(g), rel=1e-8, abs=1e-300)
    # an involution up to rounding
    assert marg.mirror(w) == pytest.approx(g, rel=1e-6)


@pytest.mark.parametrize("m", [0.5, 1.0, 3.0])
@pytest.mark.parametrize("w", [0.2, 1.0, 4.0])
def test_integrated_cdf_and_stop_loss(m, w):
    marg = FadingMarginal(m)
    ic = integrate.quad(marg.cdf, 0, w)[0]
    sl = integrate.quad(marg.sf, w, np.inf)[0]
    assert marg.integrated_cdf(w) == pytest.approx(ic, rel=1e-9)
    assert marg.stop_loss(w) == pytest.approx(sl, rel=1e-9)
    # E[(g - w)^+] - E[(w - g)^+] = E[g] - w
    assert marg.stop_loss(w) - marg.integrated_cdf(w) == pytest.approx(1.0 - w, abs=1e-12)


def test_sample_is_inverse_transform():
    marg = FadingMarginal(2.0)
    u = np.linspace(0.01, 0.99, 9)
    np.testing.assert_array_equal(marg.sample(u), marg.quantile(u))
