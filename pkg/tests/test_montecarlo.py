import math

import numpy as np
import pytest

from bscap.capacity import LOG2E, capacity_quadrature
from bscap.copulas import FGM, Comonotone, Countermonotone, Frank, Independence
from bscap.dependence import pearson_from_copula, rho_lower
from bscap.errors import DomainError, UnsupportedVariantError
from bscap.montecarlo import (SimSpec, default_threads, estimate_capacity, estimate_correlation, estimate_moment,
                              ks_distance, ks_threshold, sample_gains, sample_snr)
from bscap.snr import SnrModel


def spec(dep, m=1.0, db=0.0, n=200_000, seed=7, streams=1):
    return SimSpec(SnrModel.build(m, dep, snr_hat_db=db), n, seed=seed, n_streams=streams)


def test_marginal_moments():
    g_f, g_b = sample_gains(spec(Frank(5.0), m=2.0))
    for g in (g_f, g_b):
        assert g.mean() == pytest.approx(1.0, abs=4 * math.sqrt(0.5 / g.size))
        assert g.var() == pytest.approx(0.5, rel=0.02)


def test_independence_correlation_near_zero():
    est = estimate_correlation(spec(Independence()))
    assert abs(est.mean) < 3 / math.sqrt(est.n)


def test_comonotone_pairs_identical():
    g_f, g_b = sample_gains(spec(Comonotone(), n=1000))
    np.testing.assert_array_equal(g_f, g_b)


def test_fgm_correlation():
    est = estimate_correlation(spec(FGM(1.0), n=400_000))
    assert abs(est.mean - 0.25) < 3 * est.std_error
    assert est.std_error > 0


@pytest.mark.parametrize("alpha,ref", [(30.0, 0.86), (-30.0, -0.43)])
def test_frank_reference_correlations(alpha, ref):
    est = estimate_correlation(spec(Frank(alpha), m=0.5, n=400_000))
    assert est.mean == pytest.approx(ref, abs=0.02)
    assert abs(est.mean - pearson_from_copula(Frank(alpha), 0.5).rho) < 4 * est.std_error


def test_countermonotone_correlation_matches_lower_bound():
    est = estimate_correlation(spec(Countermonotone(), m=5.0, n=400_000))
    assert abs(est.mean - rho_lower(5.0)) < 3 * est.std_error


def test_capacity_against_quadrature():
    s = spec(FGM(1.0), m=2.0, db=0.0, n=1_000_000, seed=11)
    est = estimate_capacity(s)
    ref = capacity_quadrature(s.model).value
    assert abs(est.mean - ref) < 3 * est.std_error


def test_negative_dependence_hurts_low_snr():
    neg = estimate_capacity(spec(Frank(-30.0), m=5.0, db=-10.0))
    ind = estimate_capacity(spec(Independence(), m=5.0, db=-10.0))
    assert neg.mean < ind.mean


def test_low_snr_estimate_tracks_mean_product():
    s = spec(FGM(0.5), m=2.0, db=-60.0, n=50_000)
    g_f, g_b = sample_gains(s)
    est = estimate_capacity(s)
    assert est.mean == pytest.approx(LOG2E * s.model.snr_hat * np.mean(g_f * g_b), rel=1e-5)


def test_moment_estimate():
    est = estimate_moment(spec(Independence(), m=2.0, n=400_000), 1.0)
    assert abs(est.mean - 1.0) < 4 * est.std_error


def test_bit_identical_reproduction_across_threads_and_streams():
    a = sample_snr(spec(Frank(-3.0), n=150_000, streams=1), threads=1)
    b = sample_snr(spec(Frank(-3.0), n=150_000, streams=3), threads=3)
    c = sample_snr(spec(Frank(-3.0), n=150_000, streams=2), threads=1)
    np.testing.assert_array_equal(a, b)
    np.testing.assert_array_equal(a, c)
    e1 = estimate_capacity(spec(Frank(-3.0), n=150_000, streams=4), threads=4)
    e2 = estimate_capacity(spec(Frank(-3.0), n=150_000, streams=1), threads=1)
    assert e1 == e2


def test_seed_changes_samples():
    a = sample_snr(spec(FGM(0.3), n=1000, seed=1))
    b = sample_snr(spec(FGM(0.3), n=1000, seed=2))
    assert not np.array_equal(a, b)


def test_prefix_property():
    # the first draws do not depend on the total count
    a = sample_snr(spec(FGM(0.3), n=1000))
    b = sample_snr(spec(FGM(0.3), n=100_000))
    np.testing.assert_array_equal(a, b[:1000])


def test_standard_error_scaling():
    small = estimate_capacity(spec(FGM(1.0), m=2.0, n=50_000, seed=3))
    big = estimate_capacity(spec(FGM(1.0), m=2.0, n=200_000, seed=3))
    assert small.std_error / big.std_error == pytest.approx(2.0, rel=0.2)


@pytest.mark.parametrize("dep,m", [(FGM(-1.0), 1.0), (Frank(30.0), 0.5), (Frank(-30.0), 5.0), (Independence(), 2.0),
                                   (Comonotone(), 2.0), (Countermonotone(), 1.0)])
def test_goodness_of_fit(dep, m):
    # a single draw exceeds the 1.63 / sqrt(n) band about 1% of the time; ask 2 of 3 seeds to pass
    passed = 0
    for seed in (101, 102, 103):
        s = spec(dep, m=m, n=200_000, seed=seed)
        gam = sample_snr(s)
        passed += ks_distance(gam, s.model) < ks_threshold(gam.size)
    assert passed >= 2


def test_ks_detects_wrong_model():
    s = spec(Frank(30.0), m=2.0, n=100_000)
    gam = sample_snr(s)
    wrong = SnrModel.build(2.0, Independence(), snr_hat_db=0.0)
    assert ks_distance(gam, wrong) > 10 * ks_threshold(gam.size)


def test_validation():
    with pytest.raises(UnsupportedVariantError):
        SimSpec(SnrModel.build(1.0, "linear:0.3", snr_hat=1.0), 10)
    with pytest.raises(DomainError):
        spec(FGM(0.1), n=0)
    with pytest.raises(DomainError):
        spec(FGM(0.1), streams=0)
    with pytest.raises(DomainError):
        estimate_correlation(spec(FGM(0.1), n=10))


def test_thread_env(monkeypatch):
    monkeypatch.setenv("BSCAP_THREADS", "3")
    assert default_threads() == 3
    monkeypatch.setenv("BSCAP_THREADS", "zero")
    with pytest.raises(DomainError):
        default_threads()
    monkeypatch.delenv("BSCAP_THREADS")
    assert default_threads() >= 1
