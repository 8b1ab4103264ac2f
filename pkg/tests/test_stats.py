import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import optimize, special
from scipy import stats as sps

from photocount import (
    Constant,
    DetectorParams,
    DomainError,
    EventTrain,
    FptLaw,
    ModulatedPair,
    RateEstimate,
    RunConfig,
    UsageError,
    coincidence_rate,
    cross_correlation,
    empirical_rate,
    ks_statistic,
    median_gap,
    realize_pair,
    sample_fpt,
    shuffled_coincidence_rate,
    simulate_coincidence,
    simulate_detector,
)
from photocount import analytic_fpt as af

SEED = 20240601


def poisson_train(rate, horizon, seed):
    rng = np.random.default_rng(seed)
    ts = np.cumsum(rng.exponential(1 / rate, int(rate * horizon * 1.2) + 50))
    return EventTrain(ts[ts <= horizon], horizon)


sorted_trains = st.lists(st.floats(0, 100), max_size=60, unique=True).map(
    lambda xs: EventTrain(np.array(sorted(x for x in xs if x > 0)), 100.0)
)


class TestRateEstimate:
    def test_invariants(self):
        with pytest.raises(DomainError):
            RateEstimate(-1.0, 0.0, 0)

    def test_json_record(self):
        rec = json.loads(RateEstimate(2.0, 0.1, 200).to_json())
        assert rec == {"estimate": 2.0, "std_error": 0.1, "n": 200}


class TestEmpiricalRate:
    def test_regular_train(self):
        tr = EventTrain(np.arange(1, 201) * 0.5, 100.0)
        est = empirical_rate(tr)
        assert est.rate == 2.0
        assert est.std_error == pytest.approx(math.sqrt(200) / 100, rel=1e-15)
        assert not est.low_count

    def test_empty(self):
        est = empirical_rate(EventTrain(np.array([]), 1e4))
        assert est.rate == 0.0 and est.std_error == 0.0 and est.low_count

    def test_simulated(self):
        tr = simulate_detector(Constant(2.0), DetectorParams(1.0, 1.0), RunConfig(SEED, 1e-3, 1e4))
        est = empirical_rate(tr)
        assert abs(est.rate - 2.0) < 3 * est.std_error

    def test_inverse_mean_gap(self):
        tr = simulate_detector(Constant(1.0), DetectorParams(1.0, 1.0), RunConfig(SEED, 1e-3, 1e4))
        assert empirical_rate(tr).rate * tr.gaps().mean() == pytest.approx(1.0, rel=1e-3)


class TestKs:
    def test_exact_quantiles(self):
        law = FptLaw(1.0, 1.0, 1.0)
        n = 100
        q = np.array(
            [optimize.brentq(lambda t, p=p: af.cdf(law, t) - p, 1e-6, 100, xtol=1e-15) for p in (np.arange(n) + 0.5) / n]
        )
        assert ks_statistic(q, lambda t: af.cdf(law, t)) == pytest.approx(0.005, abs=1e-9)

    def test_matches_scipy(self):
        x = np.sort(np.random.default_rng(0).normal(size=500))
        assert ks_statistic(x, special.ndtr) == pytest.approx(sps.kstest(x, "norm").statistic, rel=1e-12)

    def test_reference_samples(self):
        law = FptLaw(1.0, 1.0, 1.0)
        x = np.sort(sample_fpt(law, RunConfig(SEED, 1e-3, 1e4), 10_000))
        assert ks_statistic(x, lambda t: af.cdf(law, t)) < 0.0163

    def test_wrong_law(self):
        fast = FptLaw(1.0, 2.0, 1.0)
        x = np.sort(sample_fpt(FptLaw(1.0, 1.0, 1.0), RunConfig(SEED, 1e-3, 1e4), 10_000))
        grid = np.linspace(1e-3, 20, 20001)
        bound = np.max(np.abs(af.cdf(fast, grid) - af.cdf(FptLaw(1.0, 1.0, 1.0), grid)))
        d = ks_statistic(x, lambda t: af.cdf(fast, t))
        assert bound > 0.1
        assert d > 0.1 and d == pytest.approx(bound, abs=0.0163)

    def test_unsorted(self):
        with pytest.raises(UsageError):
            ks_statistic([2.0, 1.0], special.ndtr)

    def test_empty(self):
        with pytest.raises(UsageError):
            ks_statistic([], special.ndtr)

    @settings(max_examples=50)
    @given(st.lists(st.floats(-5, 5), min_size=1, max_size=50))
    def test_reparametrisation_invariant(self, xs):
        x = np.sort(np.array(xs))
        d = ks_statistic(x, special.ndtr)
        # y = exp(x) with the cdf pulled back through log
        d2 = ks_statistic(np.exp(x), lambda y: special.ndtr(np.log(y)))
        assert d2 == pytest.approx(d, abs=1e-12)


class TestCoincidence:
    def test_self_coincidence(self):
        tr = poisson_train(1.0, 1000.0, 1)
        for w in (1e-3, 0.1, 10.0):
            assert coincidence_rate(tr, tr, 0.0, w).rate == empirical_rate(tr).rate

    def test_disjoint(self):
        a = EventTrain(np.arange(1.0, 100.0, 2.0), 100.0)
        b = EventTrain(np.arange(2.0, 100.0, 2.0), 100.0)
        assert coincidence_rate(a, b, 0.0, 1.5).n_events == 0

    def test_one_to_one(self):
        a = EventTrain(np.array([1.0]), 10.0)
        b = EventTrain(np.array([0.95, 1.05]), 10.0)
        assert coincidence_rate(a, b, 0.0, 0.2).n_events == 1

    def test_independent_poisson(self):
        a, b = poisson_train(1.0, 1e5, 2), poisson_train(2.0, 1e5, 3)
        w = 0.05
        r1, r2 = empirical_rate(a).rate, empirical_rate(b).rate
        assert coincidence_rate(a, b, 0.0, w).rate == pytest.approx(r1 * r2 * w, rel=0.1)
        assert shuffled_coincidence_rate(a, b, 0.0, w).rate == pytest.approx(r1 * r2 * w, rel=0.1)

    def test_independent_detectors(self):
        p = DetectorParams(1.0, 1.0)
        a, b = simulate_coincidence(ModulatedPair(1.0, 20.0, 0.0, 0.0), p, p, RunConfig(SEED, 1e-3, 1e4))
        w = 0.1
        r1, r2 = empirical_rate(a).rate, empirical_rate(b).rate
        assert coincidence_rate(a, b, 0.0, w).rate == pytest.approx(r1 * r2 * w, rel=0.1)

    def test_horizon_mismatch(self):
        with pytest.raises(UsageError):
            coincidence_rate(EventTrain(np.array([]), 1.0), EventTrain(np.array([]), 2.0), 0.0, 0.1)

    def test_window_positive(self):
        tr = EventTrain(np.array([1.0]), 2.0)
        with pytest.raises(DomainError):
            coincidence_rate(tr, tr, 0.0, 0.0)

    @settings(max_examples=100)
    @given(a=sorted_trains, b=sorted_trains, delay=st.floats(-5, 5), w=st.floats(0.01, 3))
    def test_swap_symmetry(self, a, b, delay, w):
        assert coincidence_rate(a, b, delay, w).n_events == coincidence_rate(b, a, -delay, w).n_events


class TestCrossCorrelation:
    def test_constant(self):
        c = np.full(100, 3.0)
        assert cross_correlation(c, c, 0.0) == 9.0

    def test_shift_alignment(self):
        x = np.random.default_rng(4).normal(size=500)
        s = 7
        shifted = np.concatenate([np.zeros(s), x[:-s]])
        assert cross_correlation(x, shifted, float(s)) == pytest.approx(np.mean(x[:-s] ** 2), rel=1e-14)

    def test_rounds_to_grid(self):
        x = np.arange(50.0)
        assert cross_correlation(x, x, 0.26, step=0.1) == cross_correlation(x, x, 0.3, step=0.1)

    def test_short_overlap(self):
        with pytest.raises(UsageError):
            cross_correlation(np.ones(15), np.ones(15), 6.0)

    def test_shape_mismatch(self):
        with pytest.raises(UsageError):
            cross_correlation(np.ones(15), np.ones(16), 0.0)

    @pytest.mark.parametrize("delay", [0.0, 5.0, 20.0])
    def test_pair_covariance(self, delay):
        m = ModulatedPair(3.0, 10.0, 0.5, 0.8)
        path = realize_pair(m, SEED, 1e5)
        got = cross_correlation(path.first, path.second, delay, path.step)
        expected = 9.0 + 0.8 * 0.25 * math.exp(-delay / 10.0)
        assert got == pytest.approx(expected, rel=0.05)


class TestMedianGap:
    def test_uncensored(self):
        tr = EventTrain(np.cumsum([1.0, 2.0, 3.0, 4.0, 5.0]), 15.0)
        assert median_gap([tr]) == 3.0

    def test_censored_tail_raises_median(self):
        # gaps 1 and 3 observed, 2 censored: the naive median would be 2
        assert median_gap([EventTrain(np.array([1.0, 4.0]), 6.0)]) == 3.0
        # survival never reaches one half
        assert median_gap([EventTrain(np.array([1.0]), 100.0), EventTrain(np.array([]), 100.0)]) == math.inf

    def test_zero_drift_median(self):
        p = DetectorParams(1.0, 1.0)
        trains = [simulate_detector(Constant(0.0), p, RunConfig(SEED, 1e-2, 1e3), stream=r) for r in range(100)]
        assert median_gap(trains) == pytest.approx(af.median_fpt(FptLaw(1.0, 0.0, 1.0)), rel=0.1)

    def test_no_events(self):
        with pytest.raises(UsageError):
            median_gap([EventTrain(np.array([]), 10.0)])
