import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dpboot.baselines import (
    SAConfig,
    _rescaled_settings,
    default_subset_count,
    fisher_ci,
    subsample_aggregate_ci,
)
from dpboot.errors import InvalidConfigError, InvalidParameterError
from dpboot.rng import RandomStream

from oracles import normal_quantile_by_bisection


def sa_config(**overrides):
    base = dict(m_subsets=10, x_min=-20.0, x_max=20.0, l_min=-10.0, l_max=10.0,
                var_max=50.0, epsilon=0.5, alpha=0.05, b_inner=100)
    base.update(overrides)
    return SAConfig(**base)


class TestFisherCi:
    def test_standard_normal_example(self):
        lo, hi = fisher_ci(0.0, 1.0, 0.05)
        z = normal_quantile_by_bisection(0.025)
        assert lo == pytest.approx(-1.960, abs=1e-3)
        assert hi == pytest.approx(1.960, abs=1e-3)
        assert hi == pytest.approx(z, abs=1e-9)

    def test_zero_sigma_gives_point(self):
        assert fisher_ci(3.2, 0.0, 0.05) == (3.2, 3.2)

    @settings(max_examples=40)
    @given(st.floats(-1e6, 1e6), st.floats(0, 1e5), st.floats(0.01, 0.99))
    def test_midpoint_is_estimate(self, theta, sigma, alpha):
        lo, hi = fisher_ci(theta, sigma, alpha)
        assert (lo + hi) / 2.0 == pytest.approx(theta, abs=1e-6 * max(1.0, abs(theta)))

    def test_width_scales_linearly_in_sigma(self):
        lo1, hi1 = fisher_ci(0.0, 1.3, 0.1)
        lo2, hi2 = fisher_ci(0.0, 2.6, 0.1)
        assert (hi2 - lo2) == pytest.approx(2.0 * (hi1 - lo1))

    def test_alpha_domain(self):
        with pytest.raises(InvalidParameterError):
            fisher_ci(0.0, 1.0, 0.0)
        with pytest.raises(InvalidParameterError):
            fisher_ci(0.0, 1.0, 1.0)

    def test_sigma_domain(self):
        with pytest.raises(InvalidParameterError):
            fisher_ci(0.0, -1.0, 0.05)


class TestRescaledSettings:
    def test_hand_arithmetic_example(self):
        # N=1000, M=10: estimates are clamped to +/- 10 / sqrt(100) = +/- 1,
        # so the clamped-mean sensitivity is (1 - (-1)) / 10 = 0.2.
        l_lo, l_hi, var_cap, delta_mean, delta_var = _rescaled_settings(
            1000, 10, -10.0, 10.0, 50.0)
        assert (l_lo, l_hi) == (-1.0, 1.0)
        assert delta_mean == pytest.approx(0.2)
        assert var_cap == pytest.approx(0.5)
        assert delta_var == pytest.approx(0.05)

    def test_default_subset_count(self):
        assert default_subset_count(500) == 13
        assert default_subset_count(2000) == 21
        assert default_subset_count(4) == 2


class TestSubsampleAggregate:
    def test_noiseless_constant_data(self):
        # Every subset estimate equals the constant, inner variance is
        # floored at 1e-6, so the interval collapses to the constant up to
        # the floor contribution.
        cfg = sa_config(epsilon=math.inf, l_min=-10.0, l_max=10.0, m_subsets=10)
        data = np.full(400, 0.7)
        theta, (lo, hi) = subsample_aggregate_ci(data, np.mean, cfg, RandomStream(0))
        assert theta == pytest.approx(0.7, abs=1e-12)
        assert lo == pytest.approx(0.7, abs=2e-3)
        assert hi == pytest.approx(0.7, abs=2e-3)
        assert lo <= theta <= hi

    def test_noiseless_mean_recovers_sample_structure(self):
        rng = RandomStream(1)
        data = rng.generator.normal(0.0, 1.0, size=2000)
        cfg = sa_config(epsilon=math.inf, m_subsets=default_subset_count(2000))
        theta, (lo, hi) = subsample_aggregate_ci(data, np.mean, cfg, RandomStream(2))
        assert abs(theta - data.mean()) < 0.05
        assert lo < theta < hi

    def test_pre_noise_estimate_respects_rescaled_clamp(self):
        # Data far outside the clamp range: the noiseless private estimate
        # must sit at the rescaled upper bound.
        cfg = sa_config(epsilon=math.inf, x_min=-200.0, x_max=200.0, m_subsets=5)
        data = np.full(125, 150.0)
        l_hi = 10.0 / math.sqrt(125 / 5)
        theta, _ = subsample_aggregate_ci(data, np.mean, cfg, RandomStream(3))
        assert theta == pytest.approx(l_hi)

    def test_interval_width_positive_with_noise(self):
        data = RandomStream(4).generator.normal(size=500)
        cfg = sa_config(m_subsets=13)
        for seed in range(5):
            _, (lo, hi) = subsample_aggregate_ci(data, np.mean, cfg, RandomStream(seed))
            assert hi > lo

    def test_deterministic_given_stream(self):
        data = RandomStream(5).generator.normal(size=300)
        cfg = sa_config(m_subsets=8)
        a = subsample_aggregate_ci(data, np.mean, cfg, RandomStream(9))
        b = subsample_aggregate_ci(data, np.mean, cfg, RandomStream(9))
        assert a == b

    def test_data_clamped_to_x_bounds(self):
        # One wild outlier must not drag the noiseless estimate beyond what
        # the x-clamp allows.
        data = np.concatenate([np.zeros(199), [1e9]])
        cfg = sa_config(epsilon=math.inf, m_subsets=4, x_min=-20.0, x_max=20.0)
        theta, _ = subsample_aggregate_ci(data, np.mean, cfg, RandomStream(6))
        assert theta <= 20.0 / 4 + 1e-9  # at most one subset pinned at x_max

    def test_singleton_subsets_of_constant_data(self):
        # M = n: every subset is one point, the rescaled clamp equals the
        # raw clamp, and the noiseless private mean is the constant itself.
        n = 40
        cfg = sa_config(epsilon=math.inf, m_subsets=n)
        theta, _ = subsample_aggregate_ci(np.full(n, 0.5), np.mean, cfg, RandomStream(8))
        assert theta == pytest.approx(0.5, abs=1e-15)

    def test_m_larger_than_n_rejected(self):
        cfg = sa_config(m_subsets=50)
        with pytest.raises(InvalidConfigError):
            subsample_aggregate_ci(np.zeros(10), np.mean, cfg, RandomStream(0))

    def test_m_below_two_rejected(self):
        with pytest.raises(InvalidConfigError):
            sa_config(m_subsets=1)

    def test_invalid_clamp_range_rejected(self):
        with pytest.raises(InvalidConfigError):
            sa_config(l_min=3.0, l_max=-3.0)
