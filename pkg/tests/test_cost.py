import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hec_adapt import cost
from hec_adapt.cost import CostConfig, DelayBreakdown, TierSpec, default_tiers
from hec_adapt.detectors import standard_specs


class TestComputeDelay:
    def test_iot_model_on_device(self):
        # published model FLOP on the device tier
        assert cost.compute_delay_ms(1.35e6, default_tiers()[0]) == pytest.approx(6.959, abs=1e-3)

    def test_cloud_model_on_cloud(self):
        assert cost.compute_delay_ms(5.41e6, default_tiers()[2]) == pytest.approx(0.0187, abs=1e-4)

    def test_unit_sanity(self):
        tier = TierSpec(1, 2.0e9, 0.0)
        assert cost.compute_delay_ms(2.0e9, tier) == pytest.approx(1000.0)


class TestTotalDelay:
    def test_edge_total(self):
        spec = standard_specs()[1]
        d = cost.total_delay(spec.flop, default_tiers()[1])
        assert d.total_ms == pytest.approx(50.015, abs=1e-3)

    def test_cloud_total(self):
        spec = standard_specs()[2]
        d = cost.total_delay(spec.flop, default_tiers()[2])
        assert d.total_ms == pytest.approx(100.019, abs=1e-3)

    def test_device_has_no_network_latency(self):
        d = cost.total_delay(1.0e6, default_tiers()[0])
        assert d.t_comm_ms == 0.0

    def test_delay_ordering_with_standard_config(self):
        tiers = default_tiers()
        totals = [cost.total_delay(s.flop, t).total_ms
                  for s, t in zip(standard_specs(), tiers)]
        assert totals[0] < totals[1] < totals[2]


class TestDelayCost:
    def test_zero_delay_zero_cost(self):
        assert cost.delay_cost(0.0, 0.0025) == 0.0

    def test_hundred_ms_at_default_alpha(self):
        assert cost.delay_cost(100.0, 0.0025) == 0.2

    @given(st.floats(0.0, 1e4), st.floats(1e-4, 4.5e-3))
    def test_bounded(self, t, alpha):
        c = cost.delay_cost(t, alpha)
        assert 0.0 <= c < 1.0

    def test_strictly_increasing_many_pairs(self):
        rng = np.random.default_rng(0)
        t1 = rng.uniform(0, 500, size=2000)
        t2 = t1 + rng.uniform(1e-6, 500, size=2000)
        alpha = rng.uniform(1e-4, 4.5e-3, size=2000)
        for a, b, al in zip(t1, t2, alpha):
            assert cost.delay_cost(b, al) > cost.delay_cost(a, al)


class TestReward:
    def test_perfect_and_free(self):
        assert cost.reward(1.0, DelayBreakdown(0.0, 0.0), 0.0025) == 1.0

    def test_perfect_at_cloud_delay(self):
        assert cost.reward(1.0, DelayBreakdown(100.0, 0.0), 0.0025) == pytest.approx(0.8)

    def test_six_of_seven_on_device(self):
        r = cost.reward(6 / 7, DelayBreakdown(0.0, 6.96), 0.0025)
        assert r == pytest.approx(0.8400, abs=1e-3)

    def test_monotone_in_accuracy_and_delay(self):
        d1, d2 = DelayBreakdown(0.0, 10.0), DelayBreakdown(0.0, 20.0)
        assert cost.reward(0.9, d1, 0.002) > cost.reward(0.8, d1, 0.002)
        assert cost.reward(0.9, d1, 0.002) > cost.reward(0.9, d2, 0.002)

    def test_accuracy_range_checked(self):
        with pytest.raises(ValueError):
            cost.reward(1.5, DelayBreakdown(0.0, 0.0), 0.0025)

    def test_tier1_advantage_grows_with_alpha_in_sweep_range(self):
        # the reward gap between the device tier and a slower tier widens as
        # alpha grows, for the standard delays and sweep range (alpha*t < 1)
        tiers = default_tiers()
        specs = standard_specs()
        d1 = cost.total_delay(specs[0].flop, tiers[0])
        d3 = cost.total_delay(specs[2].flop, tiers[2])
        alphas = np.linspace(1e-4, 4.5e-3, 25)
        gaps = [cost.reward(1.0, d1, a) - cost.reward(1.0, d3, a) for a in alphas]
        assert all(b > a for a, b in zip(gaps, gaps[1:]))


class TestValidation:
    def test_alpha_positive(self):
        with pytest.raises(ValueError):
            CostConfig(alpha=0.0)

    def test_tier_fields(self):
        with pytest.raises(ValueError):
            TierSpec(0, 1e9, 0.0)
        with pytest.raises(ValueError):
            TierSpec(1, -1e9, 0.0)
        with pytest.raises(ValueError):
            TierSpec(1, 1e9, -1.0)
