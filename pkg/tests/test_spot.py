import dataclasses

import numpy as np
import pytest

from dr_options.models import (LinearRtPrice, MarketInstance, QuadraticDisutility, TabulatedWind,
                               TruncatedNormalInfoState)
from dr_options.planner import second_stage_dr, solve_dr
from dr_options.spot import agg_supply, lse_demand, per_state_clearing, spot_equilibrium, verify_social_optimality


@pytest.fixture(scope="module")
def eq(case):
    return spot_equilibrium(case)


class TestClearing:
    def test_origin_clears_at_top_mean_price(self, case):
        # demand jumps to 0 above mean_rt(0) = 31.71; supply there is (31.71 - 15)/30 < l - 2
        y, p = per_state_clearing(case, 0.0, 0.0)
        assert p == pytest.approx(31.71, abs=1e-12)
        assert y == pytest.approx(16.71 / 30.0, abs=1e-12)

    def test_full_day_ahead(self, case):
        assert per_state_clearing(case, 3.0, 0.4) == (0.0, 15.0)

    def test_choke_below_supply_floor(self, case):
        s = 1.0
        assert case.rt_price.mean(s) * case.wind.cdf(s, 0.1) < 15.0
        assert per_state_clearing(case, 2.9, s)[0] == 0.0

    @pytest.mark.parametrize("q,s", [(0.3, 0.7), (0.8, 0.2), (0.0, 0.9), (1.2, 0.5)])
    def test_curves_meet(self, case, q, s):
        y, p = per_state_clearing(case, q, s)
        assert abs(lse_demand(case, q, s, p) - agg_supply(case, p)) <= 1e-8
        assert y == pytest.approx(second_stage_dr(case, q, s), abs=1e-8)

    def test_rejects_bad_q(self, case):
        with pytest.raises(ValueError):
            per_state_clearing(case, -0.1, 0.5)


class TestEquilibrium:
    def test_matches_planner(self, case, eq):
        ref = solve_dr(case)
        assert eq.q_star == ref.q
        assert eq.j_cp == pytest.approx(ref.expected_cost, rel=1e-6)
        ys = [second_stage_dr(case, eq.q_star, s) for s in eq.s]
        assert np.max(np.abs(eq.y - ys)) <= 1e-8

    def test_cost_split(self, eq):
        assert eq.j_cp == eq.j_lse + eq.j_agg

    def test_shapes(self, eq):
        assert np.all(np.diff(eq.y) <= 1e-12)
        assert np.all(np.diff(eq.price) <= 1e-9)

    def test_both_focs_bind(self, case, eq):
        on = eq.y > 0
        d1 = case.disutility.d1(eq.y[on])
        assert np.max(np.abs(d1 - eq.price[on])) <= 1e-8
        mean = case.rt_price.mean(eq.s[on])
        marg = mean * case.wind.cdf(eq.s[on], case.load_l - eq.q_star - eq.y[on])
        # at the support clamp the LSE's marginal value is the mean RT price itself
        assert np.all(marg <= eq.price[on] + 1e-6)
        interior = case.load_l - eq.q_star - eq.y[on] < case.wind.top(eq.s[on])
        assert np.max(np.abs(marg - eq.price[on])[interior]) <= 1e-6

    def test_no_wind_information(self, case):
        # one CDF row for every s: state carries no information about wind
        tw = TabulatedWind((0.0, 1.0), (0.0, 2.0), ((0.0, 1.0), (0.0, 1.0)))
        inst = MarketInstance(3.0, 26.76, QuadraticDisutility(15, 15), TruncatedNormalInfoState(0.2),
                              tw, LinearRtPrice(30.0, -1e-9))
        e = spot_equilibrium(inst)
        assert np.ptp(e.y) <= 1e-6


class TestVerify:
    def test_pass(self, case, eq):
        assert verify_social_optimality(eq, solve_dr(case)).passed

    def test_perturbed_fails_at_node(self, case, eq):
        bad = dataclasses.replace(eq, y=eq.y.copy())
        bad.y[17] += 0.01
        rep = verify_social_optimality(bad, solve_dr(case))
        assert not rep.passed
        assert rep.worst_state == eq.s[17]
        assert rep.max_y_gap == pytest.approx(0.01, abs=1e-8)

    def test_zero_dr_instance(self, case):
        inst = MarketInstance(3.0, 26.76, QuadraticDisutility(40.0, 5.0), case.info_state, case.wind,
                              case.rt_price)
        e = spot_equilibrium(inst)
        assert not e.y.any()
        assert verify_social_optimality(e, solve_dr(inst)).passed


def test_random_instances_equivalence(random_instances):
    for inst in random_instances:
        e = spot_equilibrium(inst)
        ref = solve_dr(inst)
        assert e.j_cp == pytest.approx(ref.expected_cost, rel=1e-6)
        assert verify_social_optimality(e, ref).passed
