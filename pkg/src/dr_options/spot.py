"""Intermediate spot market for curtailment with state-contingent prices."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import MarketInstance
from .numerics import DEFAULT_TOL, Tolerances, find_root
from .planner import PlannerSolution, solve_dr


@dataclass
class SpotEquilibrium:
    q_star: float
    s: np.ndarray
    y: np.ndarray
    price: np.ndarray
    weights: np.ndarray
    j_lse: float
    j_agg: float
    j_cp: float

    def curve(self) -> list[tuple[float, float, float]]:
        return list(zip(self.s.tolist(), self.y.tolist(), self.price.tolist()))


def lse_demand(inst: MarketInstance, q: float, s: float, price: float) -> float:
    """Curtailment the LSE buys at ``price`` in state s."""
    mean = float(inst.rt_price.mean(s))
    u = price / mean
    if u > 1.0:
        return 0.0
    return max(0.0, inst.load_l - q - float(inst.wind.ppf(s, u)))


def agg_supply(inst: MarketInstance, price: float) -> float:
    phi = inst.disutility
    if price <= phi.d1(0.0):
        return 0.0
    return float(phi.inv_d1(price))


def per_state_clearing(inst: MarketInstance, q: float, s: float,
                       tol: Tolerances = DEFAULT_TOL) -> tuple[float, float]:
    """(curtailment, price) where LSE demand meets aggregator supply in state s."""
    if not 0.0 <= q <= inst.load_l:
        raise ValueError("q must lie in [0, load_l]")
    floor = float(inst.disutility.d1(0.0))
    mean = float(inst.rt_price.mean(s))
    choke = mean * float(inst.wind.cdf(s, inst.load_l - q))
    if choke <= floor:
        return 0.0, floor
    # demand jumps down at the mean RT price when l - q exceeds the wind support
    if choke >= mean:
        sup = agg_supply(inst, mean)
        if sup <= lse_demand(inst, q, s, mean):
            return sup, mean
    excess = lambda p: lse_demand(inst, q, s, p) - agg_supply(inst, p)
    price = find_root(excess, floor, min(choke, mean), tol)
    return agg_supply(inst, price), price


def spot_equilibrium(inst: MarketInstance, tol: Tolerances = DEFAULT_TOL,
                     planner: PlannerSolution | None = None) -> SpotEquilibrium:
    """Competitive equilibrium of the spot market, costs at the clearing prices."""
    ref = planner if planner is not None else solve_dr(inst, tol)
    q = ref.q
    s, w = ref.policy.s_nodes, ref.policy.weights
    pairs = [per_state_clearing(inst, q, float(si), tol) for si in s]
    y = np.array([p[0] for p in pairs])
    price = np.array([p[1] for p in pairs])
    mean = inst.rt_price.mean(s)
    short = mean * inst.wind.shortfall(s, np.maximum(inst.load_l - q - y, 0.0))
    pay = price * y
    j_lse = inst.pi_da * q + float(np.dot(w, pay + short))
    j_agg = float(np.dot(w, inst.disutility.phi(y) - pay))
    return SpotEquilibrium(q, s, y, price, w, j_lse, j_agg, j_lse + j_agg)


@dataclass
class OptimalityReport:
    passed: bool
    max_y_gap: float
    worst_state: float
    cost_gap: float

    def lines(self) -> list[str]:
        verdict = "PASS" if self.passed else "FAIL"
        return [f"spot vs planner: {verdict}",
                f"  max |y_spot - y_planner| = {self.max_y_gap:.3e} at s = {self.worst_state:.6g}",
                f"  relative cost gap = {self.cost_gap:.3e}"]


def verify_social_optimality(eq: SpotEquilibrium, ref: PlannerSolution,
                             threshold: float = 1e-6) -> OptimalityReport:
    """Compare the spot curve and cost with the planner's solution."""
    y_ref = ref.policy(eq.s)
    gaps = np.abs(eq.y - y_ref)
    k = int(np.argmax(gaps)) if gaps.size else 0
    cost_gap = abs(eq.j_cp - ref.expected_cost) / max(abs(ref.expected_cost), 1e-300)
    max_gap = float(gaps[k]) if gaps.size else 0.0
    ok = max_gap <= threshold and cost_gap <= threshold
    return OptimalityReport(ok, max_gap, float(eq.s[k]) if gaps.size else float("nan"), cost_gap)
