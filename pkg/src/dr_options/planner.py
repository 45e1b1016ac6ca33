"""Social-planner benchmarks with and without demand response."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .models import MarketInstance
from .numerics import DEFAULT_TOL, Tolerances, bisect_vec, find_root, monotone_threshold

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Policy:
    """Curtailment policy tabulated at quadrature nodes, linear in between."""

    s_nodes: np.ndarray
    y_nodes: np.ndarray
    weights: np.ndarray

    def __call__(self, s):
        out = np.interp(s, self.s_nodes, self.y_nodes)
        return out if np.ndim(out) else float(out)

    @classmethod
    def zero(cls, s_nodes, weights) -> "Policy":
        return cls(s_nodes, np.zeros_like(s_nodes), weights)


@dataclass
class PlannerSolution:
    q: float
    policy: Policy
    expected_cost: float
    has_dr: bool
    warning: str | None = None
    foc_residual: float = float("nan")
    extra: dict = field(default_factory=dict)


def _support_kink(inst: MarketInstance, z: float, tol: Tolerances) -> list[float]:
    # state where z leaves the wind support (top(s) increasing in s)
    if z <= 0:
        return []
    g = lambda s: z - float(inst.wind.top(s))
    t = monotone_threshold(g, 0.0, 1.0, tol)
    return [t] if 0.0 < t < 1.0 else []


def no_dr_breaks(inst: MarketInstance, q: float, tol: Tolerances = DEFAULT_TOL) -> list[float]:
    return _support_kink(inst, inst.load_l - q, tol)


def expected_cost_no_dr(inst: MarketInstance, q: float, tol: Tolerances = DEFAULT_TOL) -> float:
    """pi_da*q + E_s[mean_rt(s) * E_w[(l - q - w)+]]."""
    z = max(inst.load_l - q, 0.0)
    s, w = inst.state_rule(no_dr_breaks(inst, q, tol))
    return inst.pi_da * q + float(np.dot(w, inst.rt_price.mean(s) * inst.wind.shortfall(s, z)))


def no_dr_gradient(inst: MarketInstance, q: float, tol: Tolerances = DEFAULT_TOL) -> float:
    """d/dq of the no-DR expected cost: pi_da - E_s[mean_rt(s) P_s(l - q)]."""
    z = inst.load_l - q
    s, w = inst.state_rule(no_dr_breaks(inst, q, tol))
    return inst.pi_da - float(np.dot(w, inst.rt_price.mean(s) * inst.wind.cdf(s, z)))


def solve_no_dr(inst: MarketInstance, tol: Tolerances = DEFAULT_TOL) -> PlannerSolution:
    """Optimal day-ahead purchase when no curtailment is available."""
    l = inst.load_l
    g = lambda q: no_dr_gradient(inst, q, tol)
    warning = None
    if g(0.0) >= 0:
        q = 0.0
        warning = "day-ahead price is not discounted; no interior day-ahead purchase"
        log.warning(warning)
    else:
        q = find_root(g, 0.0, l, tol)
    s, w = inst.state_rule(no_dr_breaks(inst, q, tol))
    return PlannerSolution(q=q, policy=Policy.zero(s, w), expected_cost=expected_cost_no_dr(inst, q, tol),
                           has_dr=False, warning=warning, foc_residual=abs(g(q)) if warning is None else float("nan"))


# ---------------------------------------------------------------------------
# with demand response


def second_stage_dr_vec(inst: MarketInstance, q: float, s: np.ndarray) -> np.ndarray:
    """Planner curtailment y_s for every state in ``s`` at day-ahead volume q."""
    s = np.asarray(s, float)
    phi = inst.disutility
    z = inst.load_l - q
    mean = inst.rt_price.mean(s)
    active = mean * inst.wind.cdf(s, z) > phi.d1(0.0)
    if z <= 0 or not np.any(active):
        return np.zeros_like(s)
    sa, ma = s[active], mean[active]
    resid = lambda y: phi.d1(y) - ma * inst.wind.cdf(sa, z - y)
    y = bisect_vec(resid, np.zeros_like(sa), np.full_like(sa, z))
    out = np.zeros_like(s)
    out[active] = y
    return out


def second_stage_dr(inst: MarketInstance, q: float, s: float) -> float:
    """Optimal curtailment in state s given the day-ahead purchase q."""
    if not 0.0 <= q <= inst.load_l:
        raise ValueError("q must lie in [0, load_l]")
    return float(second_stage_dr_vec(inst, q, np.array([s]))[0])


def dr_breaks(inst: MarketInstance, q: float, tol: Tolerances = DEFAULT_TOL) -> list[float]:
    """States where the planner's second-stage integrands have kinks."""
    phi = inst.disutility
    z = inst.load_l - q
    out = []
    if z <= 0:
        return out
    mean = inst.rt_price.mean
    # curtailment switches on/off
    t = monotone_threshold(lambda s: float(mean(s) * inst.wind.cdf(s, z)) - phi.d1(0.0), 0.0, 1.0, tol)
    if 0.0 < t < 1.0:
        out.append(t)
    # residual z - y_s leaves the wind support
    try:
        inv = lambda s: max(float(phi.inv_d1(mean(s))), 0.0)
    except ValueError:
        return out
    g = lambda s: z - inv(s) - float(inst.wind.top(s))
    t = monotone_threshold(g, 0.0, 1.0, tol)
    if 0.0 < t < 1.0:
        out.append(t)
    out.extend(_support_kink(inst, z, tol))
    return sorted(set(out))


def _dr_rule(inst, q, tol):
    s, w = inst.state_rule(dr_breaks(inst, q, tol))
    return s, w, second_stage_dr_vec(inst, q, s)


def dr_gradient(inst: MarketInstance, q: float, tol: Tolerances = DEFAULT_TOL) -> float:
    """d/dq of the planner cost with optimal recourse (envelope form)."""
    s, w, y = _dr_rule(inst, q, tol)
    return inst.pi_da - float(np.dot(w, inst.rt_price.mean(s) * inst.wind.cdf(s, inst.load_l - q - y)))


def planner_cost(inst: MarketInstance, q: float, policy) -> float:
    """pi_da*q + E_s[phi(y_s) + mean_rt(s) * E_w[(l - q - y_s - w)+]].

    ``policy`` is a :class:`Policy` (its own nodes are used) or any callable
    mapping states to curtailment.
    """
    if isinstance(policy, Policy):
        s, w, y = policy.s_nodes, policy.weights, policy.y_nodes
    else:
        s, w = inst.state_rule()
        y = np.broadcast_to(np.asarray(policy(s), float), s.shape)
    if np.any(y < 0) or np.any(y > inst.load_l):
        raise ValueError("policy values must lie in [0, load_l]")
    z = np.maximum(inst.load_l - q - y, 0.0)
    stage2 = inst.disutility.phi(y) + inst.rt_price.mean(s) * inst.wind.shortfall(s, z)
    return inst.pi_da * q + float(np.dot(w, stage2))


def expected_cost_dr(inst: MarketInstance, q: float, tol: Tolerances = DEFAULT_TOL) -> float:
    s, w, y = _dr_rule(inst, q, tol)
    return planner_cost(inst, q, Policy(s, y, w))


def solve_dr(inst: MarketInstance, tol: Tolerances = DEFAULT_TOL) -> PlannerSolution:
    """Optimal day-ahead purchase and curtailment policy."""
    l = inst.load_l
    g = lambda q: dr_gradient(inst, q, tol)
    warning = None
    if g(0.0) >= 0:
        q = 0.0
        warning = "day-ahead price is not discounted; no interior day-ahead purchase"
        log.warning(warning)
    else:
        q = find_root(g, 0.0, l, tol)
    s, w, y = _dr_rule(inst, q, tol)
    policy = Policy(s, y, w)
    return PlannerSolution(q=q, policy=policy, expected_cost=planner_cost(inst, q, policy),
                           has_dr=True, warning=warning,
                           foc_residual=abs(g(q)) if warning is None else float("nan"))


# ---------------------------------------------------------------------------
# brute-force oracle


def _zoom_min(cost, lo, hi, n):
    """Grid minimum of cost(y) (vectorized over rows) on [lo, hi], refined once."""
    t = np.linspace(0.0, 1.0, n)
    y = lo[:, None] + (hi - lo)[:, None] * t[None, :]
    c = cost(y)
    k = np.argmin(c, axis=1)
    step = (hi - lo) / (n - 1)
    lo2 = np.maximum(lo, y[np.arange(y.shape[0]), k] - step)
    hi2 = np.minimum(hi, y[np.arange(y.shape[0]), k] + step)
    y2 = lo2[:, None] + (hi2 - lo2)[:, None] * t[None, :]
    c2 = cost(y2)
    k2 = np.argmin(c2, axis=1)
    rows = np.arange(y.shape[0])
    return y2[rows, k2], c2[rows, k2]


def oracle_grid_search(inst: MarketInstance, nq: int = 10_000, ny: int = 100,
                       ns: int = 400, with_dr: bool = True) -> PlannerSolution:
    """Exhaustive grid minimization of the planner cost.

    Uses a midpoint rule in s, an ``nq``-point day-ahead grid and, per state
    node, a ``ny``-point curtailment grid refined once around its argmin.  No
    first-order conditions are involved, so it is an independent check of the
    analytic solvers.  Meant for tests; it is slow.
    """
    if nq < 100 or ny < 100:
        raise ValueError("oracle needs nq, ny >= 100")
    l = inst.load_l
    s = (np.arange(ns) + 0.5) / ns
    w = inst.info_state.pdf(s) / ns
    mean = inst.rt_price.mean(s)
    phi = inst.disutility
    qs = np.linspace(0.0, l, nq)
    best = (np.inf, None, None)
    for q in qs:
        z = l - q
        if with_dr:
            cost = lambda y: phi.phi(y) + mean[:, None] * inst.wind.shortfall(s[:, None], np.maximum(z - y, 0.0))
            y, c = _zoom_min(cost, np.zeros(ns), np.full(ns, z), ny)
        else:
            y = np.zeros(ns)
            c = mean * inst.wind.shortfall(s, z)
        total = inst.pi_da * q + float(np.dot(w, c))
        if total < best[0]:
            best = (total, q, y)
    total, q, y = best
    return PlannerSolution(q=float(q), policy=Policy(s, y, w), expected_cost=total, has_dr=with_dr,
                           extra={"oracle": True})
