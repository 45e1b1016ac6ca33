"""Call-option markets for demand response.

Two variants are solved.  In the original market the LSE chooses the
day-ahead volume q and the option volume x freely; equilibria form a
one-parameter family indexed by the strike price.  In the redesigned market
the aggregator fixes q + x = l' and the equilibrium option volume minimizes
the social objective

    F(x) = pi_da (l' - x) + E_s[phi(y_s) + mean_rt(s) E_w[(l - l' + x - y_s - w)+]]

where y_s is the LSE's exercise policy.  Strike payments cancel between the
two parties, so F is also the equilibrium system cost.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import partial

import numpy as np

from .models import MarketInstance
from .numerics import (DEFAULT_TOL, BracketError, NumericsError, Tolerances, find_root,
                       minimize_scalar, monotone_threshold)
from .planner import solve_dr, solve_no_dr

log = logging.getLogger(__name__)

SWEEP_COLUMNS = ("pi_sp", "pi_o", "x", "q", "s1", "s2", "j_lse", "j_agg", "j_cp")


class SolverError(NumericsError):
    """An equilibrium could not be bracketed."""


@dataclass
class OptionsEquilibrium:
    variant: str
    pi_sp: float
    pi_o: float
    x: float
    q: float
    s1: float
    s2: float
    j_lse: float
    j_agg: float
    j_cp: float
    l_prime: float | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def regime(self) -> str:
        """'full' (every option exercised in every state), 'none' (never exercised) or 'partial'."""
        if self.x == 0.0 or self.s2 == 0.0:
            return "none"
        if self.s1 == 1.0:
            return "full"
        return "partial"


@dataclass
class StrikeSweepRow:
    pi_sp: float
    pi_o: float = math.nan
    x: float = math.nan
    q: float = math.nan
    s1: float = math.nan
    s2: float = math.nan
    j_lse: float = math.nan
    j_agg: float = math.nan
    j_cp: float = math.nan
    error: str | None = None

    @classmethod
    def from_equilibrium(cls, eq: OptionsEquilibrium) -> "StrikeSweepRow":
        return cls(**{k: getattr(eq, k) for k in SWEEP_COLUMNS})

    def as_tuple(self) -> tuple:
        return tuple(getattr(self, k) for k in SWEEP_COLUMNS)


# ---------------------------------------------------------------------------
# exercise policy and its regime boundaries


def exercise_policy_vec(inst: MarketInstance, q_eff: float, x: float, pi_sp: float, s):
    """LSE exercise decision in each state of ``s`` (vectorized)."""
    s = np.asarray(s, float)
    z0 = inst.load_l - q_eff
    u = pi_sp / inst.rt_price.mean(s)
    p0 = inst.wind.cdf(s, z0)
    p1 = inst.wind.cdf(s, z0 - x)
    interior = np.clip(z0 - inst.wind.ppf(s, np.minimum(u, 1.0)), 0.0, x)
    y = np.where(p0 < u, 0.0, np.where(p1 > u, x, interior))
    return np.where(u > 1.0, 0.0, y)


def exercise_policy(inst: MarketInstance, q_eff: float, x: float, pi_sp: float, s: float) -> float:
    """Options exercised in state s given day-ahead volume q_eff and x options held."""
    if q_eff + x > inst.load_l + 1e-12:
        raise ValueError("q_eff + x must not exceed the load")
    return float(exercise_policy_vec(inst, q_eff, x, pi_sp, np.array([s]))[0])


def regime_boundaries(inst: MarketInstance, q_eff: float, x: float, pi_sp: float,
                      tol: Tolerances = DEFAULT_TOL) -> tuple[float, float]:
    """(s1, s2): all options exercised below s1, none above s2."""
    l, mean, cdf = inst.load_l, inst.rt_price.mean, inst.wind.cdf
    h1 = lambda s: float(mean(s) * cdf(s, l - q_eff - x)) - pi_sp
    h2 = lambda s: float(mean(s) * cdf(s, l - q_eff)) - pi_sp
    s1 = monotone_threshold(h1, 0.0, 1.0, tol)
    s2 = monotone_threshold(h2, 0.0, 1.0, tol)
    return s1, max(s1, s2)


def _top_crossing(inst, z, tol):
    if z <= 0:
        return []
    t = monotone_threshold(lambda s: z - float(inst.wind.top(s)), 0.0, 1.0, tol)
    return [t] if 0.0 < t < 1.0 else []


@dataclass
class _Stage:
    """Second-stage quantities on a quadrature rule adapted to the regimes."""

    s: np.ndarray
    w: np.ndarray
    y: np.ndarray
    s1: float
    s2: float
    mass_full: float      # P(s <= s1)
    mass_exercise: float  # P(s <= s2)


def _stage(inst, q_eff, x, pi_sp, tol) -> _Stage:
    s1, s2 = regime_boundaries(inst, q_eff, x, pi_sp, tol)
    z0 = inst.load_l - q_eff
    breaks = [s1, s2] + _top_crossing(inst, z0, tol) + _top_crossing(inst, z0 - x, tol)
    s, w = inst.state_rule(breaks)
    y = exercise_policy_vec(inst, q_eff, x, pi_sp, s)
    return _Stage(s, w, y, s1, s2, float(w[s < s1].sum()), float(w[s < s2].sum()))


def _shortfall_term(inst, st: _Stage, z):
    return inst.rt_price.mean(st.s) * inst.wind.shortfall(st.s, np.maximum(z - st.y, 0.0))


# ---------------------------------------------------------------------------
# original market


def original_lse_cost(inst, q, x, pi_sp, pi_o, tol: Tolerances = DEFAULT_TOL) -> float:
    st = _stage(inst, q, x, pi_sp, tol)
    stage2 = pi_sp * st.y + _shortfall_term(inst, st, inst.load_l - q)
    return pi_o * x + inst.pi_da * q + float(np.dot(st.w, stage2))


def original_agg_cost(inst, q, x, pi_sp, pi_o, tol: Tolerances = DEFAULT_TOL) -> float:
    """Aggregator cost with the LSE's day-ahead volume q held fixed."""
    st = _stage(inst, q, x, pi_sp, tol)
    return float(np.dot(st.w, inst.disutility.phi(st.y) - pi_sp * st.y)) - pi_o * x


def original_lse_gradient(inst, q, x, pi_sp, pi_o, tol: Tolerances = DEFAULT_TOL) -> tuple[float, float]:
    """(dJ/dq, dJ/dx) of the LSE's expected cost."""
    st = _stage(inst, q, x, pi_sp, tol)
    mean = inst.rt_price.mean(st.s)
    p = inst.wind.cdf(st.s, inst.load_l - q - st.y)
    dq = inst.pi_da - float(np.dot(st.w, mean * p))
    full = st.s < st.s1
    dx = pi_o + pi_sp * st.mass_full - float(np.dot(st.w[full], (mean * p)[full]))
    return dq, dx


def original_agg_gradient(inst, q, x, pi_sp, pi_o, tol: Tolerances = DEFAULT_TOL) -> float:
    st = _stage(inst, q, x, pi_sp, tol)
    return -pi_o + (float(inst.disutility.d1(x)) - pi_sp) * st.mass_full


def _q_given_x(inst, x, pi_sp, tol):
    hi = inst.load_l - x
    f = lambda q: original_lse_gradient(inst, q, x, pi_sp, 0.0, tol)[0]
    if f(0.0) >= 0:
        return 0.0
    if f(hi) <= 0:
        return hi
    return find_root(f, 0.0, hi, tol)


def _option_gap(inst, x, pi_sp, tol):
    """Mean over the full-exercise states of (marginal RT value - marginal disutility).

    At zero full-exercise mass the s -> 0 limit is used, which keeps the
    function continuous in x.
    """
    q = _q_given_x(inst, x, pi_sp, tol)
    st = _stage(inst, q, x, pi_sp, tol)
    d1x = float(inst.disutility.d1(x))
    if st.mass_full > 0:
        full = st.s < st.s1
        mp = inst.rt_price.mean(st.s[full]) * inst.wind.cdf(st.s[full], inst.load_l - q - x)
        return float(np.dot(st.w[full], mp)) / st.mass_full - d1x, q, st
    lim = float(inst.rt_price.mean(0.0) * inst.wind.cdf(0.0, inst.load_l - q - x))
    return lim - d1x, q, st


def _assemble_original(inst, pi_sp, x, q, pi_o, tol, **diag) -> OptionsEquilibrium:
    st = _stage(inst, q, x, pi_sp, tol)
    short = _shortfall_term(inst, st, inst.load_l - q)
    exercise = float(np.dot(st.w, pi_sp * st.y))
    j_lse = pi_o * x + inst.pi_da * q + exercise + float(np.dot(st.w, short))
    j_agg = float(np.dot(st.w, inst.disutility.phi(st.y))) - exercise - pi_o * x
    dq, dx = original_lse_gradient(inst, q, x, pi_sp, pi_o, tol)
    da = original_agg_gradient(inst, q, x, pi_sp, pi_o, tol)
    # the [0, s2] form of the aggregator condition, for comparison only
    ex = st.s < st.s2
    eq33 = -pi_o + float(np.dot(st.w[ex], inst.disutility.d1(st.y[ex]) - pi_sp))
    diag.update(residual_q=dq, residual_lse_x=dx, residual_agg_x=da, residual_eq33=eq33,
                mass_full=st.mass_full, mass_exercise=st.mass_exercise)
    return OptionsEquilibrium("original", pi_sp, pi_o, x, q, st.s1, st.s2,
                              j_lse, j_agg, j_lse + j_agg, diagnostics=diag)


def solve_original_ce(inst: MarketInstance, pi_sp: float, tol: Tolerances = DEFAULT_TOL,
                      n_scan: int = 48) -> OptionsEquilibrium:
    """Competitive equilibrium of the original options market at a given strike."""
    if pi_sp < 0:
        raise ValueError("strike price must be nonnegative")
    l = inst.load_l
    gap = lambda x: _option_gap(inst, x, pi_sp, tol)[0]

    def boundary(reason):
        q0 = solve_no_dr(inst, tol).q
        st = _stage(inst, q0, 0.0, pi_sp, tol)
        pi_o = max(0.0, (float(inst.disutility.d1(0.0)) - pi_sp) * st.mass_full)
        return _assemble_original(inst, pi_sp, 0.0, q0, pi_o, tol, boundary=reason)

    g0, _, st0 = _option_gap(inst, 0.0, pi_sp, tol)
    if st0.mass_full == 0.0:
        return boundary("no state exercises at x=0")
    if g0 <= 0:
        return boundary("options have no marginal value at x=0")
    hi = l
    if gap(hi) > 0:
        # fallback: look for the first downward crossing on a grid
        xs = np.linspace(0.0, l, n_scan + 1)
        vals = [gap(v) for v in xs]
        cross = [i for i in range(n_scan) if vals[i] > 0 >= vals[i + 1]]
        if not cross:
            raise SolverError(f"no option-volume root at strike {pi_sp}: gap stays positive "
                              f"(min {min(vals):.4g})")
        hi = xs[cross[0] + 1]
    try:
        x = find_root(gap, 0.0, hi, tol)
    except BracketError as exc:
        raise SolverError(f"option-volume bracket failed at strike {pi_sp}: {exc}") from exc
    _, q, st = _option_gap(inst, x, pi_sp, tol)
    if st.mass_full == 0.0:
        return boundary("root lies where no state exercises")
    pi_o = (float(inst.disutility.d1(x)) - pi_sp) * st.mass_full
    if pi_o < 0:
        return boundary("negative option premium")
    return _assemble_original(inst, pi_sp, x, q, pi_o, tol)


# ---------------------------------------------------------------------------
# redesigned market


def default_l_prime(inst: MarketInstance, tol: Tolerances = DEFAULT_TOL) -> float:
    """Offer size l' = q_ndr, which the LSE accepts at any option price."""
    return solve_no_dr(inst, tol).q


def _check_lprime(inst, l_prime):
    if not 0.0 <= l_prime <= inst.load_l:
        raise ValueError(f"l_prime must lie in [0, {inst.load_l}], got {l_prime}")


def social_objective(inst, l_prime, x, pi_sp, tol: Tolerances = DEFAULT_TOL) -> float:
    st = _stage(inst, l_prime - x, x, pi_sp, tol)
    z = inst.load_l - l_prime + x
    return inst.pi_da * (l_prime - x) + float(np.dot(st.w, inst.disutility.phi(st.y) + _shortfall_term(inst, st, z)))


def social_objective_literal(inst, l_prime, x, pi_sp, tol: Tolerances = DEFAULT_TOL) -> float:
    """Objective with the LSE's stage cost taken verbatim, strike payments included."""
    st = _stage(inst, l_prime - x, x, pi_sp, tol)
    z = inst.load_l - l_prime + x
    stage = inst.disutility.phi(st.y) + pi_sp * st.y + _shortfall_term(inst, st, z)
    return inst.pi_da * (l_prime - x) + float(np.dot(st.w, stage))


def social_gradient(inst, l_prime, x, pi_sp, tol: Tolerances = DEFAULT_TOL) -> float:
    st = _stage(inst, l_prime - x, x, pi_sp, tol)
    ex = st.s < st.s2
    rest = ~ex
    z = inst.load_l - l_prime + x
    tail = inst.rt_price.mean(st.s[rest]) * inst.wind.cdf(st.s[rest], z)
    return (-inst.pi_da + float(np.dot(st.w[ex], inst.disutility.d1(st.y[ex])))
            + float(np.dot(st.w[rest], tail)))


def redesigned_lse_cost(inst, l_prime, x, pi_sp, pi_o, tol: Tolerances = DEFAULT_TOL) -> float:
    st = _stage(inst, l_prime - x, x, pi_sp, tol)
    z = inst.load_l - l_prime + x
    return pi_o * x + inst.pi_da * (l_prime - x) + float(np.dot(st.w, pi_sp * st.y + _shortfall_term(inst, st, z)))


def redesigned_lse_gradient(inst, l_prime, x, pi_sp, pi_o, tol: Tolerances = DEFAULT_TOL) -> float:
    st = _stage(inst, l_prime - x, x, pi_sp, tol)
    rest = st.s >= st.s2
    z = inst.load_l - l_prime + x
    tail = inst.rt_price.mean(st.s[rest]) * inst.wind.cdf(st.s[rest], z)
    return pi_o - inst.pi_da + pi_sp * st.mass_exercise + float(np.dot(st.w[rest], tail))


def redesigned_agg_cost(inst, l_prime, x, pi_sp, pi_o, tol: Tolerances = DEFAULT_TOL) -> float:
    st = _stage(inst, l_prime - x, x, pi_sp, tol)
    return float(np.dot(st.w, inst.disutility.phi(st.y) - pi_sp * st.y)) - pi_o * x


def redesigned_agg_gradient(inst, l_prime, x, pi_sp, pi_o, tol: Tolerances = DEFAULT_TOL) -> float:
    """Aggregator marginal cost of offering one more option."""
    st = _stage(inst, l_prime - x, x, pi_sp, tol)
    ex = st.s < st.s2
    return -pi_o + float(np.dot(st.w[ex], inst.disutility.d1(st.y[ex]) - pi_sp))


def _beta_terms(inst, l_prime, x, pi_sp, tol):
    st = _stage(inst, l_prime - x, x, pi_sp, tol)
    mid = (st.s >= st.s1) & (st.s < st.s2)
    s, y, w = st.s[mid], st.y[mid], st.w[mid]
    dens = inst.wind.pdf(s, inst.load_l - l_prime + x - y)
    beta = w / (inst.rt_price.mean(s) * dens)
    return st, beta, inst.disutility.d1(y)


def _exercise_jump(inst, l_prime, x, pi_sp, s2):
    """Boundary term from a jump of the exercise policy at s2, per unit strike.

    When l - l' + x lies above the wind support at s2, exercise drops from a
    positive amount to zero there, and s2 moves with the strike.
    """
    if not 0.0 < s2 < 1.0:
        return 0.0
    z = inst.load_l - l_prime + x
    mean = float(inst.rt_price.mean(s2))
    u = min(pi_sp / mean, 1.0)
    y_left = min(max(z - float(inst.wind.ppf(s2, u)), 0.0), x)
    if y_left <= 0.0:
        return 0.0
    cost = lambda y: float(inst.disutility.phi(y) + mean * inst.wind.shortfall(s2, z - y))
    h2 = lambda s: float(inst.rt_price.mean(s) * inst.wind.cdf(s, z)) - pi_sp
    d = 1e-6
    a, b = max(s2 - d, 0.0), min(s2 + d, 1.0)
    slope = (h2(b) - h2(a)) / (b - a)
    if slope == 0.0:
        return 0.0
    return (cost(y_left) - cost(0.0)) * float(inst.info_state.pdf(s2)) / slope


def strike_gradient(inst, l_prime, x, pi_sp, tol: Tolerances = DEFAULT_TOL) -> float:
    """d/d(pi_sp) of the social objective at fixed x."""
    st, beta, d1 = _beta_terms(inst, l_prime, x, pi_sp, tol)
    return float(np.dot(beta, pi_sp - d1)) + _exercise_jump(inst, l_prime, x, pi_sp, st.s2)


def strike_fixed_point(inst, l_prime, x, pi_sp, tol: Tolerances = DEFAULT_TOL) -> float:
    """Beta-weighted average marginal disutility over the partial-exercise states."""
    _, beta, d1 = _beta_terms(inst, l_prime, x, pi_sp, tol)
    total = float(beta.sum())
    return float(np.dot(beta, d1)) / total if total > 0 else math.nan


def solve_redesigned_ce(inst: MarketInstance, l_prime: float, pi_sp: float,
                        tol: Tolerances = DEFAULT_TOL) -> OptionsEquilibrium:
    """Equilibrium of the redesigned market for offer size l' at a given strike."""
    _check_lprime(inst, l_prime)
    if pi_sp < 0:
        raise ValueError("strike price must be nonnegative")
    F = lambda x: social_objective(inst, l_prime, x, pi_sp, tol)
    x, _ = minimize_scalar(F, 0.0, l_prime, tol)
    # polish with the analytic derivative where it brackets a stationary point
    if 0.0 < x < l_prime:
        d = 1e-5 * max(l_prime, 1e-12)
        lo, hi = max(0.0, x - d), min(l_prime, x + d)
        dF = lambda t: social_gradient(inst, l_prime, t, pi_sp, tol)
        if dF(lo) < 0 < dF(hi):
            x = find_root(dF, lo, hi, tol)
    if x <= tol.min_abs:
        x = 0.0
    elif x >= l_prime - tol.min_abs:
        x = l_prime
    st = _stage(inst, l_prime - x, x, pi_sp, tol)
    ex = st.s < st.s2
    pi_o = max(0.0, float(np.dot(st.w[ex], inst.disutility.d1(st.y[ex]) - pi_sp)))
    z = inst.load_l - l_prime + x
    short = float(np.dot(st.w, _shortfall_term(inst, st, z)))
    exercise = float(np.dot(st.w, pi_sp * st.y))
    j_lse = pi_o * x + inst.pi_da * (l_prime - x) + exercise + short
    j_agg = float(np.dot(st.w, inst.disutility.phi(st.y))) - exercise - pi_o * x
    diag = {
        "objective": social_objective(inst, l_prime, x, pi_sp, tol),
        "objective_literal": social_objective_literal(inst, l_prime, x, pi_sp, tol),
        "residual_social_x": social_gradient(inst, l_prime, x, pi_sp, tol),
        "residual_lse_x": redesigned_lse_gradient(inst, l_prime, x, pi_sp, pi_o, tol),
        "residual_agg_x": redesigned_agg_gradient(inst, l_prime, x, pi_sp, pi_o, tol),
        "mass_full": st.mass_full,
        "mass_exercise": st.mass_exercise,
    }
    return OptionsEquilibrium("redesigned", pi_sp, pi_o, x, l_prime - x, st.s1, st.s2,
                              j_lse, j_agg, j_lse + j_agg, l_prime=l_prime, diagnostics=diag)


# ---------------------------------------------------------------------------
# sweeps, optimal strike, welfare


def default_strike_grid(inst: MarketInstance, step: float = 0.1) -> list[float]:
    """[phi'(0) - 5, phi'(l) + 5] in ``step`` increments (floored at 0)."""
    lo = max(0.0, float(inst.disutility.d1(0.0)) - 5.0)
    hi = float(inst.disutility.d1(inst.load_l)) + 5.0
    n = int(round((hi - lo) / step))
    return [round(lo + i * step, 10) for i in range(n + 1)]


def _sweep_row(inst, variant, l_prime, tol, pi_sp):
    try:
        if variant == "original":
            eq = solve_original_ce(inst, pi_sp, tol)
        else:
            eq = solve_redesigned_ce(inst, l_prime, pi_sp, tol)
    except (NumericsError, ValueError) as exc:
        log.warning("strike %s failed: %s", pi_sp, exc)
        return StrikeSweepRow(pi_sp=pi_sp, error=str(exc))
    return StrikeSweepRow.from_equilibrium(eq)


def strike_sweep(inst: MarketInstance, variant: str, l_prime: float | None, grid,
                 tol: Tolerances = DEFAULT_TOL, jobs: int = 1) -> list[StrikeSweepRow]:
    """Solve one equilibrium per strike; failures are kept in-row."""
    grid = [float(g) for g in grid]
    if not grid:
        raise ValueError("strike grid is empty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("strike grid must be strictly increasing")
    if variant not in ("original", "redesigned"):
        raise ValueError(f"unknown variant {variant!r}")
    if variant == "redesigned":
        if l_prime is None:
            l_prime = default_l_prime(inst, tol)
        _check_lprime(inst, l_prime)
    work = partial(_sweep_row, inst, variant, l_prime, tol)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(work, grid))
    return [work(g) for g in grid]


@dataclass
class OptimalStrike:
    pi_sp_star: float
    eq: OptionsEquilibrium
    fixed_point: float
    residual: float
    bracket: tuple[float, float]


def optimal_strike(inst: MarketInstance, l_prime: float,
                   tol: Tolerances = DEFAULT_TOL) -> OptimalStrike:
    """Strike price minimizing the redesigned market's equilibrium system cost."""
    _check_lprime(inst, l_prime)
    lo = float(inst.disutility.d1(0.0))
    hi = float(inst.disutility.d1(l_prime))
    cost = lambda p: solve_redesigned_ce(inst, l_prime, p, tol).j_cp
    p, _ = minimize_scalar(cost, lo, hi, tol)

    def dJ(pp):
        eq = solve_redesigned_ce(inst, l_prime, pp, tol)
        return strike_gradient(inst, l_prime, eq.x, pp, tol)

    if lo < p < hi:
        d = 1e-4 * max(1.0, abs(p))
        a, b = max(lo, p - d), min(hi, p + d)
        try:
            if dJ(a) < 0 < dJ(b):
                p = find_root(dJ, a, b, tol)
        except NumericsError:
            pass
    eq = solve_redesigned_ce(inst, l_prime, p, tol)
    fixed = strike_fixed_point(inst, l_prime, eq.x, p, tol) if eq.s2 > eq.s1 else math.nan
    residual = abs(p - fixed) if not math.isnan(fixed) else math.nan
    return OptimalStrike(p, eq, fixed, residual, (lo, hi))


@dataclass
class WelfareReport:
    j_spot: float
    j_ndr: float
    rows: list[StrikeSweepRow]
    violations: list[str]
    optimum: OptimalStrike | None
    slack: float = 1e-8

    @property
    def passed(self) -> bool:
        return not self.violations

    @property
    def gap(self) -> float:
        """Welfare loss at the optimal strike relative to the spot market."""
        return self.optimum.eq.j_cp - self.j_spot if self.optimum else math.nan


def welfare_report(inst: MarketInstance, l_prime: float | None = None, grid=None,
                   tol: Tolerances = DEFAULT_TOL, jobs: int = 1, slack: float = 1e-8,
                   with_optimum: bool = True) -> WelfareReport:
    """Check spot <= options <= no-DR along a strike sweep of the redesigned market."""
    if l_prime is None:
        l_prime = default_l_prime(inst, tol)
    if grid is None:
        grid = default_strike_grid(inst)
    j_spot = solve_dr(inst, tol).expected_cost
    j_ndr = solve_no_dr(inst, tol).expected_cost
    rows = strike_sweep(inst, "redesigned", l_prime, grid, tol, jobs)
    bad = []
    for r in rows:
        if r.error:
            bad.append(f"strike {r.pi_sp}: solver failed ({r.error})")
        elif not (j_spot - slack <= r.j_cp <= j_ndr + slack):
            bad.append(f"strike {r.pi_sp}: J={r.j_cp:.10g} outside [{j_spot:.10g}, {j_ndr:.10g}]")
    opt = optimal_strike(inst, l_prime, tol) if with_optimum else None
    return WelfareReport(j_spot, j_ndr, rows, bad, opt, slack)


def equilibrium_dict(eq: OptionsEquilibrium) -> dict:
    d = asdict(eq)
    d["regime"] = eq.regime
    return d
