"""Monte-Carlo ex-post validation of the analytic expectations.

Draws are generated in fixed-size chunks.  Chunk ``k`` uses a Philox stream
keyed by the seed with counter offset ``k``, so draw ``i`` is always produced
by the same stream position whatever the number of workers.  Chunk
statistics are merged in chunk order.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import partial
from typing import Callable

import numpy as np

from .models import MarketInstance
from .options import OptionsEquilibrium, exercise_policy_vec
from .planner import PlannerSolution, second_stage_dr_vec

CHUNK = 1 << 16
TABLE_SIZE = 4096
PAYMENT_KINDS = ("none", "spot", "options")


@dataclass(frozen=True)
class ScenarioDraw:
    s: float
    w: float
    pi_rt: float
    q_rt: float | None = None

    def balanced(self, load_l: float, q: float, y: float) -> "ScenarioDraw":
        return ScenarioDraw(self.s, self.w, self.pi_rt, max(load_l - q - y - self.w, 0.0))


@dataclass
class DecisionBundle:
    """Day-ahead purchase, curtailment policy and how curtailment is paid for.

    ``y_policy`` and ``price_curve`` map arrays of states to arrays.
    """

    q: float
    y_policy: Callable[[np.ndarray], np.ndarray]
    payments: str = "none"
    price_curve: Callable[[np.ndarray], np.ndarray] | None = None
    pi_o: float = 0.0
    pi_sp: float = 0.0
    x: float = 0.0

    def __post_init__(self):
        if self.payments not in PAYMENT_KINDS:
            raise ValueError(f"unknown payments kind {self.payments!r}")
        if self.payments == "spot" and self.price_curve is None:
            raise ValueError("spot payments need a price curve")


def _spot_price(inst, y):
    return inst.disutility.d1(y)


def _spot_curve(inst, q, s):
    return _spot_price(inst, second_stage_dr_vec(inst, q, s))


def planner_bundle(inst: MarketInstance, sol: PlannerSolution) -> DecisionBundle:
    """Planner decisions with no internal payments; curtailment re-solved per draw."""
    if sol.has_dr:
        pol = partial(second_stage_dr_vec, inst, sol.q)
    else:
        pol = partial(np.zeros_like)
    return DecisionBundle(sol.q, pol)


def spot_bundle(inst: MarketInstance, q: float) -> DecisionBundle:
    """Spot-market decisions: clearing curtailment paid at the contingent price."""
    return DecisionBundle(q, partial(second_stage_dr_vec, inst, q), "spot",
                          price_curve=partial(_spot_curve, inst, q))


def options_bundle(inst: MarketInstance, eq: OptionsEquilibrium) -> DecisionBundle:
    return DecisionBundle(eq.q, partial(exercise_policy_vec, inst, eq.q, eq.x, eq.pi_sp),
                          "options", pi_o=eq.pi_o, pi_sp=eq.pi_sp, x=eq.x)


# ---------------------------------------------------------------------------
# sampling


def info_state_table(inst: MarketInstance, size: int = TABLE_SIZE) -> tuple[np.ndarray, np.ndarray]:
    """(cdf values, states) for inverse-CDF sampling of the information state."""
    grid = np.linspace(0.0, 1.0, size)
    c = np.asarray(inst.info_state.cdf(grid), float)
    c = np.maximum.accumulate((c - c[0]) / (c[-1] - c[0]))
    return c, grid


def sample_arrays(inst: MarketInstance, rng: np.random.Generator, n: int, table=None):
    c, grid = table if table is not None else info_state_table(inst)
    s = np.interp(rng.random(n), c, grid)
    w = inst.wind.ppf(s, rng.random(n))
    pi_rt = inst.rt_price.mean(s) + inst.rt_price.sample_noise(rng, n)
    return s, np.asarray(w, float), pi_rt


def sample_scenario(inst: MarketInstance, rng_state) -> ScenarioDraw:
    """One draw of (s, w, real-time price); ``rng_state`` is a Generator or an integer seed."""
    rng = rng_state if isinstance(rng_state, np.random.Generator) else chunk_rng(int(rng_state), 0)
    s, w, p = sample_arrays(inst, rng, 1)
    return ScenarioDraw(float(s[0]), float(w[0]), float(p[0]))


def chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    if seed < 0:
        raise ValueError("seed must be nonnegative")
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, 0, chunk]))


# ---------------------------------------------------------------------------
# ex-post costs


def expost_arrays(inst: MarketInstance, bundle: DecisionBundle, s, w, pi_rt):
    s = np.asarray(s, float)
    y = np.asarray(bundle.y_policy(s), float)
    if bundle.payments == "options" and np.any(y > bundle.x + 1e-12):
        raise ValueError("exercise exceeds the option volume")
    q_rt = np.maximum(inst.load_l - bundle.q - y - np.asarray(w), 0.0)
    if bundle.payments == "spot":
        pay = bundle.price_curve(s) * y
    elif bundle.payments == "options":
        pay = bundle.pi_o * bundle.x + bundle.pi_sp * y
    else:
        pay = np.zeros_like(y)
    da = inst.pi_da * bundle.q
    rt = pi_rt * q_rt
    phi = inst.disutility.phi(y)
    lse = da + pay + rt
    agg = phi - pay
    system = da + phi + rt
    return lse, agg, system


def expost_costs(inst: MarketInstance, bundle: DecisionBundle, draw: ScenarioDraw) -> tuple[float, float, float]:
    """(lse, agg, system) ex-post costs for one scenario."""
    lse, agg, system = expost_arrays(inst, bundle, [draw.s], [draw.w], [draw.pi_rt])
    return float(lse[0]), float(agg[0]), float(system[0])


# ---------------------------------------------------------------------------
# Monte Carlo driver


@dataclass
class _Moments:
    n: int
    mean: np.ndarray
    m2: np.ndarray
    identity_gap: float

    def merge(self, other: "_Moments") -> "_Moments":
        n = self.n + other.n
        delta = other.mean - self.mean
        mean = self.mean + delta * (other.n / n)
        m2 = self.m2 + other.m2 + delta ** 2 * (self.n * other.n / n)
        return _Moments(n, mean, m2, max(self.identity_gap, other.identity_gap))


def _run_chunk(inst, bundle, seed, n_total, table, k) -> _Moments:
    n = min(CHUNK, n_total - k * CHUNK)
    s, w, p = sample_arrays(inst, chunk_rng(seed, k), n, table)
    lse, agg, system = expost_arrays(inst, bundle, s, w, p)
    vals = np.stack([lse, agg, system])
    mean = vals.mean(axis=1)
    m2 = ((vals - mean[:, None]) ** 2).sum(axis=1)
    gap = float(np.max(np.abs(lse + agg - system) / np.maximum(1.0, np.abs(system))))
    return _Moments(n, mean, m2, gap)


@dataclass
class MCReport:
    n: int
    seed: int
    mean_lse: float
    mean_agg: float
    mean_system: float
    se_lse: float
    se_agg: float
    se_system: float
    max_identity_gap: float
    analytic_ref: dict = field(default_factory=dict)
    z_scores: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def monte_carlo(inst: MarketInstance, bundle: DecisionBundle, n: int, seed: int,
                analytic_ref: dict | None = None, jobs: int = 1) -> MCReport:
    """Sampled mean ex-post costs with standard errors.

    ``analytic_ref`` maps any of "lse", "agg", "system" to a reference value;
    z-scores are reported for each.
    """
    if n < 10_000:
        raise ValueError("monte_carlo needs n >= 10000")
    table = info_state_table(inst)
    work = partial(_run_chunk, inst, bundle, seed, n, table)
    chunks = range(math.ceil(n / CHUNK))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(work, chunks))
    else:
        parts = [work(k) for k in chunks]
    tot = parts[0]
    for part in parts[1:]:
        tot = tot.merge(part)
    se = np.sqrt(tot.m2 / (tot.n - 1) / tot.n)
    names = ("lse", "agg", "system")
    means = dict(zip(names, tot.mean.tolist()))
    ses = dict(zip(names, se.tolist()))
    ref = dict(analytic_ref or {})
    z = {}
    for k, v in ref.items():
        if k not in names:
            raise ValueError(f"unknown reference {k!r}")
        z[k] = (means[k] - v) / ses[k] if ses[k] > 0 else (0.0 if means[k] == v else math.inf)
    return MCReport(n, seed, means["lse"], means["agg"], means["system"],
                    ses["lse"], ses["agg"], ses["system"], tot.identity_gap, ref, z)
