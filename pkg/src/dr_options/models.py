"""Market instance and its probability models.

Model objects are immutable and evaluate elementwise on floats or numpy
arrays.  The information state ``s`` always lives on [0, 1].
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Union

import numpy as np
from scipy.special import erf

from .numerics import DEFAULT_TOL, Tolerances, composite_rule, integrate

ArrayLike = Union[float, np.ndarray]


class ConfigError(ValueError):
    """Malformed or unsupported market-instance document."""


# ---------------------------------------------------------------------------
# disutility


@dataclass(frozen=True)
class QuadraticDisutility:
    """phi(y) = a*y + b*y**2."""

    a: float
    b: float
    kind: str = field(default="quadratic", init=False)

    def phi(self, y: ArrayLike) -> ArrayLike:
        return self.a * y + self.b * y * y

    def d1(self, y: ArrayLike) -> ArrayLike:
        return self.a + 2.0 * self.b * y

    def d2(self, y: ArrayLike) -> ArrayLike:
        return np.full_like(np.asarray(y, dtype=float), 2.0 * self.b) if np.ndim(y) else 2.0 * self.b

    def inv_d1(self, p: ArrayLike) -> ArrayLike:
        if self.b <= 0:
            raise ValueError("marginal disutility is not invertible when b <= 0")
        return (p - self.a) / (2.0 * self.b)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "a": self.a, "b": self.b}


@dataclass(frozen=True)
class TabulatedDisutility:
    """Convex disutility given by a piecewise-linear marginal cost table.

    ``y`` must start at 0; ``marginal`` holds phi'(y) at those points and must
    be strictly increasing.  phi is the exact integral of the interpolant and
    phi' is extended linearly beyond the last knot.
    """

    y: tuple[float, ...]
    marginal: tuple[float, ...]
    kind: str = field(default="tabulated", init=False)

    def __post_init__(self):
        y, m = np.asarray(self.y, float), np.asarray(self.marginal, float)
        if y.ndim != 1 or y.shape != m.shape or y.size < 2:
            raise ConfigError("tabulated disutility needs matching y/marginal lists (>= 2 points)")
        if y[0] != 0.0 or np.any(np.diff(y) <= 0):
            raise ConfigError("tabulated disutility y must start at 0 and increase strictly")
        if np.any(np.diff(m) <= 0):
            raise ConfigError("tabulated marginal disutility must increase strictly")

    @cached_property
    def _arrays(self):
        y, m = np.asarray(self.y, float), np.asarray(self.marginal, float)
        slopes = np.diff(m) / np.diff(y)
        cum = np.concatenate(([0.0], np.cumsum(0.5 * (m[1:] + m[:-1]) * np.diff(y))))
        return y, m, slopes, cum

    def _segment(self, y):
        ys, _, slopes, _ = self._arrays
        return np.clip(np.searchsorted(ys, y, side="right") - 1, 0, slopes.size - 1)

    def phi(self, y: ArrayLike) -> ArrayLike:
        ys, m, slopes, cum = self._arrays
        y = np.asarray(y, float)
        k = self._segment(y)
        t = y - ys[k]
        out = cum[k] + m[k] * t + 0.5 * slopes[k] * t * t
        return out if out.ndim else float(out)

    def d1(self, y: ArrayLike) -> ArrayLike:
        ys, m, slopes, _ = self._arrays
        y = np.asarray(y, float)
        k = self._segment(y)
        out = m[k] + slopes[k] * (y - ys[k])
        return out if out.ndim else float(out)

    def d2(self, y: ArrayLike) -> ArrayLike:
        _, _, slopes, _ = self._arrays
        out = slopes[self._segment(np.asarray(y, float))]
        return out if np.ndim(out) else float(out)

    def inv_d1(self, p: ArrayLike) -> ArrayLike:
        ys, m, slopes, _ = self._arrays
        p = np.asarray(p, float)
        k = np.clip(np.searchsorted(m, p, side="right") - 1, 0, slopes.size - 1)
        out = ys[k] + (p - m[k]) / slopes[k]
        return out if out.ndim else float(out)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "y": list(self.y), "marginal": list(self.marginal)}


DisutilityFn = Union[QuadraticDisutility, TabulatedDisutility]


# ---------------------------------------------------------------------------
# information state


@dataclass(frozen=True)
class TruncatedNormalInfoState:
    """Normal(mu, sigma) density truncated to [0, 1].

    The closed-form erf normalizer is only a starting point; the density is
    always renormalized by quadrature.
    """

    sigma: float
    mu: float = 0.5
    kind: str = field(default="truncated-normal", init=False)

    def __post_init__(self):
        if not self.sigma > 0:
            raise ConfigError("truncated-normal sigma must be positive")

    @cached_property
    def erf_mass(self) -> float:
        r2 = math.sqrt(2.0) * self.sigma
        return 0.5 * (math.erf((1.0 - self.mu) / r2) - math.erf((0.0 - self.mu) / r2))

    def _raw(self, s):
        z = (s - self.mu) / self.sigma
        return np.exp(-0.5 * z * z) / (math.sqrt(2.0 * math.pi) * self.sigma * self.erf_mass)

    @cached_property
    def _norm(self) -> float:
        return integrate(lambda s: float(self._raw(s)), 0.0, 1.0, Tolerances(quad_rel=1e-13))

    def pdf(self, s: ArrayLike) -> ArrayLike:
        s_arr = np.asarray(s, float)
        out = np.where((s_arr >= 0) & (s_arr <= 1), self._raw(s_arr) / self._norm, 0.0)
        return out if out.ndim else float(out)

    def cdf(self, s: ArrayLike) -> ArrayLike:
        r2 = math.sqrt(2.0) * self.sigma
        s_arr = np.clip(np.asarray(s, float), 0.0, 1.0)
        lo = erf((0.0 - self.mu) / r2)
        out = 0.5 * (erf((s_arr - self.mu) / r2) - lo) / (self.erf_mass * self._norm)
        out = np.clip(out, 0.0, 1.0)
        return out if out.ndim else float(out)

    def knots(self) -> tuple[float, ...]:
        return ()

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "sigma": self.sigma}
        if self.mu != 0.5:
            d["mu"] = self.mu
        return d


@dataclass(frozen=True)
class TabulatedInfoState:
    """Piecewise-linear density on [0, 1], renormalized to unit mass."""

    s: tuple[float, ...]
    density: tuple[float, ...]
    kind: str = field(default="tabulated", init=False)

    def __post_init__(self):
        s, d = np.asarray(self.s, float), np.asarray(self.density, float)
        if s.ndim != 1 or s.shape != d.shape or s.size < 2:
            raise ConfigError("tabulated info state needs matching s/density lists")
        if s[0] != 0.0 or s[-1] != 1.0 or np.any(np.diff(s) <= 0):
            raise ConfigError("tabulated info-state grid must run strictly from 0 to 1")
        if np.any(d < 0) or not np.any(d > 0):
            raise ConfigError("tabulated density must be nonnegative and not identically 0")

    @cached_property
    def _arrays(self):
        s, d = np.asarray(self.s, float), np.asarray(self.density, float)
        mass = np.concatenate(([0.0], np.cumsum(0.5 * (d[1:] + d[:-1]) * np.diff(s))))
        return s, d / mass[-1], mass / mass[-1]

    def pdf(self, s: ArrayLike) -> ArrayLike:
        ss, d, _ = self._arrays
        out = np.interp(s, ss, d, left=0.0, right=0.0)
        return out if np.ndim(out) else float(out)

    def cdf(self, s: ArrayLike) -> ArrayLike:
        ss, d, c = self._arrays
        s_arr = np.clip(np.asarray(s, float), 0.0, 1.0)
        k = np.clip(np.searchsorted(ss, s_arr, side="right") - 1, 0, ss.size - 2)
        t = s_arr - ss[k]
        slope = (d[k + 1] - d[k]) / (ss[k + 1] - ss[k])
        out = c[k] + d[k] * t + 0.5 * slope * t * t
        return out if out.ndim else float(out)

    def knots(self) -> tuple[float, ...]:
        return tuple(self.s[1:-1])

    def to_dict(self) -> dict:
        return {"kind": self.kind, "s": list(self.s), "density": list(self.density)}


InfoStateModel = Union[TruncatedNormalInfoState, TabulatedInfoState]


# ---------------------------------------------------------------------------
# wind conditional on the information state


@dataclass(frozen=True)
class UniformWind:
    """w | s ~ Uniform[0, base + slope*s]."""

    base: float = 2.0
    slope: float = 1.0
    kind: str = field(default="uniform", init=False)

    def __post_init__(self):
        if not self.base > 0 or self.base + self.slope <= 0:
            raise ConfigError("uniform wind support must be positive on [0, 1]")

    def top(self, s: ArrayLike) -> ArrayLike:
        """Upper end of the wind support in state s."""
        return self.base + self.slope * s

    def pdf(self, s: ArrayLike, w: ArrayLike) -> ArrayLike:
        top = self.top(s)
        return np.where((w >= 0) & (w <= top), 1.0 / top, 0.0)

    def cdf(self, s: ArrayLike, z: ArrayLike) -> ArrayLike:
        return np.clip(z / self.top(s), 0.0, 1.0)

    def ppf(self, s: ArrayLike, u: ArrayLike) -> ArrayLike:
        return np.clip(u, 0.0, 1.0) * self.top(s)

    def shortfall(self, s: ArrayLike, z: ArrayLike) -> ArrayLike:
        top = self.top(s)
        z = np.maximum(z, 0.0)
        return np.where(z <= top, z * z / (2.0 * top), z - 0.5 * top)

    def knots(self) -> tuple[float, ...]:
        return ()

    def to_dict(self) -> dict:
        return {"kind": self.kind, "base": self.base, "slope": self.slope}


@dataclass(frozen=True)
class TabulatedWind:
    """Conditional wind CDF tabulated on an (s, z) grid.

    Rows of ``cdf`` are piecewise-linear CDFs on the shared ``z`` grid (z[0]
    must be 0, cdf rows start at 0 and end at 1).  Between tabulated states the
    CDF is interpolated linearly in s, which keeps every row a valid CDF.
    """

    s: tuple[float, ...]
    z: tuple[float, ...]
    cdf_table: tuple[tuple[float, ...], ...]
    kind: str = field(default="tabulated", init=False)

    def __post_init__(self):
        s, z = np.asarray(self.s, float), np.asarray(self.z, float)
        c = np.asarray(self.cdf_table, float)
        if c.shape != (s.size, z.size) or z.size < 2:
            raise ConfigError("wind cdf table must have shape (len(s), len(z))")
        if s[0] != 0.0 or s[-1] != 1.0 or np.any(np.diff(s) <= 0):
            raise ConfigError("tabulated wind s grid must run strictly from 0 to 1")
        if z[0] != 0.0 or np.any(np.diff(z) <= 0):
            raise ConfigError("tabulated wind z grid must start at 0 and increase strictly")
        if np.any(np.diff(c, axis=1) < 0) or np.any(c[:, 0] != 0) or np.any(c[:, -1] != 1):
            raise ConfigError("wind cdf rows must be nondecreasing from 0 to 1")

    @cached_property
    def _arrays(self):
        s, z = np.asarray(self.s, float), np.asarray(self.z, float)
        c = np.asarray(self.cdf_table, float)
        # integral of each cdf row from 0 to z_j
        integ = np.concatenate((np.zeros((s.size, 1)),
                                np.cumsum(0.5 * (c[:, 1:] + c[:, :-1]) * np.diff(z), axis=1)), axis=1)
        return s, z, c, integ

    def _blend(self, s):
        ss = self._arrays[0]
        s = np.clip(np.asarray(s, float), 0.0, 1.0)
        k = np.clip(np.searchsorted(ss, s, side="right") - 1, 0, ss.size - 2)
        t = (s - ss[k]) / (ss[k + 1] - ss[k])
        return k, t

    def _row_eval(self, table, s, z):
        zs = self._arrays[1]
        k, t = self._blend(s)
        s_b, z_b = np.broadcast_arrays(np.asarray(k), np.asarray(z, float))
        t_b = np.broadcast_to(t, s_b.shape)
        zz = np.clip(z_b, zs[0], zs[-1])
        j = np.clip(np.searchsorted(zs, zz, side="right") - 1, 0, zs.size - 2)
        f = (zz - zs[j]) / (zs[j + 1] - zs[j])
        lo = table[s_b, j] * (1 - f) + table[s_b, j + 1] * f
        hi = table[s_b + 1, j] * (1 - f) + table[s_b + 1, j + 1] * f
        return (1 - t_b) * lo + t_b * hi, zz, z_b

    def top(self, s: ArrayLike) -> ArrayLike:
        _, z, c, _ = self._arrays
        k, t = self._blend(s)
        first_one = lambda row: z[np.argmax(c[row] >= 1.0)]
        tops = np.array([first_one(r) for r in range(c.shape[0])])
        # support top of a mixture is the larger of the two rows' tops
        out = np.where(t > 0, np.maximum(tops[k], tops[k + 1]), tops[k])
        return out if np.ndim(out) else float(out)

    def pdf(self, s: ArrayLike, w: ArrayLike) -> ArrayLike:
        _, z, c, _ = self._arrays
        dens = np.diff(c, axis=1) / np.diff(z)
        k, t = self._blend(s)
        k_b, w_b = np.broadcast_arrays(np.asarray(k), np.asarray(w, float))
        t_b = np.broadcast_to(t, k_b.shape)
        j = np.clip(np.searchsorted(z, w_b, side="right") - 1, 0, z.size - 2)
        out = (1 - t_b) * dens[k_b, j] + t_b * dens[k_b + 1, j]
        out = np.where((w_b < 0) | (w_b > z[-1]), 0.0, out)
        return out if out.ndim else float(out)

    def cdf(self, s: ArrayLike, z: ArrayLike) -> ArrayLike:
        val, _, z_b = self._row_eval(self._arrays[2], s, z)
        out = np.where(z_b <= 0, 0.0, np.where(z_b >= self._arrays[1][-1], 1.0, val))
        return out if out.ndim else float(out)

    def ppf(self, s: ArrayLike, u: ArrayLike) -> ArrayLike:
        ss, z, c, _ = self._arrays
        k, t = self._blend(s)
        k_b, u_b = np.broadcast_arrays(np.asarray(k), np.clip(np.asarray(u, float), 0.0, 1.0))
        t_b = np.broadcast_to(t, k_b.shape)
        out = np.empty(k_b.shape)
        for idx in np.ndindex(k_b.shape):
            row = (1 - t_b[idx]) * c[k_b[idx]] + t_b[idx] * c[k_b[idx] + 1]
            # smallest z with cdf >= u
            j = int(np.searchsorted(row, u_b[idx], side="left"))
            if j == 0:
                out[idx] = z[0]
            else:
                j = min(j, z.size - 1)
                r0, r1 = row[j - 1], row[j]
                out[idx] = z[j - 1] + (z[j] - z[j - 1]) * (u_b[idx] - r0) / (r1 - r0)
        return out if out.ndim else float(out)

    def shortfall(self, s: ArrayLike, z: ArrayLike) -> ArrayLike:
        # E[(z - w)+] equals the integral of the CDF from 0 to z
        _, zs, c, integ = self._arrays
        val, zz, z_b = self._row_eval(integ, s, z)
        # _row_eval interpolates the integral linearly; correct with the exact
        # quadratic term inside the segment
        k, t = self._blend(s)
        k_b = np.broadcast_to(np.asarray(k), z_b.shape)
        t_b = np.broadcast_to(t, z_b.shape)
        j = np.clip(np.searchsorted(zs, zz, side="right") - 1, 0, zs.size - 2)
        h = zs[j + 1] - zs[j]
        f = (zz - zs[j]) / h
        exact = lambda r: integ[r, j] + h * (c[r, j] * f + 0.5 * (c[r, j + 1] - c[r, j]) * f * f)
        val = (1 - t_b) * exact(k_b) + t_b * exact(k_b + 1)
        beyond = np.maximum(z_b - zs[-1], 0.0)
        out = np.where(z_b <= 0, 0.0, val + beyond)
        return out if out.ndim else float(out)

    def knots(self) -> tuple[float, ...]:
        return tuple(self.s[1:-1])

    def to_dict(self) -> dict:
        return {"kind": self.kind, "s": list(self.s), "z": list(self.z),
                "cdf": [list(r) for r in self.cdf_table]}


WindModel = Union[UniformWind, TabulatedWind]


# ---------------------------------------------------------------------------
# real-time price


NOISE_KINDS = ("none", "uniform", "normal")


@dataclass(frozen=True)
class LinearRtPrice:
    """Conditional mean intercept + slope*s plus zero-mean sampling noise.

    ``noise`` is one of "none", "uniform" (half-width ``noise_scale``) or
    "normal" (standard deviation ``noise_scale``).  Only the mean enters any
    analytic expectation.
    """

    intercept: float
    slope: float
    noise: str = "none"
    noise_scale: float = 0.0
    kind: str = field(default="linear", init=False)

    def __post_init__(self):
        if self.noise not in NOISE_KINDS:
            raise ConfigError(f"unknown noise kind {self.noise!r}; expected one of {NOISE_KINDS}")
        if self.noise_scale < 0:
            raise ConfigError("noise_scale must be nonnegative")

    def mean(self, s: ArrayLike) -> ArrayLike:
        return self.intercept + self.slope * s

    def sample_noise(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.noise == "none" or self.noise_scale == 0:
            return np.zeros(size)
        if self.noise == "uniform":
            return rng.uniform(-self.noise_scale, self.noise_scale, size)
        return rng.normal(0.0, self.noise_scale, size)

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "intercept": self.intercept, "slope": self.slope,
             "noise": self.noise}
        if self.noise != "none":
            d["noise_scale"] = self.noise_scale
        return d


RtPriceModel = LinearRtPrice


# ---------------------------------------------------------------------------
# the instance


@dataclass(frozen=True)
class MarketInstance:
    load_l: float
    pi_da: float
    disutility: DisutilityFn
    info_state: InfoStateModel
    wind: WindModel
    rt_price: RtPriceModel

    def __post_init__(self):
        if not self.load_l > 0:
            raise ConfigError("load_l must be positive")
        if not self.pi_da > 0:
            raise ConfigError("pi_da must be positive")

    def state_rule(self, breaks=(), n_panels: int = 8, n_nodes: int = 24):
        """Nodes and probability weights for expectations over s.

        Weights already include the information-state density.
        """
        knots = tuple(self.info_state.knots()) + tuple(self.wind.knots()) + tuple(breaks)
        s, w = composite_rule(0.0, 1.0, knots, n_panels, n_nodes)
        return s, w * self.info_state.pdf(s)

    def expect(self, values_fn, breaks=()) -> float:
        s, w = self.state_rule(breaks)
        return float(np.dot(w, values_fn(s)))

    def to_dict(self) -> dict:
        return {"load_l": self.load_l, "pi_da": self.pi_da,
                "disutility": self.disutility.to_dict(),
                "info_state": self.info_state.to_dict(),
                "wind": self.wind.to_dict(), "rt_price": self.rt_price.to_dict()}


def build_case_study() -> MarketInstance:
    """The 3 MWh single-interval case study with Jan-2020 Berkeley prices."""
    return MarketInstance(
        load_l=3.0,
        pi_da=26.76,
        disutility=QuadraticDisutility(a=15.0, b=15.0),
        info_state=TruncatedNormalInfoState(sigma=0.2),
        wind=UniformWind(base=2.0, slope=1.0),
        rt_price=LinearRtPrice(intercept=31.71, slope=-3.71),
    )


def wind_shortfall(model: WindModel, s: ArrayLike, z: ArrayLike) -> ArrayLike:
    """E[(z - w)+ | s]."""
    if np.any(np.asarray(z) < 0):
        raise ValueError("shortfall is defined for z >= 0")
    out = model.shortfall(s, z)
    return out if np.ndim(out) else float(out)


# ---------------------------------------------------------------------------
# serialization


def _take(doc: dict, where: str, required: tuple, optional: tuple = ()) -> dict:
    if not isinstance(doc, dict):
        raise ConfigError(f"{where} must be an object")
    unknown = set(doc) - set(required) - set(optional)
    if unknown:
        raise ConfigError(f"unknown field(s) in {where}: {sorted(unknown)}")
    missing = [k for k in required if k not in doc]
    if missing:
        raise ConfigError(f"missing field(s) in {where}: {missing}")
    return doc


def _num(x, where):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ConfigError(f"{where} must be a number")
    return float(x)


def _disutility_from(doc):
    kind = doc.get("kind") if isinstance(doc, dict) else None
    if kind == "quadratic":
        _take(doc, "disutility", ("kind", "a", "b"))
        return QuadraticDisutility(_num(doc["a"], "disutility.a"), _num(doc["b"], "disutility.b"))
    if kind == "tabulated":
        _take(doc, "disutility", ("kind", "y", "marginal"))
        return TabulatedDisutility(tuple(map(float, doc["y"])), tuple(map(float, doc["marginal"])))
    raise ConfigError(f"unknown disutility kind {kind!r}")


def _info_from(doc):
    kind = doc.get("kind") if isinstance(doc, dict) else None
    if kind == "truncated-normal":
        _take(doc, "info_state", ("kind", "sigma"), ("mu",))
        return TruncatedNormalInfoState(_num(doc["sigma"], "info_state.sigma"),
                                        _num(doc.get("mu", 0.5), "info_state.mu"))
    if kind == "tabulated":
        _take(doc, "info_state", ("kind", "s", "density"))
        return TabulatedInfoState(tuple(map(float, doc["s"])), tuple(map(float, doc["density"])))
    raise ConfigError(f"unknown info_state kind {kind!r}")


def _wind_from(doc):
    kind = doc.get("kind") if isinstance(doc, dict) else None
    if kind == "uniform":
        _take(doc, "wind", ("kind",), ("base", "slope"))
        return UniformWind(_num(doc.get("base", 2.0), "wind.base"),
                           _num(doc.get("slope", 1.0), "wind.slope"))
    if kind == "tabulated":
        _take(doc, "wind", ("kind", "s", "z", "cdf"))
        return TabulatedWind(tuple(map(float, doc["s"])), tuple(map(float, doc["z"])),
                             tuple(tuple(map(float, r)) for r in doc["cdf"]))
    raise ConfigError(f"unknown wind kind {kind!r}")


def _rt_from(doc):
    kind = doc.get("kind") if isinstance(doc, dict) else None
    if kind != "linear":
        raise ConfigError(f"unknown rt_price kind {kind!r}")
    _take(doc, "rt_price", ("kind", "intercept", "slope"), ("noise", "noise_scale"))
    return LinearRtPrice(_num(doc["intercept"], "rt_price.intercept"),
                         _num(doc["slope"], "rt_price.slope"),
                         doc.get("noise", "none"),
                         _num(doc.get("noise_scale", 0.0), "rt_price.noise_scale"))


def instance_from_dict(doc: dict) -> MarketInstance:
    _take(doc, "instance", ("load_l", "pi_da", "disutility", "info_state", "wind", "rt_price"))
    return MarketInstance(
        load_l=_num(doc["load_l"], "load_l"),
        pi_da=_num(doc["pi_da"], "pi_da"),
        disutility=_disutility_from(doc["disutility"]),
        info_state=_info_from(doc["info_state"]),
        wind=_wind_from(doc["wind"]),
        rt_price=_rt_from(doc["rt_price"]),
    )


def load_instance(path: str | Path) -> MarketInstance:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return instance_from_dict(doc)


def dump_instance(inst: MarketInstance, path: str | Path) -> None:
    Path(path).write_text(json.dumps(inst.to_dict(), indent=2) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# standing assumptions


@dataclass
class AssumptionCheck:
    name: str
    passed: bool
    detail: str = ""
    witness: tuple | None = None


@dataclass
class ValidationReport:
    checks: list[AssumptionCheck]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> AssumptionCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def lines(self) -> list[str]:
        out = []
        for c in self.checks:
            status = "ok" if c.passed else "violated"
            out.append(f"Assumption {c.name} {status}" + (f": {c.detail}" if c.detail else ""))
        return out


def validate_assumptions(inst: MarketInstance, grid_n: int = 50) -> ValidationReport:
    """Check the orderings, convexity and day-ahead discount on a grid."""
    if grid_n < 2:
        raise ValueError("grid_n must be at least 2")
    s = np.linspace(0.0, 1.0, grid_n)
    checks = []

    # 1(i): more wind in higher states, on z inside the common support
    ztop = float(np.min(inst.wind.top(s)))
    z = np.linspace(0.0, ztop, grid_n + 2)[1:-1]
    P = inst.wind.cdf(s[:, None], z[None, :])          # (s, z)
    bad = None
    for i in range(grid_n - 1):
        worse = np.nonzero(P[i + 1:, :] >= P[i, :][None, :])
        if worse[0].size:
            j, k = worse[0][0] + i + 1, worse[1][0]
            bad = (float(s[i]), float(s[j]), float(z[k]))
            break
    checks.append(AssumptionCheck(
        "1(i)", bad is None,
        "" if bad is None else f"P_s'(z) >= P_s(z) at (s, s', z) = {bad}", bad))

    # 1(ii): expected real-time price strictly decreasing in s
    m = inst.rt_price.mean(s)
    bad = None
    idx = np.nonzero(np.diff(m) >= 0)[0]
    if idx.size:
        bad = (float(s[idx[0]]), float(s[idx[0] + 1]))
    checks.append(AssumptionCheck(
        "1(ii)", bad is None,
        "" if bad is None else f"mean rt price not decreasing between s={bad[0]:.4g} and s'={bad[1]:.4g}",
        bad))

    # 2: strong convexity of the disutility on [0, l]
    y = np.linspace(0.0, inst.load_l, grid_n)
    d2 = np.broadcast_to(inst.disutility.d2(y), y.shape)
    bad_i = np.nonzero(~(d2 > 0))[0]
    checks.append(AssumptionCheck(
        "2", bad_i.size == 0,
        "" if bad_i.size == 0 else f"phi'' <= 0 at y={y[bad_i[0]]:.4g}",
        None if bad_i.size == 0 else (float(y[bad_i[0]]),)))

    # 3: day-ahead price below the expected marginal value of the first unit
    mean_val = inst.expect(lambda ss: inst.rt_price.mean(ss) * inst.wind.cdf(ss, inst.load_l))
    ok = inst.pi_da < mean_val
    checks.append(AssumptionCheck(
        "3", bool(ok),
        "" if ok else f"pi_da={inst.pi_da:.6g} >= E[rt mean * P_s(l)]={mean_val:.6g}",
        None if ok else (inst.pi_da, mean_val)))
    return ValidationReport(checks)
