"""Numerical kernel: quadrature, bracketed roots, scalar minimization, thresholds.

Every expectation in the package is evaluated with deterministic rules from
this module so that solver output is reproducible bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import integrate as _integrate
from scipy import optimize as _optimize

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
INV_PHI_SQ = (3.0 - math.sqrt(5.0)) / 2.0


class NumericsError(RuntimeError):
    """Base class for failures of the numerical kernel."""


class IntegrationError(NumericsError):
    def __init__(self, message: str, estimate: float, abserr: float):
        super().__init__(f"{message} (best estimate {estimate!r} +/- {abserr:.3g})")
        self.estimate = estimate
        self.abserr = abserr


class BracketError(NumericsError, ValueError):
    """The supplied interval does not bracket a sign change."""


class NaNError(NumericsError, FloatingPointError):
    """An objective returned NaN."""


@dataclass(frozen=True)
class Tolerances:
    quad_rel: float = 1e-8
    root_abs: float = 1e-10
    min_abs: float = 1e-9
    max_iter: int = 200

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not v > 0:
                raise ValueError(f"tolerance {f.name} must be positive, got {v!r}")
        if self.max_iter < 10:
            raise ValueError("max_iter must be at least 10")

    def updated(self, **overrides) -> "Tolerances":
        known = {f.name: f.type for f in fields(self)}
        clean = {}
        for k, v in overrides.items():
            if k not in known:
                raise ValueError(f"unknown tolerance {k!r}")
            clean[k] = int(v) if k == "max_iter" else float(v)
        return replace(self, **clean)


DEFAULT_TOL = Tolerances()


def integrate(f: Callable[[float], float], a: float, b: float,
              tol: Tolerances = DEFAULT_TOL, points: Sequence[float] | None = None) -> float:
    """Adaptive Gauss-Kronrod estimate of the integral of ``f`` over [a, b]."""
    if a > b:
        raise ValueError(f"integrate needs a <= b, got [{a}, {b}]")
    if a == b:
        return 0.0
    pts = None
    if points:
        pts = sorted(p for p in points if a < p < b) or None
    val, err, info, *rest = _integrate.quad(
        f, a, b, epsabs=0.0, epsrel=max(tol.quad_rel, 1.2e-14), limit=tol.max_iter,
        points=pts, full_output=1)
    if math.isnan(val):
        raise NaNError("integrand produced NaN")
    if rest and not (err <= max(tol.quad_rel * abs(val), 1e-14)):
        raise IntegrationError(f"quadrature did not converge: {rest[0]}", val, err)
    return float(val)


def find_root(f: Callable[[float], float], a: float, b: float,
              tol: Tolerances = DEFAULT_TOL) -> float:
    """Brent's method on a bracketing interval; exact endpoint roots are returned as is."""
    fa, fb = f(a), f(b)
    if math.isnan(fa) or math.isnan(fb):
        raise NaNError(f"f is NaN at the bracket ends ({fa}, {fb})")
    if fa == 0.0:
        return float(a)
    if fb == 0.0:
        return float(b)
    if fa * fb > 0:
        raise BracketError(f"no sign change on [{a}, {b}]: f(a)={fa:.6g}, f(b)={fb:.6g}")

    def checked(x):
        v = f(x)
        if math.isnan(v):
            raise NaNError(f"f is NaN at {x!r}")
        return v

    return float(_optimize.brentq(checked, a, b, xtol=tol.root_abs, rtol=4 * np.finfo(float).eps,
                                  maxiter=tol.max_iter))


def minimize_scalar(f: Callable[[float], float], a: float, b: float,
                    tol: Tolerances = DEFAULT_TOL) -> tuple[float, float]:
    """Golden-section search on [a, b] followed by an endpoint comparison.

    Endpoints win ties within a relative 1e-12 of the interior value so that
    boundary minima are reported exactly at the boundary.
    """
    if a > b:
        raise ValueError(f"minimize_scalar needs a <= b, got [{a}, {b}]")
    fa, fb = f(a), f(b)
    if a == b:
        return float(a), float(fa)
    lo, hi = a, b
    h = hi - lo
    c, d = lo + INV_PHI_SQ * h, lo + INV_PHI * h
    fc, fd = f(c), f(d)
    n = 0
    while h > tol.min_abs and n < 4 * tol.max_iter:
        if math.isnan(fc) or math.isnan(fd):
            raise NaNError("objective produced NaN during golden-section search")
        # ties keep the left part so flat right tails do not pull the search away
        if fc <= fd:
            hi, d, fd = d, c, fc
            h = hi - lo
            c = lo + INV_PHI_SQ * h
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            h = hi - lo
            d = lo + INV_PHI * h
            fd = f(d)
        n += 1
    x, fx = (c, fc) if fc < fd else (d, fd)
    slack = 1e-12 * max(1.0, abs(fx))
    if fa <= fx + slack and fa <= fb:
        return float(a), float(fa)
    if fb <= fx + slack:
        return float(b), float(fb)
    return float(x), float(fx)


def monotone_threshold(g: Callable[[float], float], a: float, b: float,
                       tol: Tolerances = DEFAULT_TOL) -> float:
    """Point where ``g`` stops being positive, for ``g`` crossing zero at most once downward.

    Returns ``a`` if ``g(a) <= 0`` already and ``b`` if ``g`` stays positive
    on the whole interval.
    """
    ga = g(a)
    if math.isnan(ga):
        raise NaNError("threshold function is NaN at the left end")
    if ga <= 0:
        return float(a)
    gb = g(b)
    if gb > 0:
        return float(b)
    return find_root(g, a, b, tol)


# ---------------------------------------------------------------------------
# fixed rules used for all expectations over the information state


@lru_cache(maxsize=None)
def _gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def composite_rule(a: float, b: float, breaks: Iterable[float] = (),
                   n_panels: int = 8, n_nodes: int = 24) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes and weights on [a, b].

    The interval is split into ``n_panels`` equal panels and additionally at
    every break inside (a, b); kinks of the integrand should be passed as
    breaks so each panel sees a smooth function.
    """
    edges = set(np.linspace(a, b, n_panels + 1).tolist())
    edges.update(float(t) for t in breaks if a < t < b)
    edges = np.array(sorted(edges))
    # drop slivers that only add round-off
    keep = np.concatenate(([True], np.diff(edges) > 1e-14))
    edges = edges[keep]
    edges[-1] = b
    gx, gw = _gauss_legendre(n_nodes)
    lo, hi = edges[:-1, None], edges[1:, None]
    half = 0.5 * (hi - lo)
    nodes = (lo + half * (gx + 1.0)).ravel()
    weights = (half * gw).ravel()
    return nodes, weights


def bisect_vec(f: Callable[[np.ndarray], np.ndarray], lo: np.ndarray, hi: np.ndarray,
               iters: int = 64) -> np.ndarray:
    """Elementwise bisection for ``f`` increasing in its argument with f(lo) <= 0 <= f(hi)."""
    lo = np.array(lo, dtype=float, copy=True)
    hi = np.array(hi, dtype=float, copy=True)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        pos = f(mid) > 0
        hi = np.where(pos, mid, hi)
        lo = np.where(pos, lo, mid)
        if np.all(hi - lo <= 4e-16 * np.maximum(1.0, np.abs(hi))):
            break
    return 0.5 * (lo + hi)
