"""Brute-force references that share no first-order conditions with the solvers."""

import numpy as np

from dr_options.planner import _zoom_min


def midpoint_states(inst, ns=200):
    s = (np.arange(ns) + 0.5) / ns
    w = inst.info_state.pdf(s)
    return s, w / w.sum()


def lse_exercise_grid(inst, q_eff, x, pi_sp, s, ny=100):
    """Per-state exercise chosen by grid search over [0, x]."""
    mean = inst.rt_price.mean(s)
    z = inst.load_l - q_eff

    def stage(y):
        return pi_sp * y + mean[:, None] * inst.wind.shortfall(s[:, None], np.maximum(z - y, 0.0))

    if x == 0:
        return np.zeros_like(s)
    y, _ = _zoom_min(stage, np.zeros_like(s), np.full_like(s, x), ny)
    return y


def redesigned_grid_search(inst, l_prime, pi_sp, nx=10_000, ny=100, ns=200):
    """Minimize the system cost over an nx-point option-volume grid.

    For each x the LSE's exercise is found by grid search state by state, the
    system cost counts disutility and real-time purchases only.
    """
    s, w = midpoint_states(inst, ns)
    mean = inst.rt_price.mean(s)
    best = (np.inf, None)
    for x in np.linspace(0.0, l_prime, nx):
        y = lse_exercise_grid(inst, l_prime - x, x, pi_sp, s, ny)
        z = inst.load_l - l_prime + x
        c = inst.disutility.phi(y) + mean * inst.wind.shortfall(s, np.maximum(z - y, 0.0))
        total = inst.pi_da * (l_prime - x) + float(np.dot(w, c))
        if total < best[0]:
            best = (total, x)
    return best[1], best[0]


def central_diff(f, x, h):
    return (f(x + h) - f(x - h)) / (2.0 * h)
