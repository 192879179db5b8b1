"""Projected gradient descent pieces: feasible-set projection and the
Barzilai-Borwein step size.

The feasible set is the box [0, 1]^n intersected with a mean-density
budget. Euclidean projection onto that set is a uniform downward shift of
the box-clamped field; the shift is found by bisection because the clamped
mean is monotone non-increasing in it. The same bisection also serves a
generalized budget measured through the filter/projection chain (any
monotone measure of the clamped field).
"""

from __future__ import annotations

from typing import Callable

import numpy as np

_MEAN_TOL = 1e-10
_MAX_BISECT = 200


def project_box_mean(
    y: np.ndarray,
    budget: float,
    measure: Callable[[np.ndarray], float] | None = None,
    tol: float = _MEAN_TOL,
) -> np.ndarray:
    """Project onto {0 <= x <= 1, measure(x) <= budget}.

    ``measure`` defaults to the arithmetic mean and must be continuous and
    monotone non-decreasing in every component. When the clamped input
    already satisfies the budget (including exactly), the shift is zero and
    the clamp alone is returned.
    """
    y = np.asarray(y, float)
    if measure is None:
        measure = lambda x: float(x.mean())
    clamped = np.clip(y, 0.0, 1.0)
    if measure(clamped) <= budget:
        return clamped

    lo = 0.0
    hi = float(y.max())  # shift by max(y) clamps everything to zero
    x = clamped
    for _ in range(_MAX_BISECT):
        mid = 0.5 * (lo + hi)
        x = np.clip(y - mid, 0.0, 1.0)
        m = measure(x)
        if abs(m - budget) <= tol:
            return x
        if m > budget:
            lo = mid
        else:
            hi = mid
    return np.clip(y - hi, 0.0, 1.0)


def pgd_step(
    x: np.ndarray, grad: np.ndarray, step_size: float, volfrac: float
) -> np.ndarray:
    """One projected-gradient update on the raw design variables."""
    if step_size <= 0:
        raise ValueError("step_size must be positive")
    return project_box_mean(np.asarray(x, float) - step_size * np.asarray(grad, float),
                            volfrac)


def bb_step_size(
    x: np.ndarray,
    x_prev: np.ndarray | None,
    grad: np.ndarray,
    grad_prev: np.ndarray | None,
    fallback_move: float = 0.2,
) -> float:
    """Barzilai-Borwein step, scale-invariant under gradient rescaling.

    Without usable history (first iteration, or a non-positive curvature
    denominator) the step is the one moving the largest component of the
    gradient by ``fallback_move`` in density units, which keeps the whole
    update invariant when the objective is multiplied by a constant.
    """
    if x_prev is not None and grad_prev is not None:
        s = x - x_prev
        yv = grad - grad_prev
        sy = float(s @ yv)
        if np.isfinite(sy) and sy > 1e-300:
            return float(s @ s) / sy
    gmax = float(np.abs(grad).max())
    if gmax == 0.0 or not np.isfinite(gmax):
        return 0.0
    return fallback_move / gmax
