"""Method of moving asymptotes, specialized to one inequality constraint.

Svanberg's separable rational approximation with the usual defaults:
asymptotes start at half the variable range, contract by 0.7 on
oscillation and relax by 1.2 on monotone progress, and the per-iteration
move limit is 0.2 of the range. The subproblem is solved in its dual: the
primal minimizer has a closed form for fixed multiplier, and the single
multiplier is located by bisection on the approximated constraint.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_ASY_INIT = 0.5
_ASY_DECR = 0.7
_ASY_INCR = 1.2
_MOVE = 0.2
_ALBEFA = 0.1
_RAA0 = 1e-5
_XMIN, _XMAX = 0.0, 1.0
_DUAL_BISECTIONS = 120


@dataclass
class MmaState:
    """Carries the iterate history the asymptote update needs."""

    x_prev: np.ndarray | None = None
    x_prev2: np.ndarray | None = None
    low: np.ndarray | None = None
    upp: np.ndarray | None = None
    iteration: int = 0


def _asymptotes(x, state: MmaState):
    rng = _XMAX - _XMIN
    if state.iteration < 2 or state.x_prev is None or state.x_prev2 is None:
        low = x - _ASY_INIT * rng
        upp = x + _ASY_INIT * rng
    else:
        trend = (x - state.x_prev) * (state.x_prev - state.x_prev2)
        gamma = np.where(trend > 0, _ASY_INCR, np.where(trend < 0, _ASY_DECR, 1.0))
        low = x - gamma * (state.x_prev - state.low)
        upp = x + gamma * (state.upp - state.x_prev)
        low = np.clip(low, x - 10.0 * rng, x - 0.01 * rng)
        upp = np.clip(upp, x + 0.01 * rng, x + 10.0 * rng)
    return low, upp


def _primal(low, upp, alpha, beta, pt, qt):
    """Minimizer of sum pt/(upp-x) + qt/(x-low) over [alpha, beta]."""
    sp = np.sqrt(pt)
    sq = np.sqrt(qt)
    x = (low * sp + upp * sq) / (sp + sq)
    return np.clip(x, alpha, beta)


def mma_update(
    x: np.ndarray,
    obj_grad: np.ndarray,
    constraint_value: float,
    constraint_grad: np.ndarray,
    state: MmaState,
) -> tuple[np.ndarray, MmaState]:
    """One MMA iterate for min f(x) s.t. g(x) <= 0, 0 <= x <= 1.

    Parameters
    ----------
    constraint_value : float
        g evaluated at ``x`` (e.g. mean physical density minus budget).
    constraint_grad : ndarray
        dg/dx at ``x``.

    Returns
    -------
    (x_new, state_new)
    """
    x = np.asarray(x, float)
    df = np.asarray(obj_grad, float)
    dg = np.asarray(constraint_grad, float)
    low, upp = _asymptotes(x, state)
    rng = _XMAX - _XMIN

    alpha = np.maximum.reduce([np.full_like(x, _XMIN), low + _ALBEFA * (x - low),
                               x - _MOVE * rng])
    beta = np.minimum.reduce([np.full_like(x, _XMAX), upp - _ALBEFA * (upp - x),
                              x + _MOVE * rng])

    ux = upp - x
    xl = x - low
    p0 = ux**2 * (1.001 * np.maximum(df, 0.0) + 0.001 * np.maximum(-df, 0.0)
                  + _RAA0 / rng)
    q0 = xl**2 * (0.001 * np.maximum(df, 0.0) + 1.001 * np.maximum(-df, 0.0)
                  + _RAA0 / rng)
    pc = ux**2 * np.maximum(dg, 0.0)
    qc = xl**2 * np.maximum(-dg, 0.0)
    # offset so the approximated constraint matches g at the expansion point
    b = float((pc / ux + qc / xl).sum()) - constraint_value

    def residual(lam: float) -> float:
        xs = _primal(low, upp, alpha, beta, p0 + lam * pc, q0 + lam * qc)
        return float((pc / (upp - xs) + qc / (xs - low)).sum()) - b

    if residual(0.0) <= 0.0:
        lam = 0.0
    else:
        hi = 1.0
        while residual(hi) > 0.0 and hi < 1e12:
            hi *= 2.0
        if residual(hi) > 0.0:
            raise ValueError(
                "MMA subproblem infeasible: constraint cannot be satisfied "
                "within the box and move limits"
            )
        lo = 0.0
        for _ in range(_DUAL_BISECTIONS):
            lam = 0.5 * (lo + hi)
            if residual(lam) > 0.0:
                lo = lam
            else:
                hi = lam
        lam = hi

    x_new = _primal(low, upp, alpha, beta, p0 + lam * pc, q0 + lam * qc)
    new_state = MmaState(
        x_prev=x.copy(),
        x_prev2=None if state.x_prev is None else state.x_prev.copy(),
        low=low,
        upp=upp,
        iteration=state.iteration + 1,
    )
    return x_new, new_state
