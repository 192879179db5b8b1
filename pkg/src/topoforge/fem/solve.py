"""Equilibrium solve: multigrid-preconditioned conjugate gradients.

The linear system K(rho) U = F is solved on the free dofs with prescribed
displacements lifted out; the operator is never assembled on the fine grid.
Repeated solves with identical inputs are bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import StructuredMesh
from .multigrid import Hierarchy, SingularSystemError

__all__ = ["solve_equilibrium", "SolveReport", "SingularSystemError", "operator_apply"]


@dataclass(frozen=True)
class SolveReport:
    iterations: int
    relative_residual: float
    converged: bool
    n_levels: int

    @property
    def flag(self) -> str:
        return "converged" if self.converged else "maxiter"


def operator_apply(
    mesh: StructuredMesh, moduli: np.ndarray, nu: float, u: np.ndarray
) -> np.ndarray:
    """Matrix-free K @ u for the unconstrained operator (test hook)."""
    from .hex8 import hex8_stiffness

    hx, hy, hz = mesh.spacing
    k0 = hex8_stiffness(1.0, nu, hx, hy, hz)
    edofs = mesh.element_dofs
    fe = (u[edofs] @ k0) * np.asarray(moduli, float)[:, None]
    return np.bincount(edofs.ravel(), weights=fe.ravel(), minlength=mesh.n_dofs)


def solve_equilibrium(
    mesh: StructuredMesh,
    moduli: np.ndarray,
    nu: float,
    force: np.ndarray,
    fixed: np.ndarray,
    values: np.ndarray | None = None,
    tol: float = 1e-4,
    maxiter: int = 100,
    n_level: int = 4,
    warm_start: np.ndarray | None = None,
) -> tuple[np.ndarray, SolveReport]:
    """Solve K(moduli) U = F with Dirichlet data eliminated by reduction.

    Parameters
    ----------
    moduli : (n_elements,) element Young's moduli (already interpolated).
    force : (n_dofs,) global load vector.
    fixed : (n_dofs,) bool mask of prescribed dofs.
    values : prescribed displacement values (defaults to zero).
    tol : relative residual target, measured against the reduced rhs norm.
    maxiter : CG iteration cap; hitting it flags the report, no exception.
    n_level : requested multigrid depth, clamped to the coarsenable depth.
    warm_start : previous displacement field used as the initial iterate.

    Returns
    -------
    (U, SolveReport)
        U carries the prescribed values exactly at fixed dofs. On maxiter
        the best iterate seen (smallest residual) is returned.
    """
    if not np.any(fixed):
        raise SingularSystemError(
            "no Dirichlet constraints: all six rigid-body modes are "
            "unconstrained and the system is singular"
        )
    if values is None:
        values = np.zeros(mesh.n_dofs)

    hier = Hierarchy(mesh, nu, moduli, fixed, n_level)
    fine = hier.levels[0]
    free = fine.free

    u_pres = np.where(fixed, values, 0.0)
    b = force - fine.apply(u_pres)
    b[fixed] = 0.0
    ref = float(np.linalg.norm(b))
    if ref == 0.0:
        return u_pres, SolveReport(0, 0.0, True, hier.n_levels)

    x = np.zeros(mesh.n_dofs)
    if warm_start is not None:
        x = np.where(free, warm_start - u_pres, 0.0)

    r = b - fine.apply_constrained(x)
    best_x, best_norm = x.copy(), float(np.linalg.norm(r))
    if best_norm <= tol * ref:
        return u_pres + x, SolveReport(0, best_norm / ref, True, hier.n_levels)

    z = hier.precondition(r)
    p = z.copy()
    rz = float(r @ z)
    iterations = 0
    converged = False
    for k in range(1, maxiter + 1):
        ap = fine.apply_constrained(p)
        pap = float(p @ ap)
        if pap <= 0.0 or not np.isfinite(pap):
            raise SingularSystemError(
                "conjugate-gradient breakdown (non-positive curvature); "
                "boundary conditions likely leave a rigid-body mode free"
            )
        alpha = rz / pap
        x = x + alpha * p
        r = r - alpha * ap
        iterations = k
        rnorm = float(np.linalg.norm(r))
        if rnorm < best_norm:
            best_norm, best_x = rnorm, x.copy()
        if rnorm <= tol * ref:
            converged = True
            break
        z = hier.precondition(r)
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new

    out = x if converged else best_x
    return u_pres + out, SolveReport(
        iterations, (rnorm if converged else best_norm) / ref, converged, hier.n_levels
    )
