"""Compliance-minimization driver.

Runs the three-field loop (filter, optional projection, interpolate, solve,
sensitivity, update) until the relative compliance change drops below
``fun_tol``, the max density change drops below ``change_tol`` (when that
stop is enabled, i.e. nonzero), or the iteration budget runs out.

The volume budget is enforced on the physical (projected) field: the PGD
branch projects each trial point onto the box intersected with the
physical-volume halfspace, and the MMA branch linearizes that same
constraint and re-projects afterwards if the rational approximation left
the iterate slightly infeasible. Either way every post-update iterate
satisfies mean(physical) <= volfrac + 1e-6.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..fem import assemble_force, dirichlet_data, solve_equilibrium, SingularSystemError
from ..problem import ProblemSpec, build_bcs, build_loads, build_mesh
from .fields import DensityField, FilterKernel, compute_fields, simp_modulus
from .mma import MmaState, mma_update
from .objective import (
    chain_to_raw,
    compliance,
    compliance_sensitivity,
    element_energies,
    volume_gradient_raw,
)
from .pgd import bb_step_size, project_box_mean


@dataclass(frozen=True)
class OptimizationResult:
    """Final iterate plus per-iteration histories.

    ``compliance_history`` and ``volume_history`` have one entry per
    completed update; the compliance of the starting design is kept
    separately in ``initial_compliance``.
    """

    raw: np.ndarray
    field: DensityField
    initial_compliance: float
    compliance_history: tuple[float, ...]
    volume_history: tuple[float, ...]
    solve_iterations: tuple[int, ...]
    termination: str

    @property
    def n_iterations(self) -> int:
        return len(self.compliance_history)

    @property
    def final_compliance(self) -> float:
        if self.compliance_history:
            return self.compliance_history[-1]
        return self.initial_compliance


class SolverAbort(RuntimeError):
    """Equilibrium solve failed hard mid-run; partial history attached."""

    def __init__(self, message: str, partial: OptimizationResult):
        super().__init__(message)
        self.partial = partial


def optimize(problem: ProblemSpec) -> OptimizationResult:
    """Minimize compliance under the problem's volume budget."""
    mesh = build_mesh(problem)
    mat = problem.material
    sp = problem.simp
    opt = problem.optimizer
    sol = problem.solver

    fixed, values = dirichlet_data(mesh, build_bcs(problem))
    force = assemble_force(mesh, build_loads(problem))
    kernel = FilterKernel(mesh, sp.rmin)

    def fields_of(raw: np.ndarray) -> DensityField:
        return compute_fields(raw, kernel, sp.heaviside, sp.beta, sp.eta)

    def physical_mean(raw: np.ndarray) -> float:
        return float(fields_of(raw).physical.mean())

    def solve_at(field: DensityField, warm: np.ndarray | None):
        moduli = simp_modulus(field.physical, mat.e0, mat.emin, sp.penalty)
        return solve_equilibrium(
            mesh,
            moduli,
            mat.nu,
            force,
            fixed,
            values,
            tol=sol.tol,
            maxiter=sol.maxiter,
            n_level=sol.n_level,
            warm_start=warm,
        )

    x = np.full(mesh.n_elements, opt.init if opt.init is not None else sp.volfrac)
    field = fields_of(x)

    c_hist: list[float] = []
    v_hist: list[float] = []
    it_hist: list[int] = []

    def partial_result(termination: str) -> OptimizationResult:
        return OptimizationResult(
            raw=x,
            field=field,
            initial_compliance=c_initial,
            compliance_history=tuple(c_hist),
            volume_history=tuple(v_hist),
            solve_iterations=tuple(it_hist),
            termination=termination,
        )

    c_initial = np.nan
    try:
        u, _ = solve_at(field, None)
    except SingularSystemError as err:
        raise SolverAbort(f"initial solve failed: {err}", partial_result("aborted")) from err
    c_initial = compliance(force, u)
    c_prev = c_initial

    x_prev: np.ndarray | None = None
    g_prev: np.ndarray | None = None
    mma_state = MmaState()
    termination = "max_iters"

    for k in range(1, opt.max_iters + 1):
        energies = element_energies(mesh, mat.nu, u)
        d_phys = compliance_sensitivity(field.physical, energies, mat.e0, mat.emin, sp.penalty)
        grad = chain_to_raw(d_phys, field, kernel, sp.heaviside, sp.beta, sp.eta)

        if opt.kind == "pgd":
            step = bb_step_size(x, x_prev, grad, g_prev)
            x_new = project_box_mean(x - step * grad, sp.volfrac, measure=physical_mean)
        else:
            cons_val = float(field.physical.mean()) - sp.volfrac
            cons_grad = volume_gradient_raw(field, kernel, sp.heaviside, sp.beta, sp.eta)
            x_new, mma_state = mma_update(x, grad, cons_val, cons_grad, mma_state)
            x_new = project_box_mean(x_new, sp.volfrac, measure=physical_mean)

        x_prev, g_prev = x, grad
        x = x_new
        field = fields_of(x)
        try:
            u, report = solve_at(field, u)
        except SingularSystemError as err:
            raise SolverAbort(f"solve failed at iteration {k}: {err}", partial_result("aborted")) from err

        c = compliance(force, u)
        c_hist.append(c)
        v_hist.append(float(field.physical.mean()))
        it_hist.append(report.iterations)

        if abs(c - c_prev) <= opt.fun_tol * abs(c_prev):
            termination = "fun_tol"
            break
        if opt.change_tol > 0.0 and float(np.max(np.abs(x - x_prev))) <= opt.change_tol:
            termination = "change_tol"
            break
        c_prev = c

    return partial_result(termination)
