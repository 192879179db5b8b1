from .fields import (
    FilterKernel,
    DensityField,
    heaviside_project,
    heaviside_derivative,
    simp_modulus,
    compute_fields,
)
from .objective import (
    compliance,
    element_energies,
    compliance_sensitivity,
    chain_to_raw,
    volume_gradient_raw,
)
from .pgd import project_box_mean, pgd_step, bb_step_size
from .mma import MmaState, mma_update
from .optimize import optimize, OptimizationResult, SolverAbort

__all__ = [
    "FilterKernel",
    "DensityField",
    "heaviside_project",
    "heaviside_derivative",
    "simp_modulus",
    "compute_fields",
    "compliance",
    "element_energies",
    "compliance_sensitivity",
    "chain_to_raw",
    "volume_gradient_raw",
    "project_box_mean",
    "pgd_step",
    "bb_step_size",
    "MmaState",
    "mma_update",
    "optimize",
    "OptimizationResult",
    "SolverAbort",
]
