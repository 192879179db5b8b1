"""Compliance objective and its design sensitivities.

Compliance c = F . U is self-adjoint: the adjoint vector equals the
displacement field, so the derivative with respect to the physical density
of element i is

    dc/dx_i = -p * x_i^(p-1) * (e0 - emin) * u_i^T k0 u_i  <=  0

with k0 the unit-modulus element stiffness. Chaining back to the raw
design variables applies the Heaviside slope (when projection is enabled)
followed by the transpose filter.
"""

from __future__ import annotations

import numpy as np

from ..fem.hex8 import hex8_stiffness
from ..fem.mesh import StructuredMesh
from .fields import DensityField, FilterKernel, heaviside_derivative


def compliance(force: np.ndarray, u: np.ndarray) -> float:
    return float(force @ u)


def element_energies(mesh: StructuredMesh, nu: float, u: np.ndarray) -> np.ndarray:
    """Unit-modulus strain energies u_e^T k0 u_e, one per element."""
    hx, hy, hz = mesh.spacing
    k0 = hex8_stiffness(1.0, nu, hx, hy, hz)
    ue = u[mesh.element_dofs]
    return np.einsum("ei,ij,ej->e", ue, k0, ue)


def compliance_sensitivity(
    x_phys: np.ndarray,
    energies: np.ndarray,
    e0: float,
    emin: float,
    penalty: float,
) -> np.ndarray:
    """dc/d(physical density); nonpositive everywhere."""
    x = np.asarray(x_phys, float)
    return -penalty * x ** (penalty - 1.0) * (e0 - emin) * energies


def chain_to_raw(
    d_phys: np.ndarray,
    field: DensityField,
    kernel: FilterKernel,
    heaviside: bool,
    beta: float = 8.0,
    eta: float = 0.5,
) -> np.ndarray:
    """Pull a physical-density gradient back to the raw design variables."""
    v = np.asarray(d_phys, float)
    if heaviside:
        v = v * heaviside_derivative(field.filtered, beta, eta)
    return kernel.apply_transpose(v)


def volume_gradient_raw(
    field: DensityField,
    kernel: FilterKernel,
    heaviside: bool,
    beta: float = 8.0,
    eta: float = 0.5,
) -> np.ndarray:
    """Gradient of mean(physical density) with respect to the raw design."""
    n = field.raw.shape[0]
    return chain_to_raw(np.full(n, 1.0 / n), field, kernel, heaviside, beta, eta)
