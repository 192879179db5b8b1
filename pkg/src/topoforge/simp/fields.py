"""Three-field density scheme: raw design, filtered, projected.

The density filter is the linear "cone" kernel over element centroids with
weights w_ij = max(0, r_min - d_ij), where d_ij is the centroid distance in
element-index space (one unit per element along each axis), rows normalized
to sum to one. Because the unnormalized kernel is symmetric, the transpose
filter needed by the chain rule is a plain convolution of the row-scaled
field.

The optional smoothed Heaviside projection is

    xbar = [tanh(beta*eta) + tanh(beta*(xt - eta))]
         / [tanh(beta*eta) + tanh(beta*(1 - eta))]

which maps 0 -> 0 and 1 -> 1 and sharpens toward a 0/1 indicator as beta
grows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ..fem.mesh import StructuredMesh


class FilterKernel:
    """Precomputed cone-filter weights for one mesh and radius."""

    def __init__(self, mesh: StructuredMesh, rmin: float):
        if rmin <= 0:
            raise ValueError("rmin must be positive")
        self.mesh = mesh
        self.rmin = float(rmin)
        reach = int(np.ceil(rmin)) - 1
        offs = np.arange(-reach, reach + 1)
        dx, dy, dz = np.meshgrid(offs, offs, offs, indexing="ij")
        dist = np.sqrt(dx**2 + dy**2 + dz**2)
        self._kernel = np.maximum(0.0, rmin - dist)
        ones = np.ones(mesh.shape)
        self._rowsum = ndimage.correlate(ones, self._kernel, mode="constant")

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Row-normalized filter: preserves constants exactly."""
        grid = self.mesh.element_grid(np.asarray(x, float))
        out = ndimage.correlate(grid, self._kernel, mode="constant") / self._rowsum
        return self.mesh.flatten_grid(out)

    def apply_transpose(self, v: np.ndarray) -> np.ndarray:
        """Adjoint of :meth:`apply`, used to chain sensitivities back."""
        grid = self.mesh.element_grid(np.asarray(v, float)) / self._rowsum
        out = ndimage.correlate(grid, self._kernel, mode="constant")
        return self.mesh.flatten_grid(out)


def heaviside_project(xt: np.ndarray, beta: float, eta: float = 0.5) -> np.ndarray:
    if beta <= 0:
        raise ValueError("beta must be positive")
    num = np.tanh(beta * eta) + np.tanh(beta * (np.asarray(xt, float) - eta))
    den = np.tanh(beta * eta) + np.tanh(beta * (1.0 - eta))
    return num / den


def heaviside_derivative(xt: np.ndarray, beta: float, eta: float = 0.5) -> np.ndarray:
    den = np.tanh(beta * eta) + np.tanh(beta * (1.0 - eta))
    t = np.tanh(beta * (np.asarray(xt, float) - eta))
    return beta * (1.0 - t * t) / den


def simp_modulus(x_phys: np.ndarray, e0: float, emin: float, penalty: float):
    """Power-law interpolation emin + x^p (e0 - emin); strictly positive."""
    return emin + np.asarray(x_phys, float) ** penalty * (e0 - emin)


@dataclass(frozen=True)
class DensityField:
    """Raw design variables with their filtered and projected companions."""

    raw: np.ndarray
    filtered: np.ndarray
    projected: np.ndarray

    def __post_init__(self):
        n = self.raw.shape[0]
        if self.filtered.shape[0] != n or self.projected.shape[0] != n:
            raise ValueError("field lengths disagree")

    @property
    def physical(self) -> np.ndarray:
        """The field entering stiffness interpolation and volume checks."""
        return self.projected


def compute_fields(
    raw: np.ndarray,
    kernel: FilterKernel,
    heaviside: bool,
    beta: float = 8.0,
    eta: float = 0.5,
) -> DensityField:
    """Run the raw design through filter and (optional) projection."""
    raw = np.asarray(raw, float)
    filtered = kernel.apply(raw)
    # roundoff guard: filtering of in-range data stays in range mathematically
    filtered = np.clip(filtered, 0.0, 1.0)
    projected = heaviside_project(filtered, beta, eta) if heaviside else filtered
    return DensityField(raw, filtered, projected)
