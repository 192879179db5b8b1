"""Geometric multigrid hierarchy for the structured elasticity operator.

The fine-level operator is applied matrix-free (gather, per-element 24x24
product, scatter via bincount). Coarser levels rediscretize with
block-averaged element moduli on meshes with doubled spacing; transfers are
trilinear interpolation and its transpose. Only the coarsest level is
assembled, reduced to free dofs, and factorized.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .hex8 import hex8_stiffness
from .mesh import StructuredMesh

log = logging.getLogger(__name__)

_JACOBI_DAMPING = 0.6
_SMOOTH_SWEEPS = 2


class SingularSystemError(RuntimeError):
    """The constrained system is singular (rigid-body modes remain)."""


@dataclass
class _Level:
    mesh: StructuredMesh
    k0: np.ndarray
    moduli: np.ndarray
    fixed: np.ndarray
    free: np.ndarray
    diag: np.ndarray
    lu: object | None = None

    def apply(self, u: np.ndarray) -> np.ndarray:
        """Matrix-free K @ u on the full dof vector."""
        edofs = self.mesh.element_dofs
        ue = u[edofs]
        fe = (ue @ self.k0) * self.moduli[:, None]
        return np.bincount(
            edofs.ravel(), weights=fe.ravel(), minlength=self.mesh.n_dofs
        )

    def apply_constrained(self, u: np.ndarray) -> np.ndarray:
        v = np.where(self.free, u, 0.0)
        out = self.apply(v)
        out[self.fixed] = 0.0
        return out


def _level_diag(mesh: StructuredMesh, k0: np.ndarray, moduli, fixed) -> np.ndarray:
    edofs = mesh.element_dofs
    contrib = moduli[:, None] * np.diag(k0)[None, :]
    diag = np.bincount(edofs.ravel(), weights=contrib.ravel(), minlength=mesh.n_dofs)
    diag[fixed] = 1.0
    diag[diag == 0.0] = 1.0
    return diag


def _coarsen_moduli(mesh: StructuredMesh, moduli: np.ndarray) -> np.ndarray:
    grid = mesh.element_grid(moduli)
    nx, ny, nz = mesh.nelx // 2, mesh.nely // 2, mesh.nelz // 2
    coarse = grid.reshape(nx, 2, ny, 2, nz, 2).mean(axis=(1, 3, 5))
    coarse_mesh = StructuredMesh(nx, ny, nz, mesh.lx, mesh.ly, mesh.lz)
    return coarse_mesh.flatten_grid(coarse)


def _node_grid(mesh: StructuredMesh, u: np.ndarray) -> np.ndarray:
    return u.reshape(mesh.nelz + 1, mesh.nely + 1, mesh.nelx + 1, 3)


def _prolong_axis(a: np.ndarray, axis: int) -> np.ndarray:
    a = np.moveaxis(a, axis, 0)
    n_fine = 2 * (a.shape[0] - 1) + 1
    out = np.zeros((n_fine,) + a.shape[1:])
    out[0::2] = a
    out[1::2] = 0.5 * (a[:-1] + a[1:])
    return np.moveaxis(out, 0, axis)


def _restrict_axis(a: np.ndarray, axis: int) -> np.ndarray:
    a = np.moveaxis(a, axis, 0)
    out = a[0::2].copy()
    odd = a[1::2]
    out[:-1] += 0.5 * odd
    out[1:] += 0.5 * odd
    return np.moveaxis(out, 0, axis)


def _can_coarsen(mesh: StructuredMesh) -> bool:
    return all(n % 2 == 0 and n >= 4 for n in mesh.shape)


class Hierarchy:
    """V-cycle preconditioner over a nested sequence of structured grids."""

    def __init__(
        self,
        mesh: StructuredMesh,
        nu: float,
        moduli: np.ndarray,
        fixed: np.ndarray,
        n_level: int,
    ):
        self.levels: list[_Level] = []
        cur_mesh, cur_mod, cur_fixed = mesh, np.asarray(moduli, float), fixed
        while True:
            hx, hy, hz = cur_mesh.spacing
            k0 = hex8_stiffness(1.0, nu, hx, hy, hz)
            free = ~cur_fixed
            diag = _level_diag(cur_mesh, k0, cur_mod, cur_fixed)
            self.levels.append(
                _Level(cur_mesh, k0, cur_mod, cur_fixed, free, diag)
            )
            if len(self.levels) >= n_level or not _can_coarsen(cur_mesh):
                break
            cur_mod = _coarsen_moduli(cur_mesh, cur_mod)
            cur_mesh = StructuredMesh(
                cur_mesh.nelx // 2,
                cur_mesh.nely // 2,
                cur_mesh.nelz // 2,
                cur_mesh.lx,
                cur_mesh.ly,
                cur_mesh.lz,
            )
            grid = _node_grid_mask(self.levels[-1].mesh, cur_fixed)
            cur_fixed = grid[::2, ::2, ::2, :].reshape(-1)
        if len(self.levels) < n_level:
            log.info(
                "multigrid depth clamped to %d levels (requested %d); coarsest "
                "grid %s keeps >= 2 elements per refinable axis",
                len(self.levels),
                n_level,
                self.levels[-1].mesh.shape,
            )
        self._factorize_coarsest()

    @property
    def n_levels(self) -> int:
        return len(self.levels)

    def _factorize_coarsest(self):
        level = self.levels[-1]
        mesh, k0 = level.mesh, level.k0
        edofs = mesh.element_dofs
        rows = np.repeat(edofs, 24, axis=1).ravel()
        cols = np.tile(edofs, (1, 24)).ravel()
        vals = (level.moduli[:, None, None] * k0[None, :, :]).ravel()
        k = sp.coo_matrix((vals, (rows, cols)), shape=(mesh.n_dofs, mesh.n_dofs))
        k = k.tocsr()
        free_idx = np.flatnonzero(level.free)
        kff = k[free_idx][:, free_idx].tocsc()
        try:
            level.lu = spla.splu(kff)
        except RuntimeError as exc:  # exactly singular factor
            raise SingularSystemError(
                "coarse-grid factorization failed; the boundary conditions "
                f"leave rigid-body modes unconstrained ({exc})"
            ) from exc
        self._coarse_free = free_idx

    def _coarse_solve(self, b: np.ndarray) -> np.ndarray:
        level = self.levels[-1]
        x = np.zeros_like(b)
        x[self._coarse_free] = level.lu.solve(b[self._coarse_free])
        return x

    def _smooth(self, level: _Level, x: np.ndarray, b: np.ndarray) -> np.ndarray:
        for _ in range(_SMOOTH_SWEEPS):
            r = b - level.apply_constrained(x)
            x = x + _JACOBI_DAMPING * np.where(level.free, r / level.diag, 0.0)
        return x

    def _transfer_down(self, fine: _Level, coarse: _Level, r: np.ndarray):
        grid = _node_grid(fine.mesh, r)
        for axis in range(3):
            grid = _restrict_axis(grid, axis)
        rc = grid.reshape(-1)
        rc[coarse.fixed] = 0.0
        return rc

    def _transfer_up(self, fine: _Level, coarse: _Level, xc: np.ndarray) -> np.ndarray:
        grid = _node_grid(coarse.mesh, xc)
        for axis in range(3):
            grid = _prolong_axis(grid, axis)
        xf = grid.reshape(-1)
        xf[fine.fixed] = 0.0
        return xf

    def _vcycle(self, depth: int, b: np.ndarray) -> np.ndarray:
        if depth == len(self.levels) - 1:
            return self._coarse_solve(b)
        level = self.levels[depth]
        x = self._smooth(level, np.zeros_like(b), b)
        r = b - level.apply_constrained(x)
        rc = self._transfer_down(level, self.levels[depth + 1], r)
        xc = self._vcycle(depth + 1, rc)
        x = x + self._transfer_up(level, self.levels[depth + 1], xc)
        return self._smooth(level, x, b)

    def precondition(self, r: np.ndarray) -> np.ndarray:
        return self._vcycle(0, r)


def _node_grid_mask(mesh: StructuredMesh, mask: np.ndarray) -> np.ndarray:
    return mask.reshape(mesh.nelz + 1, mesh.nely + 1, mesh.nelx + 1, 3)
