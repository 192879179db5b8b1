"""Stiffness matrix of the 8-node trilinear hexahedron.

Isotropic linear elasticity, integrated with 2x2x2 Gauss quadrature. For a
rectangular element the Jacobian is constant and diagonal, so the element
matrix is exact for the trilinear ansatz.
"""

from __future__ import annotations

import numpy as np

# Reference-cube corner signs, bottom face counterclockwise then top face.
_CORNERS = np.array(
    [
        [-1, -1, -1],
        [1, -1, -1],
        [1, 1, -1],
        [-1, 1, -1],
        [-1, -1, 1],
        [1, -1, 1],
        [1, 1, 1],
        [-1, 1, 1],
    ],
    dtype=float,
)

_GP = 1.0 / np.sqrt(3.0)


def elasticity_matrix(e: float, nu: float) -> np.ndarray:
    """6x6 constitutive matrix in Voigt order (xx, yy, zz, xy, yz, xz)."""
    factor = e / ((1.0 + nu) * (1.0 - 2.0 * nu))
    c = np.zeros((6, 6))
    c[:3, :3] = nu
    np.fill_diagonal(c[:3, :3], 1.0 - nu)
    c[3, 3] = c[4, 4] = c[5, 5] = (1.0 - 2.0 * nu) / 2.0
    return factor * c


def _shape_gradients(xi: float, eta: float, zeta: float) -> np.ndarray:
    """(3, 8) trilinear shape-function gradients on the reference cube."""
    g = np.empty((3, 8))
    for a, (sx, sy, sz) in enumerate(_CORNERS):
        g[0, a] = 0.125 * sx * (1 + sy * eta) * (1 + sz * zeta)
        g[1, a] = 0.125 * sy * (1 + sx * xi) * (1 + sz * zeta)
        g[2, a] = 0.125 * sz * (1 + sx * xi) * (1 + sy * eta)
    return g


def hex8_stiffness(
    e: float, nu: float, hx: float = 1.0, hy: float = 1.0, hz: float = 1.0
) -> np.ndarray:
    """24x24 stiffness matrix of a rectangular hexahedral element.

    Parameters
    ----------
    e : float
        Young's modulus.
    nu : float
        Poisson ratio (0 <= nu < 0.5).
    hx, hy, hz : float
        Element edge lengths.

    Returns
    -------
    (24, 24) ndarray
        Symmetric positive semidefinite matrix with the six rigid-body
        modes in its null space. Dof order is (ux, uy, uz) per node, nodes
        in reference-corner order.
    """
    if not 0.0 <= nu < 0.5:
        raise ValueError("nu must be in [0, 0.5)")
    c = elasticity_matrix(e, nu)
    det_j = hx * hy * hz / 8.0
    inv_j = np.array([2.0 / hx, 2.0 / hy, 2.0 / hz])
    k = np.zeros((24, 24))
    for sx in (-_GP, _GP):
        for sy in (-_GP, _GP):
            for sz in (-_GP, _GP):
                grad = inv_j[:, None] * _shape_gradients(sx, sy, sz)
                b = np.zeros((6, 24))
                b[0, 0::3] = grad[0]
                b[1, 1::3] = grad[1]
                b[2, 2::3] = grad[2]
                b[3, 0::3] = grad[1]
                b[3, 1::3] = grad[0]
                b[4, 1::3] = grad[2]
                b[4, 2::3] = grad[1]
                b[5, 0::3] = grad[2]
                b[5, 2::3] = grad[0]
                k += b.T @ c @ b * det_j
    return 0.5 * (k + k.T)
