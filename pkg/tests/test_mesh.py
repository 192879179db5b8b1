import numpy as np
import pytest

from topoforge.fem import StructuredMesh, select_nodes, EmptySelectionError


def test_counts():
    m = StructuredMesh(4, 3, 2, 1.0, 0.5, 0.25)
    assert m.n_elements == 24
    assert m.n_nodes == 5 * 4 * 3
    assert m.n_dofs == 3 * m.n_nodes
    assert m.spacing == (0.25, 0.5 / 3, 0.125)


def test_lexicographic_node_order():
    # x runs fastest: node nelx+1 sits directly above node 0 in y
    m = StructuredMesh(4, 3, 2, 1.0, 1.0, 1.0)
    c = m.node_coords
    np.testing.assert_allclose(c[0], [0, 0, 0])
    np.testing.assert_allclose(c[1], [0.25, 0, 0])
    np.testing.assert_allclose(c[5], [0, 1 / 3, 0])
    assert c[5][0] == c[0][0] and c[5][2] == c[0][2]
    # first node of the second z-layer
    np.testing.assert_allclose(c[5 * 4], [0, 0, 0.5])


def test_single_element_connectivity():
    m = StructuredMesh(1, 1, 1, 1.0, 1.0, 1.0)
    dofs = m.element_dofs
    assert dofs.shape == (1, 24)
    nodes = dofs[0, 0::3] // 3
    np.testing.assert_array_equal(nodes, [0, 1, 3, 2, 4, 5, 7, 6])


def test_element_order_and_centroids():
    m = StructuredMesh(3, 2, 2, 3.0, 2.0, 2.0)
    cent = m.element_centroids
    np.testing.assert_allclose(cent[0], [0.5, 0.5, 0.5])
    np.testing.assert_allclose(cent[1], [1.5, 0.5, 0.5])  # x fastest
    np.testing.assert_allclose(cent[3], [0.5, 1.5, 0.5])  # then y
    np.testing.assert_allclose(cent[6], [0.5, 0.5, 1.5])  # then z


def test_grid_views_round_trip():
    m = StructuredMesh(3, 4, 2, 1.0, 1.0, 1.0)
    flat = np.arange(m.n_elements, dtype=float)
    grid = m.element_grid(flat)
    assert grid.shape == (3, 4, 2)
    # element (ex, ey, ez) has flat id ex + nelx*(ey + nely*ez)
    assert grid[1, 2, 0] == 1 + 3 * 2
    assert grid[2, 1, 1] == 2 + 3 * (1 + 4 * 1)
    np.testing.assert_array_equal(m.flatten_grid(grid), flat)


def test_plane_selector():
    m = StructuredMesh(4, 3, 2, 1.0, 1.0, 1.0)
    bottom = select_nodes(m, {"y": 0.0})
    assert bottom.size == 5 * 3
    assert np.all(m.node_coords[bottom, 1] == 0.0)


def test_edge_and_comparator_selectors():
    m = StructuredMesh(4, 4, 4, 1.0, 1.0, 1.0)
    edge = select_nodes(m, {"x": 0.0, "y": 1.0})
    assert edge.size == 5
    half = select_nodes(m, {"z": {"op": "le", "value": 0.5}})
    assert half.size == 25 * 3


def test_diagonal_plane_selector_spans_all_z():
    m = StructuredMesh(8, 4, 3, 1.0, 0.5, 0.25)
    nodes = select_nodes(m, {"diagonal": "xy"})
    coords = m.node_coords[nodes]
    plane = m.ly * (1.0 - coords[:, 0] / m.lx)
    assert np.all(np.abs(coords[:, 1] - plane) <= 0.5 * m.spacing[1] + 1e-12)
    # every x column and every z layer is represented
    assert set(np.round(coords[:, 2] / m.spacing[2]).astype(int)) == set(range(4))
    assert set(np.round(coords[:, 0] / m.spacing[0]).astype(int)) == set(range(9))


def test_empty_selection_raises_with_name():
    m = StructuredMesh(2, 2, 2, 1.0, 1.0, 1.0)
    with pytest.raises(EmptySelectionError, match="mid-air"):
        select_nodes(m, {"x": 7.5}, name="mid-air")


def test_bad_mesh_rejected():
    with pytest.raises(ValueError):
        StructuredMesh(0, 1, 1, 1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        StructuredMesh(1, 1, 1, 1.0, -1.0, 1.0)
