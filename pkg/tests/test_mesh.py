import numpy as np
import pytest

from gradflow_rom.mesh import build_mesh


def test_neumann_unit_square_counts():
    m = build_mesh((1, 1), 0.5, "neumann")
    assert m.shape == (2, 2)
    assert m.n_triangles == 8
    assert m.n_interior_edges == 8
    assert m.n_boundary_edges == 8


def test_periodic_unit_square_counts():
    # 8 triangles have 24 sides; with every side shared the count is 24 / 2
    m = build_mesh((1, 1), 0.5, "periodic")
    assert m.n_triangles == 8
    assert m.n_interior_edges == 12
    assert m.n_boundary_edges == 0


def test_fine_grid_dimensions():
    m = build_mesh((0, 1, 0, 1), 0.015)
    assert m.shape == (67, 67)
    assert m.n_triangles == 8978
    assert m.h == pytest.approx((1 / 67, 1 / 67))


@pytest.mark.parametrize("bc", ["neumann", "periodic"])
@pytest.mark.parametrize("domain,h", [((0, 1, 0, 1), 0.1), ((-1, 2, 0, 0.5), 0.1),
                                      ((0, 2 * np.pi, 0, 2 * np.pi), 2 * np.pi / 13)])
def test_geometry_invariants(domain, h, bc):
    m = build_mesh(domain, h, bc)
    areas = m.signed_areas()
    assert np.all(areas > 0)
    x0, x1, y0, y1 = m.domain
    assert areas.sum() == pytest.approx((x1 - x0) * (y1 - y0), rel=1e-12)
    assert np.all(m.edge_left != m.edge_right)
    # every triangle side is used exactly once as an interior or boundary edge
    uses = np.bincount(np.concatenate([m.edge_left, m.edge_right, m.boundary_triangle]),
                       minlength=m.n_triangles)
    assert np.all(uses == 3)
    assert np.allclose(np.linalg.norm(m.edge_normal, axis=1), 1.0)
    # normals point from the left triangle towards the right one
    cent = m.vertices[m.triangles].mean(axis=1)
    d = cent[m.edge_right] - m.edge_shift - cent[m.edge_left]
    assert np.all(np.einsum("ed,ed->e", d, m.edge_normal) > 0)
    if bc == "periodic":
        assert m.n_boundary_edges == 0
        assert 2 * m.n_interior_edges == 3 * m.n_triangles


def test_boundary_normals_point_outwards():
    m = build_mesh((0, 1, 0, 1), 0.25)
    mid = m.vertices[m.boundary_edges].mean(axis=1)
    cent = m.vertices[m.triangles[m.boundary_triangle]].mean(axis=1)
    assert np.all(np.einsum("ed,ed->e", mid - cent, m.boundary_normal) > 0)


def test_spacing_rounds_to_nearest_division():
    m = build_mesh((0, 1, 0, 2), 0.3)
    assert m.shape == (3, 7)


@pytest.mark.parametrize("h", [1.5, 0.0, -0.1])
def test_invalid_spacing(h):
    with pytest.raises(ValueError):
        build_mesh((1, 1), h)


def test_unknown_bc():
    with pytest.raises(ValueError):
        build_mesh((1, 1), 0.5, "dirichlet")


def test_to_csv(tmp_path):
    m = build_mesh((1, 1), 0.5)
    m.to_csv(tmp_path / "v.csv", tmp_path / "t.csv")
    v = np.loadtxt(tmp_path / "v.csv", delimiter=",", skiprows=1)
    assert v.shape == (9, 2)
