import numpy as np
import pytest

from indexlab import geometry as ge
from indexlab.errors import DimensionError, GridError


def test_interval_boundary_points_and_signs():
    b = ge.build_interval_boundary()
    assert b.dim == 0
    assert b.npts == 2
    assert sorted(b.signs.tolist()) == [-1, 1]


def test_fiber_sphere_0d_two_signed_directions():
    f = ge.build_fiber_sphere_0d()
    assert f.dim == 0
    assert f.npts == 2
    assert set(f.signs.tolist()) == {-1, 1}


def test_circle_grid_geometry():
    c = ge.build_circle_grid(8)
    assert c.npts == 8
    np.testing.assert_allclose(np.linalg.norm(c.points, axis=1), 1.0)
    np.testing.assert_allclose(float(np.sum(c.weights)), 2.0 * np.pi)
    assert len(c.edges) == 8  # closed cycle


def test_circle_grid_rejects_small_counts():
    with pytest.raises(GridError):
        ge.build_circle_grid(2)


@pytest.mark.parametrize("n", [4, 8, 24])
def test_sphere_grid_total_solid_angle(n):
    s = ge.build_sphere_grid(n)
    assert s.dim == 2
    np.testing.assert_allclose(np.linalg.norm(s.points, axis=1), 1.0)
    # exact solid-angle quadrature: weights sum to 4*pi to rounding
    np.testing.assert_allclose(float(np.sum(s.weights)), 4.0 * np.pi, rtol=1e-12)
    assert len(s.plaquettes) == 6 * (n - 1) ** 2


def test_sphere_grid_dedups_cube_seams():
    n = 6
    s = ge.build_sphere_grid(n)
    # 6 faces of n^2 grid points share edges and corners
    assert s.npts == 6 * n * n - 12 * n + 8


def test_sphere_grid_rejects_small_counts():
    with pytest.raises(GridError):
        ge.build_sphere_grid(3)


def test_reversed_grid_flips_orientation():
    c = ge.build_circle_grid(6)
    r = c.reversed()
    assert r.orientation == -c.orientation
    np.testing.assert_allclose(r.points, c.points)


def test_corner_grid_index_roundtrip():
    base = ge.build_circle_grid(5)
    fiber = ge.build_circle_grid(4)
    corner = ge.build_corner_grid(base, fiber, n_radial=9)
    assert corner.kind == ge.KIND_TORUS
    assert corner.npts == base.npts * fiber.npts
    for b in range(base.npts):
        for f in range(fiber.npts):
            i = corner.flat_index(b, f)
            assert corner.base_of(i) == b
            assert corner.fiber_of(i) == f


def test_corner_grid_kinds():
    pt = ge.build_corner_grid(
        ge.build_interval_boundary(), ge.build_fiber_sphere_0d(), n_radial=9
    )
    assert pt.kind == ge.KIND_POINTS
    doubled = ge.build_corner_grid(
        ge.build_sphere_grid(4), ge.build_fiber_sphere_0d(), n_radial=9
    )
    assert doubled.kind == ge.KIND_DOUBLED_BASE


def test_corner_grid_radial_samples_cover_unit_interval():
    corner = ge.build_corner_grid(
        ge.build_interval_boundary(), ge.build_fiber_sphere_0d(), n_radial=17
    )
    assert corner.s[0] == 0.0
    assert corner.s[-1] == 1.0
    assert len(corner.s) == 17


def test_connected_components_union_find():
    comps = ge.connected_components(5, [(0, 1), (1, 2), (3, 4)])
    assert comps[0] == comps[1] == comps[2]
    assert comps[3] == comps[4]
    assert comps[0] != comps[3]
    isolated = ge.connected_components(3, [])
    assert len(np.unique(isolated)) == 3


def test_signed_plaquette_areas_sum_on_sphere():
    s = ge.build_sphere_grid(8)
    areas = ge.signed_plaquette_areas(s)
    np.testing.assert_allclose(float(np.sum(areas)), 4.0 * np.pi, rtol=1e-12)
    assert np.all(areas > 0)  # consistent outward orientation
