"""Discretized boundary manifolds, fiber spheres, and corner grids.

Grids are immutable value objects.  A ``ManifoldGrid`` carries point
coordinates, quadrature weights, orientation data and (in dimension 2)
an oriented plaquette mesh suitable for curvature sums.  A ``CornerGrid``
is the product of a boundary grid with a fiber-sphere grid, together with
radial compactification samples s in [0, 1] (s = 1 is the sphere face).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, GridError

# Corner-grid product layouts.
KIND_POINTS = "points"          # 0-dim base x 0-dim fiber
KIND_TORUS = "torus"            # circle base x circle fiber
KIND_DOUBLED_BASE = "doubled"   # 2-dim base x 0-dim fiber (two copies)


@dataclass(frozen=True)
class ManifoldGrid:
    """Sampled closed manifold of dimension 0, 1 or 2."""

    dim: int
    points: np.ndarray            # (npts, d) embedding coordinates
    weights: np.ndarray           # (npts,) quadrature weights
    signs: np.ndarray | None = None        # (npts,) orientation, dim 0 only
    edges: np.ndarray | None = None        # (nedges, 2) point indices
    plaquettes: np.ndarray | None = None   # (nplq, 4) oriented, dim 2 only
    orientation: int = 1

    @property
    def npts(self) -> int:
        return self.points.shape[0]

    @property
    def total_weight(self) -> float:
        return float(np.sum(self.weights))

    def reversed(self) -> "ManifoldGrid":
        """Same grid with the opposite orientation.

        Dimension 0 flips the point signs; dimension 2 reverses every
        plaquette; dimension 1 reverses the edge ordering flag.
        """
        signs = None if self.signs is None else -self.signs
        plq = None if self.plaquettes is None else self.plaquettes[:, ::-1].copy()
        return ManifoldGrid(
            dim=self.dim,
            points=self.points,
            weights=self.weights,
            signs=signs,
            edges=self.edges,
            plaquettes=plq,
            orientation=-self.orientation,
        )


def build_interval_boundary() -> ManifoldGrid:
    """The two-point boundary of a compactified line, signed (-1, +1)."""
    pts = np.array([[-1.0], [1.0]])
    return ManifoldGrid(
        dim=0,
        points=pts,
        weights=np.ones(2),
        signs=np.array([-1.0, 1.0]),
    )


def build_fiber_sphere_0d() -> ManifoldGrid:
    """Two cotangent directions (xi = -1, +1) of a 1-dimensional fiber."""
    return build_interval_boundary()


def build_circle_grid(n: int) -> ManifoldGrid:
    """n equispaced points on the unit circle with exact uniform weights."""
    if n < 3:
        raise GridError(f"circle grid needs n >= 3, got {n}")
    theta = 2.0 * np.pi * np.arange(n) / n
    pts = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    edges = np.stack([np.arange(n), (np.arange(n) + 1) % n], axis=1)
    return ManifoldGrid(
        dim=1,
        points=pts,
        weights=np.full(n, 2.0 * np.pi / n),
        edges=edges,
    )


def _cube_faces(n: int):
    """Vertex coordinates on the cube surface, one (n, n, 3) block per face."""
    u = np.linspace(-1.0, 1.0, n)
    uu, vv = np.meshgrid(u, u, indexing="ij")
    ones = np.ones_like(uu)
    return [
        np.stack([ones, uu, vv], axis=-1),     # +x
        np.stack([-ones, vv, uu], axis=-1),    # -x
        np.stack([vv, ones, uu], axis=-1),     # +y
        np.stack([uu, -ones, vv], axis=-1),    # -y
        np.stack([uu, vv, ones], axis=-1),     # +z
        np.stack([vv, uu, -ones], axis=-1),    # -z
    ]


def _triangle_solid_angle(a, b, c):
    """Signed solid angle of spherical triangles with unit-vector rows."""
    num = np.einsum("ij,ij->i", a, np.cross(b, c))
    den = (
        1.0
        + np.einsum("ij,ij->i", a, b)
        + np.einsum("ij,ij->i", b, c)
        + np.einsum("ij,ij->i", c, a)
    )
    return 2.0 * np.arctan2(num, den)


def build_sphere_grid(n: int) -> ManifoldGrid:
    """Cubed-sphere mesh: 6 faces of an n x n grid projected to the sphere.

    Points shared between adjacent faces are identified, so the 6(n-1)^2
    quadrilateral cells tile the sphere without seams.  Plaquettes are
    oriented outward; quadrature weights distribute each cell's solid
    angle equally to its four corners.
    """
    if n < 4:
        raise GridError(f"cubed-sphere grid needs n >= 4, got {n}")

    index_of = {}
    coords = []
    face_index = []
    for face in _cube_faces(n):
        flat = face.reshape(-1, 3)
        idx = np.empty(len(flat), dtype=int)
        for i, p in enumerate(flat):
            key = tuple(np.round(p, 9))
            if key not in index_of:
                index_of[key] = len(coords)
                coords.append(p)
            idx[i] = index_of[key]
        face_index.append(idx.reshape(n, n))

    cube_pts = np.array(coords)
    pts = cube_pts / np.linalg.norm(cube_pts, axis=1, keepdims=True)

    plaquettes = []
    for idx in face_index:
        for i in range(n - 1):
            for j in range(n - 1):
                quad = [idx[i, j], idx[i + 1, j], idx[i + 1, j + 1], idx[i, j + 1]]
                p0, p1, p2 = pts[quad[0]], pts[quad[1]], pts[quad[2]]
                centroid = pts[quad].mean(axis=0)
                if np.dot(np.cross(p1 - p0, p2 - p0), centroid) < 0:
                    quad.reverse()
                plaquettes.append(quad)
    plaquettes = np.array(plaquettes, dtype=int)

    a = pts[plaquettes[:, 0]]
    b = pts[plaquettes[:, 1]]
    c = pts[plaquettes[:, 2]]
    d = pts[plaquettes[:, 3]]
    cell_area = _triangle_solid_angle(a, b, c) + _triangle_solid_angle(a, c, d)

    weights = np.zeros(len(pts))
    np.add.at(weights, plaquettes.ravel(), np.repeat(cell_area / 4.0, 4))

    edge_set = set()
    for quad in plaquettes:
        for k in range(4):
            i, j = quad[k], quad[(k + 1) % 4]
            edge_set.add((min(i, j), max(i, j)))
    edges = np.array(sorted(edge_set), dtype=int)

    return ManifoldGrid(
        dim=2,
        points=pts,
        weights=weights,
        edges=edges,
        plaquettes=plaquettes,
    )


def signed_plaquette_areas(grid: ManifoldGrid) -> np.ndarray:
    """Solid angles of the oriented plaquettes of a 2-dim grid."""
    if grid.dim != 2 or grid.plaquettes is None:
        raise DimensionError("signed areas require a 2-dimensional grid")
    p = grid.points
    q = grid.plaquettes
    return _triangle_solid_angle(p[q[:, 0]], p[q[:, 1]], p[q[:, 2]]) + _triangle_solid_angle(
        p[q[:, 0]], p[q[:, 2]], p[q[:, 3]]
    )


@dataclass(frozen=True)
class CornerGrid:
    """Product of a boundary grid with a fiber-sphere grid.

    Product point (b, f) lives at flat index ``b * fiber.npts + f``.  The
    radial samples ``s`` parameterize the compactified cotangent fiber,
    with s = 0 the zero section and s = 1 the sphere face.
    """

    base: ManifoldGrid
    fiber: ManifoldGrid
    s: np.ndarray
    kind: str
    plaquettes: np.ndarray | None = None
    edges: np.ndarray | None = None

    # kind labels, mirrored as class attributes for callers
    KIND_POINTS = KIND_POINTS
    KIND_TORUS = KIND_TORUS
    KIND_DOUBLED_BASE = KIND_DOUBLED_BASE

    @property
    def npts(self) -> int:
        return self.base.npts * self.fiber.npts

    @property
    def dim(self) -> int:
        return self.base.dim + self.fiber.dim

    def flat_index(self, b: int, f: int) -> int:
        return b * self.fiber.npts + f

    def base_of(self, p) -> np.ndarray:
        return np.asarray(p) // self.fiber.npts

    def fiber_of(self, p) -> np.ndarray:
        return np.asarray(p) % self.fiber.npts


def build_corner_grid(base: ManifoldGrid, fiber: ManifoldGrid, n_radial: int) -> CornerGrid:
    """Corner grid over ``base`` with cotangent directions from ``fiber``."""
    if n_radial < 2:
        raise GridError(f"radial compactification needs n_radial >= 2, got {n_radial}")
    if base.dim + fiber.dim > 2:
        raise DimensionError(
            f"corner of dimension {base.dim + fiber.dim} unsupported (max 2)"
        )
    s = np.linspace(0.0, 1.0, n_radial)
    nf = fiber.npts

    if base.dim == 0 and fiber.dim == 0:
        kind = KIND_POINTS
        plaquettes = None
        edges = None
    elif base.dim == 1 and fiber.dim == 1:
        kind = KIND_TORUS
        plq = []
        for eb in base.edges:
            for ef in fiber.edges:
                b0, b1 = int(eb[0]), int(eb[1])
                f0, f1 = int(ef[0]), int(ef[1])
                plq.append(
                    [b0 * nf + f0, b1 * nf + f0, b1 * nf + f1, b0 * nf + f1]
                )
        plaquettes = np.array(plq, dtype=int)
        edge_set = set()
        for quad in plaquettes:
            for k in range(4):
                i, j = int(quad[k]), int(quad[(k + 1) % 4])
                edge_set.add((min(i, j), max(i, j)))
        edges = np.array(sorted(edge_set), dtype=int)
    elif base.dim == 2 and fiber.dim == 0:
        kind = KIND_DOUBLED_BASE
        plq = []
        for f in range(nf):
            for quad in base.plaquettes:
                plq.append([int(q) * nf + f for q in quad])
        plaquettes = np.array(plq, dtype=int)
        edges = np.array(
            [[int(i) * nf + f, int(j) * nf + f] for f in range(nf) for i, j in base.edges],
            dtype=int,
        )
    else:
        raise DimensionError(
            f"unsupported corner layout: base dim {base.dim}, fiber dim {fiber.dim}"
        )

    return CornerGrid(base=base, fiber=fiber, s=s, kind=kind, plaquettes=plaquettes, edges=edges)


def connected_components(npts: int, edges: np.ndarray | None) -> np.ndarray:
    """Component label per point from an undirected edge list."""
    labels = np.arange(npts)
    if edges is None or len(edges) == 0:
        return labels

    def find(i):
        while labels[i] != i:
            labels[i] = labels[labels[i]]
            i = labels[i]
        return i

    for i, j in edges:
        ri, rj = find(int(i)), find(int(j))
        if ri != rj:
            labels[max(ri, rj)] = min(ri, rj)
    return np.array([find(i) for i in range(npts)])
