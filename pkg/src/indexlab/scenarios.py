"""Built-in model data: matched symbolic, topological, and analytic
descriptions of the wall-crossing, monopole, and synthetic corner
families, plus seeded random compatible symbol datasets.
"""

from __future__ import annotations

import numpy as np

from .analytic import hedgehog_potential, _PAULI
from .geometry import (
    CornerGrid,
    build_circle_grid,
    build_corner_grid,
    build_fiber_sphere_0d,
    build_interval_boundary,
    build_sphere_grid,
)
from .symbolic import CalliasSymbolData, HermitianField
from .topo import CliffordBoundaryData

N_RADIAL_DEFAULT = 17


def derivative_weight(s: np.ndarray, order: float = 1.0) -> np.ndarray:
    """Renormalized magnitude |xi|^m / <xi>^m at radial coordinate s."""
    s = np.asarray(s, dtype=float)
    xi = s / np.maximum(1.0 - s, 1e-300)
    finite = s < 1.0
    out = np.ones_like(s)
    out[finite] = xi[finite] ** order / (1.0 + xi[finite] ** 2) ** (order / 2.0)
    return out


def _first_order_symbol_data(
    name: str,
    corner: CornerGrid,
    interior: np.ndarray,
    potential: np.ndarray,
    n_s: int = N_RADIAL_DEFAULT,
) -> CalliasSymbolData:
    """Package a first-order model whose symbol is linear along each ray,
    so the renormalized fiber samples are the interior values scaled by
    the radial weight."""
    r = derivative_weight(corner.s, order=1.0)
    boundary = interior[:, None] * r[None, :, None, None]
    return CalliasSymbolData(
        name=name,
        order=1.0,
        corner=corner,
        interior_symbol=HermitianField(corner, interior),
        boundary_symbol=boundary,
        potential=HermitianField(corner.base, potential),
    )


# ---------------------------------------------------------------- 1-d models

def build_wall_symbol_data(
    potential_values=(-1.0, 1.0), name: str = "kink", n_s: int = N_RADIAL_DEFAULT
) -> CalliasSymbolData:
    """Corner data of -i d/dt + i phi(t): two boundary points, two fiber
    directions, scalar fiber.  ``potential_values`` are phi at the left
    and right ends."""
    base = build_interval_boundary()
    fiber = build_fiber_sphere_0d()
    corner = build_corner_grid(base, fiber, n_radial=n_s)
    omega = corner.fiber.signs[corner.fiber_of(np.arange(corner.npts))]
    interior = omega.astype(complex).reshape(-1, 1, 1)
    potential = np.asarray(potential_values, dtype=complex).reshape(2, 1, 1)
    return _first_order_symbol_data(name, corner, interior, potential, n_s)


def build_wall_clifford_data(potential_values=(-1.0, 1.0)) -> CliffordBoundaryData:
    """Boundary Clifford data of the 1-d wall model: the conormal at each
    end is the outward time direction."""
    base = build_interval_boundary()
    conormal = np.array([[[-1j * s]] for s in base.signs], dtype=complex)
    twist = np.asarray(potential_values, dtype=complex).reshape(2, 1, 1)
    return CliffordBoundaryData(
        boundary=base, conormal_action=conormal, twist_potential=twist
    )


# ---------------------------------------------------------------- 3-d models

def boundary_sphere_direction(points: np.ndarray, charge: int) -> np.ndarray:
    """Unit winding map on the boundary sphere; identity for charge 1."""
    from .analytic import hedgehog_direction

    if charge == 0:
        raise ValueError("charge 0 has no direction field")
    return hedgehog_direction(points, charge)


def build_monopole_clifford_data(
    charge: int, coupling: float = 1.0, n_sphere: int = 24
) -> CliffordBoundaryData:
    """Boundary data of the rank-4 monopole model over the sphere.

    The spin factor carries cl(conormal) = -i sigma.x; the twisting factor
    carries the asymptotic potential coupling * (winding map . sigma), or
    the scalar coupling for charge 0.
    """
    sphere = build_sphere_grid(n_sphere)
    pts = sphere.points
    sigma_x = sum(pts[:, i, None, None] * _PAULI[i] for i in range(3))
    conormal = -1j * sigma_x
    if charge == 0:
        twist = np.broadcast_to(
            coupling * np.eye(2, dtype=complex), (sphere.npts, 2, 2)
        ).copy()
    else:
        n = boundary_sphere_direction(pts, charge)
        twist = coupling * sum(n[:, i, None, None] * _PAULI[i] for i in range(3))
    return CliffordBoundaryData(
        boundary=sphere, conormal_action=conormal, twist_potential=twist
    )


def build_monopole_symbol_data(
    charge: int,
    coupling: float = 1.0,
    n_sphere: int = 8,
    n_s: int = N_RADIAL_DEFAULT,
) -> CalliasSymbolData:
    """Corner data of the monopole model restricted to the conormal
    sections of the fiber sphere: a doubled-sphere corner with the rank-4
    symbol omega * sigma.x (x) Id and potential Id (x) Phi."""
    base = build_sphere_grid(n_sphere)
    fiber = build_fiber_sphere_0d()
    corner = build_corner_grid(base, fiber, n_radial=n_s)
    pts = base.points
    sigma_x = sum(pts[:, i, None, None] * _PAULI[i] for i in range(3))
    eye2 = np.eye(2, dtype=complex)
    b_idx = corner.base_of(np.arange(corner.npts))
    omega = corner.fiber.signs[corner.fiber_of(np.arange(corner.npts))]
    interior = np.stack(
        [omega[p] * np.kron(sigma_x[b_idx[p]], eye2) for p in range(corner.npts)]
    )
    if charge == 0:
        pot2 = np.broadcast_to(coupling * eye2, (base.npts, 2, 2))
    else:
        n = boundary_sphere_direction(pts, charge)
        pot2 = coupling * sum(n[:, i, None, None] * _PAULI[i] for i in range(3))
    potential = np.stack([np.kron(eye2, m) for m in pot2])
    name = "scalar-trivial-3d" if charge == 0 else f"monopole-{charge}"
    return _first_order_symbol_data(name, corner, interior, potential, n_s)


# ------------------------------------------------------- synthetic corners

def gapped_band_direction(u: np.ndarray, v: np.ndarray, mass: float = 1.0) -> np.ndarray:
    """Unit direction field (sin u, sin v, mass - cos u - cos v) of a
    two-band model; gapped for mass away from {0, +/-2}, lower band
    carrying a unit Chern number for 0 < mass < 2."""
    d = np.stack(
        [np.sin(u), np.sin(v), mass - np.cos(u) - np.cos(v)], axis=-1
    )
    norm = np.linalg.norm(d, axis=-1, keepdims=True)
    if float(np.min(norm)) < 1e-9:
        raise ValueError(f"band direction degenerates; mass {mass} is critical")
    return d / norm


def build_synthetic_corner_data(
    winding: int,
    n_base: int = 48,
    n_fiber: int = 48,
    n_s: int = N_RADIAL_DEFAULT,
) -> CalliasSymbolData:
    """Rank-4 torus-corner family with all four joint eigenbundles
    present.

    The symbol is a block pair of gapped two-band directions pulled back
    through opposite base windings, and the potential is the constant
    block grading diag(1, 1, -1, -1), so the four blocks carry Chern
    numbers (c, c, -c, -c) with c proportional to the winding.
    """
    base = build_circle_grid(n_base)
    fiber = build_circle_grid(n_fiber)
    corner = build_corner_grid(base, fiber, n_radial=n_s)
    theta = np.arctan2(base.points[:, 1], base.points[:, 0])
    psi = np.arctan2(fiber.points[:, 1], fiber.points[:, 0])
    b_idx = corner.base_of(np.arange(corner.npts))
    f_idx = corner.fiber_of(np.arange(corner.npts))
    th, ps = theta[b_idx], psi[f_idx]

    def block(k):
        n = gapped_band_direction(k * th, ps)
        return sum(n[:, i, None, None] * _PAULI[i] for i in range(3))

    top, bot = block(winding), block(-winding)
    interior = np.zeros((corner.npts, 4, 4), dtype=complex)
    interior[:, :2, :2] = top
    interior[:, 2:, 2:] = bot
    potential = np.broadcast_to(
        np.diag([1.0, 1.0, -1.0, -1.0]).astype(complex), (base.npts, 4, 4)
    ).copy()
    return _first_order_symbol_data(
        f"synthetic-corner-{winding}", corner, interior, potential, n_s
    )


def build_clutching_circle_data(
    winding: int,
    n_base: int = 64,
    n_fiber: int = 64,
    n_s: int = N_RADIAL_DEFAULT,
):
    """Rank-2 torus-corner family clutched along a single fiber seam.

    The distinguished line bundle is pulled across the fiber circle with a
    transition of the given winding concentrated on one half, matching the
    induced boundary Clifford action whose tangent frame winds the same
    amount.  Returns the symbol data and the boundary Clifford data.
    """
    if n_fiber % 2:
        raise ValueError("fiber circle needs an even sample count")
    base = build_circle_grid(n_base)
    fiber = build_circle_grid(n_fiber)
    corner = build_corner_grid(base, fiber, n_radial=n_s)
    theta = np.arctan2(base.points[:, 1], base.points[:, 0])
    psi = np.mod(np.arctan2(fiber.points[:, 1], fiber.points[:, 0]), 2.0 * np.pi)
    b_idx = corner.base_of(np.arange(corner.npts))
    f_idx = corner.fiber_of(np.arange(corner.npts))
    th, ps = theta[b_idx], psi[f_idx]

    # distinguished line: e1 at the conormal section, e2 at the opposite
    # one, with the transition phase living on the first half of the fiber
    phase = np.where(ps <= np.pi, np.exp(1j * winding * th), 1.0)
    u = np.zeros((corner.npts, 2), dtype=complex)
    u[:, 0] = np.cos(ps / 2.0)
    u[:, 1] = np.sin(ps / 2.0) * phase
    proj = u[:, :, None] * np.conj(u[:, None, :])
    interior = 2.0 * proj - np.eye(2)
    potential = np.broadcast_to(np.eye(2, dtype=complex), (base.npts, 2, 2)).copy()
    data = _first_order_symbol_data(
        f"clutching-circle-{winding}", corner, interior, potential, n_s
    )

    conormal = np.broadcast_to(-1j * _PAULI[2], (base.npts, 2, 2)).copy()
    tangent = 1j * (
        np.cos(winding * theta)[:, None, None] * _PAULI[0]
        + np.sin(winding * theta)[:, None, None] * _PAULI[1]
    )
    clifford = CliffordBoundaryData(
        boundary=base,
        conormal_action=conormal,
        twist_potential=np.broadcast_to(
            np.eye(2, dtype=complex), (base.npts, 2, 2)
        ).copy(),
        tangent_actions=tangent[None],
    )
    return data, clifford


# ------------------------------------------------------------- random data

def random_compatible_data(
    rank: int, seed: int, n_s: int = N_RADIAL_DEFAULT
) -> CalliasSymbolData:
    """Seeded random compatible first-order dataset over the interval
    corner: per boundary point a shared Haar eigenframe with eigenvalues
    bounded away from zero for both the symbol and the potential."""
    if not 2 <= rank <= 64:
        raise ValueError("rank out of supported range")
    rng = np.random.default_rng(seed)
    base = build_interval_boundary()
    fiber = build_fiber_sphere_0d()
    corner = build_corner_grid(base, fiber, n_radial=n_s)

    h_d, h_phi = [], []
    for _ in range(base.npts):
        z = rng.standard_normal((rank, rank)) + 1j * rng.standard_normal((rank, rank))
        q, r = np.linalg.qr(z)
        q = q * (np.diag(r) / np.abs(np.diag(r)))
        lam = rng.uniform(0.5, 2.0, rank) * rng.choice([-1.0, 1.0], rank)
        mu = rng.uniform(0.5, 2.0, rank) * rng.choice([-1.0, 1.0], rank)
        h_d.append((q * lam) @ q.conj().T)
        h_phi.append((q * mu) @ q.conj().T)
    h_d, h_phi = np.stack(h_d), np.stack(h_phi)

    b_idx = corner.base_of(np.arange(corner.npts))
    omega = corner.fiber.signs[corner.fiber_of(np.arange(corner.npts))]
    interior = omega[:, None, None] * h_d[b_idx]
    return _first_order_symbol_data(
        f"random-rank{rank}-seed{seed}", corner, interior, h_phi, n_s
    )
