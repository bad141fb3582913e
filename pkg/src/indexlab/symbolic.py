"""Hermitian symbol fields, compatibility checks, joint eigenbundles,
and the invertible homotopies that push the index datum onto the corner.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CompatibilityError,
    CoverageError,
    DegeneracyError,
    DiscontinuityError,
    PartitionError,
    SingularityError,
    StructuralError,
)
from .geometry import CornerGrid, ManifoldGrid, connected_components

BLOCKS = ("pp", "mm", "pm", "mp")
# (sign of the operator symbol, sign of the potential) per block
BLOCK_SIGNS = {"pp": (1, 1), "mm": (-1, -1), "pm": (1, -1), "mp": (-1, 1)}

HERMITICITY_RTOL = 1e-12


@dataclass(frozen=True)
class HermitianField:
    """One n x n Hermitian matrix sample per grid point."""

    grid: object
    samples: np.ndarray   # (npts, n, n) complex

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex)
        object.__setattr__(self, "samples", s)
        if s.ndim != 3 or s.shape[1] != s.shape[2]:
            raise StructuralError(f"field samples must be (npts, n, n), got {s.shape}")
        defect = np.max(np.abs(s - s.conj().transpose(0, 2, 1)))
        scale = max(np.max(np.abs(s)), 1.0)
        if defect > HERMITICITY_RTOL * scale * 100:
            raise StructuralError(f"field is not Hermitian: defect {defect:.3e}")

    @property
    def rank(self) -> int:
        return self.samples.shape[1]

    @property
    def npts(self) -> int:
        return self.samples.shape[0]


@dataclass(frozen=True)
class CalliasSymbolData:
    """Full symbolic package of an operator ``D + i * potential``.

    ``interior_symbol`` samples the (renormalized) top-order symbol of D on
    the sphere face over the boundary; ``boundary_symbol`` samples the
    renormalized full symbol of D over the compactified fiber, indexed
    ``[corner point, radial sample]``; ``potential`` lives on the boundary
    grid.  The renormalization weight is <xi>^(-m) with |xi| = s / (1 - s).
    """

    name: str
    order: float
    corner: CornerGrid
    interior_symbol: HermitianField     # over corner product points
    boundary_symbol: np.ndarray         # (n_corner, n_s, n, n)
    potential: HermitianField           # over corner.base

    def __post_init__(self):
        nc, ns = self.corner.npts, len(self.corner.s)
        bs = np.asarray(self.boundary_symbol, dtype=complex)
        object.__setattr__(self, "boundary_symbol", bs)
        if bs.shape[:2] != (nc, ns):
            raise StructuralError(
                f"boundary symbol shape {bs.shape} does not match corner "
                f"({nc} points, {ns} radial samples)"
            )
        if self.interior_symbol.npts != nc:
            raise StructuralError("interior symbol not sampled on the corner grid")
        if self.potential.npts != self.corner.base.npts:
            raise StructuralError("potential not sampled on the boundary grid")

    @property
    def rank(self) -> int:
        return self.interior_symbol.rank

    def potential_weight(self) -> np.ndarray:
        """Renormalization factor <xi>^(-m) at each radial sample (0 at s=1)."""
        s = self.corner.s
        with np.errstate(divide="ignore"):
            xi = np.where(s < 1.0, s / np.maximum(1.0 - s, 1e-300), np.inf)
        return np.where(np.isinf(xi), 0.0, (1.0 + xi**2) ** (-self.order / 2.0))

    def potential_on_corner(self) -> np.ndarray:
        """Potential samples pulled back to corner product points."""
        b = self.corner.base_of(np.arange(self.corner.npts))
        return self.potential.samples[b]

    def total_symbol_fiber(self) -> np.ndarray:
        """Renormalized total symbol over the compactified fiber face."""
        w = self.potential_weight()
        pot = self.potential_on_corner()
        return self.boundary_symbol + 1j * w[None, :, None, None] * pot[:, None]


@dataclass(frozen=True)
class CompatibilityReport:
    hermitian_defect: float
    min_potential_eigen: float
    max_commutator_norm: float
    full_ellipticity_margin: float
    tol: float

    @property
    def passed(self) -> bool:
        return (
            self.hermitian_defect <= self.tol
            and self.min_potential_eigen > self.tol
            and self.max_commutator_norm <= self.tol
            and self.full_ellipticity_margin > self.tol
        )

    def as_dict(self) -> dict:
        return {
            "hermitian_defect": self.hermitian_defect,
            "min_potential_eigen": self.min_potential_eigen,
            "max_commutator_norm": self.max_commutator_norm,
            "full_ellipticity_margin": self.full_ellipticity_margin,
            "tol": self.tol,
            "verdict": "pass" if self.passed else "fail",
        }


@dataclass(frozen=True)
class JointSplitting:
    """Per-point orthonormal frames of the four joint eigenspaces."""

    corner: CornerGrid
    frames: dict                 # block -> list of (n, r_p) arrays
    ranks: dict                  # block -> (npts,) int array
    components: np.ndarray       # component label per corner point

    def rank_profile(self) -> dict:
        """Per-component rank 4-tuple; raises if a component is inconsistent."""
        out = {}
        for comp in np.unique(self.components):
            mask = self.components == comp
            profile = []
            for blk in BLOCKS:
                r = np.unique(self.ranks[blk][mask])
                if len(r) != 1:
                    raise DiscontinuityError(
                        f"rank of block {blk} jumps within component {comp}"
                    )
                profile.append(int(r[0]))
            out[int(comp)] = tuple(profile)
        return out

    def block_frames_array(self, block: str) -> np.ndarray:
        """Stacked (npts, n, r) frames; requires a globally constant rank."""
        r = np.unique(self.ranks[block])
        if len(r) != 1:
            raise DiscontinuityError(f"block {block} has non-constant rank {r}")
        return np.stack(self.frames[block])


def check_hermitian(mats: np.ndarray) -> float:
    """Largest Hermiticity defect over a stack of matrices."""
    return float(np.max(np.abs(mats - np.conj(np.swapaxes(mats, -1, -2)))))


def min_singular_values(mats: np.ndarray) -> np.ndarray:
    """Smallest singular value of each matrix in a stack."""
    return np.linalg.svd(mats, compute_uv=False)[..., -1]


def unitarize(c: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Retract an invertible matrix onto the unitary group.

    Computed as the unitary polar factor, which for Hermitian input is the
    matrix sign.  Raises ``SingularityError`` when the smallest singular
    value is below ``tol``.
    """
    c = np.asarray(c, dtype=complex)
    u, sv, vh = np.linalg.svd(c)
    smin = float(np.min(sv, axis=-1) if c.ndim == 2 else np.min(sv))
    if smin <= tol:
        raise SingularityError(
            f"cannot unitarize: min singular value {smin:.3e} <= {tol:.1e}",
            min_singular_value=smin,
        )
    return u @ vh


def unitarize_path(c: np.ndarray, n_t: int = 50, tol: float = 1e-10) -> np.ndarray:
    """Samples of the straight retraction c * (t * (c*c)^(-1/2) + (1-t) Id)."""
    c = np.asarray(c, dtype=complex)
    u, sv, vh = np.linalg.svd(c)
    if np.min(sv) <= tol:
        raise SingularityError(
            f"cannot unitarize: min singular value {np.min(sv):.3e} <= {tol:.1e}",
            min_singular_value=float(np.min(sv)),
        )
    # (c* c)^(-1/2) = v diag(1/sv) v*
    inv_sqrt = (vh.conj().T * (1.0 / sv)) @ vh
    ts = np.linspace(0.0, 1.0, n_t)
    eye = np.eye(c.shape[0])
    return np.stack([c @ (t * inv_sqrt + (1.0 - t) * eye) for t in ts])


def unitarize_field(samples: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Pointwise unitarization of a stack of invertible matrices."""
    u, sv, vh = np.linalg.svd(samples)
    smin = float(np.min(sv))
    if smin <= tol:
        raise SingularityError(
            f"field not invertible: min singular value {smin:.3e}",
            min_singular_value=smin,
        )
    return u @ vh


def validate_compatibility(data: CalliasSymbolData, tol: float = 1e-8) -> CompatibilityReport:
    """Check the boundary conditions that make D + i*potential Fredholm.

    The potential must be Hermitian and invertible on the boundary, and
    must commute with the full symbol of D over the whole compactified
    fiber; the total symbol must additionally be invertible everywhere.
    """
    pot = data.potential.samples
    hermitian_defect = check_hermitian(pot)

    eigs = np.linalg.eigvalsh(pot)
    min_pot = float(np.min(np.abs(eigs)))

    pot_corner = data.potential_on_corner()          # (nc, n, n)
    bs = data.boundary_symbol                        # (nc, ns, n, n)
    comm = pot_corner[:, None] @ bs - bs @ pot_corner[:, None]
    max_comm = float(np.max(np.linalg.norm(comm, ord=2, axis=(-2, -1)))) if comm.size else 0.0

    margin = check_full_ellipticity(data)

    return CompatibilityReport(
        hermitian_defect=hermitian_defect,
        min_potential_eigen=min_pot,
        max_commutator_norm=max_comm,
        full_ellipticity_margin=margin,
        tol=tol,
    )


def check_full_ellipticity(data: CalliasSymbolData) -> float:
    """Smallest singular value of the renormalized total symbol over the
    whole boundary of the compactified phase space."""
    fiber_margin = float(np.min(min_singular_values(data.total_symbol_fiber())))
    interior_margin = float(np.min(min_singular_values(data.interior_symbol.samples)))
    return min(fiber_margin, interior_margin)


def _classify_eigenvectors(a, b, tol, tie_break=1e-3):
    """Joint eigenframes of a commuting pair of Hermitian involutions.

    Diagonalizes a + eps*b to break ties inside shared eigenspaces, then
    classifies each eigenvector by the signs of <v, a v> and <v, b v>.
    """
    _, vecs = np.linalg.eigh(a + tie_break * b)
    frames = {blk: [] for blk in BLOCKS}
    for k in range(vecs.shape[1]):
        v = vecs[:, k]
        la = float(np.real(v.conj() @ a @ v))
        lb = float(np.real(v.conj() @ b @ v))
        if abs(abs(la) - 1.0) > tol or abs(abs(lb) - 1.0) > tol:
            raise DegeneracyError(
                f"joint eigenvalues ({la:.6f}, {lb:.6f}) not within {tol:.1e} of +/-1"
            )
        blk = ("p" if la > 0 else "m") + ("p" if lb > 0 else "m")
        frames[blk].append(v)
    n = a.shape[0]
    return {
        blk: (np.stack(cols, axis=1) if cols else np.zeros((n, 0), dtype=complex))
        for blk, cols in frames.items()
    }


def joint_split(
    op_field: HermitianField,
    pot_field: HermitianField,
    tol: float = 1e-8,
    corner: CornerGrid | None = None,
) -> JointSplitting:
    """Split the fiber into the four joint eigenbundles of a commuting
    pair of unitarized Hermitian fields over the corner."""
    if op_field.samples.shape != pot_field.samples.shape:
        raise StructuralError("fields must share grid and rank")
    a = op_field.samples
    b = pot_field.samples
    comm = a @ b - b @ a
    max_comm = float(np.max(np.linalg.norm(comm, ord=2, axis=(-2, -1))))
    if max_comm > tol * 10:
        raise CompatibilityError(f"fields do not commute: max norm {max_comm:.3e}")

    grid = corner if corner is not None else op_field.grid
    frames = {blk: [] for blk in BLOCKS}
    ranks = {blk: np.zeros(a.shape[0], dtype=int) for blk in BLOCKS}
    for p in range(a.shape[0]):
        fr = _classify_eigenvectors(a[p], b[p], tol)
        for blk in BLOCKS:
            frames[blk].append(fr[blk])
            ranks[blk][p] = fr[blk].shape[1]

    edges = getattr(grid, "edges", None)
    comps = connected_components(a.shape[0], edges)
    for blk in BLOCKS:
        for comp in np.unique(comps):
            r = np.unique(ranks[blk][comps == comp])
            if len(r) != 1:
                raise DiscontinuityError(
                    f"rank of block {blk} jumps across component {comp}: {r}"
                )

    return JointSplitting(corner=grid, frames=frames, ranks=ranks, components=comps)


def commuting_invertibility_bound(
    op_field: HermitianField, pot_field: HermitianField, tol: float = 1e-8
) -> float:
    """min over points and joint eigenpairs (lam, mu) of sqrt(lam^2 + mu^2).

    Equals the smallest singular value of op + i*pot pointwise, because the
    combination is a normal matrix when the pair commutes.
    """
    a, b = op_field.samples, pot_field.samples
    comm = a @ b - b @ a
    scale = max(float(np.max(np.abs(a))), float(np.max(np.abs(b))), 1.0)
    if float(np.max(np.abs(comm))) > tol * scale * 10:
        raise CompatibilityError("fields do not commute pointwise")
    best = np.inf
    for p in range(a.shape[0]):
        ev = np.linalg.eigvals(a[p] + 1j * b[p])
        best = min(best, float(np.min(np.hypot(ev.real, ev.imag))))
    return best


def smoothstep(x: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Cubic smoothstep: 0 below lo, 1 above hi."""
    t = np.clip((np.asarray(x, dtype=float) - lo) / (hi - lo), 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


@dataclass(frozen=True)
class HomotopyPath:
    """Sampled path of matrix fields, produced chunk by chunk.

    ``chunk`` maps a chunk index to a stack of matrices (one path-time
    slice); the full path is never materialized, so certificates over
    large corners stay within memory.
    """

    n_chunks: int
    chunk: object             # callable: index -> (..., n, n) array
    description: str = ""

    def min_singular_value(self) -> float:
        best = np.inf
        for i in range(self.n_chunks):
            best = min(best, float(np.min(min_singular_values(self.chunk(i)))))
        return best


def verify_invertible_path(path) -> float:
    """Global minimum over all samples of the smallest singular value.

    Accepts a ``HomotopyPath`` or a plain array of matrix samples.
    """
    if isinstance(path, HomotopyPath):
        return path.min_singular_value()
    return float(np.min(min_singular_values(np.asarray(path, dtype=complex))))


def build_reduction_homotopy(data: CalliasSymbolData, n_t: int = 16) -> HomotopyPath:
    """Straight-line homotopy from the total symbol to the cutoff
    combination of the unitarized operator and potential signs.

    The cutoff profile in the radial coordinate is derived from where the
    operator symbol's invertibility margin exceeds half its maximum.
    """
    report = validate_compatibility(data)
    if report.min_potential_eigen <= report.tol:
        raise CoverageError(
            "potential is not invertible at the boundary; cutoff neighborhoods "
            "cannot cover the fiber"
        )
    if report.full_ellipticity_margin <= report.tol:
        raise CoverageError("total symbol is not invertible; no valid homotopy")

    s = data.corner.s
    ns = len(s)
    bs = data.boundary_symbol
    # invertibility margin of the operator symbol per radial sample
    margin = np.min(min_singular_values(bs), axis=0)
    half = 0.5 * float(np.max(margin))
    good = margin >= half
    if not good[-1]:
        raise CoverageError("operator symbol not invertible at the sphere face")
    s_lo = float(s[np.argmax(good)])
    chi = smoothstep(s, s_lo, min(1.0, s_lo + max(0.5 * (1.0 - s_lo), 1e-6)))

    pot_corner = data.potential_on_corner()
    b_sign = unitarize_field(pot_corner)                       # (nc, n, n)

    a_sign = np.zeros_like(bs)
    for j in range(ns):
        if chi[j] > 0.0:
            a_sign[:, j] = unitarize_field(bs[:, j])

    tau = data.total_symbol_fiber()                            # (nc, ns, n, n)
    target = chi[None, :, None, None] * a_sign + 1j * (1.0 - chi)[None, :, None, None] * b_sign[:, None]

    # sphere face over the interior: total symbol = interior symbol, chi = 1
    tau_int = data.interior_symbol.samples
    target_int = unitarize_field(tau_int)

    ts = np.linspace(0.0, 1.0, n_t)
    rank = data.rank

    def chunk(i):
        t = ts[i]
        fiber = (1.0 - t) * tau + t * target
        interior = (1.0 - t) * tau_int + t * target_int
        return np.concatenate([fiber.reshape(-1, rank, rank), interior])

    return HomotopyPath(n_chunks=n_t, chunk=chunk, description="reduction to cutoff form")


@dataclass(frozen=True)
class CollarPartition:
    """Partition of unity rho_0..rho_4 and cutoff chi on the collar [0, 1]."""

    u: np.ndarray
    rho: np.ndarray   # (5, n_u)
    chi: np.ndarray

    def validate(self):
        if np.max(np.abs(self.rho.sum(axis=0) - 1.0)) > 1e-12:
            raise PartitionError("partition does not sum to 1")
        supp = [np.abs(r) > 1e-14 for r in self.rho]
        for i in range(5):
            for j in range(i + 2, 5):
                if np.any(supp[i] & supp[j]):
                    raise PartitionError(f"supports of rho_{i} and rho_{j} overlap")
        if np.any(supp[0] & (np.abs(self.chi) > 1e-14)):
            raise PartitionError("support of rho_0 meets the cutoff")


def default_collar_partition(n_u: int = 64) -> CollarPartition:
    """Adjacent smoothstep bumps on disjoint windows of the collar."""
    u = np.linspace(0.0, 1.0, n_u)
    g1 = smoothstep(u, 0.10, 0.20)
    g2 = smoothstep(u, 0.30, 0.40)
    g3 = smoothstep(u, 0.50, 0.60)
    g4 = smoothstep(u, 0.70, 0.80)
    rho = np.stack([1.0 - g1, g1 - g2, g2 - g3, g3 - g4, g4])
    chi = smoothstep(u, 0.22, 0.28)
    part = CollarPartition(u=u, rho=rho, chi=chi)
    part.validate()
    return part


@dataclass(frozen=True)
class CornerTrivialization:
    """Five-stage collar homotopy and the per-block scalar loops."""

    path: HomotopyPath            # one chunk per (stage, time) sample
    final: np.ndarray             # (n_u, nc, n, n) endpoint field
    loops: dict                   # block -> (n_u,) complex scalar loop (or None)
    partition: CollarPartition
    splitting: JointSplitting


def build_corner_trivialization(
    data: CalliasSymbolData,
    partition: CollarPartition | None = None,
    n_t_per_stage: int = 5,
    tol: float = 1e-8,
) -> CornerTrivialization:
    """Deform the cutoff symbol so it is constant (-Id) off the collar,
    leaving one scalar loop per joint eigenbundle.

    On the collar both unitarized fields equal their corner values, so the
    endpoint field is diagonal in the joint splitting with scalar entries;
    those loops carry the whole index datum.
    """
    part = partition if partition is not None else default_collar_partition()
    part.validate()

    a_corner = unitarize_field(data.interior_symbol.samples)
    b_corner = unitarize_field(data.potential_on_corner())
    splitting = joint_split(
        HermitianField(data.corner, a_corner),
        HermitianField(data.corner, b_corner),
        tol=tol,
        corner=data.corner,
    )

    u, rho, chi = part.u, part.rho, part.chi
    nc, n = data.corner.npts, data.rank
    eye = np.eye(n, dtype=complex)

    def f(arr):  # scalar collar profile -> broadcastable factor
        return arr[:, None, None, None]

    A = np.broadcast_to(a_corner, (len(u), nc, n, n))
    B = np.broadcast_to(b_corner, (len(u), nc, n, n))
    Id = np.broadcast_to(eye, (len(u), nc, n, n))
    r0, r1, r2, r3, r4 = (f(rho[i]) for i in range(5))
    ch = f(chi)

    stage_exprs = [
        lambda t: -t * r0 * Id + (1 - ch) * 1j * B + ch * A,
        lambda t: -r0 * Id + (1 - t) * (1 - ch) * 1j * B + t * r1 * 1j * B + ch * A,
        lambda t: -r0 * Id + r1 * 1j * B + ch * A - t * (r3 + r4) * 1j * Id,
        lambda t: -r0 * Id + r1 * 1j * B + (1 - t) * ch * A + t * r2 * A
        - (r3 + r4) * 1j * Id,
        lambda t: -r0 * Id + r1 * 1j * B + r2 * A - r3 * 1j * Id
        - r4 * ((1 - t) * 1j * Id + t * Id),
    ]
    stage_ts = np.linspace(0.0, 1.0, n_t_per_stage)

    def chunk(i):
        expr = stage_exprs[i // n_t_per_stage]
        return expr(stage_ts[i % n_t_per_stage])

    final = stage_exprs[-1](1.0)

    loops = {}
    for blk in BLOCKS:
        sa, sb = BLOCK_SIGNS[blk]
        if int(np.max(splitting.ranks[blk])) == 0:
            loops[blk] = None
            continue
        loops[blk] = (
            -rho[0]
            + rho[1] * 1j * sb
            + rho[2] * sa
            - rho[3] * 1j
            - rho[4]
        ).astype(complex)

    path = HomotopyPath(
        n_chunks=5 * n_t_per_stage, chunk=chunk, description="collar trivialization"
    )
    return CornerTrivialization(
        path=path, final=final, loops=loops, partition=part, splitting=splitting
    )
