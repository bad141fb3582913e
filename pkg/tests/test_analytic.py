import numpy as np
import pytest

from indexlab import analytic as an
from indexlab.errors import (
    DecayMarginError,
    IndeterminateCountError,
    StructuralError,
    TruncationError,
)


@pytest.fixture(scope="module")
def kink_op():
    return an.assemble_kink_1d(np.tanh, extent=20.0, n_sites=2000)


def test_count_zero_modes_single_mode():
    assert an.count_zero_modes([1e-9, 0.8, 1.1], gap_ratio_min=100, abs_tol=1e-3) == 1


def test_count_zero_modes_none():
    assert an.count_zero_modes([0.5, 0.8], gap_ratio_min=100, abs_tol=1e-3) == 0


def test_count_zero_modes_cut_at_large_gap():
    # second value below tol but the certified gap sits after it
    assert an.count_zero_modes([1e-5, 1e-4, 0.9], gap_ratio_min=100, abs_tol=1e-3) == 2


def test_count_zero_modes_indeterminate():
    with pytest.raises(IndeterminateCountError):
        an.count_zero_modes([1e-4, 2e-3, 0.9], gap_ratio_min=100, abs_tol=1e-3)


def test_count_zero_modes_requires_sorted():
    with pytest.raises(StructuralError):
        an.count_zero_modes([0.5, 0.1], gap_ratio_min=100, abs_tol=1e-3)


def test_kink_assembly_shape_and_gap(kink_op):
    assert kink_op.matrix.shape == (2000, 2000)
    assert kink_op.boundary_gap == pytest.approx(np.tanh(20.0))


def test_kink_rejects_coarse_grids():
    with pytest.raises(StructuralError):
        an.assemble_kink_1d(np.tanh, extent=20.0, n_sites=32)


def test_kink_rejects_unconverged_walls():
    with pytest.raises(TruncationError):
        an.assemble_kink_1d(np.tanh, extent=0.3, n_sites=200)


def test_singular_values_sorted_nonnegative_with_residuals(kink_op):
    sv = an.smallest_singular_values(kink_op, k=4)
    assert np.all(sv >= 0)
    assert np.all(np.diff(sv) >= 0)


def test_kink_analytic_index(kink_op):
    rep = an.analytic_index(kink_op, k=4, seed=0)
    assert rep.index == -1
    assert rep.kernel_dim == 0 and rep.cokernel_dim == 1
    assert rep.gap_ratio > an.GAP_RATIO_MIN
    assert max(rep.residuals) <= 1e-8


def test_kink_cokernel_mode_matches_sech_oracle(kink_op):
    # the adjoint (i d/dt + i tanh) kernel is spanned by sech(t)
    sv, vecs = an.smallest_singular_values(
        kink_op, k=3, adjoint=True, return_vectors=True
    )
    assert sv[0] < 1e-4 and sv[1] > 0.5
    mode = vecs[:, 0]
    t = kink_op.site_coords[:, 0]
    oracle = 1.0 / np.cosh(t)
    oracle /= np.linalg.norm(oracle)
    overlap = abs(np.vdot(mode, oracle))
    assert overlap > 0.999


def test_anti_kink_analytic_index():
    op = an.assemble_kink_1d(lambda t: -np.tanh(t), extent=20.0, n_sites=2000)
    rep = an.analytic_index(op, k=4, seed=0)
    assert rep.index == 1


def test_scalar_analytic_index_zero():
    op = an.assemble_kink_1d(
        lambda t: np.ones_like(np.asarray(t, dtype=float)),
        extent=20.0, n_sites=1000,
    )
    rep = an.analytic_index(op, k=4, seed=0)
    assert rep.index == 0


def test_identity_stub_singular_values():
    import scipy.sparse as sp

    op = an.DiscretizedOperator(
        name="identity", dim=1, matrix=sp.identity(50, format="csc", dtype=complex),
        site_coords=np.linspace(-1, 1, 50)[:, None], fiber_rank=1,
        spacing=0.04, radius=1.0, boundary_gap=1.0, params={},
    )
    sv = an.smallest_singular_values(op, k=3)
    np.testing.assert_allclose(sv, [1.0, 1.0, 1.0], atol=1e-9)


def test_hedgehog_rejects_thin_decay_margin():
    with pytest.raises(DecayMarginError):
        an.assemble_hedgehog_3d(charge=1, coupling=0.2, radius=12.0, n_per_axis=12)


def test_hedgehog_direction_degrees():
    coords = np.array([[1.0, 2.0, 2.0], [0.0, 0.0, 1e-12]])
    n1 = an.hedgehog_direction(coords, 1)
    np.testing.assert_allclose(np.linalg.norm(n1, axis=1), 1.0, atol=1e-9)


def test_convergence_sweep_kink_stable():
    results = an.convergence_sweep(
        lambda n_sites: an.assemble_kink_1d(np.tanh, 20.0, int(n_sites)),
        [500, 1000], k=4, seed=0,
    )
    assert [r[1] for r in results] == [-1, -1]


def test_bulk_localization_separates_modes(kink_op):
    rep = an.analytic_index(kink_op, k=4, seed=0)
    # accepted cokernel mode concentrates in the bulk
    assert min(rep.bulk_fractions_cokernel) > an.BULK_NORM_FRACTION
