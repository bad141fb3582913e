"""Acceptance gate: ten criteria, one recorded PASS/FAIL line each.

Heavy artifacts (trivializations, three-dimensional solves) are shared
through module-scoped fixtures so the whole gate stays within its runtime
budget.  The criterion lines are printed in the pytest terminal summary.
"""

import time

import numpy as np
import pytest

from indexlab import analytic as an
from indexlab import geometry as ge
from indexlab import harness as hz
from indexlab import scenarios as sc
from indexlab import symbolic as sy
from indexlab import topo as tp

from conftest import ACCEPTANCE_LINES

# corners with two-dimensional total corner, where the surface index
# formula and its sign relations are defined; the restricted
# doubled-sphere corner of the monopole kinds carries no fiber direction
# data, so its index goes through the Dirac reduction instead and it is
# excluded from the corner-formula-only criteria below
SIGN_RELATION_SCENARIOS = (
    "kink-default", "anti-kink", "scalar-trivial-1d",
    "synthetic-corner-m2", "synthetic-corner-m1", "synthetic-corner-0",
    "synthetic-corner-1", "synthetic-corner-2",
)

ALL_BUILTINS = SIGN_RELATION_SCENARIOS + (
    "scalar-trivial-3d", "hedgehog-1", "hedgehog-2",
)


def record(number: int, label: str, ok: bool):
    ACCEPTANCE_LINES.append(
        f"criterion {number:02d} ({label}): {'PASS' if ok else 'FAIL'}"
    )
    assert ok, f"criterion {number} ({label}) failed"


@pytest.fixture(scope="module")
def trivializations():
    """Corner trivialization of every built-in scenario, keyed by name."""
    out = {}
    for name in ALL_BUILTINS:
        data, _, _ = hz._build_symbol_data(hz.parse_scenario(name))
        out[name] = sy.build_corner_trivialization(data)
    return out


@pytest.fixture(scope="module")
def hedgehog_result():
    start = time.time()
    report = hz.run_scenario(hz.parse_scenario("hedgehog-1"))
    return report, time.time() - start


def test_criterion_1_kink_equality():
    start = time.time()
    kink = hz.run_scenario(hz.parse_scenario("kink-default"))
    anti = hz.run_scenario(hz.parse_scenario("anti-kink"))
    elapsed = time.time() - start
    ok = (
        kink.verdict == "MATCH"
        and kink.analytic["index"] == -1
        and kink.topological["corner_index"] == -1
        and anti.verdict == "MATCH"
        and anti.analytic["index"] == 1
        and anti.topological["corner_index"] == 1
        and elapsed < 10.0
    )
    record(1, "kink equality, both routes, < 10 s", ok)


def test_criterion_2_hedgehog_equality(hedgehog_result):
    report, elapsed = hedgehog_result
    cliff = sc.build_monopole_clifford_data(1, 1.0, n_sphere=24)
    dirac = tp.dirac_topo_index(cliff)
    ok = (
        report.verdict == "MATCH"
        and abs(report.analytic["index"]) == 1
        and report.analytic["gap_ratio"] > 1e2
        and report.analytic["index"] == dirac
        and elapsed < 600.0
    )
    record(2, "hedgehog-1 equality with Dirac reduction, < 10 min", ok)


def test_criterion_3_scalar_triviality():
    start = time.time()
    r1 = hz.run_scenario(hz.parse_scenario("scalar-trivial-1d"))
    r3 = hz.run_scenario(hz.parse_scenario("scalar-trivial-3d"))
    elapsed = time.time() - start
    ok = (
        r1.verdict == "MATCH" and r1.topological["index"] == 0
        and r1.analytic["index"] == 0
        and r3.verdict == "MATCH" and r3.topological["index"] == 0
        and r3.analytic["index"] == 0
        and elapsed < 60.0
    )
    record(3, "scalar potentials are trivial in 1d and 3d, < 1 min", ok)


def test_criterion_4_winding_table(trivializations):
    expected = {"pp": -1, "mm": 0, "pm": 0, "mp": 0}
    tables = {
        name: tp.block_winding_table(triv)
        for name, triv in trivializations.items()
    }
    ok = all(table == expected for table in tables.values())
    record(4, "block windings are (-1, 0, 0, 0) on every built-in", ok)


def test_criterion_5_homotopy_certificates(trivializations):
    margins = [
        sy.verify_invertible_path(triv.path)
        for triv in trivializations.values()
    ]
    for seed in range(100):
        rank = 2 + seed % 7  # ranks 2..8
        data = sc.random_compatible_data(rank=rank, seed=seed)
        margins.append(sy.verify_invertible_path(sy.build_reduction_homotopy(data)))
        triv = sy.build_corner_trivialization(data)
        margins.append(sy.verify_invertible_path(triv.path))
    ok = min(margins) > 0.0
    record(5, "all homotopy paths stay invertible (built-ins + 100 random)", ok)


def test_criterion_6_commuting_pair_property():
    ok = True
    t, s_grid = np.meshgrid(
        np.linspace(0.1, 1.0, 10), np.linspace(0.1, 1.0, 10), indexing="ij"
    )
    for seed in range(100):
        rank = 2 + seed % 7
        data = sc.random_compatible_data(rank=rank, seed=1000 + seed)
        a = data.interior_symbol.samples
        b = data.potential_on_corner()
        corner = data.corner
        bound = sy.commuting_invertibility_bound(
            sy.HermitianField(corner, a), sy.HermitianField(corner, b)
        )
        direct = float(np.min(sy.min_singular_values(a + 1j * b)))
        if abs(bound - direct) > 1e-8:
            ok = False
            break
        combos = (
            t[..., None, None, None] * a + 1j * s_grid[..., None, None, None] * b
        )
        if float(np.min(sy.min_singular_values(combos))) <= 0.0:
            ok = False
            break
    record(6, "commuting pair invertibility bound on 100 seeded datasets", ok)


def _band_frames(sphere, band):
    pauli = np.array(
        [[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]], dtype=complex
    )
    h = sum(sphere.points[:, i, None, None] * pauli[i] for i in range(3))
    _, vecs = np.linalg.eigh(h)
    return vecs[:, :, 0 if band < 0 else 1][:, :, None]


def test_criterion_7_chern_quantization():
    ok = True
    results = {}
    for n in (24, 48):
        sphere = ge.build_sphere_grid(n)
        for band in (-1, +1):
            c, raw, _ = tp.fhs_chern_number(
                tp.BundleFrameField(sphere, _band_frames(sphere, band))
            )
            results[(n, band)] = c
            ok = ok and abs(raw - c) < tp.CHERN_QUANTIZATION_TOL
        cliff = sc.build_monopole_clifford_data(2, 1.0, n_sphere=n)
        f_plus, _ = tp.potential_split(cliff.twist_potential)
        c2, raw2, _ = tp.fhs_chern_number(tp.BundleFrameField(sphere, f_plus))
        results[(n, "deg2")] = c2
        ok = ok and abs(raw2 - c2) < tp.CHERN_QUANTIZATION_TOL
    # Berry-flux oracle: spin-1/2 bands carry -/+1; stable under doubling
    ok = ok and results[(24, -1)] == -1 and results[(24, +1)] == 1
    ok = ok and results[(48, -1)] == -1 and results[(48, +1)] == 1
    ok = ok and abs(results[(24, "deg2")]) == 2
    ok = ok and results[(24, "deg2")] == results[(48, "deg2")]
    record(7, "lattice Chern numbers quantized and stable under doubling", ok)


def test_criterion_8_clutching_identity():
    ok = True
    for k in (1, 2):
        data = sc.build_monopole_symbol_data(k, 1.0, n_sphere=8)
        triv = sy.build_corner_trivialization(data)
        cliff = sc.build_monopole_clifford_data(k, 1.0, n_sphere=8)
        rep = tp.verify_clutching_decomposition(
            triv.splitting, cliff, corner_value=k
        )
        ok = ok and rep.passed and rep.max_span_angle < 1e-8
    for k in range(-2, 3):
        data, cliff = sc.build_clutching_circle_data(k, n_base=48, n_fiber=48)
        triv = sy.build_corner_trivialization(data)
        corner_value, _ = tp.corner_index_2d(triv.splitting)
        rep = tp.verify_clutching_decomposition(triv.splitting, cliff, corner_value)
        ok = ok and rep.passed and rep.clutched_value == corner_value == k
    record(8, "clutching identity on hedgehog and circle families", ok)


def test_criterion_9_eigenbundle_sign_relations(trivializations):
    ok = True
    for name in SIGN_RELATION_SCENARIOS:
        rel = tp.verify_sign_relations(trivializations[name].splitting)
        ok = ok and rel["pp"] == rel["mm"] == -rel["pm"] == -rel["mp"]
    record(9, "corner index sign relations across the four eigenbundles", ok)


def test_criterion_10_stability(hedgehog_result):
    ok = True
    # kink potential scaling holds lambda * extent fixed: the zero-mode
    # singular value scales like exp(-2 * lambda * extent), and past
    # ~1e-30 it drops below the factorization noise floor where the
    # shift-invert solver returns spurious numerical multiplicity
    for lam in (1.0, 2.0, 4.0):
        op = an.assemble_kink_1d(
            lambda t: lam * np.tanh(t),
            extent=20.0 / lam, n_sites=int(2000 / lam),
        )
        ok = ok and an.analytic_index(op, k=4, seed=0).index == -1
    # kink domain doubling at constant spacing (the mode's singular
    # value at extent 40 would sit below the noise floor, so the pair
    # doubles 10 -> 20), then a refinement sweep on the doubled box
    for extent, n_sites in ((10.0, 1000), (20.0, 2000)):
        op = an.assemble_kink_1d(np.tanh, extent=extent, n_sites=n_sites)
        ok = ok and an.analytic_index(op, k=4, seed=0).index == -1
    sweep = an.convergence_sweep(
        lambda n_sites: an.assemble_kink_1d(np.tanh, 20.0, int(n_sites)),
        [2000, 4000], k=4, seed=0,
    )
    ok = ok and all(idx == -1 for _, idx, _ in sweep)

    # hedgehog potential scaling: the zero mode has width ~1/lambda, so
    # the domain scales with 1/lambda to hold lambda*h (resolution) and
    # lambda*R (decay margin) fixed at their calibrated baseline values
    base_index = hedgehog_result[0].analytic["index"]
    for lam, radius in ((2.0, 6.0), (4.0, 3.0)):
        op = an.assemble_hedgehog_3d(
            charge=1, coupling=lam, radius=radius, n_per_axis=16
        )
        ok = ok and an.analytic_index(op, k=6, seed=0).index == base_index
    # domain doubling at constant spacing h = 1.5, identical solver
    # settings on both boxes: the base box's truncation puts the mode's
    # singular value just above the default threshold (gap ratio ~70,
    # still decisive) and the continuum mode's own tail outside r = R/2
    # is ~2% there, so the thresholds are set where the *separation*
    # stays sharp (bulk fractions 0.98 vs 0.002)
    for radius, n in ((9.0, 12), (18.0, 24)):
        op = an.assemble_hedgehog_3d(
            charge=1, coupling=1.0, radius=radius, n_per_axis=n
        )
        rep = an.analytic_index(op, k=6, seed=0, abs_tol=5e-3, bulk_fraction=0.95)
        ok = ok and rep.index == base_index
    record(10, "index stable under potential scaling and domain doubling", ok)
