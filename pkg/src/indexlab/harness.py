"""Scenario configuration, pipeline orchestration, report emission.

A scenario is either a named built-in or a TOML document.  Running one
walks the stages compatibility -> full ellipticity -> homotopy
certificates -> topological index -> analytic index -> comparison, and
produces an ``IndexReport`` whose verdict is MATCH, MISMATCH, or
TOPO-ONLY (for kinds with no discretized counterpart).
"""

from __future__ import annotations

import csv
import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import tomli

from . import analytic as an
from . import scenarios as sc
from . import symbolic as sy
from . import topo as tp
from .errors import IndexLabError, ScenarioError

STAGES = (
    "parse",
    "compatibility",
    "ellipticity",
    "homotopy",
    "topological",
    "analytic",
    "comparison",
)
# distinct exit code per failing stage; success is 0
STAGE_EXIT_CODES = {name: i + 2 for i, name in enumerate(STAGES)}

KINDS = ("kink", "hedgehog", "scalar-trivial", "synthetic-corner", "custom-symbol-file")

_PROFILES = {
    "tanh": np.tanh,
    "anti-tanh": lambda t: -np.tanh(t),
    "one": lambda t: np.ones_like(np.asarray(t, dtype=float)),
}


@dataclass(frozen=True)
class Scenario:
    """Validated parameters of one pipeline run."""

    name: str
    kind: str
    geometry: dict = field(default_factory=dict)
    potential: dict = field(default_factory=dict)
    solver: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind,
            "geometry": dict(sorted(self.geometry.items())),
            "potential": dict(sorted(self.potential.items())),
            "solver": dict(sorted(self.solver.items())),
        }


_SOLVER_DEFAULTS = {
    "k_singular": 6,
    "seed": 0,
    "gap_ratio_min": an.GAP_RATIO_MIN,
    "abs_tol": 0.0,              # 0 means derive from the boundary gap
    "n_radial": sc.N_RADIAL_DEFAULT,
    "n_collar": 64,
    "n_t_per_stage": 5,
    "tol": 1e-8,
}


def _scn(name, kind, geometry=None, potential=None, solver=None):
    return Scenario(
        name=name,
        kind=kind,
        geometry=geometry or {},
        potential=potential or {},
        solver=dict(_SOLVER_DEFAULTS, **(solver or {})),
    )


def builtin_scenarios() -> dict:
    out = {
        "kink-default": _scn(
            "kink-default", "kink",
            geometry={"extent": 20.0, "n_sites": 2000},
            potential={"profile": "tanh"},
        ),
        "anti-kink": _scn(
            "anti-kink", "kink",
            geometry={"extent": 20.0, "n_sites": 2000},
            potential={"profile": "anti-tanh"},
        ),
        "scalar-trivial-1d": _scn(
            "scalar-trivial-1d", "scalar-trivial",
            geometry={"dimension": 1, "extent": 20.0, "n_sites": 2000},
            potential={"profile": "one"},
        ),
        "scalar-trivial-3d": _scn(
            "scalar-trivial-3d", "scalar-trivial",
            geometry={"dimension": 3, "radius": 12.0, "n_per_axis": 12,
                      "n_sphere": 24, "n_corner_sphere": 8},
            potential={"coupling": 1.0},
        ),
    }
    out["kink"] = dataclasses.replace(out["kink-default"], name="kink")
    for k in (1, 2):
        out[f"hedgehog-{k}"] = _scn(
            f"hedgehog-{k}", "hedgehog",
            geometry={"radius": 12.0, "n_per_axis": 16, "n_sphere": 24,
                      "n_corner_sphere": 8},
            potential={"charge": k, "coupling": 1.0},
        )
    out["hedgehog-0"] = dataclasses.replace(
        out["scalar-trivial-3d"], name="hedgehog-0"
    )
    for k in range(-2, 3):
        tag = f"m{-k}" if k < 0 else str(k)
        out[f"synthetic-corner-{tag}"] = _scn(
            f"synthetic-corner-{tag}", "synthetic-corner",
            geometry={"n_base": 48, "n_fiber": 48},
            potential={"winding": k},
        )
    return out


_SCHEMA = {
    "": {"name", "kind", "geometry", "potential", "solver"},
    "geometry": {
        "extent", "n_sites", "dimension", "radius", "n_per_axis", "n_sphere",
        "n_corner_sphere", "n_base", "n_fiber", "rank",
    },
    "potential": {"profile", "charge", "coupling", "winding", "interior_file",
                  "potential_file"},
    "solver": set(_SOLVER_DEFAULTS),
}


def _check_keys(doc: dict):
    for key, val in doc.items():
        if key not in _SCHEMA[""]:
            raise ScenarioError(f"unknown key '{key}' in scenario configuration")
        if key in ("geometry", "potential", "solver"):
            if not isinstance(val, dict):
                raise ScenarioError(f"'{key}' must be a table")
            for sub in val:
                if sub not in _SCHEMA[key]:
                    raise ScenarioError(f"unknown key '{key}.{sub}'")


def _validate(s: Scenario) -> Scenario:
    g, p = s.geometry, s.potential
    if s.kind not in KINDS:
        raise ScenarioError(f"unknown scenario kind '{s.kind}'")
    if s.kind == "kink" or (s.kind == "scalar-trivial" and g.get("dimension", 1) == 1):
        if g.get("n_sites", 2000) < 64:
            raise ScenarioError(
                "n_sites must be at least 64 (one-dimensional assembly "
                "precondition)"
            )
        if p.get("profile", "tanh") not in _PROFILES:
            raise ScenarioError(f"unknown potential profile '{p.get('profile')}'")
    elif s.kind == "hedgehog" or s.kind == "scalar-trivial":
        if g.get("n_per_axis", 16) < 12:
            raise ScenarioError(
                "n_per_axis must be at least 12 (three-dimensional assembly "
                "precondition)"
            )
        if p.get("coupling", 1.0) * g.get("radius", 12.0) < 6.0:
            raise ScenarioError(
                "coupling * radius must be at least 6 (zero-mode decay margin)"
            )
        if g.get("n_sphere", 24) < 4 or g.get("n_corner_sphere", 8) < 4:
            raise ScenarioError("sphere grids need at least 4 points per edge")
    elif s.kind == "synthetic-corner":
        if g.get("n_base", 48) < 3 or g.get("n_fiber", 48) < 3:
            raise ScenarioError("circle grids need at least 3 samples")
    elif s.kind == "custom-symbol-file":
        for need in ("interior_file", "potential_file"):
            if need not in p:
                raise ScenarioError(f"custom symbol data needs potential.{need}")
        for need in ("n_base", "n_fiber", "rank"):
            if need not in g:
                raise ScenarioError(f"custom symbol data needs geometry.{need}")
    if not 1 <= int(s.solver["k_singular"]) <= 16:
        raise ScenarioError("k_singular must lie in [1, 16]")
    return s


def parse_scenario(text_or_name: str, overrides: dict | None = None) -> Scenario:
    """Resolve a built-in name or parse a TOML scenario document.

    Unknown keys are rejected; TOML syntax errors surface with the line
    and column reported by the parser.
    """
    builtins = builtin_scenarios()
    if text_or_name.strip() in builtins:
        s = builtins[text_or_name.strip()]
    else:
        try:
            doc = tomli.loads(text_or_name)
        except tomli.TOMLDecodeError as exc:
            line = col = None
            # tomli reports "... (at line L, column C)"
            msg = str(exc)
            if "at line " in msg:
                try:
                    tail = msg.rsplit("at line ", 1)[1]
                    line = int(tail.split(",")[0])
                    col = int(tail.split("column ")[1].rstrip(")"))
                except (IndexError, ValueError):
                    pass
            raise ScenarioError(f"scenario parse error: {msg}", line=line, column=col)
        _check_keys(doc)
        if "kind" not in doc:
            raise ScenarioError("scenario configuration needs a 'kind'")
        s = _scn(
            doc.get("name", "custom"),
            doc["kind"],
            geometry=doc.get("geometry", {}),
            potential=doc.get("potential", {}),
            solver=doc.get("solver", {}),
        )
    if overrides:
        solver = dict(s.solver)
        for key, val in overrides.items():
            if key not in _SCHEMA["solver"]:
                raise ScenarioError(f"unknown solver override '{key}'")
            solver[key] = val
        s = dataclasses.replace(s, solver=solver)
    return _validate(s)


@dataclass
class IndexReport:
    """Full record of one scenario run."""

    scenario: dict
    verdict: str = "INCOMPLETE"
    compatibility: dict | None = None
    ellipticity_margin: float | None = None
    homotopy: dict | None = None
    winding_table: dict | None = None
    topological: dict | None = None
    analytic: dict | None = None
    error: dict | None = None
    curvature: list = field(default_factory=list)
    zero_modes: list = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        if self.error is not None:
            return STAGE_EXIT_CODES.get(self.error["stage"], 1)
        if self.verdict == "MISMATCH":
            return STAGE_EXIT_CODES["comparison"]
        return 0

    def as_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "verdict": self.verdict,
            "compatibility": self.compatibility,
            "ellipticity_margin": self.ellipticity_margin,
            "homotopy": self.homotopy,
            "winding_table": self.winding_table,
            "topological": self.topological,
            "analytic": self.analytic,
            "error": self.error,
        }


def _load_symbol_file(path: str, shape: tuple) -> np.ndarray:
    """Row-major little-endian float64 re/im pairs."""
    raw = np.fromfile(path, dtype="<f8")
    need = 2 * int(np.prod(shape))
    if raw.size != need:
        raise ScenarioError(
            f"symbol file {path} holds {raw.size} floats, expected {need}"
        )
    return (raw[0::2] + 1j * raw[1::2]).reshape(shape)


def _build_symbol_data(s: Scenario):
    """Symbol data, optional Clifford data, optional analytic assembler."""
    g, p = s.geometry, s.potential
    n_s = int(s.solver["n_radial"])
    if s.kind == "kink" or (s.kind == "scalar-trivial" and g.get("dimension", 1) == 1):
        profile = _PROFILES[p.get("profile", "tanh")]
        ends = (float(profile(-g["extent"])), float(profile(g["extent"])))
        data = sc.build_wall_symbol_data(ends, name=s.name, n_s=n_s)
        cliff = sc.build_wall_clifford_data(ends)

        def assemble(n_sites=None, extent=None):
            return an.assemble_kink_1d(
                profile, extent or g["extent"], int(n_sites or g["n_sites"]),
                name=s.name,
            )

        return data, cliff, assemble
    if s.kind == "hedgehog" or s.kind == "scalar-trivial":
        charge = int(p.get("charge", 0))
        coupling = float(p.get("coupling", 1.0))
        data = sc.build_monopole_symbol_data(
            charge, coupling, n_sphere=int(g.get("n_corner_sphere", 8)), n_s=n_s
        )
        cliff = sc.build_monopole_clifford_data(
            charge, coupling, n_sphere=int(g.get("n_sphere", 24))
        )

        def assemble(n_per_axis=None, radius=None):
            return an.assemble_hedgehog_3d(
                charge=charge, coupling=coupling,
                radius=radius or g.get("radius", 12.0),
                n_per_axis=int(n_per_axis or g.get("n_per_axis", 16)),
                name=s.name,
            )

        return data, cliff, assemble
    if s.kind == "synthetic-corner":
        data = sc.build_synthetic_corner_data(
            int(p["winding"]), int(g.get("n_base", 48)), int(g.get("n_fiber", 48)),
            n_s=n_s,
        )
        return data, None, None
    if s.kind == "custom-symbol-file":
        from .geometry import build_circle_grid, build_corner_grid

        base = build_circle_grid(int(g["n_base"]))
        fiber = build_circle_grid(int(g["n_fiber"]))
        corner = build_corner_grid(base, fiber, n_radial=n_s)
        rank = int(g["rank"])
        interior = _load_symbol_file(p["interior_file"], (corner.npts, rank, rank))
        potential = _load_symbol_file(p["potential_file"], (base.npts, rank, rank))
        data = sc._first_order_symbol_data(s.name, corner, interior, potential, n_s)
        return data, None, None
    raise ScenarioError(f"unknown scenario kind '{s.kind}'")


def run_scenario(s: Scenario, collect_zero_modes: bool = False) -> IndexReport:
    """Run the full dual pipeline; stage failures are captured in the
    report with stage attribution rather than raised."""
    report = IndexReport(scenario=s.as_dict())
    tol = float(s.solver["tol"])

    def fail(stage, exc):
        report.error = {"stage": stage, "message": str(exc),
                        "type": type(exc).__name__}
        report.verdict = "ERROR"
        return report

    try:
        data, cliff, assemble = _build_symbol_data(s)
    except (IndexLabError, KeyError, ValueError, OSError) as exc:
        return fail("parse", exc)

    try:
        comp = sy.validate_compatibility(data, tol=tol)
        report.compatibility = comp.as_dict()
        if not comp.passed:
            raise sy.CompatibilityError(
                "boundary compatibility conditions violated: "
                + json.dumps(comp.as_dict())
            )
    except IndexLabError as exc:
        return fail("compatibility", exc)

    try:
        margin = sy.check_full_ellipticity(data)
        report.ellipticity_margin = float(margin)
        if margin <= tol:
            raise sy.SingularityError(
                f"total symbol margin {margin:.3e} below tolerance",
                min_singular_value=float(margin),
            )
    except IndexLabError as exc:
        return fail("ellipticity", exc)

    try:
        partition = sy.default_collar_partition(int(s.solver["n_collar"]))
        reduction = sy.build_reduction_homotopy(data)
        triv = sy.build_corner_trivialization(
            data, partition=partition,
            n_t_per_stage=int(s.solver["n_t_per_stage"]), tol=tol,
        )
        red_min = sy.verify_invertible_path(reduction)
        triv_min = sy.verify_invertible_path(triv.path)
        report.homotopy = {
            "reduction_min_singular_value": float(red_min),
            "trivialization_min_singular_value": float(triv_min),
        }
        report.winding_table = tp.block_winding_table(triv)
        if min(red_min, triv_min) <= 0.0:
            raise sy.SingularityError(
                "homotopy path is not invertible", min_singular_value=0.0
            )
    except IndexLabError as exc:
        return fail("homotopy", exc)

    try:
        topo_info: dict = {}
        corner = data.corner
        if corner.base.dim + corner.fiber.dim == 0:
            topo_index = tp.corner_index_0d(triv.splitting)
            topo_info["corner_index"] = topo_index
            if cliff is not None:
                topo_info["dirac_index"] = tp.dirac_topo_index(cliff, tol=tol)
        elif corner.kind == corner.KIND_TORUS:
            topo_index, raw = tp.corner_index_2d(triv.splitting)
            topo_info["corner_index"] = topo_index
            topo_info["raw_chern_sum"] = float(raw)
            frames = triv.splitting.block_frames_array("pp")
            _, _, fluxes = tp.fhs_chern_number(
                tp.BundleFrameField(tp._corner_surface_grid(corner), frames)
            )
            report.curvature = [
                (int(i), float(f)) for i, f in enumerate(fluxes)
            ]
        else:
            # doubled-sphere corner: index through the Dirac reduction
            f_plus, _ = tp.potential_split(cliff.twist_potential, tol=tol)
            c, raw, fluxes = tp.fhs_chern_number(
                tp.BundleFrameField(cliff.boundary, f_plus)
            )
            topo_index = tp.dirac_topo_index(cliff, tol=tol)
            topo_info["dirac_index"] = topo_index
            topo_info["twist_chern"] = int(c)
            topo_info["raw_chern_sum"] = float(raw)
            report.curvature = [
                (int(i), float(f)) for i, f in enumerate(fluxes)
            ]
        topo_info["index"] = int(topo_index)
        report.topological = topo_info
    except IndexLabError as exc:
        return fail("topological", exc)

    if assemble is None:
        report.verdict = "TOPO-ONLY"
        return report

    try:
        op = assemble()
        abs_tol = float(s.solver["abs_tol"]) or None
        spectral = an.analytic_index(
            op,
            k=int(s.solver["k_singular"]),
            seed=int(s.solver["seed"]),
            gap_ratio_min=float(s.solver["gap_ratio_min"]),
            abs_tol=abs_tol,
        )
        report.analytic = spectral.as_dict()
        if collect_zero_modes:
            report.zero_modes = _zero_mode_rows(op, s)
    except IndexLabError as exc:
        return fail("analytic", exc)

    report.verdict = "MATCH" if spectral.index == topo_index else "MISMATCH"
    return report


def _zero_mode_rows(op, s: Scenario) -> list:
    """Site coordinates and components of the accepted near-zero modes."""
    rows = []
    for adjoint in (False, True):
        sv, vecs = an.smallest_singular_values(
            op, k=int(s.solver["k_singular"]), adjoint=adjoint,
            seed=int(s.solver["seed"]), return_vectors=True,
        )
        for i, val in enumerate(sv):
            if val < op.abs_tol:
                v = vecs[:, i].reshape(op.n_sites, op.fiber_rank)
                side = "adjoint" if adjoint else "operator"
                for p in range(op.n_sites):
                    rows.append(
                        (side, i, *map(float, op.site_coords[p]),
                         *[f"{c.real:.12e}{c.imag:+.12e}j" for c in v[p]])
                    )
    return rows


def emit_report(report: IndexReport, out_dir, fmt: str = "json") -> list:
    """Serialize a report deterministically; returns the written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if fmt == "json":
        path = out / "report.json"
        path.write_text(
            json.dumps(report.as_dict(), sort_keys=True, indent=2) + "\n"
        )
        written.append(path)
    elif fmt == "csv":
        summary = out / "summary.csv"
        with summary.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["key", "value"])
            for key, val in sorted(_flatten(report.as_dict()).items()):
                w.writerow([key, val])
        written.append(summary)

        curvature = out / "curvature.csv"
        with curvature.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["plaquette", "flux"])
            w.writerows(report.curvature)
        written.append(curvature)

        spectrum = out / "spectrum.csv"
        with spectrum.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["rank", "singular_value", "cosingular_value"])
            if report.analytic:
                for i, (a, b) in enumerate(
                    zip(report.analytic["singular_values"],
                        report.analytic["cosingular_values"])
                ):
                    w.writerow([i, a, b])
        written.append(spectrum)

        if report.zero_modes:
            zpath = out / "zeromode.csv"
            with zpath.open("w", newline="") as fh:
                csv.writer(fh).writerows(report.zero_modes)
            written.append(zpath)
    elif fmt == "text":
        path = out / "report.txt"
        lines = [f"scenario: {report.scenario['name']}",
                 f"verdict: {report.verdict}"]
        if report.topological:
            lines.append(f"topological index: {report.topological['index']}")
        if report.analytic:
            lines.append(f"analytic index: {report.analytic['index']}")
        if report.error:
            lines.append(
                f"error at stage {report.error['stage']}: {report.error['message']}"
            )
        path.write_text("\n".join(lines) + "\n")
        written.append(path)
    else:
        raise ScenarioError(f"unknown report format '{fmt}'")
    return written


def _flatten(d: dict, prefix: str = "") -> dict:
    out = {}
    for key, val in d.items():
        name = f"{prefix}.{key}" if prefix else str(key)
        if isinstance(val, dict):
            out.update(_flatten(val, name))
        elif isinstance(val, (list, tuple)):
            out[name] = json.dumps(val)
        else:
            out[name] = val
    return out
