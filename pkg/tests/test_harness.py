import json

import numpy as np
import pytest

from indexlab import harness as hz
from indexlab import scenarios as sc
from indexlab.cli import main as cli_main
from indexlab.errors import ScenarioError


def test_builtin_names_resolve():
    names = hz.builtin_scenarios()
    for required in (
        "kink-default", "kink", "anti-kink", "scalar-trivial-1d",
        "scalar-trivial-3d", "hedgehog-0", "hedgehog-1", "hedgehog-2",
        "synthetic-corner-m2", "synthetic-corner-m1", "synthetic-corner-0",
        "synthetic-corner-1", "synthetic-corner-2",
    ):
        assert required in names
        assert hz.parse_scenario(required).name == required


def test_parse_rejects_unknown_keys():
    with pytest.raises(ScenarioError, match="unknown key 'bogus'"):
        hz.parse_scenario('kind = "kink"\nbogus = 1\n')


def test_parse_rejects_unknown_subkeys():
    with pytest.raises(ScenarioError, match="geometry.width"):
        hz.parse_scenario('kind = "kink"\n[geometry]\nwidth = 2\n')


def test_parse_validation_names_the_precondition():
    with pytest.raises(ScenarioError, match="n_sites must be at least 64"):
        hz.parse_scenario('kind = "kink"\n[geometry]\nn_sites = 2\n')


def test_parse_syntax_error_reports_line_and_column():
    with pytest.raises(ScenarioError) as exc:
        hz.parse_scenario("kind = kink\n")
    assert exc.value.line == 1
    assert exc.value.column is not None


def test_parse_applies_solver_overrides():
    s = hz.parse_scenario("kink", overrides={"seed": 7, "k_singular": 8})
    assert s.solver["seed"] == 7
    assert s.solver["k_singular"] == 8
    with pytest.raises(ScenarioError, match="unknown solver override"):
        hz.parse_scenario("kink", overrides={"n_sites": 10})


def test_stage_exit_codes_are_distinct():
    codes = list(hz.STAGE_EXIT_CODES.values())
    assert len(set(codes)) == len(codes)
    assert 0 not in codes and 1 not in codes
    assert hz.STAGE_EXIT_CODES["parse"] == 2
    assert hz.STAGE_EXIT_CODES["comparison"] == 8


@pytest.fixture(scope="module")
def kink_report():
    return hz.run_scenario(hz.parse_scenario("kink-default"))


def test_run_kink_matches(kink_report):
    assert kink_report.verdict == "MATCH"
    assert kink_report.exit_code == 0
    assert kink_report.topological["index"] == -1
    assert kink_report.analytic["index"] == -1
    assert kink_report.winding_table == {"pp": -1, "mm": 0, "pm": 0, "mp": 0}
    assert kink_report.homotopy["trivialization_min_singular_value"] > 0


def test_run_synthetic_corner_is_topo_only():
    s = hz.parse_scenario('kind = "synthetic-corner"\n'
                          '[geometry]\nn_base = 32\nn_fiber = 32\n'
                          '[potential]\nwinding = 1\n')
    report = hz.run_scenario(s)
    assert report.verdict == "TOPO-ONLY"
    assert report.exit_code == 0
    assert report.topological["index"] == 1
    assert len(report.curvature) > 0


def test_run_captures_analytic_stage_failure():
    # the symbol data is fine but the wall has not converged at this
    # extent, so assembly fails and is attributed to the analytic stage
    s = hz.parse_scenario('kind = "kink"\n[potential]\nprofile = "tanh"\n'
                          '[geometry]\nextent = 0.0001\nn_sites = 100\n')
    report = hz.run_scenario(s)
    assert report.verdict == "ERROR"
    assert report.error["stage"] == "analytic"
    assert report.exit_code == hz.STAGE_EXIT_CODES["analytic"]


def test_run_captures_compatibility_failure(tmp_path):
    # custom symbol data with a singular potential must stop at the
    # compatibility stage with its distinct exit code
    data = sc.build_synthetic_corner_data(1, n_base=16, n_fiber=16)

    def dump(path, arr):
        flat = np.asarray(arr, dtype=complex).ravel()
        np.stack([flat.real, flat.imag], axis=1).astype("<f8").tofile(path)

    interior_path = tmp_path / "interior.bin"
    potential_path = tmp_path / "potential.bin"
    dump(interior_path, data.interior_symbol.samples)
    dump(potential_path, np.zeros_like(data.potential.samples))
    cfg = (
        'kind = "custom-symbol-file"\n'
        "[geometry]\nn_base = 16\nn_fiber = 16\nrank = 4\n"
        "[potential]\n"
        f'interior_file = "{interior_path}"\n'
        f'potential_file = "{potential_path}"\n'
    )
    report = hz.run_scenario(hz.parse_scenario(cfg))
    assert report.verdict == "ERROR"
    assert report.error["stage"] == "compatibility"
    assert report.exit_code == hz.STAGE_EXIT_CODES["compatibility"]


def test_emit_json_deterministic(tmp_path, kink_report):
    d1 = tmp_path / "a"
    d2 = tmp_path / "b"
    hz.emit_report(kink_report, d1, fmt="json")
    hz.emit_report(kink_report, d2, fmt="json")
    b1 = (d1 / "report.json").read_bytes()
    assert b1 == (d2 / "report.json").read_bytes()
    doc = json.loads(b1)
    assert doc["verdict"] == "MATCH"
    assert doc["scenario"]["name"] == "kink-default"


def test_emit_csv_files(tmp_path, kink_report):
    written = hz.emit_report(kink_report, tmp_path, fmt="csv")
    names = {p.name for p in written}
    assert {"summary.csv", "curvature.csv", "spectrum.csv"} <= names
    summary = (tmp_path / "summary.csv").read_text().splitlines()
    assert summary[0] == "key,value"
    assert any(row.startswith("verdict,") for row in summary)
    spectrum = (tmp_path / "spectrum.csv").read_text().splitlines()
    assert spectrum[0] == "rank,singular_value,cosingular_value"
    assert len(spectrum) > 1


def test_emit_rejects_unknown_format(tmp_path, kink_report):
    with pytest.raises(ScenarioError):
        hz.emit_report(kink_report, tmp_path, fmt="yaml")


def test_custom_symbol_file_roundtrip(tmp_path):
    # serialize the synthetic winding-1 fields and reload through the
    # custom-symbol-file kind; the pipeline must agree with the built-in
    data = sc.build_synthetic_corner_data(1, n_base=24, n_fiber=24)

    def dump(path, arr):
        flat = np.asarray(arr, dtype=complex).ravel()
        np.stack([flat.real, flat.imag], axis=1).astype("<f8").tofile(path)

    interior_path = tmp_path / "interior.bin"
    potential_path = tmp_path / "potential.bin"
    dump(interior_path, data.interior_symbol.samples)
    dump(potential_path, data.potential.samples)
    cfg = (
        'kind = "custom-symbol-file"\n'
        "[geometry]\nn_base = 24\nn_fiber = 24\nrank = 4\n"
        "[potential]\n"
        f'interior_file = "{interior_path}"\n'
        f'potential_file = "{potential_path}"\n'
    )
    report = hz.run_scenario(hz.parse_scenario(cfg))
    assert report.verdict == "TOPO-ONLY"
    assert report.topological["index"] == 1


def test_cli_list_and_run(tmp_path, capsys):
    assert cli_main(["list"]) == 0
    out = capsys.readouterr().out
    assert "kink-default" in out

    code = cli_main(
        ["run", "scalar-trivial-1d", "--out", str(tmp_path), "--format", "text"]
    )
    assert code == 0
    assert "MATCH" in (tmp_path / "report.txt").read_text()


def test_cli_parse_failure_exit_code(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text('kind = "kink"\n[geometry]\nn_sites = 2\n')
    assert cli_main(["run", str(bad), "--out", str(tmp_path)]) == 2


def test_cli_sweep_kink(capsys):
    code = cli_main(["sweep", "kink", "--resolutions", "500,1000"])
    assert code == 0
    out = capsys.readouterr().out
    assert out.count("index -1") == 2
