"""Command-line interface.

Subcommands:
    run <scenario>     run a built-in scenario or a TOML config file
    list               list built-in scenario names
    sweep <scenario>   re-run the analytic route at several resolutions

Exit codes: 0 on success (MATCH or TOPO-ONLY); each pipeline stage has a
distinct nonzero code on failure (see ``harness.STAGE_EXIT_CODES``).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import analytic as an
from . import harness as hz
from .errors import IndexLabError, ScenarioError


def _parse_overrides(text: str | None) -> dict:
    """'key=value,key=value' solver overrides; values are numbers."""
    out = {}
    if not text:
        return out
    for item in text.split(","):
        if "=" not in item:
            raise ScenarioError(f"bad tolerance override '{item}', expected key=value")
        key, val = item.split("=", 1)
        try:
            num = int(val)
        except ValueError:
            try:
                num = float(val)
            except ValueError:
                raise ScenarioError(f"override '{key}' value '{val}' is not numeric")
        out[key.strip()] = num
    return out


def _resolve(target: str, overrides: dict) -> hz.Scenario:
    path = Path(target)
    if path.suffix == ".toml" or path.is_file():
        return hz.parse_scenario(path.read_text(), overrides=overrides)
    return hz.parse_scenario(target, overrides=overrides)


def _cmd_run(args) -> int:
    overrides = _parse_overrides(args.tol_overrides)
    if args.seed is not None:
        overrides["seed"] = args.seed
    try:
        scenario = _resolve(args.scenario, overrides)
    except (IndexLabError, OSError) as exc:
        print(f"error (parse): {exc}", file=sys.stderr)
        return hz.STAGE_EXIT_CODES["parse"]

    report = hz.run_scenario(scenario, collect_zero_modes=args.zero_modes)
    hz.emit_report(report, args.out, fmt=args.format)

    if report.error is not None:
        print(
            f"{scenario.name}: ERROR at stage {report.error['stage']}: "
            f"{report.error['message']}",
            file=sys.stderr,
        )
    else:
        topo = report.topological["index"]
        if report.analytic is not None:
            print(
                f"{scenario.name}: topological {topo}, analytic "
                f"{report.analytic['index']} -> {report.verdict}"
            )
        else:
            print(f"{scenario.name}: topological {topo} -> {report.verdict}")
    return report.exit_code


def _cmd_list(args) -> int:
    for name, s in sorted(hz.builtin_scenarios().items()):
        print(f"{name:24s} {s.kind}")
    return 0


def _cmd_sweep(args) -> int:
    overrides = _parse_overrides(args.tol_overrides)
    if args.seed is not None:
        overrides["seed"] = args.seed
    try:
        scenario = _resolve(args.scenario, overrides)
        resolutions = [int(r) for r in args.resolutions.split(",")]
    except (IndexLabError, OSError, ValueError) as exc:
        print(f"error (parse): {exc}", file=sys.stderr)
        return hz.STAGE_EXIT_CODES["parse"]

    try:
        _, _, assemble = hz._build_symbol_data(scenario)
        if assemble is None:
            raise ScenarioError(
                f"scenario kind '{scenario.kind}' has no discretized operator to sweep"
            )
        results = an.convergence_sweep(
            assemble, resolutions,
            k=int(scenario.solver["k_singular"]),
            seed=int(scenario.solver["seed"]),
        )
    except IndexLabError as exc:
        print(f"error (analytic): {exc}", file=sys.stderr)
        return hz.STAGE_EXIT_CODES["analytic"]

    for res, index, gap in results:
        print(f"resolution {res:6d}: index {index:+d}, gap ratio {gap:.3e}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="indexlab",
        description="Dual-route Fredholm index laboratory for wall-crossing "
        "operators: analytic zero-mode counting against the corner-symbol "
        "topological formula.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one scenario end to end")
    run.add_argument("scenario", help="built-in name or path to a TOML config")
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--out", default=".", help="output directory")
    run.add_argument("--format", choices=("json", "csv", "text"), default="json")
    run.add_argument(
        "--tol-overrides", default=None,
        help="comma-separated solver overrides, e.g. k_singular=8,tol=1e-9",
    )
    run.add_argument(
        "--zero-modes", action="store_true",
        help="also write zeromode.csv with the accepted near-zero modes",
    )
    run.set_defaults(func=_cmd_run)

    lst = sub.add_parser("list", help="list built-in scenarios")
    lst.set_defaults(func=_cmd_list)

    swp = sub.add_parser("sweep", help="analytic index at several resolutions")
    swp.add_argument("scenario")
    swp.add_argument("--resolutions", required=True, help="e.g. 500,1000,2000")
    swp.add_argument("--seed", type=int, default=None)
    swp.add_argument("--tol-overrides", default=None)
    swp.set_defaults(func=_cmd_sweep)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
