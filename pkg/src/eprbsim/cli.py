"""Command-line interface.

Subcommands: `sweep` (conditional correlation vs angle), `chsh` (the
four-settings experiment), `bounds` (rate-bound audit) and `reproduce-paper`
(the full default-parameter reproduction with a pass/fail summary).

Exit codes: 0 success, 1 invalid configuration, 2 empty post-selected
ensemble, 3 reproduction checks failed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .runner import (
    BOUNDS_COLUMNS,
    CHSH_COLUMNS,
    SWEEP_COLUMNS,
    ConfigError,
    EmptyEnsembleError,
    ExperimentConfig,
    bounds_table_rows,
    chsh_table_rows,
    rows_to_csv,
    rows_to_table,
    run_bound_audit,
    run_chsh_experiment,
    run_correlation_sweep,
    sweep_table_rows,
)
from . import reproduce

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_EMPTY = 2
EXIT_CHECKS_FAILED = 3


def _csv_floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError:
        raise ConfigError(f"expected a comma-separated list of numbers, got {text!r}")


def _add_common_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", metavar="FILE", help="JSON config file; flags override it")
    sub.add_argument("--tau", type=float, help="time-tag resolution (units of the maximal delay)")
    sub.add_argument("--window", type=float, help="coincidence window W")
    sub.add_argument("--mode", choices=["same-bin", "continuous"], help="coincidence convention")
    sub.add_argument("--d-exponent", type=float, dest="d_exponent", help="delay-law exponent")
    sub.add_argument("--events", type=int, help="events per setting pair")
    sub.add_argument("--seed", type=int, help="base random seed")
    sub.add_argument("--workers", type=int, help="parallel workers (never affects results)")
    sub.add_argument("--settings", metavar="A,B,C,D", help="four setting angles in degrees")
    sub.add_argument("--alpha-grid", metavar="LIST", dest="alpha_grid",
                     help="comma-separated angles in degrees")
    sub.add_argument("--out", metavar="DIR", help="write manifest.json and CSV tables here")
    sub.add_argument("--format", choices=["table", "csv"], default="table",
                     help="stdout format (default: table)")


def _load_config(args: argparse.Namespace, command: str) -> ExperimentConfig:
    data = ExperimentConfig().to_dict()
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            file_data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from None
        if not isinstance(file_data, dict):
            raise ConfigError("config file must hold a JSON object")
        data.update(file_data)

    overrides = {
        "tau": args.tau,
        "window": args.window,
        "d_exponent": args.d_exponent,
        "n_events": args.events,
        "seed": args.seed,
        "workers": args.workers,
    }
    if args.mode is not None:
        overrides["coincidence_mode"] = args.mode
    if args.settings is not None:
        settings = _csv_floats(args.settings)
        if len(settings) != 4:
            raise ConfigError("--settings needs exactly four angles")
        overrides["settings_deg"] = settings
    if args.alpha_grid is not None:
        grid = _csv_floats(args.alpha_grid)
        # the bounds audit has its own angle grid
        overrides["audit_alpha_deg" if command == "bounds" else "alpha_grid_deg"] = grid
    if command == "bounds" and getattr(args, "tau_grid", None) is not None:
        overrides["audit_tau"] = _csv_floats(args.tau_grid)
    data.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig.from_dict(data)


def _emit(args: argparse.Namespace, rows: list[dict], columns: list[str], manifest) -> None:
    if args.format == "csv":
        sys.stdout.write(rows_to_csv(rows, columns))
    else:
        sys.stdout.write(rows_to_table(rows, columns))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "manifest.json").write_text(manifest.to_json() + "\n")
        (out / f"{manifest.kind}.csv").write_text(rows_to_csv(rows, columns))


def _cmd_sweep(args: argparse.Namespace) -> int:
    config = _load_config(args, "sweep")
    result = run_correlation_sweep(config)
    _emit(args, sweep_table_rows(result), SWEEP_COLUMNS, result.manifest)
    return EXIT_OK


def _cmd_chsh(args: argparse.Namespace) -> int:
    config = _load_config(args, "chsh")
    result = run_chsh_experiment(config)
    _emit(args, chsh_table_rows(result), CHSH_COLUMNS, result.manifest)
    r = result.report
    if args.format == "table":
        print(
            f"CHSH = {r.chsh_lhs:.6f} +- {r.chsh_stderr:.6f}  "
            f"(plain bound 2: {'violated' if r.violates_chsh else 'satisfied'})"
        )
        print(
            f"corrected bound 6/gamma-4 = {r.modified_bound:.6g} at gamma_min = "
            f"{r.gamma_min:.6g}: {'violated' if r.violates_modified else 'satisfied'}"
        )
    return EXIT_OK


def _cmd_bounds(args: argparse.Namespace) -> int:
    config = _load_config(args, "bounds")
    result = run_bound_audit(config)
    _emit(args, bounds_table_rows(result), BOUNDS_COLUMNS, result.manifest)
    return EXIT_OK


def _cmd_reproduce(args: argparse.Namespace) -> int:
    data = ExperimentConfig().to_dict()
    if args.seed is not None:
        data["seed"] = args.seed
    if args.workers is not None:
        data["workers"] = args.workers
    config = ExperimentConfig.from_dict(data)
    results = reproduce.run_all(config)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        summary = [
            {"number": r.number, "name": r.name, "passed": r.passed, "detail": r.detail}
            for r in results
        ]
        (out / "reproduction_summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECKS_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eprbsim",
        description="Event-based EPRB simulation with coincidence post-selection",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sweep = sub.add_parser("sweep", help="conditional correlation vs setting angle")
    _add_common_flags(p_sweep)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_chsh = sub.add_parser("chsh", help="four-settings CHSH experiment with verdicts")
    _add_common_flags(p_chsh)
    p_chsh.set_defaults(func=_cmd_chsh)

    p_bounds = sub.add_parser("bounds", help="audit simulated rates against analytic bounds")
    _add_common_flags(p_bounds)
    p_bounds.add_argument("--tau-grid", metavar="LIST", dest="tau_grid",
                          help="comma-separated resolutions for the audit")
    p_bounds.set_defaults(func=_cmd_bounds)

    p_rep = sub.add_parser(
        "reproduce-paper",
        help="run the full default-parameter reproduction and print pass/fail lines",
    )
    p_rep.add_argument("--seed", type=int, help="base seed (checks are calibrated at the default)")
    p_rep.add_argument("--workers", type=int, help="parallel workers")
    p_rep.add_argument("--out", metavar="DIR", help="write reproduction_summary.json here")
    p_rep.set_defaults(func=_cmd_reproduce)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EmptyEnsembleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EMPTY


if __name__ == "__main__":
    sys.exit(main())
