"""Command-line front end.

    hhw simulate <config.json> [--out DIR]
    hhw bounds   <config.json> [--out DIR]
    hhw verify   <config.json> [--seeds K] [--debug-mu-scale X]
    hhw sweep    <sweep.json>  [--jobs N]

Exit codes: 0 success / all checks pass, 1 verification failure,
2 config error, 3 hypothesis violation, 4 runtime or integration failure.
The CLI touches the filesystem only under the configured output directory.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import SCHEMA_VERSION, load_scenario, load_sweep
from .csvio import write_json
from .errors import (
    BlowUpError,
    ConfigError,
    HHWError,
    HypothesisViolationError,
    MemoryBudgetError,
    StepSizeUnderflowError,
)
from .runner import run_scenario, run_sweep, verify_scenario

EXIT_OK = 0
EXIT_VERIFY_FAIL = 1
EXIT_CONFIG = 2
EXIT_HYPOTHESIS = 3
EXIT_RUNTIME = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hhw",
        description="Simulate and verify coupled neuron networks "
                    "(classical and fractional memristive).",
    )
    parser.add_argument("--quiet", action="store_true", help="suppress progress output")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the config's random seed")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run one scenario and write its artifacts")
    p_sim.add_argument("config", help="scenario config JSON")
    p_sim.add_argument("--out", default=None, help="output directory override")

    p_bounds = sub.add_parser("bounds", help="print every applicable constant as JSON")
    p_bounds.add_argument("config", help="scenario config JSON")
    p_bounds.add_argument("--out", default=None,
                          help="also write bounds.json under this directory")

    p_verify = sub.add_parser("verify", help="run simulations and check the theorem bounds")
    p_verify.add_argument("config", help="scenario config JSON")
    p_verify.add_argument("--seeds", type=int, default=5,
                          help="number of random initial states (default 5)")
    p_verify.add_argument("--out", default=None, help="output directory override")
    p_verify.add_argument("--debug-mu-scale", type=float, default=1.0,
                          help="multiply the envelope rate by X (self-test hook; "
                               "a corrupted rate must make verification fail)")

    p_sweep = sub.add_parser("sweep", help="sweep a variable over values x replicates")
    p_sweep.add_argument("config", help="sweep config JSON")
    p_sweep.add_argument("--out", default=None, help="output directory override")
    p_sweep.add_argument("--jobs", type=int, default=None,
                         help="parallel worker count (default: CPU count)")
    return parser


def _say(quiet: bool, *parts) -> None:
    if not quiet:
        print(*parts)


def _cmd_simulate(args) -> int:
    scn = load_scenario(args.config)
    out_dir = Path(args.out) if args.out else None
    result = run_scenario(scn, out_dir=out_dir, seed_override=args.seed)
    for kind, path in result.out_files.items():
        _say(args.quiet, f"wrote {kind}: {path}")
    if result.blow_up:
        print(
            f"integration blow-up at t={result.trajectory.times[-1]:.6g} ms; "
            "partial outputs flagged",
            file=sys.stderr,
        )
        return EXIT_RUNTIME
    if result.report is not None and not result.report.all_passed:
        _say(args.quiet, "note: some checks failed; see the report")
    return EXIT_OK


def _cmd_bounds(args) -> int:
    scn = load_scenario(args.config)
    from .runner import bounds_payload, params_payload

    payload = {
        "schema_version": SCHEMA_VERSION,
        "model": scn.model,
        "params": params_payload(scn),
        "bounds": bounds_payload(scn),
        "checks": [],
        "provenance": {"source": "bounds command"},
    }
    text = json.dumps(payload, indent=2, sort_keys=True)
    print(text)
    if args.out:
        write_json(Path(args.out) / "bounds.json", payload)
    return EXIT_OK


def _cmd_verify(args) -> int:
    scn = load_scenario(args.config)
    if scn.model == "memristive":
        # surface a bad hypothesis before any expensive integration
        from .analysis import fractional_bounds

        fractional_bounds(scn.params)
    reports, all_ok = verify_scenario(
        scn, seeds=args.seeds, seed_override=args.seed,
        mu_scale=args.debug_mu_scale,
    )
    for idx, report in enumerate(reports):
        for check in report.checks:
            status = "PASS" if check.passed else "FAIL"
            _say(
                args.quiet,
                f"run {idx}: {check.name}: {status} "
                f"(measured {check.measured:.6g}, bound {check.bound:.6g})",
            )
    if args.out:
        payload = {
            "schema_version": SCHEMA_VERSION,
            "model": scn.model,
            "runs": [
                {
                    "checks": [c.as_dict() for c in r.checks],
                    "provenance": r.provenance,
                }
                for r in reports
            ],
            "all_passed": all_ok,
        }
        write_json(Path(args.out) / "verify.json", payload)
    _say(args.quiet, "verdict:", "PASS" if all_ok else "FAIL")
    return EXIT_OK if all_ok else EXIT_VERIFY_FAIL


def _cmd_sweep(args) -> int:
    sweep = load_sweep(args.config)
    jobs = args.jobs
    if jobs is None:
        import os

        jobs = os.cpu_count() or 1
    out_dir = Path(args.out) if args.out else None
    summary_path, rows = run_sweep(sweep, out_dir=out_dir, jobs=jobs,
                                   seed_override=args.seed)
    _say(args.quiet, f"wrote sweep summary: {summary_path} ({len(rows)} runs)")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad usage, which matches the config-error code
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    try:
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "bounds":
            return _cmd_bounds(args)
        if args.command == "verify":
            return _cmd_verify(args)
        return _cmd_sweep(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except HypothesisViolationError as exc:
        print(f"hypothesis violation: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except (BlowUpError, StepSizeUnderflowError, MemoryBudgetError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except HHWError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
