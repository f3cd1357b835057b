"""Command-line experiment driver.

``aircomp-opt run`` executes a configured experiment and writes CSV/JSON
reports; ``aircomp-opt validate`` checks a config file.  Flags override
individual config fields.  Exit code 0 on success, 2 on configuration
errors, 1 on runtime failures.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .harness import (
    ConfigError,
    ExperimentConfig,
    default_sweep_values,
    emit_report,
    run_sweep,
    SCHEMES,
    SWEEP_AXES,
)

log = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aircomp-opt",
        description="Optimize and evaluate over-the-air aggregation transceivers",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment and emit reports")
    run.add_argument("--config", help="JSON config file (defaults used if omitted)")
    run.add_argument("--devices", type=int, help="override device count")
    run.add_argument("--power-dbm", type=float, help="override per-device transmit power")
    run.add_argument("--trials", type=int, help="override Monte-Carlo trials per point")
    run.add_argument("--seed", type=int, help="override base seed")
    run.add_argument(
        "--scheme",
        action="append",
        choices=SCHEMES,
        help="run only the given scheme(s); repeatable",
    )
    run.add_argument("--sweep", choices=SWEEP_AXES, help="override sweep axis")
    run.add_argument(
        "--sweep-values",
        help="comma-separated sweep values (defaults per axis when omitted)",
    )
    run.add_argument("--channel-draws", type=int, help="channel realizations per point")
    run.add_argument("--out", default="aircomp_report", help="output path prefix")
    run.add_argument("--format", choices=("csv", "json", "both"), default="both")
    run.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    run.add_argument(
        "--timing", action="store_true", help="record wall times in the report"
    )

    val = sub.add_parser("validate", help="validate a config file")
    val.add_argument("--config", required=True)
    return parser


def _load_config(path: str | None) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig.from_dict({})
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as err:
        raise ConfigError(f"cannot read config {path!r}: {err}") from err
    except json.JSONDecodeError as err:
        raise ConfigError(f"config {path!r} is not valid JSON: {err}") from err
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a JSON object")
    return ExperimentConfig.from_dict(doc)


def _apply_overrides(config: ExperimentConfig, args: argparse.Namespace) -> None:
    if args.devices is not None:
        config.scenario.num_devices = args.devices
    if args.power_dbm is not None:
        config.scenario.power_dbm = args.power_dbm
    if args.trials is not None:
        config.trials = args.trials
    if args.seed is not None:
        config.seed = args.seed
    if args.scheme:
        config.schemes = list(dict.fromkeys(args.scheme))
    if args.channel_draws is not None:
        config.channel_draws = args.channel_draws
        if args.channel_draws > 1:
            config.channel_mode = "average"
    if args.timing:
        config.record_timing = True
    if args.sweep is not None:
        config.sweep.axis = args.sweep
        config.sweep.values = []
    if args.sweep_values is not None:
        try:
            values = [float(v) for v in args.sweep_values.split(",") if v.strip()]
        except ValueError as err:
            raise ConfigError(f"bad --sweep-values: {err}") from err
        if config.sweep.axis in ("devices", "pca_dims"):
            values = [int(v) for v in values]
        config.sweep.values = values
    if config.sweep.axis != "none" and not config.sweep.values:
        config.sweep.values = default_sweep_values(config, config.sweep.axis)
    config.validate()


def _cmd_run(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    _apply_overrides(config, args)
    log.info(
        "running %d sweep point(s) x %d scheme(s), %d trials each",
        max(len(config.sweep.values), 1),
        len(config.schemes),
        config.trials,
    )
    report = run_sweep(config, jobs=max(1, args.jobs))
    written = emit_report(report, args.out, format=args.format)
    for r in report.results:
        print(
            f"sweep={r.sweep_value} scheme={r.scheme:<14s} "
            f"gain={r.gain:.4f} accuracy={r.accuracy:.4f} (se {r.se:.4f})"
        )
    for path in written:
        print(f"wrote {path}")
    return 0


def _cmd_validate(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    config.validate()
    print(f"config ok: {args.config}")
    return 0


def main(argv=None) -> int:
    logging.basicConfig(
        level=logging.INFO, format="%(levelname)s %(name)s: %(message)s"
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        return _cmd_validate(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except Exception as err:  # surface a diagnostic, not a traceback
        log.debug("unhandled failure", exc_info=True)
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
