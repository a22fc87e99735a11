"""Command-line front end.

Pipeline subcommands::

    simulate   population (devices only) -> JSONL dataset
    audio-fp   dataset -> dataset with audio fingerprints
    accel-fp   dataset -> dataset with Z-axis submissions or six-parameter fits
    classify   dataset -> classification report (audio-l2, audio-mle, stealth, six-param)
    entropy    dataset -> entropy / recognition report
    sweep      dataset -> M_Sz sweep report
    report     saved result record -> report
    run        config -> report, all steps in memory

Exit codes: 0 success, 1 validation error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from sensorprint.config import ConfigError, ExperimentConfig
from sensorprint.dataset import Dataset, DatasetError, dataset_lines, load_dataset
from sensorprint.experiments import (AUDIO_EXPERIMENTS, analyze, fingerprint_dataset,
                                     run_experiment, simulate_population)
from sensorprint.report import FORMATS, emit_report

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2
SEED_ENV = "SENSORPRINT_SEED"

CLASSIFY_EXPERIMENTS = (*AUDIO_EXPERIMENTS, "six-param")


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for I/O errors here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _u64(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", type=Path, help="experiment config (JSON)")
    common.add_argument("--seed", type=_u64,
                        help=f"u64 seed; defaults to ${SEED_ENV}, then the config's seed")
    common.add_argument("--out", type=Path, help="output path (default: stdout)")
    common.add_argument("--format", choices=FORMATS, default="text", help="report format")

    parser = _Parser(prog="sensorprint", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("simulate", parents=[common], help="simulate a device population")
    for name in ("audio-fp", "accel-fp", "classify", "entropy", "sweep"):
        p = sub.add_parser(name, parents=[common])
        p.add_argument("--dataset", type=Path, required=True, help="input JSONL dataset")
        if name in ("classify", "entropy", "sweep"):
            p.add_argument("--result", type=Path, help="also save the result record (JSON)")
    p = sub.add_parser("report", parents=[common], help="render a saved result record")
    p.add_argument("--result", type=Path, required=True)
    p = sub.add_parser("run", parents=[common], help="simulate and analyze in one go")
    p.add_argument("--result", type=Path, help="also save the result record (JSON)")
    return parser


def resolve_seed(args) -> int | None:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env is None or env == "":
        return None
    try:
        return _u64(env)
    except argparse.ArgumentTypeError as exc:
        raise UsageError(f"{SEED_ENV}: {exc}") from None


def load_config(args, experiment: str | None = None) -> ExperimentConfig:
    seed = resolve_seed(args)
    data = {}
    if args.config is not None:
        try:
            data = json.loads(args.config.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError([f"{args.config}: invalid JSON ({exc.msg} at line {exc.lineno})"])
    if experiment is not None:
        data = {**data, "experiment": experiment}
    return ExperimentConfig.from_dict(data, seed)


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True) + "\n"


def _write(args, text: str) -> None:
    if args.out is None:
        sys.stdout.write(text)
    else:
        args.out.write_text(text, encoding="utf-8")


def _write_dataset(args, ds: Dataset) -> None:
    ds.check_integrity()
    _write(args, "".join(line + "\n" for line in dataset_lines(ds)))


def _emit(args, result: dict) -> None:
    if getattr(args, "result", None) is not None and args.command != "report":
        args.result.write_text(canonical_json(result), encoding="utf-8")
    _write(args, emit_report(result, args.format))


def _analyze(args, experiment: str | None, allowed) -> None:
    cfg = load_config(args, experiment)
    if cfg.experiment not in allowed:
        raise UsageError(f"{args.command} handles experiments {', '.join(allowed)}; "
                         f"config selects {cfg.experiment!r}")
    _emit(args, analyze(cfg, load_dataset(args.dataset)))


def dispatch(args) -> None:
    cmd = args.command
    if cmd == "simulate":
        _write_dataset(args, Dataset(devices=simulate_population(load_config(args))))
    elif cmd in ("audio-fp", "accel-fp"):
        cfg = load_config(args)
        audio = cfg.experiment in AUDIO_EXPERIMENTS
        if audio != (cmd == "audio-fp"):
            raise UsageError(f"{cmd} does not apply to experiment {cfg.experiment!r}")
        ds = load_dataset(args.dataset)
        _write_dataset(args, fingerprint_dataset(cfg, ds.devices))
    elif cmd == "classify":
        _analyze(args, None, CLASSIFY_EXPERIMENTS)
    elif cmd == "entropy":
        _analyze(args, "accel-entropy", ("accel-entropy",))
    elif cmd == "sweep":
        _analyze(args, "msz-sweep", ("msz-sweep",))
    elif cmd == "report":
        try:
            result = json.loads(args.result.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise UsageError(f"{args.result}: invalid JSON ({exc.msg})") from None
        if not isinstance(result, dict) or not {"experiment", "metrics", "tables"} <= result.keys():
            raise UsageError(f"{args.result}: not a result record")
        _write(args, emit_report(result, args.format))
    elif cmd == "run":
        _emit(args, run_experiment(load_config(args)))


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # --help or a usage error
        return exc.code if isinstance(exc.code, int) else EXIT_INVALID
    try:
        dispatch(args)
    except (ConfigError, DatasetError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
