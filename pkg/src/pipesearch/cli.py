"""Headless command-line runner.

`run` executes the full three-phase search from a TOML config and writes
`report.json`, `report.md`, `model.json`, and `journal.ndjson` into the
output directory, printing the phase tables as it finishes. `classify`
scores a CSV file with a saved model artifact and prints predictions.

Exit codes: 0 success, 2 for configuration or input problems, 3 for
runtime failures during the search itself.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:    # 3.10 fallback
    import tomli as tomllib

from .errors import (
    ConfigError,
    EvaluationError,
    InvariantViolation,
    NoEvaluations,
    ParseError,
    PipesearchError,
    SchemaMismatch,
    SearchSpaceError,
    UnknownComponent,
)
from .evaluator import ModelArtifact, predict
from .kgstore import TrainingInput
from .report import build_report, render_markdown, write_report
from .rl import RLConfig

__all__ = ["main", "load_run_config"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

_VALIDATION_ERRORS = (ConfigError, ParseError, InvariantViolation,
                      UnknownComponent, SchemaMismatch, SearchSpaceError,
                      ValueError, KeyError)


def load_run_config(path: str | Path, *, seed: int | None = None,
                    workers: int | None = None, out_dir: str | Path | None = None):
    """Parse a TOML run config into a SessionConfig.

    Top-level keys mirror the training-request field names (camelCase);
    the optional [session] table sets seed, workers, sweepMode,
    maxOuterIterations and the learning constants alpha/beta/rewardScale.
    Flag values win over the file.
    """
    from .orchestrator import SessionConfig

    raw = Path(path).read_bytes()
    try:
        doc = tomllib.loads(raw.decode("utf-8"))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ParseError(f"config {path}: {exc}")

    session = doc.pop("session", {})
    if not isinstance(session, dict):
        raise ConfigError("config [session] must be a table")
    try:
        training_input = TrainingInput.from_json_dict(doc)
    except KeyError as exc:
        raise ConfigError(f"config is missing required key {exc.args[0]!r}")

    rl = RLConfig(alpha=float(session.get("alpha", 0.5)),
                  beta=float(session.get("beta", 0.5)),
                  reward_scale=float(session.get("rewardScale", 1.0)))
    resolved_seed = seed if seed is not None else int(session.get("seed", 0))
    resolved_workers = workers if workers is not None else session.get("workers")
    return SessionConfig(
        training_input=training_input,
        rl=rl,
        max_outer_iterations=int(session.get("maxOuterIterations", 25)),
        worker_count=resolved_workers,
        seed=resolved_seed,
        sweep_mode=session.get("sweepMode", "random"),
        out_dir=out_dir,
    )


def _cmd_run(args: argparse.Namespace) -> int:
    from .orchestrator import Session

    out_dir = Path(args.out)
    try:
        config = load_run_config(args.config, seed=args.seed,
                                 workers=args.workers, out_dir=out_dir)
    except FileNotFoundError as exc:
        print(f"error: config not found: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out_dir.mkdir(parents=True, exist_ok=True)
    events = []
    try:
        session = Session(config)
    except _VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    session.subscribe(events.append)
    try:
        model = session.run()
    except (EvaluationError, NoEvaluations) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except PipesearchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    report = build_report(events, model)
    write_report(report, out_dir)
    print(render_markdown(report))
    return EXIT_OK


def _cmd_classify(args: argparse.Namespace) -> int:
    try:
        artifact = ModelArtifact.load(args.model)
    except FileNotFoundError:
        print(f"error: model artifact not found: {args.model}", file=sys.stderr)
        return EXIT_CONFIG
    except _VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        with open(args.data, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
    except FileNotFoundError:
        print(f"error: data file not found: {args.data}", file=sys.stderr)
        return EXIT_CONFIG
    if not rows:
        print("error: data file has no rows", file=sys.stderr)
        return EXIT_CONFIG

    try:
        labels = predict(artifact, rows)
    except _VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["prediction", "confidence"])
    for label in labels:
        conf = "" if label.confidence is None else f"{label.confidence:.6f}"
        writer.writerow([label.value, conf])
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="pipesearch",
        description="Search classifier pipelines and score data with saved models.")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run the three-phase search from a TOML config")
    run_p.add_argument("--config", required=True, help="path to the TOML run config")
    run_p.add_argument("--out", required=True, help="output directory for reports and artifacts")
    run_p.add_argument("--seed", type=int, default=None, help="random seed (overrides config)")
    run_p.add_argument("--workers", type=int, default=None,
                       help="episode worker count (overrides config; 0 runs inline)")
    run_p.set_defaults(func=_cmd_run)

    cls_p = sub.add_parser("classify", help="score a CSV file with a saved model")
    cls_p.add_argument("--model", required=True, help="path to a saved model artifact")
    cls_p.add_argument("--data", required=True, help="CSV file of rows to classify")
    cls_p.set_defaults(func=_cmd_classify)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
