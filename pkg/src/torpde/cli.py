"""Command-line client for the scenario runner.

    torpde run <config-file> [--out DIR] [--plot] [--seed N] [--server URL]
    torpde list
    torpde serve [--host HOST] [--port PORT]

``run`` executes in-process by default; with ``--server`` it posts the config
to a running service and writes the returned artifacts locally, byte for
byte. Exit codes: 0 all verdicts pass, 1 usage/config error, 2 a verdict
failed, 3 numerical abort.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from pydantic import ValidationError

from .hyperbolic import InstabilityDetectedError, StabilityError
from .quantize import PositivityError
from .scenarios import ConfigurationError, run_experiment, scenario_catalog
from .schemas import ExperimentConfig, RunReport

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_VERDICT = 2
EXIT_NUMERICAL = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="torpde",
        description="Toroidal pseudo-differential calculus experiment runner",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a scenario from a flat key=value config file")
    run_p.add_argument("config", help="path to the config file")
    run_p.add_argument("--out", help="output directory for CSV/SVG artifacts")
    run_p.add_argument("--plot", action="store_true", help="also emit SVG line charts")
    run_p.add_argument("--seed", type=int, help="override the config seed")
    run_p.add_argument("--server", help="POST the run to a torpde service instead")

    sub.add_parser("list", help="list scenarios, what each validates, and CSV columns")

    serve_p = sub.add_parser("serve", help="start the HTTP service")
    serve_p.add_argument("--host", default="127.0.0.1")
    serve_p.add_argument("--port", type=int, default=8000)
    return parser


def _load_config(args: argparse.Namespace) -> ExperimentConfig:
    text = Path(args.config).read_text(encoding="utf-8")
    config = ExperimentConfig.from_flat_text(text)
    overrides = {}
    if args.out is not None:
        overrides["out_dir"] = args.out
    if args.plot:
        overrides["plot"] = True
    if args.seed is not None:
        overrides["seed"] = args.seed
    if overrides:
        config = config.model_copy(update=overrides)
    return config


def _remote_run(config: ExperimentConfig, server: str) -> RunReport:
    import httpx

    response = httpx.post(
        server.rstrip("/") + "/run", json=config.model_dump(), timeout=600.0
    )
    if response.status_code != 200:
        raise RuntimeError(f"server returned {response.status_code}: {response.text}")
    return RunReport.model_validate(response.json())


def _write_artifacts(report: RunReport, out_dir: str | None) -> Path:
    target = Path(out_dir) if out_dir else Path("runs") / report.scenario
    target.mkdir(parents=True, exist_ok=True)
    for name, content in report.artifacts.items():
        (target / name).write_text(content, encoding="utf-8")
    return target


def _cmd_run(args: argparse.Namespace) -> int:
    try:
        config = _load_config(args)
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValidationError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.server:
            report = _remote_run(config, args.server)
        else:
            report = run_experiment(config)
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (StabilityError, InstabilityDetectedError, PositivityError) as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    target = _write_artifacts(report, config.out_dir)
    for metric in report.metrics:
        print(f"  {metric.name} = {metric.value:.6g}")
    for verdict in report.verdicts:
        status = "PASS" if verdict.passed else "FAIL"
        print(f"[{status}] {verdict.name}: {verdict.detail}")
    print(f"artifacts written to {target} ({report.wall_clock_seconds:.2f} s)")
    return EXIT_OK if report.passed else EXIT_VERDICT


def _cmd_list() -> int:
    for info in scenario_catalog():
        print(f"{info.name:18s} {info.description}")
        print(f"{'':18s} validates: {info.validates}")
        print(f"{'':18s} csv columns: {', '.join(info.csv_columns)}")
    return EXIT_OK


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    uvicorn.run("torpde.service:app", host=args.host, port=args.port)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "list":
        return _cmd_list()
    return _cmd_serve(args)


if __name__ == "__main__":
    sys.exit(main())
