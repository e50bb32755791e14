"""Entry point for the RoadTagger command line."""

from __future__ import annotations

import argparse
import logging
import sys
from functools import partial
from pathlib import Path
from typing import Callable, List, Optional

from cli import commands
from cli.utils import parse_name_list, parse_seeds
from evaluation.experiments import EXPERIMENTS
from evaluation.schemes import SCHEMES
from synth.suites import PRESETS

DEFAULT_CONFIG = Path(__file__).resolve().parent / "settings.json"
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


class ArgumentParser(argparse.ArgumentParser):
    """Usage errors exit with status 1."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(commands.EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _checked(parse: Callable[[str], object]) -> Callable[[str], object]:
    """Turns ValueError from ``parse`` into an argparse usage error."""

    def convert(value: str) -> object:
        try:
            return parse(value)
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from exc

    return convert


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(description="RoadTagger: road attribute inference on road network graphs")
    parser.add_argument("--log-level", choices=LOG_LEVELS, default="INFO", help="Logging threshold (default: INFO)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)

    def with_config(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", type=Path, default=DEFAULT_CONFIG, help="Settings JSON (default: settings.json)")

    generate = sub.add_parser("generate", help="Write a synthetic benchmark suite")
    generate.add_argument("--preset", choices=PRESETS, required=True)
    generate.add_argument("--seed", type=int, default=0)
    generate.add_argument("--out", type=Path, required=True, help="Output directory")
    with_config(generate)
    generate.set_defaults(handler=commands.cmd_generate)

    train = sub.add_parser("train", help="Train RoadTagger, the classifier baseline and the MRF")
    with_config(train)
    train.add_argument("--data", type=Path, required=True, help="Suite directory from 'generate'")
    train.add_argument("--out", type=Path, required=True, help="Checkpoint path")
    train.add_argument("--iterations", type=int, default=None, help="Override training.iterations")
    train.add_argument("--seed", type=int, default=None, help="Override training.rng_seed")
    train.add_argument("--classifier-hops", type=int, choices=(0, 1, 2), default=0, help="Classifier receptive field")
    train.set_defaults(handler=commands.cmd_train)

    evaluate = sub.add_parser("eval", help="Compare schemes on a suite's test worlds")
    evaluate.add_argument("--ckpt", type=Path, required=True)
    evaluate.add_argument("--data", type=Path, required=True)
    evaluate.add_argument(
        "--schemes",
        type=_checked(partial(parse_name_list, allowed=SCHEMES)),
        default=list(SCHEMES),
        help=f"Comma-separated subset of {','.join(SCHEMES)}",
    )
    evaluate.add_argument("--report", type=Path, default=None, help="CSV report path")
    evaluate.set_defaults(handler=commands.cmd_eval)

    infer = sub.add_parser("infer", help="Predict attributes for one network")
    infer.add_argument("--ckpt", type=Path, required=True)
    infer.add_argument("--network", type=Path, required=True, help="GeoJSON or OSM XML network")
    infer.add_argument("--features", type=Path, required=True, help="Per-vertex feature file")
    infer.add_argument("--out", type=Path, required=True, help="Output GeoJSON")
    infer.add_argument("--scheme", choices=SCHEMES, default="roadtagger")
    infer.set_defaults(handler=commands.cmd_infer)

    gradcheck = sub.add_parser("gradcheck", help="Finite-difference gradient checks")
    gradcheck.add_argument("--seed", type=int, default=0)
    gradcheck.add_argument("--instances", type=int, default=20)
    gradcheck.set_defaults(handler=commands.cmd_gradcheck)

    baseline = sub.add_parser("baseline", help="Baseline utilities")
    baseline_sub = baseline.add_subparsers(dest="baseline_command", required=True, parser_class=ArgumentParser)
    mrf_search = baseline_sub.add_parser("mrf-search", help="Grid-search MRF parameters per head")
    mrf_search.add_argument("--grid", type=Path, required=True, help='JSON {"weights": [...], "exponents": [...]}')
    mrf_search.add_argument("--ckpt", type=Path, required=True)
    mrf_search.add_argument("--data", type=Path, required=True)
    mrf_search.add_argument("--update", action="store_true", help="Store the selection in the checkpoint")
    with_config(mrf_search)
    mrf_search.set_defaults(handler=commands.cmd_mrf_search)

    experiment = sub.add_parser("experiment", help="Run a benchmark experiment")
    experiment.add_argument("name", choices=sorted(EXPERIMENTS))
    with_config(experiment)
    experiment.add_argument("--seeds", type=_checked(parse_seeds), default=(0, 1, 2), help="e.g. 0,1,2 or 0-2")
    experiment.add_argument("--iterations", type=int, default=None)
    experiment.add_argument("--train-count", type=int, default=None)
    experiment.add_argument("--test-count", type=int, default=None)
    experiment.add_argument("--out", type=Path, default=None, help="Result JSON path")
    experiment.set_defaults(handler=commands.cmd_experiment)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.handler(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return commands.EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
