"""Subcommand implementations; each returns a process exit code."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Dict, List

from autodiff.checkpoint import load_checkpoint, save_checkpoint
from cli.settings import ConfigStore, Settings
from cli.utils import load_grid
from evaluation.experiments import run_experiment
from evaluation.metrics import LabelSet, concat_predictions
from evaluation.report import compare_report
from evaluation.schemes import SchemeModels, fit_mrf, fit_schemes
from fileio import write_atomic, write_json_atomic
from ingest.geojson_io import document_projection, parse_geojson_network, write_predictions
from ingest.osm_xml import parse_osm_xml
from model.gradcheck import run_suite
from model.prepared import PreparedNetwork, prepare_network
from synth.scenarios import SyntheticWorld
from synth.storage import load_features, load_suite, save_suite
from synth.suites import scenario_suite
from training.loop import split_validation

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_CHECK = 3


def load_settings(args: argparse.Namespace) -> Settings:
    """Config file (or defaults) with command-line overrides applied on top."""
    settings = ConfigStore(args.config).load()
    overrides = {
        "iterations": getattr(args, "iterations", None),
        "rng_seed": getattr(args, "seed", None),
    }
    settings.training = settings.training.with_overrides(**overrides)
    return settings


def suite_worlds(data: Path, part: str) -> List[SyntheticWorld]:
    """Train or test worlds of a generated suite, each world once, in manifest order."""
    seen: Dict[str, SyntheticWorld] = {}
    for case in load_suite(data):
        for world in getattr(case, part):
            seen.setdefault(world.name, world)
    return list(seen.values())


def _prepared(worlds: List[SyntheticWorld], settings: Settings) -> List[PreparedNetwork]:
    return [world.prepare(settings.model) for world in worlds]


def cmd_generate(args: argparse.Namespace) -> int:
    settings = ConfigStore(args.config).load()
    cases = scenario_suite(args.preset, args.seed, steps=settings.model.steps)
    save_suite(cases, args.out, preset=args.preset, rng_seed=args.seed)
    print(f"wrote {args.preset} suite (seed {args.seed}) to {args.out}")
    return EXIT_OK


def cmd_train(args: argparse.Namespace) -> int:
    settings = load_settings(args)
    nets = _prepared(suite_worlds(args.data, "train"), settings)
    models = fit_schemes(nets, settings.model, settings.training, classifier_hops=args.classifier_hops)
    save_checkpoint(args.out, models.to_checkpoint())
    history_path = Path(args.out).with_suffix(".metrics.csv")
    if models.history is not None:
        models.history.save(history_path)
    print(f"wrote checkpoint {args.out} and training log {history_path}")
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    models = SchemeModels.from_checkpoint(load_checkpoint(args.ckpt))
    nets = [world.prepare(models.roadtagger.config) for world in suite_worlds(args.data, "test")]
    labels = LabelSet.concat([LabelSet.from_network(net.network, net.occluded) for net in nets])
    predictions = {name: concat_predictions([models.predict(name, net) for net in nets]) for name in args.schemes}
    table = compare_report(predictions, labels)
    sys.stdout.write(table.to_text())
    if args.report:
        table.save(args.report)
        write_atomic(Path(args.report).with_suffix(".txt"), table.to_text())
    return EXIT_OK


def cmd_infer(args: argparse.Namespace) -> int:
    models = SchemeModels.from_checkpoint(load_checkpoint(args.ckpt))
    text = Path(args.network).read_text(encoding="utf-8")
    if Path(args.network).suffix.lower() in (".osm", ".xml"):
        network, projection = parse_osm_xml(text, name=Path(args.network).stem), None
    else:
        network, projection = parse_geojson_network(text), document_projection(text)
    field, _ = load_features(args.features)
    net = prepare_network(network, field.values, models.roadtagger.config, occluded=field.occluded)
    write_predictions(network, models.predict(args.scheme, net), args.out, projection=projection)
    print(f"wrote {args.scheme} predictions for {network.num_vertices} vertices to {args.out}")
    return EXIT_OK


def cmd_gradcheck(args: argparse.Namespace) -> int:
    suite = run_suite(args.seed, args.instances)
    for name, worst in sorted(suite.worst().items()):
        print(f"{name:<16} worst relative error {worst:.3e}")
    print("gradcheck passed" if suite.passed else "gradcheck FAILED")
    return EXIT_OK if suite.passed else EXIT_CHECK


def cmd_mrf_search(args: argparse.Namespace) -> int:
    """Tunes the MRF on the validation split of the suite's training worlds."""
    models = SchemeModels.from_checkpoint(load_checkpoint(args.ckpt))
    settings = ConfigStore(args.config).load()
    config = models.roadtagger.config
    _, validation = split_validation(
        [world.prepare(config) for world in suite_worlds(args.data, "train")], settings.training.validation_fraction
    )
    if not validation:
        logger.error("no validation worlds in %s", args.data)
        return EXIT_DATA
    models.lane_mrf, models.type_mrf = fit_mrf(models.classifier, validation, load_grid(args.grid))
    selected = {"lane": models.lane_mrf.as_dict(), "type": models.type_mrf.as_dict()}
    print(json.dumps(selected, sort_keys=True))
    if args.update:
        save_checkpoint(args.ckpt, models.to_checkpoint())
    return EXIT_OK


def cmd_experiment(args: argparse.Namespace) -> int:
    settings = load_settings(args)
    counts = {"train_count": args.train_count, "test_count": args.test_count}
    result = run_experiment(args.name, settings.model, settings.training, args.seeds, **counts)
    sys.stdout.write(result.to_text())
    if args.out:
        write_json_atomic(args.out, result.as_dict())
    return EXIT_OK if result.passed else EXIT_CHECK
