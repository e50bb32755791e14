"""World and suite files.

A world ``NAME`` is stored as ``NAME.geojson`` (the network format written by
``ingest.geojson_io.write_network``) plus ``NAME.features.json``::

    {"format": "roadtagger-features", "version": 1,
     "columns": [16 channel names], "values": [[16 floats] per vertex],
     "occluder": [occluder index per vertex], "roads": [[vertex ids] per road],
     "spec": {...} or null}

A suite directory holds ``suite.json`` listing its cases and a ``worlds/``
folder with every world once.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Dict, List

import numpy as np

from errors import ParseError
from fileio import write_json_atomic
from ingest.geojson_io import parse_geojson_network, write_network
from synth.features import CHANNEL_NAMES, FEATURE_DIM, VertexFeatureField
from synth.scenarios import SyntheticWorld
from synth.suites import SuiteCase

logger = logging.getLogger(__name__)

FEATURES_FORMAT = "roadtagger-features"
SUITE_FORMAT = "roadtagger-suite"
VERSION = 1


def _read_json(path: Path) -> dict:
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc.msg}", line=exc.lineno, column=exc.colno) from exc
    if not isinstance(payload, dict):
        raise ParseError(f"{path}: expected a JSON object")
    return payload


def save_world(world: SyntheticWorld, directory: str | Path) -> Path:
    directory = Path(directory)
    write_network(world.network, directory / f"{world.name}.geojson")
    payload = {
        "format": FEATURES_FORMAT,
        "version": VERSION,
        "columns": list(CHANNEL_NAMES),
        "values": world.features.values.tolist(),
        "occluder": world.features.occluder.tolist(),
        "roads": [list(road) for road in world.roads],
        "spec": world.spec.as_dict() if world.spec is not None else None,
    }
    return write_json_atomic(directory / f"{world.name}.features.json", payload)


def load_features(path: str | Path) -> tuple[VertexFeatureField, tuple]:
    payload = _read_json(Path(path))
    if payload.get("format") != FEATURES_FORMAT or payload.get("version") != VERSION:
        raise ParseError(f"{path}: not a version {VERSION} feature file")
    missing = [key for key in ("values", "occluder") if key not in payload]
    if missing:
        raise ParseError(f"{path}: feature file has no {' or '.join(missing)} entry")
    values = np.asarray(payload["values"], dtype=np.float64).reshape(-1, FEATURE_DIM)
    occluder = np.asarray(payload["occluder"], dtype=np.int64)
    if len(occluder) != len(values):
        raise ParseError(f"{path}: {len(values)} feature rows but {len(occluder)} occluder entries")
    roads = tuple(tuple(int(v) for v in road) for road in payload.get("roads", []))
    return VertexFeatureField(values, occluder), roads


def load_world(directory: str | Path, name: str) -> SyntheticWorld:
    directory = Path(directory)
    network = parse_geojson_network((directory / f"{name}.geojson").read_text(encoding="utf-8"), name=name)
    features, roads = load_features(directory / f"{name}.features.json")
    if features.num_vertices != network.num_vertices:
        raise ParseError(f"{name}: {features.num_vertices} feature rows for {network.num_vertices} vertices")
    return SyntheticWorld(name, network, features, roads)


def save_suite(cases: List[SuiteCase], directory: str | Path, *, preset: str, rng_seed: int) -> Path:
    directory = Path(directory)
    saved: Dict[str, SyntheticWorld] = {}
    for case in cases:
        for world in case.train + case.test:
            if world.name not in saved:
                save_world(world, directory / "worlds")
                saved[world.name] = world
    manifest = {
        "format": SUITE_FORMAT,
        "version": VERSION,
        "preset": preset,
        "seed": rng_seed,
        "cases": [
            {
                "name": case.name,
                "span_length": case.span_length,
                "fraction": case.fraction,
                "train": [world.name for world in case.train],
                "test": [world.name for world in case.test],
            }
            for case in cases
        ],
    }
    logger.info("wrote %d worlds to %s", len(saved), directory)
    return write_json_atomic(directory / "suite.json", manifest)


def load_suite(directory: str | Path) -> List[SuiteCase]:
    directory = Path(directory)
    manifest = _read_json(directory / "suite.json")
    if manifest.get("format") != SUITE_FORMAT or manifest.get("version") != VERSION:
        raise ParseError(f"{directory / 'suite.json'}: not a version {VERSION} suite manifest")
    cache: Dict[str, SyntheticWorld] = {}

    def world(name: str) -> SyntheticWorld:
        if name not in cache:
            cache[name] = load_world(directory / "worlds", name)
        return cache[name]

    return [
        SuiteCase(
            entry["name"],
            [world(name) for name in entry["train"]],
            [world(name) for name in entry["test"]],
            span_length=entry.get("span_length"),
            fraction=entry.get("fraction"),
        )
        for entry in manifest["cases"]
    ]
