"""Deterministic benchmark suites built from seeded scenario specs."""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from functools import partial
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from ingest.base import MAX_LANES, MIN_LANES
from synth.disruptions import Disruption, Span
from synth.scenarios import ScenarioSpec, SyntheticWorld, build_roads, generate_world, road_polylines

logger = logging.getLogger(__name__)

PRESETS = ("basic", "occlusion_sweep", "overpass", "long_disruption")
TEST_SEED_OFFSET = 10_000
DEFAULT_STEPS = 8
SWEEP_FRACTIONS = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6)


@dataclass
class SuiteCase:
    name: str
    train: List[SyntheticWorld]
    test: List[SyntheticWorld]
    span_length: Optional[int] = None
    fraction: Optional[float] = None


class SpanPlanner:
    """Places non-overlapping spans on roads, keeping one free vertex between spans."""

    def __init__(self, road_lengths: Sequence[int], rng: np.random.Generator) -> None:
        self._taken = [np.zeros(length, dtype=bool) for length in road_lengths]
        self._rng = rng

    def fits(self, road: int, start: int, length: int) -> bool:
        taken = self._taken[road]
        if start < 0 or start + length > len(taken):
            return False
        return not taken[max(start - 1, 0) : start + length + 1].any()

    def claim(self, road: int, start: int, length: int) -> Span:
        self._taken[road][start : start + length] = True
        return Span(road, start, length)

    def place(self, road: int, min_len: int, max_len: int, attempts: int = 50) -> Optional[Span]:
        size = len(self._taken[road])
        for _ in range(attempts):
            length = int(self._rng.integers(min_len, max_len + 1))
            if length > size:
                continue
            start = int(self._rng.integers(0, size - length + 1))
            if self.fits(road, start, length):
                return self.claim(road, start, length)
        return None

    def cover(self, road: int, fraction: float, max_len: int, kinds: Sequence[str]) -> List[Disruption]:
        """Occlusion spans of 2..max_len vertices until ``fraction`` of the road is covered."""
        target = int(round(fraction * len(self._taken[road])))
        out: List[Disruption] = []
        covered = 0
        for _ in range(200):
            if covered >= target:
                break
            span = self.place(road, 2, max(2, min(max_len, target - covered + 1)))
            if span is None:
                continue
            out.append(Disruption(str(self._rng.choice(kinds)), span))
            covered += span.length
        return out


def road_lengths(spec: ScenarioSpec) -> List[int]:
    _, roads = build_roads(road_polylines(spec), spec.spacing)
    return [len(road) for road in roads]


def _random_profiles(rng: np.random.Generator, count: int) -> Tuple[Tuple[Tuple[int, int], ...], ...]:
    return tuple(((0, int(rng.integers(MIN_LANES, MAX_LANES + 1))),) for _ in range(count))


def _shifted(lanes: int, rng: np.random.Generator) -> int:
    step = 1 if lanes == MIN_LANES else -1 if lanes == MAX_LANES else int(rng.choice((-1, 1)))
    return lanes + step


def _world(spec: ScenarioSpec, plan: Callable[[ScenarioSpec, np.random.Generator], ScenarioSpec]) -> SyntheticWorld:
    rng = np.random.default_rng((spec.rng_seed, 1))
    return generate_world(plan(spec, rng))


def plan_basic(spec: ScenarioSpec, rng: np.random.Generator, steps: int) -> ScenarioSpec:
    lengths = road_lengths(spec)
    profiles = _random_profiles(rng, len(lengths))
    planner = SpanPlanner(lengths, rng)
    disruptions: List[Disruption] = []
    if spec.topology == "overpass":
        middle = lengths[0] // 2
        disruptions.append(Disruption("overpass_occlusion", planner.claim(0, middle - 2, 5), source_road=1))
    if spec.topology == "corridor" and rng.random() < 0.5:
        span = planner.place(0, 3, min(steps, lengths[0] // 2))
        if span is not None:
            new_lanes = _shifted(profiles[0][0][1], rng)
            disruptions.append(Disruption("lane_change_under_occlusion", span, new_lanes=new_lanes))
    for road in range(len(lengths)):
        if rng.random() < 0.5:
            span = planner.place(road, 2, 5)
            if span is not None:
                disruptions.append(Disruption("remove_markings", span))
        if rng.random() < 0.3:
            span = planner.place(road, 2, 6)
            if span is not None:
                disruptions.append(Disruption("alternate_side_occlusion", span))
        disruptions += planner.cover(road, 0.2, steps, ("tree_occlusion", "building_occlusion"))
    return replace(spec, lane_profiles=profiles, disruptions=tuple(disruptions))


def plan_sweep(spec: ScenarioSpec, rng: np.random.Generator, fraction: float, steps: int) -> ScenarioSpec:
    lengths = road_lengths(spec)
    planner = SpanPlanner(lengths, rng)
    disruptions: List[Disruption] = []
    for road in range(len(lengths)):
        disruptions += planner.cover(road, fraction, steps, ("tree_occlusion", "building_occlusion"))
    return replace(spec, lane_profiles=_random_profiles(rng, len(lengths)), disruptions=tuple(disruptions))


def plan_overpass(spec: ScenarioSpec, rng: np.random.Generator, steps: int) -> ScenarioSpec:
    lengths = road_lengths(spec)
    planner = SpanPlanner(lengths, rng)
    middle = lengths[0] // 2
    width = int(rng.integers(3, 6))
    disruptions = [Disruption("overpass_occlusion", planner.claim(0, middle - width // 2, width), source_road=1)]
    disruptions += planner.cover(1, 0.2, steps, ("tree_occlusion",))
    return replace(spec, lane_profiles=_random_profiles(rng, len(lengths)), disruptions=tuple(disruptions))


def plan_anchored(spec: ScenarioSpec, rng: np.random.Generator, span_length: int) -> ScenarioSpec:
    """One tree occlusion starting at the corridor's first (dead-end) vertex."""
    return replace(
        spec,
        lane_profiles=_random_profiles(rng, 1),
        disruptions=(Disruption("tree_occlusion", Span(0, 0, span_length)),),
    )


def _seeds(rng_seed: int, count: int, test: bool) -> List[int]:
    base = rng_seed * 1_000_000 + (TEST_SEED_OFFSET if test else 0)
    return [base + i for i in range(count)]


def _specs(topologies: Sequence[str], seeds: Sequence[int], prefix: str, **fields) -> List[ScenarioSpec]:
    return [
        ScenarioSpec(topology=topologies[i % len(topologies)], rng_seed=seed, name=f"{prefix}-{i:03d}", **fields)
        for i, seed in enumerate(seeds)
    ]


def scenario_suite(
    preset: str,
    rng_seed: int = 0,
    *,
    steps: int = DEFAULT_STEPS,
    train_count: Optional[int] = None,
    test_count: Optional[int] = None,
) -> List[SuiteCase]:
    """Train/test world lists for ``preset``; test seeds never overlap training seeds."""
    if preset not in PRESETS:
        raise ValueError(f"unknown suite preset {preset!r}; expected one of {PRESETS}")

    if preset == "basic":
        n_train, n_test = train_count or 24, test_count or 6
        topologies = ("corridor", "plus", "parallel", "overpass", "grid")
        train = _specs(topologies, _seeds(rng_seed, n_train, False), "basic-train")
        test = _specs(topologies, _seeds(rng_seed, n_test, True), "basic-test")
        plan = partial(plan_basic, steps=steps)
        cases = [SuiteCase("basic", [_world(s, plan) for s in train], [_world(s, plan) for s in test])]

    elif preset == "occlusion_sweep":
        n_train, n_test = train_count or 4, test_count or 2
        topologies = ("corridor", "grid", "plus")
        cases = []
        for index, fraction in enumerate(SWEEP_FRACTIONS):
            seed = rng_seed * 100 + index
            plan = partial(plan_sweep, fraction=fraction, steps=steps)
            label = f"sweep-{int(round(fraction * 100)):02d}"
            train = _specs(topologies, _seeds(seed, n_train, False), f"{label}-train")
            test = _specs(topologies, _seeds(seed, n_test, True), f"{label}-test")
            cases.append(
                SuiteCase(label, [_world(s, plan) for s in train], [_world(s, plan) for s in test], fraction=fraction)
            )

    elif preset == "overpass":
        n_train, n_test = train_count or 16, test_count or 4
        plan = partial(plan_overpass, steps=steps)
        train = _specs(("overpass",), _seeds(rng_seed, n_train, False), "overpass-train")
        test = _specs(("overpass",), _seeds(rng_seed, n_test, True), "overpass-test")
        cases = [SuiteCase("overpass", [_world(s, plan) for s in train], [_world(s, plan) for s in test])]

    else:
        n_train, n_test = train_count or 16, test_count or 6
        length = max(800.0, (2 * steps + 10) * 20.0)
        plan_train = partial(plan_sweep, fraction=0.3, steps=steps)
        train_specs = _specs(("corridor",), _seeds(rng_seed, n_train, False), "long-train", length=length)
        train = [_world(s, plan_train) for s in train_specs]
        cases = []
        for span_length in sorted({2, max(2, steps // 2), steps, (3 * steps) // 2, 2 * steps}):
            plan = partial(plan_anchored, span_length=span_length)
            test_specs = _specs(
                ("corridor",), _seeds(rng_seed * 100 + span_length, n_test, True), f"long-{span_length:02d}-test", length=length
            )
            cases.append(
                SuiteCase(f"long-{span_length:02d}", train, [_world(s, plan) for s in test_specs], span_length=span_length)
            )

    logger.info("suite %s (seed %d): %d case(s)", preset, rng_seed, len(cases))
    return cases
