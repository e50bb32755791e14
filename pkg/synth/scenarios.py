"""Scenario specs and world generation."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from errors import DisruptionError
from ingest.base import MAX_LANES, MIN_LANES, LabeledNetwork, fully_labeled
from model.config import ModelConfig
from model.prepared import PreparedNetwork, prepare_network
from roadnet.base import GeoPoint, RoadGraph, RoadGraphBuilder, segment_count
from synth import features as fx
from synth.disruptions import Disruption, RenderContext, apply_label_changes, check_overlaps, inject_disruption

logger = logging.getLogger(__name__)

TOPOLOGIES = ("corridor", "plus", "parallel", "overpass", "grid")
DEFAULT_SPACING = 20.0
PARALLEL_SEPARATION = 15.0
_MERGE_RESOLUTION = 0.01

LaneProfile = Tuple[Tuple[int, int], ...]


@dataclass(frozen=True)
class ScenarioSpec:
    """One synthetic world.

    ``lane_profiles`` gives, per road, (start position, lane count) pairs that
    hold until the next start; roads without a profile draw one constant lane
    count uniformly from 1..6. ``road_types`` likewise defaults to a random
    type per road.
    """

    topology: str = "corridor"
    length: float = 400.0
    spacing: float = DEFAULT_SPACING
    rng_seed: int = 0
    lane_profiles: Optional[Tuple[LaneProfile, ...]] = None
    road_types: Optional[Tuple[int, ...]] = None
    disruptions: Tuple[Disruption, ...] = ()
    noise_sigma: float = fx.DEFAULT_NOISE_SIGMA
    grid_size: int = 4
    name: str = "world"

    def __post_init__(self) -> None:
        if self.topology not in TOPOLOGIES:
            raise DisruptionError(f"unknown topology {self.topology!r}; expected one of {TOPOLOGIES}")
        if self.length <= 0 or self.spacing <= 0:
            raise ValueError("length and spacing must be > 0")
        if self.grid_size < 2:
            raise ValueError("grid_size must be >= 2")
        for profile in self.lane_profiles or ():
            if not profile or any(not MIN_LANES <= lanes <= MAX_LANES for _, lanes in profile):
                raise ValueError("lane profiles need at least one entry with lanes in 1..6")

    def as_dict(self) -> dict:
        return {
            "topology": self.topology,
            "length": self.length,
            "spacing": self.spacing,
            "rng_seed": self.rng_seed,
            "lane_profiles": None if self.lane_profiles is None else [list(map(list, p)) for p in self.lane_profiles],
            "road_types": None if self.road_types is None else list(self.road_types),
            "disruptions": [d.as_dict() for d in self.disruptions],
            "noise_sigma": self.noise_sigma,
            "grid_size": self.grid_size,
            "name": self.name,
        }


@dataclass
class SyntheticWorld:
    name: str
    network: LabeledNetwork
    features: fx.VertexFeatureField
    roads: Tuple[Tuple[int, ...], ...]
    spec: Optional[ScenarioSpec] = field(default=None, compare=False)

    @property
    def occluded(self) -> np.ndarray:
        return self.features.occluded

    def prepare(self, config: ModelConfig) -> PreparedNetwork:
        return prepare_network(self.network, self.features.values, config, occluded=self.occluded)


def road_polylines(spec: ScenarioSpec) -> List[Tuple[List[GeoPoint], int]]:
    """(polyline, layer) per road; roads on different layers never share vertices."""
    half = spec.length / 2.0
    if spec.topology == "corridor":
        return [([GeoPoint(-half, 0.0), GeoPoint(half, 0.0)], 0)]
    if spec.topology == "plus":
        return [
            ([GeoPoint(-half, 0.0), GeoPoint(half, 0.0)], 0),
            ([GeoPoint(0.0, -half), GeoPoint(0.0, half)], 0),
        ]
    if spec.topology == "parallel":
        offset = PARALLEL_SEPARATION / 2.0
        return [
            ([GeoPoint(-half, -offset), GeoPoint(half, -offset)], 0),
            ([GeoPoint(-half, offset), GeoPoint(half, offset)], 0),
        ]
    if spec.topology == "overpass":
        return [
            ([GeoPoint(-half, 0.0), GeoPoint(half, 0.0)], 0),
            ([GeoPoint(0.0, -half), GeoPoint(0.0, half)], 1),
        ]
    lines = np.linspace(-half, half, spec.grid_size)
    roads = [([GeoPoint(-half, float(y)), GeoPoint(half, float(y))], 0) for y in lines]
    roads += [([GeoPoint(float(x), -half), GeoPoint(float(x), half)], 0) for x in lines]
    return roads


def build_roads(
    polylines: Sequence[Tuple[Sequence[GeoPoint], int]], spacing: float
) -> Tuple[RoadGraph, Tuple[Tuple[int, ...], ...]]:
    """Densified road graph and the vertex sequence of every road."""
    builder = RoadGraphBuilder()
    index_of: Dict[Tuple[int, int, int], int] = {}
    roads: List[Tuple[int, ...]] = []
    for number, (points, layer) in enumerate(polylines):
        sequence: List[int] = []
        last = len(points) - 2
        for index, (a, b) in enumerate(zip(points, points[1:])):
            pieces = segment_count(a.distance_to(b), spacing)
            stops = [a.lerp(b, step / pieces) for step in range(pieces)]
            if index == last:
                stops.append(b)
            for point in stops:
                key = (layer, round(point.x / _MERGE_RESOLUTION), round(point.y / _MERGE_RESOLUTION))
                if key not in index_of:
                    index_of[key] = builder.add_vertex(point)
                vertex = index_of[key]
                if not sequence or sequence[-1] != vertex:
                    sequence.append(vertex)
        for u, v in zip(sequence, sequence[1:]):
            builder.add_edge(u, v, f"road-{number}")
        roads.append(tuple(sequence))
    return builder.build(), tuple(roads)


def recentre(graph: RoadGraph) -> RoadGraph:
    """Moves the bounding-box centre to the planar origin."""
    if graph.num_vertices == 0:
        return graph
    xs = [p.x for p in graph.vertices]
    ys = [p.y for p in graph.vertices]
    cx, cy = (min(xs) + max(xs)) / 2.0, (min(ys) + max(ys)) / 2.0
    moved = [GeoPoint(p.x - cx, p.y - cy) for p in graph.vertices]
    return RoadGraph(moved, graph.adjacency, graph.edge_meta)


def _profile_lanes(profile: LaneProfile, position: int) -> int:
    current = profile[0][1]
    for start, lanes in sorted(profile):
        if start <= position:
            current = lanes
    return current


def road_labels(
    roads: Sequence[Sequence[int]],
    num_vertices: int,
    spec: ScenarioSpec,
    rng: np.random.Generator,
) -> Tuple[np.ndarray, np.ndarray]:
    """Per-vertex lanes and road type; a junction takes the labels of its first road."""
    profiles = spec.lane_profiles
    if profiles is None or len(profiles) < len(roads):
        drawn = tuple(((0, int(rng.integers(MIN_LANES, MAX_LANES + 1))),) for _ in roads)
        profiles = tuple(profiles or ()) + drawn[len(profiles or ()) :]
    types = spec.road_types
    if types is None or len(types) < len(roads):
        drawn_types = tuple(int(t) for t in rng.integers(0, 2, size=len(roads)))
        types = tuple(types or ()) + drawn_types[len(types or ()) :]

    lanes = np.zeros(num_vertices, dtype=np.int64)
    road_types = np.zeros(num_vertices, dtype=np.int64)
    assigned = np.zeros(num_vertices, dtype=bool)
    for number, road in enumerate(roads):
        for position, v in enumerate(road):
            if assigned[v]:
                continue
            lanes[v] = _profile_lanes(profiles[number], position)
            road_types[v] = types[number]
            assigned[v] = True
    return lanes, road_types


def generate_world(spec: ScenarioSpec) -> SyntheticWorld:
    """Builds, labels and renders one world; disruptions only change observations
    (and, for lane_change_under_occlusion, the labels past the change point)."""
    rng = np.random.default_rng(spec.rng_seed)
    graph, roads = build_roads(road_polylines(spec), spec.spacing)
    graph = recentre(graph)
    n = graph.num_vertices

    noise = fx.draw_noise(n, rng, spec.noise_sigma)
    lanes, road_types = road_labels(roads, n, spec, rng)
    check_overlaps(roads, spec.disruptions)
    lanes = apply_label_changes(roads, lanes, spec.disruptions)

    field = fx.render_clean(lanes, road_types, noise)
    coords = np.array([(p.x, p.y) for p in graph.vertices], dtype=np.float64).reshape(n, 2)
    context = RenderContext(roads, lanes, noise, coords)
    for disruption in spec.disruptions:
        field = inject_disruption(field, disruption, context)

    network = fully_labeled(graph, lanes, road_types, name=spec.name)
    logger.debug(
        "generated %s: %s, %d vertices, %d occluded", spec.name, spec.topology, n, int(field.occluded.sum())
    )
    return SyntheticWorld(spec.name, network, field, roads, spec)
