"""Observation disruptions applied over spans of a road's vertex sequence."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree

from errors import DisruptionError
from ingest.base import MAX_LANES, MIN_LANES
from synth import features as fx

DISRUPTION_KINDS = (
    "remove_markings",
    "alternate_side_occlusion",
    "tree_occlusion",
    "building_occlusion",
    "overpass_occlusion",
    "lane_change_under_occlusion",
)
FULL_OCCLUSIONS = ("tree_occlusion", "building_occlusion", "overpass_occlusion", "lane_change_under_occlusion")


@dataclass(frozen=True)
class Span:
    """``length`` consecutive vertices of road ``road`` starting at position ``start``."""

    road: int
    start: int
    length: int

    def as_dict(self) -> dict:
        return {"road": self.road, "start": self.start, "length": self.length}


@dataclass(frozen=True)
class Disruption:
    kind: str
    span: Span
    new_lanes: Optional[int] = None
    source_road: Optional[int] = None

    def __post_init__(self) -> None:
        if self.kind not in DISRUPTION_KINDS:
            raise DisruptionError(f"unknown disruption kind {self.kind!r}")
        if self.kind == "lane_change_under_occlusion":
            if self.new_lanes is None or not MIN_LANES <= self.new_lanes <= MAX_LANES:
                raise DisruptionError("lane_change_under_occlusion needs new_lanes in 1..6")
            if self.span.length < 3:
                raise DisruptionError("lane_change_under_occlusion needs a span of at least 3 vertices")
        if self.kind == "overpass_occlusion" and self.source_road is None:
            raise DisruptionError("overpass_occlusion needs the source_road passing overhead")

    @property
    def change_position(self) -> int:
        """First road position carrying ``new_lanes``; strictly inside the span."""
        return self.span.start + self.span.length // 2

    def as_dict(self) -> dict:
        payload: dict = {"kind": self.kind, "span": self.span.as_dict()}
        if self.new_lanes is not None:
            payload["new_lanes"] = self.new_lanes
        if self.source_road is not None:
            payload["source_road"] = self.source_road
        return payload


@dataclass(frozen=True)
class RenderContext:
    roads: Tuple[Tuple[int, ...], ...]
    lanes: np.ndarray
    noise: np.ndarray
    coords: np.ndarray


def span_vertices(roads: Sequence[Sequence[int]], span: Span) -> np.ndarray:
    if not 0 <= span.road < len(roads):
        raise DisruptionError(f"span references road {span.road}, world has {len(roads)} roads")
    road = roads[span.road]
    if span.length < 1 or span.start < 0 or span.start + span.length > len(road):
        raise DisruptionError(
            f"span [{span.start}, {span.start + span.length}) outside road {span.road} of {len(road)} vertices"
        )
    return np.asarray(road[span.start : span.start + span.length], dtype=np.int64)


def check_overlaps(roads: Sequence[Sequence[int]], disruptions: Sequence[Disruption]) -> None:
    """Spans of different kinds must not share a vertex."""
    owner: Dict[int, str] = {}
    for disruption in disruptions:
        for v in span_vertices(roads, disruption.span).tolist():
            previous = owner.setdefault(v, disruption.kind)
            if previous != disruption.kind:
                raise DisruptionError(f"vertex {v} is covered by both {previous} and {disruption.kind}")


def apply_label_changes(roads: Sequence[Sequence[int]], lanes: np.ndarray, disruptions: Sequence[Disruption]) -> np.ndarray:
    """Lane counts after every lane_change_under_occlusion, from its change position to the road end."""
    lanes = np.array(lanes, dtype=np.int64)
    for disruption in disruptions:
        if disruption.kind != "lane_change_under_occlusion":
            continue
        span_vertices(roads, disruption.span)
        road = roads[disruption.span.road]
        lanes[list(road[disruption.change_position :])] = disruption.new_lanes
    return lanes


def inject_disruption(field: fx.VertexFeatureField, disruption: Disruption, context: RenderContext) -> fx.VertexFeatureField:
    """Returns a copy of ``field`` with the disruption's channel overwrites inside its span."""
    vertices = span_vertices(context.roads, disruption.span)
    out = field.copy()
    kind = disruption.kind
    if kind == "remove_markings":
        fx.remove_markings(out, vertices)
    elif kind == "alternate_side_occlusion":
        fx.alternate_sides(out, vertices, context.lanes)
    elif kind in ("tree_occlusion", "lane_change_under_occlusion"):
        fx.occlude(out, vertices, "tree", context.noise)
    elif kind == "building_occlusion":
        fx.occlude(out, vertices, "building", context.noise)
    else:
        if not 0 <= disruption.source_road < len(context.roads) or disruption.source_road == disruption.span.road:
            raise DisruptionError(f"overpass source road {disruption.source_road} is not another road of the world")
        source = np.asarray(context.roads[disruption.source_road], dtype=np.int64)
        _, nearest = cKDTree(context.coords[source]).query(context.coords[vertices])
        fx.cover_with(out, vertices, source[np.asarray(nearest, dtype=np.int64)])
    return out
