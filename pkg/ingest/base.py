"""Labeled road networks and the local planar projection."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from roadnet.base import GeoPoint, RoadGraph

EARTH_RADIUS = 6371000.0
ROAD_TYPES = ("residential", "primary")
MIN_LANES = 1
MAX_LANES = 6


@dataclass(frozen=True)
class LocalProjection:
    """Equirectangular projection about (lon0, lat0); meters east/north of the origin."""

    lon0: float = 0.0
    lat0: float = 0.0

    @property
    def _cos_lat0(self) -> float:
        return math.cos(math.radians(self.lat0))

    def project(self, lon: float, lat: float) -> GeoPoint:
        return GeoPoint(
            EARTH_RADIUS * math.radians(lon - self.lon0) * self._cos_lat0,
            EARTH_RADIUS * math.radians(lat - self.lat0),
        )

    def unproject(self, point: GeoPoint) -> Tuple[float, float]:
        lon = self.lon0 + math.degrees(point.x / (EARTH_RADIUS * self._cos_lat0))
        lat = self.lat0 + math.degrees(point.y / EARTH_RADIUS)
        return lon, lat

    @classmethod
    def about_bounds(cls, lonlats: Iterable[Tuple[float, float]]) -> "LocalProjection":
        """Projection centred on the bounding box of ``lonlats``."""
        points = list(lonlats)
        if not points:
            return cls()
        lons = [p[0] for p in points]
        lats = [p[1] for p in points]
        return cls((min(lons) + max(lons)) / 2.0, (min(lats) + max(lats)) / 2.0)

    def as_dict(self) -> dict:
        return {"lon0": self.lon0, "lat0": self.lat0}


@dataclass(frozen=True)
class LabeledNetwork:
    """Road graph plus per-vertex attribute labels.

    ``lanes`` holds lane counts 1..6 and ``road_types`` indexes ``ROAD_TYPES``;
    entries where the matching mask is False are placeholders and never read.
    """

    graph: RoadGraph
    lanes: np.ndarray
    road_types: np.ndarray
    lane_mask: np.ndarray
    type_mask: np.ndarray
    name: str = "network"
    warnings: Tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self) -> None:
        n = self.graph.num_vertices
        for attr in ("lanes", "road_types", "lane_mask", "type_mask"):
            value = np.asarray(getattr(self, attr))
            if value.shape != (n,):
                raise ValueError(f"{attr} must have one entry per vertex ({n}), got shape {value.shape}")
        lanes = np.where(self.lane_mask, np.asarray(self.lanes, dtype=np.int64), 0)
        types = np.where(self.type_mask, np.asarray(self.road_types, dtype=np.int64), 0)
        if np.any(self.lane_mask & ((lanes < MIN_LANES) | (lanes > MAX_LANES))):
            raise ValueError("lane counts must be within 1..6")
        if np.any(self.type_mask & ((types < 0) | (types >= len(ROAD_TYPES)))):
            raise ValueError("road type index out of range")
        object.__setattr__(self, "lanes", lanes)
        object.__setattr__(self, "road_types", types)
        object.__setattr__(self, "lane_mask", np.asarray(self.lane_mask, dtype=bool))
        object.__setattr__(self, "type_mask", np.asarray(self.type_mask, dtype=bool))
        object.__setattr__(self, "warnings", tuple(self.warnings))

    @property
    def num_vertices(self) -> int:
        return self.graph.num_vertices

    @property
    def lane_classes(self) -> np.ndarray:
        """Lane labels as class indices 0..5 (lane count minus one)."""
        return np.where(self.lane_mask, self.lanes - 1, 0)

    def lane_label(self, v: int) -> Optional[int]:
        return int(self.lanes[v]) if self.lane_mask[v] else None

    def type_label(self, v: int) -> Optional[str]:
        return ROAD_TYPES[int(self.road_types[v])] if self.type_mask[v] else None

    def with_labels(
        self,
        lanes: Sequence[int] | np.ndarray,
        road_types: Sequence[int] | np.ndarray | None = None,
    ) -> "LabeledNetwork":
        return LabeledNetwork(
            graph=self.graph,
            lanes=np.asarray(lanes),
            road_types=self.road_types if road_types is None else np.asarray(road_types),
            lane_mask=self.lane_mask,
            type_mask=self.type_mask,
            name=self.name,
            warnings=self.warnings,
        )

    def same_labels(self, other: "LabeledNetwork") -> bool:
        return (
            np.array_equal(self.lane_mask, other.lane_mask)
            and np.array_equal(self.type_mask, other.type_mask)
            and np.array_equal(self.lanes, other.lanes)
            and np.array_equal(self.road_types, other.road_types)
        )


def fully_labeled(graph: RoadGraph, lanes: Sequence[int], road_types: Sequence[int], name: str = "network") -> LabeledNetwork:
    n = graph.num_vertices
    return LabeledNetwork(
        graph=graph,
        lanes=np.asarray(lanes),
        road_types=np.asarray(road_types),
        lane_mask=np.ones(n, dtype=bool),
        type_mask=np.ones(n, dtype=bool),
        name=name,
    )


def from_optional_labels(
    graph: RoadGraph,
    lanes: Sequence[Optional[int]],
    road_types: Sequence[Optional[int]],
    *,
    name: str = "network",
    warnings: Sequence[str] = (),
) -> LabeledNetwork:
    """Builds a network where ``None`` labels become masked entries."""
    return LabeledNetwork(
        graph=graph,
        lanes=np.array([0 if value is None else value for value in lanes], dtype=np.int64),
        road_types=np.array([0 if value is None else value for value in road_types], dtype=np.int64),
        lane_mask=np.array([value is not None for value in lanes], dtype=bool),
        type_mask=np.array([value is not None for value in road_types], dtype=bool),
        name=name,
        warnings=tuple(warnings),
    )
