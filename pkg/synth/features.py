"""Per-vertex observation vectors standing in for the imagery around each vertex.

Channel layout (16 values):

    0      visible lane-marking count / 6
    1      road width in meters / 30
    2, 3   left / right marking visible
    4..7   occluder one-hot: none, tree, building, overpass
    8      surface cue (primary roads look brighter)
    9..15  gaussian noise

Width, surface and the noise channels carry per-vertex gaussian noise drawn
before any label is looked at, so occluded vertices render identically
whatever their true attributes are.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

FEATURE_DIM = 16
MARKINGS = 0
WIDTH = 1
LEFT = 2
RIGHT = 3
OCCLUDER_START = 4
SURFACE = 8
NOISE_START = 9

OCCLUDERS = ("none", "tree", "building", "overpass")
CHANNEL_NAMES = (
    "markings",
    "width",
    "left_marking",
    "right_marking",
    "occluder_none",
    "occluder_tree",
    "occluder_building",
    "occluder_overpass",
    "surface",
    *(f"noise_{i}" for i in range(FEATURE_DIM - NOISE_START)),
)

LANE_WIDTH = 3.5
SHOULDER = 1.5
WIDTH_SCALE = 30.0
SURFACE_CUE = (0.35, 0.75)
DEFAULT_NOISE_SIGMA = 0.05

# What a fully occluded vertex shows in (markings, width, surface).
OCCLUDER_APPEARANCE = {
    "tree": (0.0, 0.15, 0.2),
    "building": (0.0, 0.6, 0.55),
}

# Channels that receive the per-vertex gaussian noise.
NOISY_CHANNELS = np.array([WIDTH, SURFACE, *range(NOISE_START, FEATURE_DIM)])


@dataclass
class VertexFeatureField:
    """Observation matrix plus which vertices are occluded and by what."""

    values: np.ndarray
    occluder: np.ndarray

    @property
    def num_vertices(self) -> int:
        return self.values.shape[0]

    @property
    def occluded(self) -> np.ndarray:
        return self.occluder != 0

    def copy(self) -> "VertexFeatureField":
        return VertexFeatureField(self.values.copy(), self.occluder.copy())


def draw_noise(num_vertices: int, rng: np.random.Generator, sigma: float = DEFAULT_NOISE_SIGMA) -> np.ndarray:
    noise = np.zeros((num_vertices, FEATURE_DIM))
    noise[:, NOISY_CHANNELS] = rng.normal(0.0, sigma, size=(num_vertices, len(NOISY_CHANNELS)))
    return noise


def road_width(lanes: int | np.ndarray) -> np.ndarray:
    return (np.asarray(lanes) * LANE_WIDTH + SHOULDER) / WIDTH_SCALE


def render_clean(lanes: Sequence[int], road_types: Sequence[int], noise: np.ndarray) -> VertexFeatureField:
    """Unobstructed roads: markings and width follow the lane count, surface the road type."""
    lanes = np.asarray(lanes, dtype=np.int64)
    road_types = np.asarray(road_types, dtype=np.int64)
    values = np.zeros((len(lanes), FEATURE_DIM))
    values[:, MARKINGS] = lanes / 6.0
    values[:, WIDTH] = road_width(lanes)
    values[:, LEFT] = 1.0
    values[:, RIGHT] = 1.0
    values[:, OCCLUDER_START] = 1.0
    values[:, SURFACE] = np.take(SURFACE_CUE, road_types)
    return VertexFeatureField(values + noise, np.zeros(len(lanes), dtype=np.int64))


def _set_occluder(field: VertexFeatureField, vertices: np.ndarray, kind: str) -> None:
    index = OCCLUDERS.index(kind)
    field.values[np.ix_(vertices, np.arange(OCCLUDER_START, OCCLUDER_START + len(OCCLUDERS)))] = 0.0
    field.values[vertices, OCCLUDER_START + index] = 1.0
    field.occluder[vertices] = index


def occlude(field: VertexFeatureField, vertices: np.ndarray, kind: str, noise: np.ndarray) -> None:
    """Full occlusion by a tree canopy or a building; road channels show the occluder."""
    markings, width, surface = OCCLUDER_APPEARANCE[kind]
    field.values[vertices, MARKINGS] = markings
    field.values[vertices, WIDTH] = width + noise[vertices, WIDTH]
    field.values[vertices, LEFT] = 0.0
    field.values[vertices, RIGHT] = 0.0
    field.values[vertices, SURFACE] = surface + noise[vertices, SURFACE]
    _set_occluder(field, vertices, kind)


def cover_with(field: VertexFeatureField, vertices: np.ndarray, source: np.ndarray) -> None:
    """Overpass: ``vertices`` show the road channels of the ``source`` vertices above them."""
    for channel in (MARKINGS, WIDTH, LEFT, RIGHT, SURFACE):
        field.values[vertices, channel] = field.values[source, channel]
    _set_occluder(field, vertices, "overpass")


def remove_markings(field: VertexFeatureField, vertices: np.ndarray) -> None:
    field.values[vertices, MARKINGS] = 0.0
    field.values[vertices, LEFT] = 0.0
    field.values[vertices, RIGHT] = 0.0


def alternate_sides(field: VertexFeatureField, vertices: np.ndarray, lanes: np.ndarray) -> None:
    """Left side hidden at even span offsets, right side at odd ones; half the markings stay visible."""
    even = vertices[0::2]
    odd = vertices[1::2]
    field.values[even, LEFT] = 0.0
    field.values[odd, RIGHT] = 0.0
    field.values[vertices, MARKINGS] = np.floor(lanes[vertices] / 2.0) / 6.0
