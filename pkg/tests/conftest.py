from __future__ import annotations

from typing import Callable, Sequence, Tuple

import pytest

from model.config import ModelConfig
from roadnet.base import GeoPoint, RoadGraph, RoadGraphBuilder


def build_graph(points: Sequence[Tuple[float, float]], edges: Sequence[Tuple[int, int]]) -> RoadGraph:
    builder = RoadGraphBuilder()
    for x, y in points:
        builder.add_vertex(GeoPoint(float(x), float(y)))
    for u, v in edges:
        builder.add_edge(u, v)
    return builder.build()


@pytest.fixture
def graph_from() -> Callable[..., RoadGraph]:
    return build_graph


@pytest.fixture
def path_graph() -> Callable[[int], RoadGraph]:
    """Straight east-west path with 20 m spacing."""

    def make(n: int, spacing: float = 20.0) -> RoadGraph:
        return build_graph([(i * spacing, 0.0) for i in range(n)], [(i, i + 1) for i in range(n - 1)])

    return make


@pytest.fixture
def plus_graph() -> RoadGraph:
    """Two perpendicular 3-vertex roads crossing at vertex 0."""
    points = [(0, 0), (-20, 0), (-40, 0), (20, 0), (40, 0), (0, -20), (0, -40), (0, 20), (0, 40)]
    edges = [(2, 1), (1, 0), (0, 3), (3, 4), (6, 5), (5, 0), (0, 7), (7, 8)]
    return build_graph(points, edges)


@pytest.fixture
def tiny_config() -> ModelConfig:
    return ModelConfig(
        feature_dim=16,
        embed_dim=8,
        hidden_chunk=6,
        steps=3,
        encoder_hidden=(8,),
        head_hidden=(8,),
    )
