"""Neighborhood averaging of per-vertex probabilities."""

from __future__ import annotations

from autodiff.tensor import aggregation_matrix
from model.network import PredictionSet
from roadnet.base import RoadGraph


def smooth_predictions(predictions: PredictionSet, graph: RoadGraph) -> PredictionSet:
    """y'_v = (y_v + sum of neighbor y_u) / (1 + |N(v)|)."""
    if predictions.num_vertices != graph.num_vertices:
        raise ValueError(f"predictions cover {predictions.num_vertices} vertices, graph has {graph.num_vertices}")
    window = aggregation_matrix([(v, *graph.neighbors(v)) for v in range(graph.num_vertices)], graph.num_vertices)
    return PredictionSet(window @ predictions.lane, window @ predictions.road_type)
