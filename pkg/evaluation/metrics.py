"""Per-vertex metrics over unmasked labels."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence

import numpy as np

from errors import CoverageError, EmptyMaskError
from ingest.base import MAX_LANES, ROAD_TYPES, LabeledNetwork
from model.network import PredictionSet
from roadnet.chains import RoadChain, chain_membership


def _masked(values: np.ndarray, labels: np.ndarray, mask: np.ndarray, what: str) -> tuple[np.ndarray, np.ndarray]:
    values = np.asarray(values)
    labels = np.asarray(labels)
    mask = np.asarray(mask, dtype=bool)
    if not (values.shape == labels.shape == mask.shape):
        raise CoverageError(f"{what}: predictions {values.shape}, labels {labels.shape}, mask {mask.shape}")
    if not mask.any():
        raise EmptyMaskError(what)
    return values[mask], labels[mask]


def accuracy(predicted: np.ndarray, labels: np.ndarray, mask: np.ndarray) -> float:
    pred, true = _masked(predicted, labels, mask, "accuracy")
    return float(np.mean(pred == true))


def ale(predicted_lanes: np.ndarray, true_lanes: np.ndarray, mask: np.ndarray) -> float:
    """Mean absolute lane-count error over unmasked vertices."""
    pred, true = _masked(predicted_lanes, true_lanes, mask, "ale")
    return float(np.mean(np.abs(pred.astype(np.int64) - true.astype(np.int64))))


def confusion_matrix(predicted: np.ndarray, labels: np.ndarray, mask: np.ndarray, classes: int) -> np.ndarray:
    """Rows are true classes, columns predicted classes."""
    pred, true = _masked(predicted, labels, mask, "confusion_matrix")
    matrix = np.zeros((classes, classes), dtype=np.int64)
    np.add.at(matrix, (true.astype(np.int64), pred.astype(np.int64)), 1)
    return matrix


@dataclass(frozen=True)
class LabelSet:
    """Ground truth for a set of vertices, optionally with an occlusion flag per vertex."""

    lanes: np.ndarray
    lane_mask: np.ndarray
    road_types: np.ndarray
    type_mask: np.ndarray
    occluded: np.ndarray

    @property
    def num_vertices(self) -> int:
        return len(self.lanes)

    @classmethod
    def from_network(cls, network: LabeledNetwork, occluded: Optional[np.ndarray] = None) -> "LabelSet":
        n = network.num_vertices
        return cls(
            lanes=network.lanes.copy(),
            lane_mask=network.lane_mask.copy(),
            road_types=network.road_types.copy(),
            type_mask=network.type_mask.copy(),
            occluded=np.zeros(n, dtype=bool) if occluded is None else np.asarray(occluded, dtype=bool),
        )

    @classmethod
    def concat(cls, parts: Sequence["LabelSet"]) -> "LabelSet":
        return cls(*(np.concatenate([getattr(p, name) for p in parts]) for name in ("lanes", "lane_mask", "road_types", "type_mask", "occluded")))

    def restricted(self, keep: np.ndarray) -> "LabelSet":
        keep = np.asarray(keep, dtype=bool)
        return LabelSet(self.lanes, self.lane_mask & keep, self.road_types, self.type_mask & keep, self.occluded)


def concat_predictions(parts: Sequence[PredictionSet]) -> PredictionSet:
    return PredictionSet(np.concatenate([p.lane for p in parts]), np.concatenate([p.road_type for p in parts]))


@dataclass(frozen=True)
class SubsetScores:
    count: int
    lane_accuracy: Optional[float]
    type_accuracy: Optional[float]
    ale: Optional[float]


@dataclass(frozen=True)
class EvalReport:
    lane_accuracy: float
    type_accuracy: float
    ale: float
    lane_confusion: np.ndarray
    type_confusion: np.ndarray
    subsets: Dict[str, SubsetScores] = field(default_factory=dict)

    @property
    def mean_accuracy(self) -> float:
        return (self.lane_accuracy + self.type_accuracy) / 2.0


def _optional(metric, *args) -> Optional[float]:
    try:
        return metric(*args)
    except EmptyMaskError:
        return None


def subset_scores(predictions: PredictionSet, labels: LabelSet, keep: np.ndarray) -> SubsetScores:
    part = labels.restricted(keep)
    lanes = predictions.lane_counts()
    types = predictions.type_indices()
    return SubsetScores(
        count=int(np.count_nonzero(keep)),
        lane_accuracy=_optional(accuracy, lanes, part.lanes, part.lane_mask),
        type_accuracy=_optional(accuracy, types, part.road_types, part.type_mask),
        ale=_optional(ale, lanes, part.lanes, part.lane_mask),
    )


def evaluate(predictions: PredictionSet, labels: LabelSet) -> EvalReport:
    if predictions.num_vertices != labels.num_vertices:
        raise CoverageError(f"predictions cover {predictions.num_vertices} vertices, labels {labels.num_vertices}")
    lanes = predictions.lane_counts()
    types = predictions.type_indices()
    return EvalReport(
        lane_accuracy=accuracy(lanes, labels.lanes, labels.lane_mask),
        type_accuracy=accuracy(types, labels.road_types, labels.type_mask),
        ale=ale(lanes, labels.lanes, labels.lane_mask),
        lane_confusion=confusion_matrix(lanes - 1, labels.lanes - 1, labels.lane_mask, MAX_LANES),
        type_confusion=confusion_matrix(types, labels.road_types, labels.type_mask, len(ROAD_TYPES)),
        subsets={
            "occluded": subset_scores(predictions, labels, labels.occluded),
            "clean": subset_scores(predictions, labels, ~labels.occluded),
        },
    )


def chain_majority_vote(predictions: PredictionSet, chains: Sequence[RoadChain]) -> PredictionSet:
    """Segment-level view: every chain takes its most frequent argmax label (ties to the smaller class).

    A vertex on several chains follows its lowest-index chain; vertices on no
    chain keep their own argmax.
    """
    n = predictions.num_vertices
    membership = chain_membership(list(chains), n)
    outputs = []
    for probs in (predictions.lane, predictions.road_type):
        argmax = probs.argmax(axis=1)
        chosen = argmax.copy()
        votes = [np.bincount(argmax[list(chain.vertices)], minlength=probs.shape[1]).argmax() for chain in chains]
        for v in range(n):
            if membership[v]:
                chosen[v] = votes[membership[v][0]]
        outputs.append(np.eye(probs.shape[1])[chosen])
    return PredictionSet(*outputs)
