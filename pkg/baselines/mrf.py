"""Chain MRF post-processing solved exactly by min-sum dynamic programming.

Energy per chain: sum of -log P(x_i) plus weight * |x_i - x_j|^exponent over
consecutive chain vertices. Lane labels are ordinal; road types use a 0/1
distance since their class indices are nominal.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np

from errors import ConfigError, EmptyMaskError
from evaluation.metrics import accuracy
from model.network import PredictionSet
from roadnet.chains import RoadChain

logger = logging.getLogger(__name__)

Head = Literal["lane", "type"]
PROBABILITY_FLOOR = 1e-9


@dataclass(frozen=True)
class MrfParams:
    weight: float = 1.0
    exponent: int = 1

    def __post_init__(self) -> None:
        if self.weight < 0:
            raise ConfigError("MRF weight must be >= 0")
        if self.exponent not in (1, 2):
            raise ConfigError("MRF exponent must be 1 or 2")

    def as_dict(self) -> dict:
        return {"weight": self.weight, "exponent": self.exponent}


def make_grid(weights: Sequence[float], exponents: Sequence[int]) -> List[MrfParams]:
    return [MrfParams(float(w), int(n)) for w, n in itertools.product(weights, exponents)]


def unary_costs(probs: np.ndarray) -> np.ndarray:
    return -np.log(np.maximum(probs, PROBABILITY_FLOOR))


def pairwise_costs(num_labels: int, params: MrfParams, head: Head) -> np.ndarray:
    labels = np.arange(num_labels)
    if head == "lane":
        distance = np.abs(labels[:, None] - labels[None, :]).astype(np.float64)
    else:
        distance = (labels[:, None] != labels[None, :]).astype(np.float64)
    return params.weight * distance**params.exponent


def chain_energy(labels: Sequence[int], unary: np.ndarray, pairwise: np.ndarray, closed: bool = False) -> float:
    labels = np.asarray(labels, dtype=np.int64)
    energy = float(unary[np.arange(len(labels)), labels].sum())
    energy += float(pairwise[labels[:-1], labels[1:]].sum())
    if closed and len(labels) > 1:
        energy += float(pairwise[labels[-1], labels[0]])
    return energy


def _open_chain(unary: np.ndarray, pairwise: np.ndarray, first: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Min-sum forward pass; returns the cost of each final label and the backpointers."""
    length, k = unary.shape
    cost = unary[0].copy()
    if first is not None:
        blocked = np.full(k, np.inf)
        blocked[first] = cost[first]
        cost = blocked
    pointers = np.zeros((length, k), dtype=np.int64)
    for i in range(1, length):
        totals = cost[:, None] + pairwise
        pointers[i] = totals.argmin(axis=0)
        cost = totals[pointers[i], np.arange(k)] + unary[i]
    return cost, pointers


def _backtrack(pointers: np.ndarray, last: int) -> np.ndarray:
    labels = np.zeros(len(pointers), dtype=np.int64)
    labels[-1] = last
    for i in range(len(pointers) - 1, 0, -1):
        labels[i - 1] = pointers[i, labels[i]]
    return labels


def min_sum_chain(unary: np.ndarray, pairwise: np.ndarray, closed: bool = False) -> np.ndarray:
    """Exact energy minimizer on a path, or on a cycle by conditioning on the first label."""
    if len(unary) == 0:
        return np.zeros(0, dtype=np.int64)
    if not closed or len(unary) < 2:
        cost, pointers = _open_chain(unary, pairwise)
        return _backtrack(pointers, int(cost.argmin()))

    best: Optional[Tuple[float, np.ndarray]] = None
    for first in range(unary.shape[1]):
        cost, pointers = _open_chain(unary, pairwise, first)
        closing = cost + pairwise[:, first]
        last = int(closing.argmin())
        if best is None or closing[last] < best[0]:
            best = (float(closing[last]), _backtrack(pointers, last))
    return best[1]


def mrf_infer(probs: np.ndarray, chains: Sequence[RoadChain], params: MrfParams, head: Head) -> np.ndarray:
    """Class index per vertex; a vertex on several chains keeps the label from its lowest-index chain."""
    labels = probs.argmax(axis=1)
    assigned = np.zeros(len(probs), dtype=bool)
    pairwise = pairwise_costs(probs.shape[1], params, head)
    unary = unary_costs(probs)
    for chain in chains:
        if len(chain.vertices) == 0:
            continue
        vertices = np.asarray(chain.vertices, dtype=np.int64)
        solved = min_sum_chain(unary[vertices], pairwise, chain.closed)
        fresh = ~assigned[vertices]
        labels[vertices[fresh]] = solved[fresh]
        assigned[vertices] = True
    return labels


def mrf_predictions(
    predictions: PredictionSet,
    chains: Sequence[RoadChain],
    lane_params: MrfParams,
    type_params: MrfParams,
) -> PredictionSet:
    """One-hot PredictionSet of the MRF labels for both heads."""
    lanes = mrf_infer(predictions.lane, chains, lane_params, "lane")
    types = mrf_infer(predictions.road_type, chains, type_params, "type")
    return PredictionSet(np.eye(predictions.lane.shape[1])[lanes], np.eye(predictions.road_type.shape[1])[types])


def mrf_grid_search(
    probs: Sequence[np.ndarray],
    labels: Sequence[np.ndarray],
    masks: Sequence[np.ndarray],
    chains: Sequence[Sequence[RoadChain]],
    grid: Sequence[MrfParams],
    head: Head,
) -> MrfParams:
    """Grid point with the best validation accuracy; ties go to the smaller weight, then exponent.

    Inputs are given per validation network; ``labels`` are class indices.
    """
    if not grid:
        raise ConfigError("MRF grid is empty")
    mask = np.concatenate(masks)
    if not mask.any():
        raise EmptyMaskError("mrf_grid_search")
    truth = np.concatenate(labels)

    best: Optional[Tuple[float, MrfParams]] = None
    for params in sorted(grid, key=lambda p: (p.weight, p.exponent)):
        predicted = np.concatenate([mrf_infer(p, c, params, head) for p, c in zip(probs, chains)])
        score = accuracy(predicted, truth, mask)
        logger.debug("mrf %s weight=%g exponent=%d accuracy=%.4f", head, params.weight, params.exponent, score)
        if best is None or score > best[0]:
            best = (score, params)
    logger.info("mrf %s: selected weight=%g exponent=%d (accuracy %.4f)", head, best[1].weight, best[1].exponent, best[0])
    return best[1]
