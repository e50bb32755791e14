"""Cross-entropy, graph Laplace regularization and vertex dropout."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from autodiff import tensor as ops
from autodiff.tensor import Tensor, aggregation_matrix, stop_gradient
from errors import EmptyLossError
from model.network import HeadOutput


@dataclass(frozen=True)
class HeadTargets:
    """Class indices and label mask for one head, in local vertex order."""

    classes: np.ndarray
    mask: np.ndarray


@dataclass
class LossBreakdown:
    total: Tensor
    ce_lane: float
    ce_type: float
    reg: float


def vertex_dropout(embeddings: Tensor, rate: float, rng: np.random.Generator) -> Tuple[Tensor, np.ndarray]:
    """Replaces floor(rate * V) random rows with e * r, r ~ U(-1, 1), gradient blocked.

    Returns the new embeddings and the sorted dropped row indices.
    """
    n = embeddings.shape[0]
    count = int(np.floor(rate * n))
    if count == 0:
        return embeddings, np.zeros(0, dtype=np.int64)
    dropped = np.sort(rng.choice(n, size=count, replace=False))
    keep = np.ones(embeddings.shape)
    keep[dropped] = 0.0
    noise = np.zeros(embeddings.shape)
    noise[dropped] = rng.uniform(-1.0, 1.0, size=(count, embeddings.shape[1]))
    kept = ops.mul(embeddings, keep)
    scrambled = ops.mul(stop_gradient(embeddings), noise)
    return kept + scrambled, dropped


def regularizer_weights(
    neighbors: Sequence[Sequence[int]],
    targets: HeadTargets,
    weight: float,
    vertices: Sequence[int] | np.ndarray,
) -> np.ndarray:
    """lambda(v): ``weight`` when v and every neighbor carry the same known label, else 0."""
    out = np.zeros(len(vertices))
    for slot, v in enumerate(vertices):
        nbrs = neighbors[v]
        if not nbrs or not targets.mask[v]:
            continue
        label = targets.classes[v]
        if all(targets.mask[u] and targets.classes[u] == label for u in nbrs):
            out[slot] = weight
    return out


def laplace_regularizer(
    probs: Tensor,
    neighbors: Sequence[Sequence[int]],
    targets: HeadTargets,
    weight: float,
    loss_vertices: Sequence[int] | np.ndarray,
) -> Tensor:
    """Mean over loss vertices of lambda(v) * |y_v - mean_{u in N(v)} y_u|^2."""
    loss_vertices = np.asarray(loss_vertices, dtype=np.int64)
    if loss_vertices.size == 0:
        return Tensor(0.0)
    lam = regularizer_weights(neighbors, targets, weight, loss_vertices)
    neighbor_mean = ops.sparse_matmul(aggregation_matrix(neighbors, probs.shape[0]), probs)
    deviation = ops.take_rows(probs - neighbor_mean, loss_vertices)
    weighted = ops.mul(ops.square(deviation), np.repeat(lam[:, None], probs.shape[1], axis=1))
    return ops.scale(ops.sum(weighted), 1.0 / loss_vertices.size)


def masked_cross_entropy(
    logits: Tensor,
    targets: HeadTargets,
    loss_vertices: Sequence[int] | np.ndarray,
) -> Tensor | None:
    """Mean CE over loss vertices with a known label; None when there are none."""
    rows = np.asarray([v for v in loss_vertices if targets.mask[v]], dtype=np.int64)
    if rows.size == 0:
        return None
    return ops.mean(ops.cross_entropy(ops.take_rows(logits, rows), targets.classes[rows]))


def total_loss(
    output: HeadOutput,
    lane: HeadTargets,
    road_type: HeadTargets,
    loss_vertices: Sequence[int] | np.ndarray,
    neighbors: Sequence[Sequence[int]],
    laplace_weight: float,
) -> LossBreakdown:
    """CE of both heads plus the Laplace regularizer of both heads."""
    ce_lane = masked_cross_entropy(output.lane_logits, lane, loss_vertices)
    ce_type = masked_cross_entropy(output.type_logits, road_type, loss_vertices)
    if ce_lane is None and ce_type is None:
        raise EmptyLossError()

    terms = [term for term in (ce_lane, ce_type) if term is not None]
    reg_value = 0.0
    if laplace_weight > 0:
        reg = laplace_regularizer(output.lane_probs, neighbors, lane, laplace_weight, loss_vertices) + laplace_regularizer(
            output.type_probs, neighbors, road_type, laplace_weight, loss_vertices
        )
        reg_value = reg.item()
        terms.append(reg)

    total = terms[0]
    for term in terms[1:]:
        total = total + term
    return LossBreakdown(
        total=total,
        ce_lane=ce_lane.item() if ce_lane is not None else 0.0,
        ce_type=ce_type.item() if ce_type is not None else 0.0,
        reg=reg_value,
    )
