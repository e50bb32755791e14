"""Forward pass: encoder, raise, multi-structure GGNN propagation and heads.

The hidden state of every vertex is ``k`` chunks of ``m`` values, one chunk
per graph structure. Messages from structure ``i`` are mean-aggregated over
that structure's sources and land in chunk ``i``; a dense GRU over all ``k*m``
values then updates the state, so chunks interact only through the GRU and the
full-width message functions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from autodiff import tensor as ops
from autodiff.tensor import Tensor
from errors import ShapeError
from model.config import ModelConfig
from model.params import ModelParams
from roadnet.structures import GraphStructure

Weights = Mapping[str, Tensor]


@dataclass(frozen=True)
class PredictionSet:
    """Per-vertex class probabilities for both heads."""

    lane: np.ndarray
    road_type: np.ndarray

    def __post_init__(self) -> None:
        lane = np.asarray(self.lane, dtype=np.float64)
        road_type = np.asarray(self.road_type, dtype=np.float64)
        if lane.ndim != 2 or road_type.ndim != 2 or lane.shape[0] != road_type.shape[0]:
            raise ShapeError("PredictionSet", lane.shape, road_type.shape)
        object.__setattr__(self, "lane", lane)
        object.__setattr__(self, "road_type", road_type)

    @property
    def num_vertices(self) -> int:
        return self.lane.shape[0]

    def lane_counts(self) -> np.ndarray:
        return self.lane.argmax(axis=1) + 1

    def type_indices(self) -> np.ndarray:
        return self.road_type.argmax(axis=1)

    def head(self, name: str) -> np.ndarray:
        if name == "lane":
            return self.lane
        if name == "type":
            return self.road_type
        raise KeyError(name)

    def take(self, rows: Sequence[int] | np.ndarray) -> "PredictionSet":
        index = np.asarray(rows, dtype=np.int64)
        return PredictionSet(self.lane[index], self.road_type[index])


@dataclass
class HeadOutput:
    lane_logits: Tensor
    type_logits: Tensor

    @property
    def lane_probs(self) -> Tensor:
        return ops.softmax(self.lane_logits)

    @property
    def type_probs(self) -> Tensor:
        return ops.softmax(self.type_logits)

    def predictions(self) -> PredictionSet:
        return PredictionSet(self.lane_probs.data, self.type_probs.data)


def mlp(x: Tensor, weights: Weights, prefix: str, layers: int) -> Tensor:
    """``layers`` fully-connected layers with relu between them, linear output."""
    for index in range(layers):
        x = ops.linear(x, weights[f"{prefix}.{index}.w"], weights[f"{prefix}.{index}.b"])
        if index < layers - 1:
            x = ops.relu(x)
    return x


def encode_vertices(features: Tensor, weights: Weights, config: ModelConfig) -> Tensor:
    """Per-vertex MLP from observation features to ``embed_dim`` embeddings."""
    if features.ndim != 2 or features.shape[1] != config.input_dim:
        raise ShapeError("encode_vertices", features.shape, (features.shape[0] if features.ndim else 0, config.input_dim))
    return mlp(features, weights, "encoder", len(config.encoder_hidden) + 1)


def raise_embeddings(embeddings: Tensor, weights: Weights, config: ModelConfig) -> Tensor:
    """h0: two FC layers to ``hidden_chunk`` values, tiled once per structure."""
    if embeddings.ndim != 2 or embeddings.shape[1] != config.embed_dim:
        raise ShapeError("raise", embeddings.shape, (config.embed_dim,))
    raised = mlp(embeddings, weights, "raise", 2)
    return ops.concat([raised] * config.num_structures)


def gru_cell(h: Tensor, a: Tensor, weights: Weights) -> Tensor:
    z = ops.sigmoid(ops.linear(a, weights["gru.w_z"]) + ops.linear(h, weights["gru.u_z"]) + weights["gru.b_z"])
    r = ops.sigmoid(ops.linear(a, weights["gru.w_r"]) + ops.linear(h, weights["gru.u_r"]) + weights["gru.b_r"])
    candidate = ops.tanh(
        ops.linear(a, weights["gru.w_h"]) + ops.linear(ops.mul(r, h), weights["gru.u_h"]) + weights["gru.b_h"]
    )
    # (1 - z) * h + z * candidate
    return h + ops.mul(z, candidate - h)


def ggnn_step(h: Tensor, structures: Sequence[GraphStructure], weights: Weights, config: ModelConfig) -> Tensor:
    k = config.num_structures
    if len(structures) != k:
        raise ShapeError("ggnn_step", (len(structures),), (k,))
    if h.ndim != 2 or h.shape[1] != config.hidden_dim:
        raise ShapeError("ggnn_step", h.shape, (config.hidden_dim,))

    aggregated = []
    for i, structure in enumerate(structures):
        if structure.num_vertices != h.shape[0]:
            raise ShapeError("ggnn_step", (structure.num_vertices,), h.shape)
        source = h if config.message_input == "full" else ops.slice_chunk(h, i, k)
        message = ops.linear(source, weights[f"message.{i}.w"], weights[f"message.{i}.b"])
        aggregated.append(ops.sparse_matmul(structure.aggregation, message))
    return gru_cell(h, ops.concat(aggregated), weights)


def propagate(
    embeddings: Tensor,
    structures: Sequence[GraphStructure],
    weights: Weights,
    config: ModelConfig,
    steps: int | None = None,
) -> Tensor:
    """Raise the embeddings, then run ``steps`` (default ``config.steps``) GGNN rounds."""
    h = raise_embeddings(embeddings, weights, config)
    for _ in range(config.steps if steps is None else steps):
        h = ggnn_step(h, structures, weights, config)
    return h


def heads(h: Tensor, weights: Weights, config: ModelConfig) -> HeadOutput:
    layers = len(config.head_hidden) + 1
    return HeadOutput(mlp(h, weights, "head.lane", layers), mlp(h, weights, "head.type", layers))


def forward_tensors(
    features: Tensor,
    structures: Sequence[GraphStructure],
    weights: Weights,
    config: ModelConfig,
) -> HeadOutput:
    embeddings = encode_vertices(features, weights, config)
    return heads(propagate(embeddings, structures, weights, config), weights, config)


def forward(
    features: np.ndarray,
    structures: Sequence[GraphStructure],
    config: ModelConfig,
    params: ModelParams,
) -> PredictionSet:
    """Whole-graph inference without recording a tape."""
    output = forward_tensors(Tensor(features), structures, params.constants(), config)
    return output.predictions()

