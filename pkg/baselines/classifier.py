"""Per-vertex classifier: the RoadTagger encoder and heads with no propagation."""

from __future__ import annotations

import logging
from dataclasses import replace
from typing import Optional, Sequence

import numpy as np

from autodiff.tensor import Tape, Tensor, backward
from errors import EmptyLossError
from model.config import ModelConfig
from model.network import PredictionSet, encode_vertices, heads
from model.params import ModelParams, classifier_shapes
from model.prepared import PreparedNetwork
from training.config import TrainConfig
from training.losses import HeadTargets, total_loss
from training.loop import StepFn, StepResult, TrainResult, fit, split_validation

logger = logging.getLogger(__name__)


def classifier_config(model_config: ModelConfig, receptive_hops: int = 0) -> ModelConfig:
    """Same layer sizes as ``model_config``; ``receptive_hops`` widens the input window."""
    return replace(model_config, receptive_hops=receptive_hops)


def classifier_forward(features: np.ndarray, params: ModelParams) -> PredictionSet:
    weights = params.constants()
    embeddings = encode_vertices(Tensor(features), weights, params.config)
    return heads(embeddings, weights, params.config).predictions()


def classifier_predict(params: ModelParams, net: PreparedNetwork) -> PredictionSet:
    return classifier_forward(net.inputs(params.config.receptive_hops), params)


def classifier_step(networks: Sequence[PreparedNetwork], config: ModelConfig, train_config: TrainConfig) -> StepFn:
    """One batch of ``classifier_batch`` vertices drawn uniformly from every training network."""
    networks = [net for net in networks if net.num_vertices > 0]
    offsets = np.cumsum([0] + [net.num_vertices for net in networks])
    total = int(offsets[-1])

    def step(params: ModelParams, rng: np.random.Generator) -> StepResult:
        picks = np.sort(rng.choice(total, size=min(train_config.classifier_batch, total), replace=False))
        owners = np.searchsorted(offsets, picks, side="right") - 1
        rows, lane_classes, lane_mask, type_classes, type_mask = [], [], [], [], []
        for owner in np.unique(owners):
            net = networks[owner]
            local = picks[owners == owner] - offsets[owner]
            rows.append(net.inputs(config.receptive_hops)[local])
            lane_classes.append(net.network.lane_classes[local])
            lane_mask.append(net.network.lane_mask[local])
            type_classes.append(net.network.road_types[local])
            type_mask.append(net.network.type_mask[local])

        tape = Tape()
        weights = params.register(tape)
        output = heads(encode_vertices(Tensor(np.concatenate(rows)), weights, config), weights, config)
        try:
            breakdown = total_loss(
                output,
                HeadTargets(np.concatenate(lane_classes), np.concatenate(lane_mask)),
                HeadTargets(np.concatenate(type_classes), np.concatenate(type_mask)),
                np.arange(len(picks)),
                neighbors=[()] * len(picks),
                laplace_weight=0.0,
            )
        except EmptyLossError:
            logger.debug("classifier batch of %d vertices has no labels; skipped", len(picks))
            return None
        return breakdown, backward(tape, breakdown.total)

    return step


def train_classifier(
    networks: Sequence[PreparedNetwork],
    model_config: ModelConfig,
    train_config: TrainConfig,
    validation: Optional[Sequence[PreparedNetwork]] = None,
    *,
    receptive_hops: int = 0,
) -> TrainResult:
    """Plain cross-entropy training with the same optimizer and schedule as RoadTagger."""
    if validation is None:
        networks, validation = split_validation(networks, train_config.validation_fraction)
    config = classifier_config(model_config, receptive_hops)
    if not any(net.num_vertices for net in networks):
        raise ValueError("training needs at least one non-empty labeled network")
    logger.info("training classifier (receptive_hops=%d) on %d networks", receptive_hops, len(networks))
    params = ModelParams.initialize(config, train_config.rng_seed, shapes=classifier_shapes(config))
    step = classifier_step(networks, config, train_config)
    return fit(params, step, classifier_predict, train_config, validation, label="classifier")
