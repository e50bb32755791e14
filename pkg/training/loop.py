"""Subgraph-sampling training loop with best-on-validation selection."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from autodiff.tensor import Tape, Tensor, backward
from errors import EmptyLossError, NonFiniteError, TrainingDivergedError
from evaluation.metrics import EvalReport, LabelSet, concat_predictions, evaluate
from ingest.base import LabeledNetwork
from model.config import ModelConfig
from model.network import PredictionSet, encode_vertices, forward, heads, propagate
from model.params import ModelParams
from model.prepared import PreparedNetwork
from roadnet.sampling import sample_subgraph
from training.config import TrainConfig
from training.history import HistoryRow, MetricsHistory, format_progress
from training.losses import HeadTargets, LossBreakdown, total_loss, vertex_dropout
from training.optim import Adam

logger = logging.getLogger(__name__)

StepResult = Optional[Tuple[LossBreakdown, Dict[str, np.ndarray]]]
StepFn = Callable[[ModelParams, np.random.Generator], StepResult]
PredictFn = Callable[[ModelParams, PreparedNetwork], PredictionSet]


@dataclass
class TrainResult:
    params: ModelParams
    history: MetricsHistory
    best_iteration: int
    best_score: Optional[float]


def split_validation(
    networks: Sequence[PreparedNetwork], fraction: float
) -> Tuple[List[PreparedNetwork], List[PreparedNetwork]]:
    """The last ``fraction`` of the networks (at least one training network kept)."""
    networks = list(networks)
    count = min(int(round(len(networks) * fraction)), max(len(networks) - 1, 0))
    if count == 0:
        return networks, []
    return networks[:-count], networks[-count:]


def head_targets(network: LabeledNetwork, vertex_ids: np.ndarray) -> Tuple[HeadTargets, HeadTargets]:
    return (
        HeadTargets(network.lane_classes[vertex_ids], network.lane_mask[vertex_ids]),
        HeadTargets(network.road_types[vertex_ids], network.type_mask[vertex_ids]),
    )


def validate(params: ModelParams, predict: PredictFn, networks: Sequence[PreparedNetwork]) -> EvalReport:
    predictions = concat_predictions([predict(params, net) for net in networks])
    labels = LabelSet.concat([LabelSet.from_network(net.network, net.occluded) for net in networks])
    return evaluate(predictions, labels)


def _check_finite(iteration: int, breakdown: LossBreakdown, grads: Dict[str, np.ndarray]) -> None:
    if not math.isfinite(breakdown.total.item()):
        raise TrainingDivergedError(
            iteration, f"loss={breakdown.total.item()} ce_lane={breakdown.ce_lane} ce_type={breakdown.ce_type} reg={breakdown.reg}"
        )
    for name, grad in grads.items():
        if not np.all(np.isfinite(grad)):
            raise TrainingDivergedError(iteration, f"non-finite gradient for {name}")


def fit(
    params: ModelParams,
    step: StepFn,
    predict: PredictFn,
    config: TrainConfig,
    validation: Sequence[PreparedNetwork] = (),
    *,
    label: str = "roadtagger",
) -> TrainResult:
    """Runs ``config.iterations`` optimizer steps and keeps the best validation snapshot.

    Validation runs every ``validation_interval`` updates and after the last
    one; the score is the mean of lane and type accuracy. Without validation
    networks the final parameters are returned.
    """
    rng = np.random.default_rng(config.rng_seed)
    optimizer = Adam(params.values, beta1=config.beta1, beta2=config.beta2, epsilon=config.epsilon)
    history = MetricsHistory()
    best: Optional[ModelParams] = None
    best_score: Optional[float] = None
    best_iteration = 0
    started = time.monotonic()

    for index in range(config.iterations):
        iteration = index + 1
        lr = config.learning_rate_at(index)
        try:
            result = step(params, rng)
        except NonFiniteError as exc:
            raise TrainingDivergedError(iteration, str(exc)) from exc
        if result is None:
            continue
        breakdown, grads = result
        _check_finite(iteration, breakdown, grads)
        optimizer.step(grads, lr)
        logger.debug(
            "%s it %d loss %.4f (ce_lane %.4f ce_type %.4f reg %.4f) lr %.2e",
            label, iteration, breakdown.total.item(), breakdown.ce_lane, breakdown.ce_type, breakdown.reg, lr,
        )

        row = HistoryRow(iteration, breakdown.total.item(), breakdown.ce_lane, breakdown.ce_type, breakdown.reg)
        if validation and (iteration % config.validation_interval == 0 or iteration == config.iterations):
            try:
                report = validate(params, predict, validation)
            except NonFiniteError as exc:
                raise TrainingDivergedError(iteration, f"validation: {exc}") from exc
            row = replace(row, val_acc_lane=report.lane_accuracy, val_acc_type=report.type_accuracy, ale=report.ale)
            if best_score is None or report.mean_accuracy > best_score:
                best, best_score, best_iteration = params.copy(), report.mean_accuracy, iteration
            logger.info(
                "%s it %d/%d loss %.4f lr %.2e val lane %.3f type %.3f ale %.3f [%s]",
                label, iteration, config.iterations, row.loss, lr, report.lane_accuracy, report.type_accuracy,
                report.ale, format_progress(time.monotonic() - started, iteration, config.iterations),
            )
        history.append(row)

    if best is None:
        best, best_iteration = params.copy(), config.iterations
    return TrainResult(best, history, best_iteration, best_score)


def roadtagger_step(networks: Sequence[PreparedNetwork], model_config: ModelConfig, config: TrainConfig) -> StepFn:
    """One iteration: random network, random seed vertex, BFS or DFS subgraph."""
    networks = [net for net in networks if net.num_vertices > 0]

    def step(params: ModelParams, rng: np.random.Generator) -> StepResult:
        net = networks[int(rng.integers(len(networks)))]
        seed_vertex = int(rng.integers(net.num_vertices))
        mode = "bfs" if rng.random() < 0.5 else "dfs"
        sample = sample_subgraph(
            net.network.graph,
            net.structures,
            seed_vertex,
            n=config.subgraph_size,
            mode=mode,
            loss_count=config.loss_vertex_count,
            rng_seed=int(rng.integers(2**31)),
        )
        ids = np.asarray(sample.vertex_ids, dtype=np.int64)
        lane, road_type = head_targets(net.network, ids)

        tape = Tape()
        weights = params.register(tape)
        embeddings = encode_vertices(Tensor(net.inputs(model_config.receptive_hops)[ids]), weights, model_config)
        embeddings, _ = vertex_dropout(embeddings, config.dropout_rate, rng)
        output = heads(propagate(embeddings, sample.structures, weights, model_config), weights, model_config)
        try:
            breakdown = total_loss(output, lane, road_type, sample.loss_local, sample.neighbors, config.laplace_weight)
        except EmptyLossError:
            logger.debug("sample from %s has no labeled loss vertices; skipped", net.name)
            return None
        return breakdown, backward(tape, breakdown.total)

    return step


def roadtagger_predict(params: ModelParams, net: PreparedNetwork) -> PredictionSet:
    return forward(net.inputs(params.config.receptive_hops), net.structures, params.config, params)


def train(
    networks: Sequence[PreparedNetwork],
    model_config: ModelConfig,
    config: TrainConfig,
    validation: Optional[Sequence[PreparedNetwork]] = None,
) -> TrainResult:
    """Trains RoadTagger; validation defaults to the last ``validation_fraction`` of ``networks``."""
    if validation is None:
        networks, validation = split_validation(networks, config.validation_fraction)
    if not any(net.num_vertices for net in networks):
        raise ValueError("training needs at least one non-empty labeled network")
    logger.info("training roadtagger on %d networks, validating on %d", len(networks), len(validation))
    params = ModelParams.initialize(model_config, config.rng_seed)
    return fit(params, roadtagger_step(networks, model_config, config), roadtagger_predict, config, validation)
