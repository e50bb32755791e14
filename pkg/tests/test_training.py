from __future__ import annotations

import numpy as np
import pytest

from autodiff import tensor as ops
from autodiff.tensor import Tape, Tensor, backward
from errors import ConfigError, EmptyLossError, TrainingDivergedError
from model.network import HeadOutput
from model.params import ModelParams
from synth.scenarios import ScenarioSpec, generate_world
from training.config import TrainConfig
from training.history import HistoryRow, MetricsHistory, format_progress
from training.loop import fit, split_validation, train
from training.losses import HeadTargets, laplace_regularizer, regularizer_weights, total_loss, vertex_dropout
from training.optim import Adam

PATH_NEIGHBORS = [(1,), (0, 2), (1, 3), (2,)]


def quick_config(**overrides) -> TrainConfig:
    base = dict(
        iterations=6,
        learning_rate=1e-3,
        decay_interval=4,
        validation_interval=3,
        subgraph_size=24,
        loss_vertex_count=12,
        rng_seed=0,
    )
    base.update(overrides)
    return TrainConfig(**base)


def worlds(config, count: int = 3):
    return [
        generate_world(ScenarioSpec(topology="corridor", length=160.0, rng_seed=seed, name=f"w{seed}")).prepare(config)
        for seed in range(count)
    ]


def test_vertex_dropout_scrambles_exactly_floor_rate_rows() -> None:
    tape = Tape()
    embeddings = tape.parameter("e", np.random.default_rng(0).normal(size=(25, 4)))
    out, dropped = vertex_dropout(embeddings, 0.1, np.random.default_rng(1))
    assert dropped.size == 2
    kept = np.setdiff1d(np.arange(25), dropped)
    assert np.array_equal(out.data[kept], embeddings.data[kept])
    assert np.all(np.abs(out.data[dropped]) <= np.abs(embeddings.data[dropped]))

    grads = backward(tape, ops.sum(out))
    assert not grads["e"][dropped].any()
    assert np.all(grads["e"][kept] == 1.0)


def test_vertex_dropout_below_one_row_is_identity() -> None:
    embeddings = Tensor(np.ones((9, 3)))
    out, dropped = vertex_dropout(embeddings, 0.1, np.random.default_rng(0))
    assert out is embeddings
    assert dropped.size == 0


def test_regularizer_weight_needs_uniform_known_neighborhood() -> None:
    targets = HeadTargets(np.array([2, 2, 2, 4]), np.array([True, True, True, True]))
    assert list(regularizer_weights(PATH_NEIGHBORS, targets, 3.0, range(4))) == [3.0, 3.0, 0.0, 0.0]
    unknown = HeadTargets(targets.classes, np.array([True, False, True, True]))
    assert list(regularizer_weights(PATH_NEIGHBORS, unknown, 3.0, [0, 1])) == [0.0, 0.0]
    assert list(regularizer_weights([(), (0,)], HeadTargets(np.array([1, 1]), np.ones(2, bool)), 3.0, [0, 1])) == [0.0, 3.0]


def test_laplace_term_vanishes_for_uniform_predictions() -> None:
    targets = HeadTargets(np.zeros(4, dtype=int), np.ones(4, dtype=bool))
    uniform = Tensor(np.full((4, 6), 1.0 / 6.0))
    assert laplace_regularizer(uniform, PATH_NEIGHBORS, targets, 3.0, range(4)).item() == 0.0

    peaked = np.full((4, 6), 0.1)
    peaked[0] = [0.5, 0.1, 0.1, 0.1, 0.1, 0.1]
    value = laplace_regularizer(Tensor(peaked), PATH_NEIGHBORS, targets, 3.0, [0]).item()
    assert value == pytest.approx(3.0 * 0.4**2)


def test_total_loss_without_labels_raises() -> None:
    output = HeadOutput(Tensor(np.zeros((2, 6))), Tensor(np.zeros((2, 2))))
    none = HeadTargets(np.zeros(2, dtype=int), np.zeros(2, dtype=bool))
    with pytest.raises(EmptyLossError):
        total_loss(output, none, none, [0, 1], [(1,), (0,)], 3.0)


def test_total_loss_with_one_head_unlabeled() -> None:
    output = HeadOutput(Tensor(np.zeros((2, 6))), Tensor(np.zeros((2, 2))))
    lanes = HeadTargets(np.array([1, 1]), np.ones(2, dtype=bool))
    types = HeadTargets(np.zeros(2, dtype=int), np.zeros(2, dtype=bool))
    breakdown = total_loss(output, lanes, types, [0, 1], [(1,), (0,)], 0.0)
    assert breakdown.ce_lane == pytest.approx(np.log(6.0))
    assert breakdown.ce_type == 0.0
    assert breakdown.reg == 0.0


def test_adam_first_step_moves_by_learning_rate() -> None:
    params = {"w": np.array([1.0, -1.0, 0.5])}
    optimizer = Adam(params)
    optimizer.step({"w": np.array([2.0, -0.5, 0.0]), "unknown": np.ones(1)}, lr=0.1)
    assert params["w"] == pytest.approx([0.9, -0.9, 0.5], abs=1e-6)
    assert optimizer.step_count == 1


def test_learning_rate_step_decay() -> None:
    config = TrainConfig(learning_rate=1e-4, decay_interval=30_000)
    assert config.learning_rate_at(0) == pytest.approx(1e-4)
    assert config.learning_rate_at(29_999) == pytest.approx(1e-4)
    assert config.learning_rate_at(30_000) == pytest.approx(1e-4 / 3.0)
    assert config.learning_rate_at(65_000) == pytest.approx(1e-4 / 9.0)


def test_train_config_presets_and_overrides() -> None:
    full = TrainConfig.preset("full")
    assert (full.iterations, full.decay_interval, full.subgraph_size, full.loss_vertex_count) == (300_000, 30_000, 256, 128)
    assert full.laplace_weight == 3.0
    desk = TrainConfig.from_dict({"preset": "desk", "iterations": 100})
    assert desk.iterations == 100
    assert desk.with_overrides(rng_seed=None, iterations=7).iterations == 7
    with pytest.raises(ConfigError):
        TrainConfig.from_dict({"learning_rat": 0.1})
    with pytest.raises(ConfigError):
        TrainConfig.preset("weekend")
    with pytest.raises(ConfigError):
        TrainConfig(subgraph_size=64, loss_vertex_count=128)


def test_history_csv_round_trip() -> None:
    history = MetricsHistory()
    history.append(HistoryRow(1, 2.5, 1.75, 0.5, 0.25))
    history.append(HistoryRow(2, 2.0, 1.5, 0.4, 0.1, 0.5, 0.75, 1.25))
    text = history.to_csv()
    assert text.splitlines()[0] == "iteration,loss,ce_lane,ce_type,reg,val_acc_lane,val_acc_type,ale"
    assert text.splitlines()[1] == "1,2.500000,1.750000,0.500000,0.250000,,,"
    restored = MetricsHistory.from_csv(text)
    assert restored.rows == history.rows
    assert [row.iteration for row in restored.validation_rows()] == [2]


def test_format_progress() -> None:
    assert format_progress(75, 10, 40) == "01:15 elapsed, 03:45 left"
    assert format_progress(3725, 100, 100) == "1:02:05 elapsed, 00:00 left"
    assert format_progress(-3, 0, 5) == "00:00 elapsed"


def test_split_validation_keeps_a_training_network() -> None:
    assert split_validation(["a", "b", "c", "d", "e"], 0.2) == (["a", "b", "c", "d"], ["e"])
    assert split_validation(["a"], 0.5) == (["a"], [])
    assert split_validation(["a", "b"], 0.0) == (["a", "b"], [])


def test_training_is_deterministic(tiny_config) -> None:
    nets = worlds(tiny_config)
    config = quick_config()
    first = train(nets, tiny_config, config)
    second = train(nets, tiny_config, config)
    assert first.history.to_csv() == second.history.to_csv()
    for name, value in first.params.values.items():
        assert np.array_equal(value, second.params.values[name])
    assert len(first.history) == config.iterations
    assert [row.iteration for row in first.history.validation_rows()] == [3, 6]
    assert first.best_iteration in (3, 6)


def test_training_changes_parameters(tiny_config) -> None:
    nets = worlds(tiny_config, count=2)
    initial = ModelParams.initialize(tiny_config, 0)
    result = train(nets, tiny_config, quick_config(iterations=3), validation=[])
    assert result.best_iteration == 3
    assert result.best_score is None
    assert any(not np.array_equal(value, initial.values[name]) for name, value in result.params.values.items())


def test_cross_entropy_falls_on_clean_world(tiny_config) -> None:
    # Whole world in every sample and no dropout: one fixed objective.
    net = generate_world(ScenarioSpec(topology="plus", length=120.0, rng_seed=3, name="clean")).prepare(tiny_config)
    config = quick_config(
        iterations=100, learning_rate=3e-3, decay_interval=1_000, subgraph_size=32, loss_vertex_count=32,
        dropout_rate=0.0, laplace_weight=0.0,
    )
    result = train([net], tiny_config, config, validation=[])
    ce = np.array([row.ce_lane + row.ce_type for row in result.history])
    assert ce.size == 100
    assert ce[99] < ce[0]
    block_means = ce.reshape(4, 25).mean(axis=1)
    assert np.all(np.diff(block_means) <= 0)


def test_fit_reports_divergence(tiny_config) -> None:
    params = ModelParams.initialize(tiny_config)

    def exploding(params, rng):
        tape = Tape()
        weights = params.register(tape)
        loss = ops.sum(ops.scale(weights["gru.w_z"], np.inf))
        return loss, backward(tape, loss)

    with pytest.raises(TrainingDivergedError) as info:
        fit(params, exploding, lambda p, n: None, quick_config(iterations=2))
    assert info.value.iteration == 1
