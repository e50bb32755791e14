from __future__ import annotations

import itertools

import numpy as np
import pytest

from baselines.classifier import classifier_config, classifier_forward, classifier_step, train_classifier
from baselines.mrf import (
    MrfParams,
    chain_energy,
    make_grid,
    min_sum_chain,
    mrf_grid_search,
    mrf_infer,
    mrf_predictions,
    pairwise_costs,
    unary_costs,
)
from baselines.smoothing import smooth_predictions
from errors import ConfigError, EmptyMaskError
from ingest.base import from_optional_labels
from model.network import PredictionSet
from model.params import ModelParams, classifier_shapes
from model.prepared import prepare_network
from roadnet.chains import RoadChain
from synth.scenarios import ScenarioSpec, generate_world
from training.config import TrainConfig


def brute_force_minimum(unary: np.ndarray, pairwise: np.ndarray, closed: bool) -> float:
    length, k = unary.shape
    labelings = np.array(list(itertools.product(range(k), repeat=length)))
    energy = unary[np.arange(length), labelings].sum(axis=1)
    energy += pairwise[labelings[:, :-1], labelings[:, 1:]].sum(axis=1)
    if closed:
        energy += pairwise[labelings[:, -1], labelings[:, 0]]
    return float(energy.min())


def test_min_sum_matches_brute_force_on_random_chains() -> None:
    rng = np.random.default_rng(0)
    for _ in range(200):
        closed = bool(rng.random() < 0.5)
        length = int(rng.integers(3 if closed else 1, 9))
        k = int(rng.integers(2, 5))
        unary = unary_costs(rng.dirichlet(np.ones(k), size=length))
        params = MrfParams(float(rng.choice([0.125, 0.5, 2.0, 8.0])), int(rng.integers(1, 3)))
        pairwise = pairwise_costs(k, params, "lane" if rng.random() < 0.5 else "type")
        labels = min_sum_chain(unary, pairwise, closed)
        assert chain_energy(labels, unary, pairwise, closed) == pytest.approx(
            brute_force_minimum(unary, pairwise, closed), abs=1e-9
        )


def test_zero_weight_mrf_is_argmax() -> None:
    probs = np.random.default_rng(1).dirichlet(np.ones(6), size=7)
    chain = RoadChain(tuple(range(7)), False)
    labels = mrf_infer(probs, [chain], MrfParams(0.0, 1), "lane")
    assert np.array_equal(labels, probs.argmax(axis=1))


def test_strong_mrf_flattens_a_chain() -> None:
    probs = np.full((5, 3), 0.1)
    probs[:, 0] = 0.8
    probs[2] = [0.2, 0.6, 0.2]
    labels = mrf_infer(probs, [RoadChain(tuple(range(5)), False)], MrfParams(4.0, 1), "lane")
    assert labels.tolist() == [0, 0, 0, 0, 0]


def test_junction_takes_lowest_index_chain_label() -> None:
    probs = np.array([[0.9, 0.1], [0.9, 0.1], [0.45, 0.55], [0.1, 0.9], [0.1, 0.9]])
    first = RoadChain((0, 1, 2), False)
    second = RoadChain((2, 3, 4), False)
    labels = mrf_infer(probs, [first, second], MrfParams(8.0, 1), "type")
    assert labels.tolist() == [0, 0, 0, 1, 1]


def test_type_pairwise_is_a_potts_cost() -> None:
    costs = pairwise_costs(2, MrfParams(0.5, 2), "type")
    assert costs.tolist() == [[0.0, 0.5], [0.5, 0.0]]
    lanes = pairwise_costs(4, MrfParams(1.0, 2), "lane")
    assert lanes[0, 3] == 9.0


def test_mrf_predictions_are_one_hot() -> None:
    rng = np.random.default_rng(2)
    predictions = PredictionSet(rng.dirichlet(np.ones(6), size=4), rng.dirichlet(np.ones(2), size=4))
    out = mrf_predictions(predictions, [RoadChain((0, 1, 2, 3), False)], MrfParams(1.0, 1), MrfParams(1.0, 1))
    assert np.array_equal(out.lane.sum(axis=1), np.ones(4))
    assert set(np.unique(out.road_type)) <= {0.0, 1.0}


def test_grid_search_prefers_smaller_weight_on_ties() -> None:
    probs = np.eye(3)[[0, 0, 0, 0]] * 0.9 + 0.1 / 3
    chains = [RoadChain((0, 1, 2, 3), False)]
    grid = make_grid([4.0, 0.5, 1.0], [2, 1])
    chosen = mrf_grid_search([probs], [np.zeros(4, dtype=int)], [np.ones(4, dtype=bool)], [chains], grid, "lane")
    assert chosen == MrfParams(0.5, 1)


def test_grid_search_errors() -> None:
    probs = np.full((2, 2), 0.5)
    chains = [[RoadChain((0, 1), False)]]
    with pytest.raises(ConfigError):
        mrf_grid_search([probs], [np.zeros(2, dtype=int)], [np.ones(2, dtype=bool)], chains, [], "type")
    with pytest.raises(EmptyMaskError):
        mrf_grid_search([probs], [np.zeros(2, dtype=int)], [np.zeros(2, dtype=bool)], chains, make_grid([1.0], [1]), "type")
    with pytest.raises(ConfigError):
        MrfParams(1.0, 3)


def test_smoothing_averages_closed_neighborhood(path_graph) -> None:
    graph = path_graph(3)
    lane = np.zeros((3, 6))
    lane[:, 0] = [1.0, 0.0, 0.0]
    lane[:, 1] = [0.0, 1.0, 1.0]
    types = np.tile([1.0, 0.0], (3, 1))
    smoothed = smooth_predictions(PredictionSet(lane, types), graph)
    assert smoothed.lane[0, :2] == pytest.approx([0.5, 0.5])
    assert smoothed.lane[1, :2] == pytest.approx([1 / 3, 2 / 3])
    assert smoothed.lane[2, :2] == pytest.approx([0.0, 1.0])
    assert np.allclose(smoothed.road_type, types)
    with pytest.raises(ValueError):
        smooth_predictions(PredictionSet(lane[:2], types[:2]), graph)


def test_classifier_output_depends_only_on_own_vertex(tiny_config) -> None:
    config = classifier_config(tiny_config)
    params = ModelParams.initialize(config, 3, shapes=classifier_shapes(config))
    features = np.random.default_rng(0).normal(size=(5, 16))
    base = classifier_forward(features, params)
    assert base.lane.shape == (5, 6)
    assert base.road_type.shape == (5, 2)
    changed = features.copy()
    changed[2] += 3.0
    after = classifier_forward(changed, params)
    untouched = [0, 1, 3, 4]
    assert np.array_equal(after.lane[untouched], base.lane[untouched])
    assert not np.allclose(after.lane[2], base.lane[2])


def test_classifier_with_receptive_window(tiny_config) -> None:
    config = classifier_config(tiny_config, receptive_hops=2)
    assert config.input_dim == 80
    assert dict(classifier_shapes(config))["encoder.0.w"] == (80, 8)
    assert "message.0.w" not in dict(classifier_shapes(config))


def test_train_classifier_runs_on_synthetic_worlds(tiny_config) -> None:
    nets = [
        generate_world(ScenarioSpec(topology="plus", length=120.0, rng_seed=seed, name=f"p{seed}")).prepare(tiny_config)
        for seed in range(3)
    ]
    config = TrainConfig(iterations=4, validation_interval=2, decay_interval=10, classifier_batch=16, learning_rate=1e-3)
    result = train_classifier(nets, tiny_config, config)
    assert [row.iteration for row in result.history.validation_rows()] == [2, 4]


def test_classifier_skips_batches_without_labels(tiny_config) -> None:
    world = generate_world(ScenarioSpec(topology="plus", length=120.0, rng_seed=5, name="unlabeled"))
    n = world.network.num_vertices
    unlabeled = from_optional_labels(world.network.graph, [None] * n, [None] * n, name="unlabeled")
    net = prepare_network(unlabeled, world.features.values, tiny_config)
    config = TrainConfig(iterations=3, validation_interval=2, decay_interval=10, classifier_batch=8, learning_rate=1e-3)

    model_config = classifier_config(tiny_config)
    params = ModelParams.initialize(model_config, 0, shapes=classifier_shapes(model_config))
    assert classifier_step([net], model_config, config)(params, np.random.default_rng(0)) is None

    result = train_classifier([net], tiny_config, config, validation=[])
    assert len(result.history) == 0
    assert all(np.array_equal(result.params.values[name], params.values[name]) for name in params.values)
