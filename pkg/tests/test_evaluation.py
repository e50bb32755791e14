from __future__ import annotations

import numpy as np
import pytest

from autodiff.checkpoint import load_checkpoint, save_checkpoint
from baselines.classifier import classifier_config
from baselines.mrf import MrfParams
from errors import ConfigError, CoverageError, EmptyMaskError
from evaluation.experiments import Check, ExperimentResult
from evaluation.metrics import LabelSet, accuracy, ale, chain_majority_vote, confusion_matrix, evaluate
from evaluation.report import ale_reduction, compare_report
from evaluation.schemes import SCHEMES, SchemeModels, fit_mrf
from model.network import PredictionSet
from model.params import ModelParams, classifier_shapes
from roadnet.chains import RoadChain
from synth.scenarios import ScenarioSpec, generate_world


def one_hot(lanes, types) -> PredictionSet:
    return PredictionSet(np.eye(6)[np.asarray(lanes) - 1], np.eye(2)[np.asarray(types)])


def four_vertex_labels() -> LabelSet:
    return LabelSet(
        lanes=np.array([2, 2, 2, 2]),
        lane_mask=np.ones(4, dtype=bool),
        road_types=np.zeros(4, dtype=int),
        type_mask=np.ones(4, dtype=bool),
        occluded=np.array([False, False, True, True]),
    )


def test_accuracy_and_ale_ignore_masked_vertices() -> None:
    mask = np.array([True, True, False, True])
    assert accuracy(np.array([1, 2, 3, 4]), np.array([1, 2, 0, 0]), mask) == pytest.approx(2 / 3)
    assert ale(np.array([1, 3, 6, 6]), np.array([1, 1, 1, 4]), mask) == pytest.approx(4 / 3)


def test_empty_mask_and_mismatched_shapes() -> None:
    with pytest.raises(EmptyMaskError):
        accuracy(np.zeros(3), np.zeros(3), np.zeros(3, dtype=bool))
    with pytest.raises(CoverageError):
        ale(np.zeros(3), np.zeros(2), np.ones(3, dtype=bool))


def test_confusion_rows_are_true_classes() -> None:
    matrix = confusion_matrix(np.array([0, 1, 1, 1]), np.array([0, 0, 1, 1]), np.ones(4, dtype=bool), 2)
    assert matrix.tolist() == [[1, 1], [0, 2]]


def test_evaluate_splits_occluded_and_clean() -> None:
    report = evaluate(one_hot([2, 2, 2, 4], [0, 0, 1, 0]), four_vertex_labels())
    assert report.lane_accuracy == 0.75
    assert report.type_accuracy == 0.75
    assert report.ale == 0.5
    assert report.mean_accuracy == 0.75
    assert report.subsets["occluded"].count == 2
    assert report.subsets["occluded"].lane_accuracy == 0.5
    assert report.subsets["clean"].lane_accuracy == 1.0
    assert report.lane_confusion[1, 3] == 1


def test_evaluate_without_occluded_vertices() -> None:
    labels = four_vertex_labels()
    labels = LabelSet(labels.lanes, labels.lane_mask, labels.road_types, labels.type_mask, np.zeros(4, dtype=bool))
    report = evaluate(one_hot([2, 2, 2, 2], [0, 0, 0, 0]), labels)
    assert report.subsets["occluded"].lane_accuracy is None
    assert report.subsets["occluded"].count == 0


def test_ale_reduction_percent() -> None:
    assert ale_reduction(0.374, 0.291) == pytest.approx(22.19, abs=0.01)
    assert f"{ale_reduction(0.374, 0.291):.1f}%" == "22.2%"
    assert ale_reduction(0.0, 0.1) is None


def test_comparison_table_against_first_scheme(tmp_path) -> None:
    labels = four_vertex_labels()
    table = compare_report({"base": one_hot([2, 2, 3, 4], [0] * 4), "new": one_hot([2, 2, 2, 3], [0] * 4)}, labels)
    assert table.to_csv().splitlines() == [
        "scheme,lane_acc,type_acc,ale,lane_gain,type_gain,ale_reduction,occluded_lane_acc,clean_lane_acc",
        "base,50.00,100.00,0.750,,,,0.00,100.00",
        "new,75.00,100.00,0.250,+25.0,+0.0,66.7%,50.00,100.00",
    ]
    assert table.row("new").lane_gain == pytest.approx(25.0)
    text = table.to_text()
    assert text.splitlines()[0].startswith("scheme")
    assert "+25.0" in text
    path = table.save(tmp_path / "report.csv")
    assert path.read_text(encoding="utf-8") == table.to_csv()


def test_single_scheme_table_has_no_gains() -> None:
    table = compare_report({"roadtagger": one_hot([2, 2, 2, 2], [0] * 4)}, four_vertex_labels())
    assert len(table) == 1
    assert table.to_csv().splitlines()[1] == "roadtagger,100.00,100.00,0.000,,,,100.00,100.00"


def test_comparison_requires_full_coverage() -> None:
    with pytest.raises(CoverageError):
        compare_report({"short": one_hot([2, 2, 2], [0] * 3)}, four_vertex_labels())


def test_chain_majority_vote() -> None:
    predictions = one_hot([1, 1, 2, 5], [0, 1, 1, 0])
    voted = chain_majority_vote(predictions, [RoadChain((0, 1, 2), False)])
    assert voted.lane_counts().tolist() == [1, 1, 1, 5]
    assert voted.type_indices().tolist() == [1, 1, 1, 0]


def test_label_set_concat_and_restriction() -> None:
    labels = LabelSet.concat([four_vertex_labels(), four_vertex_labels()])
    assert labels.num_vertices == 8
    restricted = labels.restricted(labels.occluded)
    assert restricted.lane_mask.tolist() == [False, False, True, True] * 2


def scheme_models(config) -> SchemeModels:
    hops = 1
    classifier = classifier_config(config, hops)
    return SchemeModels(
        roadtagger=ModelParams.initialize(config, 0),
        classifier=ModelParams.initialize(classifier, 1, shapes=classifier_shapes(classifier)),
        lane_mrf=MrfParams(0.5, 2),
        type_mrf=MrfParams(2.0, 1),
    )


def test_scheme_checkpoint_round_trip(tmp_path, tiny_config) -> None:
    models = scheme_models(tiny_config)
    path = save_checkpoint(tmp_path / "schemes.json", models.to_checkpoint())
    loaded = SchemeModels.from_checkpoint(load_checkpoint(path))
    assert loaded.lane_mrf == MrfParams(0.5, 2)
    assert loaded.type_mrf == MrfParams(2.0, 1)
    assert loaded.classifier.config.receptive_hops == 1
    assert np.array_equal(loaded.classifier.values["encoder.0.w"], models.classifier.values["encoder.0.w"])
    assert np.array_equal(loaded.roadtagger.values["gru.u_h"], models.roadtagger.values["gru.u_h"])


def test_every_scheme_predicts_every_vertex(tiny_config) -> None:
    models = scheme_models(tiny_config)
    net = generate_world(ScenarioSpec(topology="plus", length=160.0, rng_seed=2)).prepare(tiny_config)
    for scheme in SCHEMES:
        predictions = models.predict(scheme, net)
        assert predictions.num_vertices == net.num_vertices
        assert np.allclose(predictions.lane.sum(axis=1), 1.0)
    with pytest.raises(ConfigError):
        models.predict("oracle", net)


def test_fit_mrf_without_validation_uses_defaults(tiny_config) -> None:
    assert fit_mrf(scheme_models(tiny_config).classifier, [], []) == (MrfParams(), MrfParams())


def test_experiment_result_needs_checks() -> None:
    result = ExperimentResult("demo", {"acc": 0.5})
    assert not result.passed
    result.check("accuracy above a coin flip", True)
    assert result.passed
    result.check("accuracy above 0.9", False)
    assert not result.passed
    assert result.checks[-1] == Check("accuracy above 0.9", False)
    assert "FAIL" in result.to_text()
