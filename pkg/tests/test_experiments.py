from __future__ import annotations

from pathlib import Path

import pytest

from cli.settings import ConfigStore
from evaluation.experiments import EXPERIMENTS, run_experiment
from training.config import TrainConfig

SETTINGS = Path(__file__).resolve().parent.parent / "settings.json"


def quick_training() -> TrainConfig:
    return TrainConfig(iterations=3, decay_interval=10, validation_interval=3, subgraph_size=32, loss_vertex_count=16, classifier_batch=16)


def test_propagation_limit_smoke(tiny_config) -> None:
    result = run_experiment("propagation-limit", tiny_config, quick_training(), (0,), train_count=2, test_count=1)
    assert result.name == "propagation-limit"
    assert len(result.checks) == 1
    assert "seed0.span06_occluded_lane_acc" in result.metrics
    assert result.as_dict()["passed"] == result.passed


def test_unknown_experiment(tiny_config) -> None:
    with pytest.raises(ValueError):
        run_experiment("weather", tiny_config, quick_training(), (0,))


@pytest.mark.slow
@pytest.mark.parametrize("name", sorted(EXPERIMENTS))
def test_experiment_passes_at_desk_scale(name: str) -> None:
    settings = ConfigStore(SETTINGS).load()
    seeds = (0,) if name == "propagation-limit" else (0, 1, 2)
    result = run_experiment(name, settings.model, settings.training, seeds)
    assert result.passed, result.to_text()
