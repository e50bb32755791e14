"""Benchmark experiments on the synthetic suites, each ending in a pass/fail verdict."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

from baselines.classifier import classifier_predict, train_classifier
from evaluation.metrics import EvalReport, LabelSet, concat_predictions, evaluate
from evaluation.schemes import SCHEMES, fit_schemes
from model.config import ModelConfig
from model.params import ModelParams
from model.prepared import PreparedNetwork
from synth.scenarios import SyntheticWorld
from synth.suites import scenario_suite
from training.config import TrainConfig
from training.loop import roadtagger_predict, split_validation, train

logger = logging.getLogger(__name__)

SEPARATION_ROADTAGGER_MIN = 0.95
SEPARATION_CLASSIFIER_MAX = 1.0 / 6.0 + 0.15
ORDERING_MARGIN = 0.02
PROPAGATION_GAP = 0.20
ABLATION_MARGIN = 0.01


@dataclass(frozen=True)
class Check:
    description: str
    passed: bool


@dataclass
class ExperimentResult:
    name: str
    metrics: Dict[str, float] = field(default_factory=dict)
    checks: List[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(check.passed for check in self.checks)

    def check(self, description: str, passed: bool) -> None:
        self.checks.append(Check(description, bool(passed)))
        logger.info("%s: %s %s", self.name, "PASS" if passed else "FAIL", description)

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "metrics": dict(sorted(self.metrics.items())),
            "checks": [{"description": c.description, "passed": c.passed} for c in self.checks],
        }

    def to_text(self) -> str:
        lines = [f"experiment {self.name}: {'PASSED' if self.passed else 'FAILED'}"]
        lines += [f"  {key:<40} {value:.4f}" for key, value in sorted(self.metrics.items())]
        lines += [f"  [{'ok' if c.passed else 'FAIL'}] {c.description}" for c in self.checks]
        return "\n".join(lines) + "\n"


def prepare_worlds(worlds: Sequence[SyntheticWorld], config: ModelConfig) -> List[PreparedNetwork]:
    return [world.prepare(config) for world in worlds]


def report_for(predict: Callable[[PreparedNetwork], object], nets: Sequence[PreparedNetwork]) -> EvalReport:
    predictions = concat_predictions([predict(net) for net in nets])
    labels = LabelSet.concat([LabelSet.from_network(net.network, net.occluded) for net in nets])
    return evaluate(predictions, labels)


def occluded_lane_accuracy(report: EvalReport) -> float:
    value = report.subsets["occluded"].lane_accuracy
    return math.nan if value is None else value


def _train_roadtagger(nets: Sequence[PreparedNetwork], model_config: ModelConfig, config: TrainConfig) -> ModelParams:
    training, validation = split_validation(nets, config.validation_fraction)
    return train(training, model_config, config, validation).params


def run_separation(
    model_config: ModelConfig,
    config: TrainConfig,
    seeds: Sequence[int] = (0, 1, 2),
    *,
    train_count: Optional[int] = None,
    test_count: Optional[int] = None,
) -> ExperimentResult:
    """Occluded-vertex lane accuracy: RoadTagger near perfect, classifier near chance."""
    result = ExperimentResult("separation")
    for seed in seeds:
        run = config.with_overrides(rng_seed=seed)
        cases = scenario_suite(
            "occlusion_sweep", seed, steps=model_config.steps, train_count=train_count, test_count=test_count
        )
        train_nets = prepare_worlds([w for case in cases for w in case.train], model_config)
        test_nets = prepare_worlds([w for case in cases for w in case.test], model_config)
        training, validation = split_validation(train_nets, run.validation_fraction)
        roadtagger = train(training, model_config, run, validation).params
        classifier = train_classifier(training, model_config, run, validation).params

        rt = occluded_lane_accuracy(report_for(lambda net: roadtagger_predict(roadtagger, net), test_nets))
        cls = occluded_lane_accuracy(report_for(lambda net: classifier_predict(classifier, net), test_nets))
        result.metrics[f"seed{seed}.roadtagger_occluded_lane_acc"] = rt
        result.metrics[f"seed{seed}.classifier_occluded_lane_acc"] = cls
        result.check(f"seed {seed}: roadtagger occluded lane accuracy {rt:.3f} >= {SEPARATION_ROADTAGGER_MIN}", rt >= SEPARATION_ROADTAGGER_MIN)
        result.check(f"seed {seed}: classifier occluded lane accuracy {cls:.3f} <= {SEPARATION_CLASSIFIER_MAX:.3f}", cls <= SEPARATION_CLASSIFIER_MAX)
    return result


def run_ordering(
    model_config: ModelConfig,
    config: TrainConfig,
    seeds: Sequence[int] = (0, 1, 2),
    *,
    train_count: Optional[int] = None,
    test_count: Optional[int] = None,
) -> ExperimentResult:
    """Lane accuracy ordering on the basic suite: roadtagger > smooth > classifier, roadtagger > mrf."""
    result = ExperimentResult("ordering")
    for seed in seeds:
        run = config.with_overrides(rng_seed=seed)
        (case,) = scenario_suite("basic", seed, steps=model_config.steps, train_count=train_count, test_count=test_count)
        models = fit_schemes(prepare_worlds(case.train, model_config), model_config, run)
        test_nets = prepare_worlds(case.test, model_config)
        acc = {scheme: report_for(lambda net, s=scheme: models.predict(s, net), test_nets).lane_accuracy for scheme in SCHEMES}
        for scheme, value in acc.items():
            result.metrics[f"seed{seed}.{scheme}_lane_acc"] = value
        for better, worse in (("roadtagger", "smooth"), ("smooth", "classifier"), ("roadtagger", "mrf")):
            margin = acc[better] - acc[worse]
            result.check(f"seed {seed}: {better} - {worse} = {margin * 100:+.1f} points >= {ORDERING_MARGIN * 100:.0f}", margin >= ORDERING_MARGIN)
    return result


def run_propagation_limit(
    model_config: ModelConfig,
    config: TrainConfig,
    seeds: Sequence[int] = (0,),
    *,
    train_count: Optional[int] = None,
    test_count: Optional[int] = None,
) -> ExperimentResult:
    """Occlusions anchored at a dead end: a span of 2T must score clearly below a span of T/2."""
    result = ExperimentResult("propagation-limit")
    steps = model_config.steps
    short, long = max(2, steps // 2), 2 * steps
    for seed in seeds:
        run = config.with_overrides(rng_seed=seed)
        cases = scenario_suite("long_disruption", seed, steps=steps, train_count=train_count, test_count=test_count)
        params = _train_roadtagger(prepare_worlds(cases[0].train, model_config), model_config, run)
        by_span: Dict[int, float] = {}
        for case in cases:
            nets = prepare_worlds(case.test, model_config)
            by_span[case.span_length] = occluded_lane_accuracy(report_for(lambda net: roadtagger_predict(params, net), nets))
            result.metrics[f"seed{seed}.span{case.span_length:02d}_occluded_lane_acc"] = by_span[case.span_length]
        gap = by_span[short] - by_span[long]
        result.check(f"seed {seed}: span {short} vs span {long} gap {gap * 100:.1f} points >= {PROPAGATION_GAP * 100:.0f}", gap >= PROPAGATION_GAP)
    return result


def run_ablation(
    model_config: ModelConfig,
    config: TrainConfig,
    seeds: Sequence[int] = (0, 1, 2),
    *,
    train_count: Optional[int] = None,
    test_count: Optional[int] = None,
) -> ExperimentResult:
    """Dropping vertex dropout or the Laplace term should cost mean accuracy on most seeds."""
    result = ExperimentResult("ablation")
    variants = {"full": {}, "no_dropout": {"dropout_rate": 0.0}, "no_laplace": {"laplace_weight": 0.0}}
    wins = {name: 0 for name in variants if name != "full"}
    for seed in seeds:
        (case,) = scenario_suite("basic", seed, steps=model_config.steps, train_count=train_count, test_count=test_count)
        train_nets = prepare_worlds(case.train, model_config)
        test_nets = prepare_worlds(case.test, model_config)
        scores: Dict[str, float] = {}
        for name, overrides in variants.items():
            run = config.with_overrides(rng_seed=seed, **overrides)
            params = _train_roadtagger(train_nets, model_config, run)
            scores[name] = report_for(lambda net: roadtagger_predict(params, net), test_nets).mean_accuracy
            result.metrics[f"seed{seed}.{name}_mean_acc"] = scores[name]
        for name in wins:
            if scores["full"] - scores[name] >= ABLATION_MARGIN:
                wins[name] += 1
    required = max(1, len(seeds) - 1)
    for name, count in wins.items():
        result.check(f"{name}: full model ahead by >= {ABLATION_MARGIN * 100:.0f} point on {count}/{len(seeds)} seeds (need {required})", count >= required)
    return result


EXPERIMENTS: Dict[str, Callable[..., ExperimentResult]] = {
    "separation": run_separation,
    "ordering": run_ordering,
    "propagation-limit": run_propagation_limit,
    "ablation": run_ablation,
}


def run_experiment(name: str, model_config: ModelConfig, config: TrainConfig, seeds: Sequence[int], **counts) -> ExperimentResult:
    if name not in EXPERIMENTS:
        raise ValueError(f"unknown experiment {name!r}; expected one of {sorted(EXPERIMENTS)}")
    logger.info("running experiment %s over seeds %s", name, list(seeds))
    return EXPERIMENTS[name](model_config, config, seeds, **counts)
