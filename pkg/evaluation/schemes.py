"""The four compared schemes and the trained bundle that backs them.

``roadtagger`` is the graph model; ``classifier`` the per-vertex baseline;
``smooth`` and ``mrf`` post-process the classifier's probabilities.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

from autodiff.checkpoint import Checkpoint
from baselines.classifier import classifier_config, classifier_predict, train_classifier
from baselines.mrf import MrfParams, make_grid, mrf_grid_search, mrf_predictions
from baselines.smoothing import smooth_predictions
from errors import ConfigError
from model.config import ModelConfig
from model.network import PredictionSet
from model.params import CLASSIFIER_PREFIX, ModelParams, classifier_shapes
from model.prepared import PreparedNetwork
from training.config import TrainConfig
from training.history import MetricsHistory
from training.loop import roadtagger_predict, split_validation, train

logger = logging.getLogger(__name__)

SCHEMES = ("roadtagger", "classifier", "smooth", "mrf")


@dataclass
class SchemeModels:
    roadtagger: ModelParams
    classifier: ModelParams
    lane_mrf: MrfParams
    type_mrf: MrfParams
    history: Optional[MetricsHistory] = None

    def predict(self, scheme: str, net: PreparedNetwork) -> PredictionSet:
        if scheme == "roadtagger":
            return roadtagger_predict(self.roadtagger, net)
        if scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
        base = classifier_predict(self.classifier, net)
        if scheme == "smooth":
            return smooth_predictions(base, net.network.graph)
        if scheme == "mrf":
            return mrf_predictions(base, net.chains, self.lane_mrf, self.type_mrf)
        return base

    def to_checkpoint(self) -> Checkpoint:
        checkpoint = self.roadtagger.to_checkpoint(
            extra={"mrf": {"lane": self.lane_mrf.as_dict(), "type": self.type_mrf.as_dict()}}
        )
        checkpoint.params.update(self.classifier.prefixed(CLASSIFIER_PREFIX))
        checkpoint.config["classifier_receptive_hops"] = self.classifier.config.receptive_hops
        return checkpoint

    @classmethod
    def from_checkpoint(cls, checkpoint: Checkpoint) -> "SchemeModels":
        roadtagger = ModelParams.from_checkpoint(checkpoint)
        config = classifier_config(roadtagger.config, int(checkpoint.config.get("classifier_receptive_hops", 0)))
        classifier = ModelParams.from_prefixed(config, checkpoint.params, CLASSIFIER_PREFIX)
        classifier.check_shapes(classifier_shapes(config))
        mrf = checkpoint.extra.get("mrf", {})
        try:
            return cls(roadtagger, classifier, MrfParams(**mrf.get("lane", {})), MrfParams(**mrf.get("type", {})))
        except TypeError as exc:
            raise ConfigError(f"checkpoint MRF parameters: {exc}") from exc


def fit_mrf(classifier: ModelParams, validation: Sequence[PreparedNetwork], grid: Sequence[MrfParams]) -> tuple[MrfParams, MrfParams]:
    """Grid-searches the MRF weight and exponent separately for each head."""
    if not validation:
        logger.warning("no validation networks for the MRF grid search; using the default parameters")
        return MrfParams(), MrfParams()
    outputs = [classifier_predict(classifier, net) for net in validation]
    chains = [net.chains for net in validation]
    lane = mrf_grid_search(
        [out.lane for out in outputs],
        [net.network.lane_classes for net in validation],
        [net.network.lane_mask for net in validation],
        chains,
        grid,
        "lane",
    )
    road_type = mrf_grid_search(
        [out.road_type for out in outputs],
        [net.network.road_types for net in validation],
        [net.network.type_mask for net in validation],
        chains,
        grid,
        "type",
    )
    return lane, road_type


def fit_schemes(
    networks: Sequence[PreparedNetwork],
    model_config: ModelConfig,
    config: TrainConfig,
    *,
    classifier_hops: int = 0,
    validation: Optional[Sequence[PreparedNetwork]] = None,
) -> SchemeModels:
    """Trains RoadTagger and the classifier on the same split, then tunes the MRF."""
    training: List[PreparedNetwork] = list(networks)
    if validation is None:
        training, validation = split_validation(training, config.validation_fraction)
    roadtagger = train(training, model_config, config, validation)
    classifier = train_classifier(training, model_config, config, validation, receptive_hops=classifier_hops)
    lane_mrf, type_mrf = fit_mrf(classifier.params, validation, make_grid(config.mrf_lambdas, config.mrf_exponents))
    return SchemeModels(roadtagger.params, classifier.params, lane_mrf, type_mrf, history=roadtagger.history)
