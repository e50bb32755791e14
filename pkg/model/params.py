"""Named parameter arrays for the RoadTagger network."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Sequence, Tuple

import numpy as np

from autodiff.checkpoint import Checkpoint
from autodiff.init import init_params
from autodiff.tensor import Tape, Tensor
from errors import ConfigError
from model.config import ModelConfig

Shape = Tuple[int, ...]
GRU_GATES = ("z", "r", "h")
CLASSIFIER_PREFIX = "classifier."


def mlp_shapes(prefix: str, dims: Sequence[int]) -> List[Tuple[str, Shape]]:
    shapes: List[Tuple[str, Shape]] = []
    for index, (fan_in, fan_out) in enumerate(zip(dims, dims[1:])):
        shapes.append((f"{prefix}.{index}.w", (fan_in, fan_out)))
        shapes.append((f"{prefix}.{index}.b", (fan_out,)))
    return shapes


def encoder_dims(config: ModelConfig) -> List[int]:
    return [config.input_dim, *config.encoder_hidden, config.embed_dim]


def head_dims(config: ModelConfig, input_width: int, classes: int) -> List[int]:
    return [input_width, *config.head_hidden, classes]


def model_shapes(config: ModelConfig) -> List[Tuple[str, Shape]]:
    """Every parameter of the full model in registration order."""
    k, m = config.num_structures, config.hidden_chunk
    hidden = config.hidden_dim
    message_in = hidden if config.message_input == "full" else m

    shapes = mlp_shapes("encoder", encoder_dims(config))
    shapes += mlp_shapes("raise", [config.embed_dim, m, m])
    for i in range(k):
        shapes += [(f"message.{i}.w", (message_in, m)), (f"message.{i}.b", (m,))]
    for gate in GRU_GATES:
        shapes += [
            (f"gru.w_{gate}", (hidden, hidden)),
            (f"gru.u_{gate}", (hidden, hidden)),
            (f"gru.b_{gate}", (hidden,)),
        ]
    shapes += mlp_shapes("head.lane", head_dims(config, hidden, config.lane_classes))
    shapes += mlp_shapes("head.type", head_dims(config, hidden, config.type_classes))
    return shapes


def classifier_shapes(config: ModelConfig) -> List[Tuple[str, Shape]]:
    """Per-vertex baseline: same encoder, heads read the embedding directly."""
    shapes = mlp_shapes("encoder", encoder_dims(config))
    shapes += mlp_shapes("head.lane", head_dims(config, config.embed_dim, config.lane_classes))
    shapes += mlp_shapes("head.type", head_dims(config, config.embed_dim, config.type_classes))
    return shapes


@dataclass
class ModelParams:
    config: ModelConfig
    values: Dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def initialize(cls, config: ModelConfig, rng_seed: int = 0, *, shapes: Sequence[Tuple[str, Shape]] | None = None) -> "ModelParams":
        """Glorot-uniform weights and zero biases; one child seed per parameter."""
        shapes = model_shapes(config) if shapes is None else list(shapes)
        seeds = np.random.SeedSequence(rng_seed).spawn(len(shapes))
        values = {
            name: init_params(shape, "zeros" if len(shape) == 1 else "glorot_uniform", seed).data
            for (name, shape), seed in zip(shapes, seeds)
        }
        return cls(config, values)

    def register(self, tape: Tape) -> Dict[str, Tensor]:
        return {name: tape.parameter(name, value) for name, value in self.values.items()}

    def constants(self) -> Dict[str, Tensor]:
        return {name: Tensor(value) for name, value in self.values.items()}

    def copy(self) -> "ModelParams":
        return ModelParams(self.config, {name: value.copy() for name, value in self.values.items()})

    def check_shapes(self, expected: Sequence[Tuple[str, Shape]]) -> None:
        wanted = dict(expected)
        if set(wanted) != set(self.values):
            missing = sorted(set(wanted) - set(self.values))
            extra = sorted(set(self.values) - set(wanted))
            raise ConfigError(f"parameter names do not match the config (missing {missing}, unexpected {extra})")
        for name, shape in wanted.items():
            if self.values[name].shape != shape:
                raise ConfigError(f"parameter {name} has shape {self.values[name].shape}, config needs {shape}")

    @property
    def size(self) -> int:
        return int(sum(value.size for value in self.values.values()))

    def prefixed(self, prefix: str) -> Dict[str, np.ndarray]:
        return {f"{prefix}{name}": value for name, value in self.values.items()}

    @classmethod
    def from_prefixed(cls, config: ModelConfig, values: Mapping[str, np.ndarray], prefix: str) -> "ModelParams":
        return cls(config, {name[len(prefix):]: value for name, value in values.items() if name.startswith(prefix)})

    def to_checkpoint(self, extra: Mapping[str, object] | None = None) -> Checkpoint:
        return Checkpoint(params=dict(self.values), config={"model": self.config.as_dict()}, extra=dict(extra or {}))

    @classmethod
    def from_checkpoint(cls, checkpoint: Checkpoint) -> "ModelParams":
        config = ModelConfig.from_dict(checkpoint.config.get("model", {}))
        params = cls(config, {name: value for name, value in checkpoint.params.items() if not name.startswith(CLASSIFIER_PREFIX)})
        params.check_shapes(model_shapes(config))
        return params
