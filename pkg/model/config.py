"""Model hyper-parameters."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from typing import Any, Mapping, Tuple

from errors import ConfigError
from roadnet.structures import DEFAULT_STRUCTURES, STRUCTURE_NAMES

MESSAGE_INPUTS = ("full", "chunk")


@dataclass(frozen=True)
class ModelConfig:
    feature_dim: int = 16
    embed_dim: int = 64
    hidden_chunk: int = 128
    structures: Tuple[str, ...] = DEFAULT_STRUCTURES
    steps: int = 8
    lane_classes: int = 6
    type_classes: int = 2
    encoder_hidden: Tuple[int, ...] = (64, 64)
    head_hidden: Tuple[int, ...] = (128, 64)
    message_input: str = "full"
    receptive_hops: int = 0
    angle_threshold: float = 60.0
    aux_max_dist: float = 30.0
    aux_max_angle: float = 30.0

    def __post_init__(self) -> None:
        # Lists arriving from JSON become tuples so the config stays hashable.
        for name in ("structures", "encoder_hidden", "head_hidden"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if self.feature_dim <= 0 or self.embed_dim <= 0 or self.hidden_chunk <= 0:
            raise ConfigError("feature_dim, embed_dim and hidden_chunk must be > 0")
        if self.steps < 1:
            raise ConfigError("steps must be >= 1")
        if not self.structures:
            raise ConfigError("at least one graph structure is required")
        unknown = [name for name in self.structures if name not in STRUCTURE_NAMES]
        if unknown:
            raise ConfigError(f"unknown graph structure(s): {', '.join(unknown)}")
        if self.lane_classes < 2 or self.type_classes < 2:
            raise ConfigError("each head needs at least two classes")
        if any(width <= 0 for width in self.encoder_hidden + self.head_hidden):
            raise ConfigError("hidden layer widths must be > 0")
        if self.message_input not in MESSAGE_INPUTS:
            raise ConfigError(f"message_input must be one of {MESSAGE_INPUTS}, got {self.message_input!r}")
        if self.receptive_hops not in (0, 1, 2):
            raise ConfigError("receptive_hops must be 0, 1 or 2")

    @property
    def num_structures(self) -> int:
        return len(self.structures)

    @property
    def hidden_dim(self) -> int:
        return self.num_structures * self.hidden_chunk

    @property
    def input_dim(self) -> int:
        """Encoder input width; each receptive hop adds a predecessor and a successor block."""
        return self.feature_dim * (1 + 2 * self.receptive_hops)

    def as_dict(self) -> dict:
        payload = asdict(self)
        for name in ("structures", "encoder_hidden", "head_hidden"):
            payload[name] = list(payload[name])
        return payload

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], *, section: str = "model") -> "ModelConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown key(s) in [{section}]: {', '.join(unknown)}")
        try:
            return cls(**dict(data))
        except TypeError as exc:
            raise ConfigError(f"[{section}]: {exc}") from exc
