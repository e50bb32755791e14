"""Training hyper-parameters and schedule presets."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace
from typing import Any, Mapping, Tuple

from errors import ConfigError

PRESETS: dict[str, dict[str, Any]] = {
    "full": {"iterations": 300_000, "decay_interval": 30_000, "validation_interval": 5_000},
    "desk": {"iterations": 5_000, "decay_interval": 1_500, "validation_interval": 250},
}


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-4
    decay_interval: int = 30_000
    decay_factor: float = 1.0 / 3.0
    iterations: int = 300_000
    subgraph_size: int = 256
    loss_vertex_count: int = 128
    dropout_rate: float = 0.10
    laplace_weight: float = 3.0
    rng_seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    validation_interval: int = 5_000
    validation_fraction: float = 0.2
    classifier_batch: int = 128
    mrf_lambdas: Tuple[float, ...] = (0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0)
    mrf_exponents: Tuple[int, ...] = (1, 2)

    def __post_init__(self) -> None:
        object.__setattr__(self, "mrf_lambdas", tuple(float(x) for x in self.mrf_lambdas))
        object.__setattr__(self, "mrf_exponents", tuple(int(x) for x in self.mrf_exponents))
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be > 0")
        if self.decay_interval <= 0 or not 0 < self.decay_factor <= 1:
            raise ConfigError("decay_interval must be > 0 and decay_factor in (0, 1]")
        if self.iterations < 0:
            raise ConfigError("iterations must be >= 0")
        if self.subgraph_size <= 0 or self.loss_vertex_count <= 0:
            raise ConfigError("subgraph_size and loss_vertex_count must be > 0")
        if self.loss_vertex_count > self.subgraph_size:
            raise ConfigError("loss_vertex_count must be <= subgraph_size")
        if not 0 <= self.dropout_rate < 1:
            raise ConfigError("dropout_rate must be in [0, 1)")
        if self.laplace_weight < 0:
            raise ConfigError("laplace_weight must be >= 0")
        if self.validation_interval <= 0:
            raise ConfigError("validation_interval must be > 0")
        if not 0 <= self.validation_fraction < 1:
            raise ConfigError("validation_fraction must be in [0, 1)")
        if self.classifier_batch <= 0:
            raise ConfigError("classifier_batch must be > 0")
        if any(x < 0 for x in self.mrf_lambdas) or any(n not in (1, 2) for n in self.mrf_exponents):
            raise ConfigError("MRF grid needs lambdas >= 0 and exponents in {1, 2}")

    def learning_rate_at(self, iteration: int) -> float:
        """Step decay: the rate is multiplied by ``decay_factor`` every ``decay_interval`` iterations."""
        return self.learning_rate * self.decay_factor ** (iteration // self.decay_interval)

    def with_overrides(self, **overrides: Any) -> "TrainConfig":
        return replace(self, **{key: value for key, value in overrides.items() if value is not None})

    def as_dict(self) -> dict:
        payload = asdict(self)
        payload["mrf_lambdas"] = list(self.mrf_lambdas)
        payload["mrf_exponents"] = list(self.mrf_exponents)
        return payload

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], *, section: str = "training") -> "TrainConfig":
        data = dict(data)
        preset = data.pop("preset", None)
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown key(s) in [{section}]: {', '.join(unknown)}")
        base: dict[str, Any] = {}
        if preset is not None:
            if preset not in PRESETS:
                raise ConfigError(f"unknown training preset {preset!r}; expected one of {sorted(PRESETS)}")
            base.update(PRESETS[preset])
        base.update(data)
        try:
            return cls(**base)
        except TypeError as exc:
            raise ConfigError(f"[{section}]: {exc}") from exc

    @classmethod
    def preset(cls, name: str) -> "TrainConfig":
        return cls.from_dict({"preset": name})
