"""JSON settings file holding the model and training sections."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from errors import ConfigError
from fileio import write_json_atomic
from model.config import ModelConfig
from training.config import TrainConfig

SECTIONS = ("model", "training")


@dataclass
class Settings:
    model: ModelConfig = field(default_factory=ModelConfig)
    training: TrainConfig = field(default_factory=TrainConfig)

    def as_dict(self) -> dict:
        return {"model": self.model.as_dict(), "training": self.training.as_dict()}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Settings":
        if not isinstance(data, Mapping):
            raise ConfigError("settings must be a JSON object")
        unknown = sorted(set(data) - set(SECTIONS))
        if unknown:
            raise ConfigError(f"unknown section(s): {', '.join(unknown)}; expected {', '.join(SECTIONS)}")
        for section in SECTIONS:
            if not isinstance(data.get(section, {}), Mapping):
                raise ConfigError(f"[{section}] must be a JSON object")
        return cls(
            model=ModelConfig.from_dict(data.get("model", {})),
            training=TrainConfig.from_dict(data.get("training", {})),
        )


class ConfigStore:
    """Loads and saves ``Settings``; a missing file means the built-in defaults."""

    def __init__(self, path: Path) -> None:
        self._path = Path(path)

    @property
    def path(self) -> Path:
        return self._path

    def load(self) -> Settings:
        if not self._path.exists():
            return Settings()
        try:
            data = json.loads(self._path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{self._path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
        return Settings.from_dict(data)

    def save(self, settings: Settings) -> None:
        write_json_atomic(self._path, settings.as_dict())
