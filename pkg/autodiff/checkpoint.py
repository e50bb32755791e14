"""Versioned JSON checkpoints: parameter arrays plus the config that shaped them."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Mapping

import numpy as np

from errors import ParseError
from fileio import write_json_atomic

FORMAT = "roadtagger-checkpoint"
VERSION = 1


@dataclass
class Checkpoint:
    params: Dict[str, np.ndarray]
    config: Dict[str, Any] = field(default_factory=dict)
    extra: Dict[str, Any] = field(default_factory=dict)


def checkpoint_payload(checkpoint: Checkpoint) -> dict:
    return {
        "format": FORMAT,
        "version": VERSION,
        "config": checkpoint.config,
        "extra": checkpoint.extra,
        "params": {
            name: {"shape": list(value.shape), "values": value.reshape(-1).tolist()}
            for name, value in sorted(checkpoint.params.items())
        },
    }


def save_checkpoint(path: str | Path, checkpoint: Checkpoint) -> Path:
    return write_json_atomic(path, checkpoint_payload(checkpoint))


def parse_checkpoint(payload: Mapping[str, Any]) -> Checkpoint:
    if payload.get("format") != FORMAT:
        raise ParseError(f"not a checkpoint file (format={payload.get('format')!r})")
    if payload.get("version") != VERSION:
        raise ParseError(f"unsupported checkpoint version {payload.get('version')!r}")
    params: Dict[str, np.ndarray] = {}
    for name, entry in payload.get("params", {}).items():
        values = np.asarray(entry["values"], dtype=np.float64)
        shape = tuple(entry["shape"])
        if values.size != int(np.prod(shape, dtype=np.int64)):
            raise ParseError(f"parameter {name}: {values.size} values do not fill shape {shape}")
        params[name] = values.reshape(shape)
    return Checkpoint(params=params, config=dict(payload.get("config", {})), extra=dict(payload.get("extra", {})))


def load_checkpoint(path: str | Path) -> Checkpoint:
    text = Path(path).read_text(encoding="utf-8")
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno, column=exc.colno) from exc
    return parse_checkpoint(payload)
