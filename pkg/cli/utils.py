"""Argument parsing helpers for the command line."""

from __future__ import annotations

import json
from pathlib import Path
from typing import List, Sequence, Tuple

from baselines.mrf import MrfParams, make_grid
from errors import ConfigError


def parse_name_list(value: str, allowed: Sequence[str]) -> List[str]:
    """Comma-separated names, order kept, each checked against ``allowed``."""
    names = [part.strip() for part in value.split(",") if part.strip()]
    if not names:
        raise ValueError("expected at least one name")
    unknown = [name for name in names if name not in allowed]
    if unknown:
        raise ValueError(f"unknown name(s) {', '.join(unknown)}; choose from {', '.join(allowed)}")
    if len(set(names)) != len(names):
        raise ValueError("names must not repeat")
    return names


def parse_seeds(value: str) -> Tuple[int, ...]:
    """Non-negative seeds as ``0,1,2`` or an inclusive range ``0-2``."""
    seeds: List[int] = []
    for part in (p.strip() for p in value.split(",")):
        low, _, high = part.partition("-")
        high = high or low
        if not (low.isdigit() and high.isdigit()):
            raise ValueError(f"seed must be a non-negative integer or range, got {part!r}")
        if int(high) < int(low):
            raise ValueError(f"empty seed range {part!r}")
        seeds.extend(range(int(low), int(high) + 1))
    return tuple(seeds)


def load_grid(path: str | Path) -> List[MrfParams]:
    """MRF grid file: ``{"weights": [...], "exponents": [...]}``."""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: grid must be a JSON object")
    unknown = sorted(set(data) - {"weights", "exponents"})
    if unknown:
        raise ConfigError(f"{path}: unknown key(s) {', '.join(unknown)}")
    grid = make_grid(data.get("weights", [1.0]), data.get("exponents", [1]))
    if not grid:
        raise ConfigError(f"{path}: grid is empty")
    return grid
