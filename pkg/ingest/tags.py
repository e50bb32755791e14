"""OSM tag interpretation: highway classes and lane counts."""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, List, Mapping, Optional, Tuple

from errors import ConfigError
from ingest.base import MAX_LANES, MIN_LANES, ROAD_TYPES

logger = logging.getLogger(__name__)

DEFAULT_HIGHWAY_MAPPING = {
    "residential": "residential",
    "living_street": "residential",
    "unclassified": "residential",
    "primary": "primary",
    "secondary": "primary",
    "trunk": "primary",
    "motorway": "primary",
    "tertiary": "primary",
}


def load_tag_mapping(path: str | Path) -> dict[str, str]:
    """Reads a JSON object {highway value: road type}; it replaces the default table."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: tag mapping must be a JSON object")
    bad = sorted(value for value in data.values() if value not in ROAD_TYPES)
    if bad:
        raise ConfigError(f"{path}: unknown road type(s) {', '.join(map(str, bad))}; expected {ROAD_TYPES}")
    return {str(key): str(value) for key, value in data.items()}


def road_type_index(highway: Any, mapping: Mapping[str, str], warnings: List[str], where: str) -> Optional[int]:
    if highway is None:
        return None
    mapped = mapping.get(str(highway))
    if mapped is None:
        warnings.append(f"{where}: unmapped highway value {highway!r}")
        return None
    return ROAD_TYPES.index(mapped)


def parse_lanes(raw: Any, warnings: List[str], where: str) -> Optional[int]:
    """Lane count clamped to 1..6; OSM lists like "2;3" use the first entry."""
    if raw is None:
        return None
    if isinstance(raw, bool):
        warnings.append(f"{where}: unreadable lanes value {raw!r}")
        return None
    try:
        lanes = int(float(str(raw).split(";")[0].strip()))
    except ValueError:
        warnings.append(f"{where}: unreadable lanes value {raw!r}")
        return None
    clamped = min(max(lanes, MIN_LANES), MAX_LANES)
    if clamped != lanes:
        warnings.append(f"{where}: lanes={lanes} clamped to {clamped}")
    return clamped


def labels_from_tags(
    tags: Mapping[str, Any], mapping: Mapping[str, str], warnings: List[str], where: str
) -> Tuple[Optional[int], Optional[int]]:
    return (
        parse_lanes(tags.get("lanes"), warnings, where),
        road_type_index(tags.get("highway"), mapping, warnings, where),
    )


def log_warnings(source: str, warnings: List[str]) -> None:
    for message in warnings:
        logger.warning("%s: %s", source, message)
