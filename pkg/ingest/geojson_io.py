"""GeoJSON road networks and prediction documents."""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import geojson
import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from errors import ParseError
from fileio import write_atomic
from ingest.base import ROAD_TYPES, LabeledNetwork, LocalProjection, from_optional_labels
from ingest.tags import DEFAULT_HIGHWAY_MAPPING, labels_from_tags, log_warnings
from model.network import PredictionSet
from roadnet.base import GeoPoint, RoadGraphBuilder

logger = logging.getLogger(__name__)

MERGE_TOLERANCE = 0.01
# Decimal places kept for lon/lat; ~1e-7 m at the equator.
COORD_PRECISION = 12


def _load_document(text: str) -> Any:
    try:
        return geojson.loads(text)
    except json.JSONDecodeError as exc:
        lines = text.splitlines()
        context = lines[exc.lineno - 1] if 0 < exc.lineno <= len(lines) else None
        raise ParseError(exc.msg, line=exc.lineno, column=exc.colno, context=context) from exc


def _features(document: Any, kind: str) -> List[Mapping[str, Any]]:
    if not isinstance(document, dict) or document.get("type") != "FeatureCollection":
        raise ParseError(f"{kind}: expected a FeatureCollection document")
    features = document.get("features")
    if not isinstance(features, list):
        raise ParseError(f"{kind}: FeatureCollection has no features array")
    return features


def _projection(document: Mapping[str, Any], lines: Sequence[Sequence[Sequence[float]]]) -> LocalProjection:
    stored = document.get("projection")
    if isinstance(stored, dict) and {"lon0", "lat0"} <= set(stored):
        return LocalProjection(float(stored["lon0"]), float(stored["lat0"]))
    return LocalProjection.about_bounds((c[0], c[1]) for line in lines for c in line)


def _merge_groups(points: Sequence[GeoPoint]) -> np.ndarray:
    """Group id per point; points chained within ``MERGE_TOLERANCE`` meters share one."""
    if not points:
        return np.zeros(0, dtype=np.int64)
    coords = np.array([(p.x, p.y) for p in points], dtype=np.float64)
    pairs = np.asarray(cKDTree(coords).query_pairs(MERGE_TOLERANCE, output_type="ndarray")).reshape(-1, 2)
    n = len(points)
    links = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    _, groups = connected_components(links, directed=False)
    return groups


def _has_vertex_lists(props: Mapping[str, Any], length: int) -> bool:
    return all(isinstance(props.get(key), list) and len(props[key]) == length for key in ("vertex_ids", "vertex_lanes", "vertex_highway"))


def parse_geojson_network(
    text: str,
    *,
    mapping: Optional[Mapping[str, str]] = None,
    name: Optional[str] = None,
) -> LabeledNetwork:
    """Parses a FeatureCollection of LineStrings into a labeled road network.

    Endpoints closer than ``MERGE_TOLERANCE`` meters after projection become one
    vertex. Documents written by ``write_network`` carry per-coordinate vertex
    ids and labels, which are used verbatim.
    """
    mapping = DEFAULT_HIGHWAY_MAPPING if mapping is None else mapping
    document = _load_document(text)
    if name is None:
        name = str(document.get("name", "network")) if isinstance(document, dict) else "network"
    warnings: List[str] = []

    lines: List[Tuple[str, Sequence[Sequence[float]], Mapping[str, Any]]] = []
    skipped = 0
    for index, feature in enumerate(_features(document, "network")):
        geometry = (feature or {}).get("geometry") or {}
        if geometry.get("type") != "LineString":
            skipped += 1
            continue
        coords = geometry.get("coordinates") or []
        if len(coords) < 2 or any(len(c) < 2 for c in coords):
            raise ParseError(f"feature {index}: LineString needs at least two [lon, lat] positions")
        props = feature.get("properties") or {}
        way = str(feature.get("id", props.get("way_id", index)))
        lines.append((way, coords, props))
    if skipped:
        warnings.append(f"skipped {skipped} non-LineString feature(s)")

    projection = _projection(document, [coords for _, coords, _ in lines])
    builder = RoadGraphBuilder()
    lanes: List[Optional[int]] = []
    types: List[Optional[int]] = []
    explicit = bool(lines) and all(_has_vertex_lists(props, len(coords)) for _, coords, props in lines)

    if explicit:
        # Written documents store road type names, not raw highway values.
        vertex_mapping = {**mapping, **{kind: kind for kind in ROAD_TYPES}}
        count = 1 + max(int(v) for _, _, props in lines for v in props["vertex_ids"])
        points: List[Optional[GeoPoint]] = [None] * count
        lanes, types = [None] * count, [None] * count
        for way, coords, props in lines:
            for c, vid, lane, highway in zip(coords, props["vertex_ids"], props["vertex_lanes"], props["vertex_highway"]):
                vid = int(vid)
                if points[vid] is None:
                    points[vid] = projection.project(float(c[0]), float(c[1]))
                    lanes[vid], types[vid] = labels_from_tags({"lanes": lane, "highway": highway}, vertex_mapping, warnings, f"vertex {vid}")
        missing = [v for v, p in enumerate(points) if p is None]
        if missing:
            raise ParseError(f"vertex ids {missing[:5]} never appear in the document")
        for point in points:
            builder.add_vertex(point)
        for way, _, props in lines:
            ids = [int(v) for v in props["vertex_ids"]]
            for u, v in zip(ids, ids[1:]):
                builder.add_edge(u, v, way)
    else:
        projected = [[projection.project(float(c[0]), float(c[1])) for c in coords] for _, coords, _ in lines]
        groups = _merge_groups([p for line in projected for p in line])
        index_of: Dict[int, int] = {}
        slot = 0
        for (way, _, props), points_of_line in zip(lines, projected):
            lane, highway = labels_from_tags(props, mapping, warnings, f"way {way}")
            ids: List[int] = []
            for point in points_of_line:
                group = int(groups[slot])
                slot += 1
                if group not in index_of:
                    index_of[group] = builder.add_vertex(point)
                    lanes.append(lane)
                    types.append(highway)
                ids.append(index_of[group])
            for u, v in zip(ids, ids[1:]):
                builder.add_edge(u, v, way)

    log_warnings(name, warnings)
    return from_optional_labels(builder.build(), lanes, types, name=name, warnings=warnings)


def _highway_name(network: LabeledNetwork, v: int) -> Optional[str]:
    return ROAD_TYPES[int(network.road_types[v])] if network.type_mask[v] else None


def write_network(
    network: LabeledNetwork,
    path: str | Path | None = None,
    *,
    projection: LocalProjection | None = None,
) -> str:
    """One LineString per edge; isolated vertices become zero-length LineStrings."""
    projection = projection or LocalProjection()
    graph = network.graph
    features = []

    def line(ids: Sequence[int], way: Optional[str]) -> geojson.Feature:
        first = ids[0]
        props = {
            "lanes": network.lane_label(first),
            "highway": _highway_name(network, first),
            "vertex_ids": list(ids),
            "vertex_lanes": [network.lane_label(v) for v in ids],
            "vertex_highway": [_highway_name(network, v) for v in ids],
        }
        if way is not None:
            props["way_id"] = way
        coords = [projection.unproject(graph.vertices[v]) for v in ids]
        return geojson.Feature(geometry=geojson.LineString(coords, precision=COORD_PRECISION), properties=props)

    for u, v in graph.edges():
        features.append(line([u, v], graph.way_id(u, v)))
    for v in range(graph.num_vertices):
        if graph.degree(v) == 0:
            features.append(line([v, v], None))

    collection = geojson.FeatureCollection(features, projection=projection.as_dict(), name=network.name)
    text = geojson.dumps(collection, sort_keys=True)
    if path is not None:
        write_atomic(path, text)
    return text


def write_predictions(
    network: LabeledNetwork,
    predictions: PredictionSet,
    path: str | Path | None = None,
    *,
    projection: LocalProjection | None = None,
) -> str:
    """One Point feature per vertex with argmax labels, probabilities and unmasked ground truth."""
    if predictions.num_vertices != network.num_vertices:
        raise ValueError(
            f"predictions cover {predictions.num_vertices} vertices, network has {network.num_vertices}"
        )
    projection = projection or LocalProjection()
    lane_counts = predictions.lane_counts()
    type_indices = predictions.type_indices()
    features = []
    for v, point in enumerate(network.graph.vertices):
        props: Dict[str, Any] = {
            "vertex_id": v,
            "lanes_pred": int(lane_counts[v]),
            "lane_probs": predictions.lane[v].tolist(),
            "highway_pred": ROAD_TYPES[int(type_indices[v])],
            "type_probs": predictions.road_type[v].tolist(),
        }
        if network.lane_mask[v]:
            props["lanes_true"] = int(network.lanes[v])
        if network.type_mask[v]:
            props["highway_true"] = ROAD_TYPES[int(network.road_types[v])]
        geometry = geojson.Point(projection.unproject(point), precision=COORD_PRECISION)
        features.append(geojson.Feature(geometry=geometry, properties=props))

    text = geojson.dumps(geojson.FeatureCollection(features, projection=projection.as_dict()), sort_keys=True)
    if path is not None:
        write_atomic(path, text)
    return text


def parse_predictions(text: str) -> PredictionSet:
    """Reads a document from ``write_predictions`` back into vertex order."""
    rows: Dict[int, Tuple[List[float], List[float]]] = {}
    for index, feature in enumerate(_features(_load_document(text), "predictions")):
        props = (feature or {}).get("properties") or {}
        try:
            rows[int(props["vertex_id"])] = (props["lane_probs"], props["type_probs"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"feature {index}: missing prediction property ({exc})") from exc
    if sorted(rows) != list(range(len(rows))):
        raise ParseError("prediction vertex ids are not a dense 0..N-1 range")
    ordered = [rows[v] for v in range(len(rows))]
    return PredictionSet(
        lane=np.array([lane for lane, _ in ordered], dtype=np.float64).reshape(len(rows), -1),
        road_type=np.array([kind for _, kind in ordered], dtype=np.float64).reshape(len(rows), -1),
    )


def document_projection(text: str) -> LocalProjection:
    """The projection ``parse_geojson_network`` uses for ``text``, for writing results back in place."""
    document = _load_document(text)
    lines = [
        (feature.get("geometry") or {}).get("coordinates") or []
        for feature in _features(document, "network")
        if (feature.get("geometry") or {}).get("type") == "LineString"
    ]
    return _projection(document, lines)
