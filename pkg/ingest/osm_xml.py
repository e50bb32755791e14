"""OSM XML subset: <node id lat lon>, <way id> with <nd ref> and <tag k v>."""

from __future__ import annotations

import logging
import xml.etree.ElementTree as ET
from typing import Dict, List, Mapping, Optional, Tuple

from errors import MissingNodeError, ParseError
from ingest.base import LabeledNetwork, LocalProjection, from_optional_labels
from ingest.tags import DEFAULT_HIGHWAY_MAPPING, labels_from_tags, log_warnings
from roadnet.base import RoadGraphBuilder

logger = logging.getLogger(__name__)


def _tags(element: ET.Element) -> Dict[str, str]:
    return {child.attrib["k"]: child.attrib.get("v", "") for child in element if child.tag == "tag" and "k" in child.attrib}


def parse_osm_xml(
    text: str,
    *,
    mapping: Optional[Mapping[str, str]] = None,
    name: str = "network",
) -> LabeledNetwork:
    """Ways carrying a ``highway`` tag become roads; shared node ids become junctions.

    Node positions are projected about the centre of the bounding box of the
    nodes the roads reference. A node on several ways takes its labels from
    the first such way in document order.
    """
    mapping = DEFAULT_HIGHWAY_MAPPING if mapping is None else mapping
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        line, column = exc.position
        lines = text.splitlines()
        context = lines[line - 1] if 0 < line <= len(lines) else None
        raise ParseError(str(exc).split(":")[0], line=line, column=column, context=context) from exc

    nodes: Dict[str, Tuple[float, float]] = {}
    ways: List[Tuple[str, List[str], Dict[str, str]]] = []
    for child in root:
        if child.tag == "node":
            try:
                nodes[child.attrib["id"]] = (float(child.attrib["lon"]), float(child.attrib["lat"]))
            except (KeyError, ValueError) as exc:
                raise ParseError(f"node {child.attrib.get('id', '?')}: missing or invalid lat/lon") from exc
        elif child.tag == "way":
            tags = _tags(child)
            if "highway" not in tags:
                continue
            refs = [nd.attrib["ref"] for nd in child if nd.tag == "nd" and "ref" in nd.attrib]
            ways.append((child.attrib.get("id", "?"), refs, tags))

    for way_id, refs, _ in ways:
        for ref in refs:
            if ref not in nodes:
                raise MissingNodeError(way_id, ref)

    projection = LocalProjection.about_bounds(nodes[ref] for _, refs, _ in ways for ref in refs)
    builder = RoadGraphBuilder()
    index_of: Dict[str, int] = {}
    lanes: List[Optional[int]] = []
    types: List[Optional[int]] = []
    warnings: List[str] = []
    for way_id, refs, tags in ways:
        lane, highway = labels_from_tags(tags, mapping, warnings, f"way {way_id}")
        ids: List[int] = []
        for ref in refs:
            if ref not in index_of:
                index_of[ref] = builder.add_vertex(projection.project(*nodes[ref]))
                lanes.append(lane)
                types.append(highway)
            ids.append(index_of[ref])
        for u, v in zip(ids, ids[1:]):
            builder.add_edge(u, v, way_id)

    logger.debug("parsed %d road ways over %d nodes", len(ways), len(index_of))
    log_warnings(name, warnings)
    return from_optional_labels(builder.build(), lanes, types, name=name, warnings=warnings)
