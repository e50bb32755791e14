"""Road chain extraction: maximal runs of edges belonging to one logical road."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Set, Tuple

from roadnet.base import Edge, GeoPoint, RoadGraph, edge_key

logger = logging.getLogger(__name__)

DEFAULT_ANGLE_THRESHOLD = 60.0


@dataclass(frozen=True)
class RoadChain:
    """Ordered vertex run; when ``closed`` the last vertex links back to the first."""

    vertices: Tuple[int, ...]
    closed: bool = False

    def __post_init__(self) -> None:
        if len(self.vertices) < 2:
            raise ValueError("A road chain needs at least two vertices")

    def __len__(self) -> int:
        return len(self.vertices)

    def edges(self) -> List[Edge]:
        pairs = list(zip(self.vertices, self.vertices[1:]))
        if self.closed:
            pairs.append((self.vertices[-1], self.vertices[0]))
        return [edge_key(u, v) for u, v in pairs]

    def ordered_pairs(self) -> List[Tuple[int, int]]:
        """(predecessor, successor) pairs along the chain orientation."""
        pairs = list(zip(self.vertices, self.vertices[1:]))
        if self.closed:
            pairs.append((self.vertices[-1], self.vertices[0]))
        return pairs


def bearing(start: GeoPoint, end: GeoPoint) -> float:
    return math.degrees(math.atan2(end.y - start.y, end.x - start.x))


def angle_difference(first: float, second: float) -> float:
    """Smallest absolute difference between two bearings, in [0, 180]."""
    return abs((second - first + 180.0) % 360.0 - 180.0)


def turn_angle(graph: RoadGraph, before: int, via: int, after: int) -> float:
    points = graph.vertices
    return angle_difference(bearing(points[before], points[via]), bearing(points[via], points[after]))


def _continuations(graph: RoadGraph, angle_threshold: float) -> List[Dict[int, int]]:
    """Per vertex, maps an incoming neighbor to the neighbor the road continues to."""
    links: List[Dict[int, int]] = [dict() for _ in range(graph.num_vertices)]
    for v in range(graph.num_vertices):
        nbrs = graph.neighbors(v)
        if len(nbrs) < 2:
            continue
        candidates = []
        for i, a in enumerate(nbrs):
            for b in nbrs[i + 1 :]:
                angle = turn_angle(graph, a, v, b)
                if angle < angle_threshold:
                    candidates.append((round(angle, 9), a, b))
        candidates.sort()
        used: Set[int] = set()
        for _angle, a, b in candidates:
            if a in used or b in used:
                continue
            used.update((a, b))
            links[v][a] = b
            links[v][b] = a
    return links


def _canonical(sequence: List[int], closed: bool) -> Tuple[int, ...]:
    if not closed:
        return tuple(sequence if sequence[0] <= sequence[-1] else reversed(sequence))
    start = sequence.index(min(sequence))
    rotated = sequence[start:] + sequence[:start]
    if rotated[-1] < rotated[1]:
        rotated = [rotated[0]] + rotated[:0:-1]
    return tuple(rotated)


def extract_road_chains(graph: RoadGraph, angle_threshold: float = DEFAULT_ANGLE_THRESHOLD) -> List[RoadChain]:
    """Partitions the edges of ``graph`` into road chains.

    At every vertex, incident edge pairs are matched greedily by smallest turn
    angle (ties by lowest neighbor indices); a pair continues the same chain
    only when its turn angle is below ``angle_threshold`` degrees.
    """
    links = _continuations(graph, angle_threshold)
    visited: Set[Edge] = set()
    chains: List[RoadChain] = []

    for first, second in graph.edges():
        if (first, second) in visited:
            continue
        visited.add((first, second))
        sequence = [first, second]
        closed = False

        prev, cur = first, second
        while True:
            nxt = links[cur].get(prev)
            if nxt is None:
                break
            key = edge_key(cur, nxt)
            if key in visited:
                closed = True
                break
            visited.add(key)
            sequence.append(nxt)
            prev, cur = cur, nxt

        if closed:
            # The walk re-entered the starting vertex through the closing edge.
            sequence.pop()
        else:
            prev, cur = second, first
            while True:
                nxt = links[cur].get(prev)
                if nxt is None:
                    break
                key = edge_key(cur, nxt)
                if key in visited:
                    break
                visited.add(key)
                sequence.insert(0, nxt)
                prev, cur = cur, nxt

        chains.append(RoadChain(_canonical(sequence, closed), closed))

    logger.debug("extracted %d road chains from %d edges", len(chains), graph.num_edges)
    return chains


def chain_membership(chains: List[RoadChain], num_vertices: int) -> List[List[int]]:
    """Indices of the chains each vertex belongs to, ascending."""
    membership: List[List[int]] = [[] for _ in range(num_vertices)]
    for index, chain in enumerate(chains):
        for v in chain.vertices:
            if not membership[v] or membership[v][-1] != index:
                membership[v].append(index)
    return membership
