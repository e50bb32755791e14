"""Road network graph primitives and densification."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

import networkx as nx

Edge = Tuple[int, int]

# Segments whose length exceeds the spacing by less than this fraction are
# not split again; keeps densify idempotent under float noise.
_SPLIT_TOLERANCE = 1e-9


@dataclass(frozen=True)
class GeoPoint:
    """Planar position in meters (x east, y north)."""

    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"GeoPoint coordinates must be finite, got ({self.x}, {self.y})")

    def distance_to(self, other: "GeoPoint") -> float:
        return math.hypot(other.x - self.x, other.y - self.y)

    def lerp(self, other: "GeoPoint", fraction: float) -> "GeoPoint":
        return GeoPoint(
            self.x + (other.x - self.x) * fraction,
            self.y + (other.y - self.y) * fraction,
        )


def edge_key(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)


class RoadGraph:
    """Undirected road graph with dense vertex indices 0..N-1.

    Instances are treated as immutable; build them with ``RoadGraphBuilder``.
    """

    def __init__(
        self,
        vertices: Sequence[GeoPoint],
        adjacency: Sequence[Iterable[int]],
        edge_meta: Optional[Dict[Edge, Optional[str]]] = None,
    ) -> None:
        if len(vertices) != len(adjacency):
            raise ValueError("adjacency must list one neighbor set per vertex")
        self._vertices: Tuple[GeoPoint, ...] = tuple(vertices)
        self._adjacency: Tuple[Tuple[int, ...], ...] = tuple(tuple(sorted(set(nbrs))) for nbrs in adjacency)
        self._edge_meta: Dict[Edge, Optional[str]] = dict(edge_meta or {})
        self._validate()

    def _validate(self) -> None:
        n = len(self._vertices)
        for v, nbrs in enumerate(self._adjacency):
            for u in nbrs:
                if not 0 <= u < n:
                    raise ValueError(f"vertex {v} lists out-of-range neighbor {u}")
                if u == v:
                    raise ValueError(f"self-loop at vertex {v}")
                if v not in self._adjacency[u]:
                    raise ValueError(f"adjacency is not symmetric between {v} and {u}")

    @property
    def vertices(self) -> Tuple[GeoPoint, ...]:
        return self._vertices

    @property
    def adjacency(self) -> Tuple[Tuple[int, ...], ...]:
        return self._adjacency

    @property
    def num_vertices(self) -> int:
        return len(self._vertices)

    def __len__(self) -> int:
        return len(self._vertices)

    def neighbors(self, v: int) -> Tuple[int, ...]:
        return self._adjacency[v]

    def degree(self, v: int) -> int:
        return len(self._adjacency[v])

    def edges(self) -> List[Edge]:
        return [(u, v) for u, nbrs in enumerate(self._adjacency) for v in nbrs if u < v]

    def iter_edges(self) -> Iterator[Edge]:
        return iter(self.edges())

    @property
    def num_edges(self) -> int:
        return sum(len(nbrs) for nbrs in self._adjacency) // 2

    def edge_length(self, u: int, v: int) -> float:
        return self._vertices[u].distance_to(self._vertices[v])

    def way_id(self, u: int, v: int) -> Optional[str]:
        return self._edge_meta.get(edge_key(u, v))

    @property
    def edge_meta(self) -> Dict[Edge, Optional[str]]:
        return dict(self._edge_meta)

    def to_networkx(self) -> nx.Graph:
        """Graph with ascending neighbor iteration order (edges inserted sorted)."""
        graph = nx.Graph()
        graph.add_nodes_from(range(self.num_vertices))
        for u, v in self.edges():
            graph.add_edge(u, v, way=self.way_id(u, v), length=self.edge_length(u, v))
        return graph


class RoadGraphBuilder:
    """Mutable helper collecting vertices and edges before freezing a RoadGraph."""

    def __init__(self) -> None:
        self._vertices: List[GeoPoint] = []
        self._adjacency: List[set[int]] = []
        self._edge_meta: Dict[Edge, Optional[str]] = {}

    @property
    def num_vertices(self) -> int:
        return len(self._vertices)

    def add_vertex(self, point: GeoPoint) -> int:
        self._vertices.append(point)
        self._adjacency.append(set())
        return len(self._vertices) - 1

    def add_edge(self, u: int, v: int, way: Optional[str] = None) -> bool:
        """Adds an undirected edge; self-loops and duplicates are ignored."""
        if u == v or v in self._adjacency[u]:
            return False
        self._adjacency[u].add(v)
        self._adjacency[v].add(u)
        self._edge_meta[edge_key(u, v)] = way
        return True

    def point(self, v: int) -> GeoPoint:
        return self._vertices[v]

    def build(self) -> RoadGraph:
        return RoadGraph(self._vertices, self._adjacency, self._edge_meta)


def segment_count(length: float, spacing: float) -> int:
    return max(1, math.ceil(length / spacing - _SPLIT_TOLERANCE))


def densify(graph: RoadGraph, spacing: float = 20.0) -> RoadGraph:
    """Splits every edge into ceil(L / spacing) equal segments.

    Original vertices keep their indices and positions; interpolated vertices
    are appended in sorted edge order and inherit the edge's way id.
    """
    if spacing <= 0:
        raise ValueError("spacing must be > 0 meters")

    builder = RoadGraphBuilder()
    for point in graph.vertices:
        builder.add_vertex(point)

    for u, v in graph.edges():
        way = graph.way_id(u, v)
        start, end = graph.vertices[u], graph.vertices[v]
        pieces = segment_count(start.distance_to(end), spacing)
        previous = u
        for step in range(1, pieces):
            current = builder.add_vertex(start.lerp(end, step / pieces))
            builder.add_edge(previous, current, way)
            previous = current
        builder.add_edge(previous, v, way)

    return builder.build()
