"""Graph structures: alternative edge placements N(v) over a road graph's vertices."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Set, Tuple

import numpy as np
from scipy import sparse
from scipy.spatial import cKDTree

from autodiff.tensor import aggregation_matrix
from roadnet.base import RoadGraph
from roadnet.chains import RoadChain, angle_difference, bearing, chain_membership, extract_road_chains

logger = logging.getLogger(__name__)

STRUCTURE_NAMES = ("original", "road", "road_forward", "road_backward", "aux")
DEFAULT_STRUCTURES = ("original", "road_forward", "road_backward", "aux")


@dataclass(frozen=True)
class GraphStructure:
    """Directed message placement: ``sources[v]`` lists the vertices v aggregates from."""

    name: str
    sources: Tuple[Tuple[int, ...], ...]
    directed: bool = False

    def __post_init__(self) -> None:
        n = len(self.sources)
        for v, srcs in enumerate(self.sources):
            for u in srcs:
                if not 0 <= u < n:
                    raise ValueError(f"{self.name}: vertex {v} has out-of-range source {u}")

    @property
    def num_vertices(self) -> int:
        return len(self.sources)

    def pairs(self) -> Set[Tuple[int, int]]:
        """All (source, target) message pairs."""
        return {(u, v) for v, srcs in enumerate(self.sources) for u in srcs}

    @cached_property
    def aggregation(self) -> sparse.csr_matrix:
        """Row-normalized matrix A with (A @ m)[v] = mean of m[u] over u in N(v)."""
        return aggregation_matrix(self.sources, self.num_vertices)

    def restrict(self, vertex_ids: Sequence[int]) -> "GraphStructure":
        """Induced structure on ``vertex_ids``, relabeled to local indices."""
        local = {g: i for i, g in enumerate(vertex_ids)}
        sources = tuple(
            tuple(sorted(local[u] for u in self.sources[g] if u in local)) for g in vertex_ids
        )
        return GraphStructure(self.name, sources, self.directed)

    def relabel(self, permutation: Sequence[int]) -> "GraphStructure":
        """Moves old vertex ``v`` to index ``permutation[v]``."""
        sources: List[Tuple[int, ...]] = [()] * self.num_vertices
        for v, srcs in enumerate(self.sources):
            sources[permutation[v]] = tuple(sorted(permutation[u] for u in srcs))
        return GraphStructure(self.name, tuple(sources), self.directed)


def _from_sets(name: str, sets: List[Set[int]], directed: bool) -> GraphStructure:
    return GraphStructure(name, tuple(tuple(sorted(s)) for s in sets), directed)


def union(structures: Sequence[GraphStructure], name: str = "union") -> GraphStructure:
    if not structures:
        raise ValueError("union needs at least one structure")
    n = structures[0].num_vertices
    sets: List[Set[int]] = [set() for _ in range(n)]
    for structure in structures:
        if structure.num_vertices != n:
            raise ValueError("structures cover different vertex counts")
        for v, srcs in enumerate(structure.sources):
            sets[v].update(srcs)
    return _from_sets(name, sets, directed=any(s.directed for s in structures))


def structure_original(graph: RoadGraph) -> GraphStructure:
    return GraphStructure("original", tuple(graph.adjacency), directed=False)


def structure_road(chains: Sequence[RoadChain], num_vertices: int) -> GraphStructure:
    """Messages only between chain-neighbors; junction vertices are shared."""
    sets: List[Set[int]] = [set() for _ in range(num_vertices)]
    for chain in chains:
        for u, v in chain.ordered_pairs():
            sets[v].add(u)
            sets[u].add(v)
    return _from_sets("road", sets, directed=False)


def structure_road_directional(
    chains: Sequence[RoadChain], num_vertices: int
) -> Tuple[GraphStructure, GraphStructure]:
    """Forward structure reads from chain predecessors, backward from successors."""
    forward: List[Set[int]] = [set() for _ in range(num_vertices)]
    backward: List[Set[int]] = [set() for _ in range(num_vertices)]
    for chain in chains:
        for pred, succ in chain.ordered_pairs():
            forward[succ].add(pred)
            backward[pred].add(succ)
    return (
        _from_sets("road_forward", forward, directed=True),
        _from_sets("road_backward", backward, directed=True),
    )


def _chain_bearings(graph: RoadGraph, chains: Sequence[RoadChain]) -> Dict[Tuple[int, int], float]:
    """Local direction of every (chain index, vertex) pair, in degrees."""
    points = graph.vertices
    result: Dict[Tuple[int, int], float] = {}
    for index, chain in enumerate(chains):
        seq = chain.vertices
        last = len(seq) - 1
        for pos, v in enumerate(seq):
            if (index, v) in result:
                continue
            if chain.closed:
                before, after = seq[pos - 1], seq[(pos + 1) % len(seq)]
            else:
                before = seq[pos - 1] if pos > 0 else v
                after = seq[pos + 1] if pos < last else v
            result[(index, v)] = bearing(points[before], points[after])
    return result


def structure_aux_parallel(
    graph: RoadGraph,
    chains: Sequence[RoadChain],
    max_dist: float = 30.0,
    max_angle: float = 30.0,
) -> GraphStructure:
    """Auxiliary edges between the two roads of a parallel pair.

    Each vertex looks up its nearest vertex on a chain it does not belong to;
    the pair is linked both ways when it is within ``max_dist`` meters and the
    local chain directions are within ``max_angle`` degrees of (anti)parallel.
    """
    n = graph.num_vertices
    sets: List[Set[int]] = [set() for _ in range(n)]
    if n == 0 or not chains:
        return _from_sets("aux", sets, directed=False)

    membership = chain_membership(list(chains), n)
    bearings = _chain_bearings(graph, chains)
    coords = np.array([(p.x, p.y) for p in graph.vertices], dtype=np.float64)
    tree = cKDTree(coords)

    for v in range(n):
        if not membership[v]:
            continue
        own = set(membership[v])
        best: Optional[Tuple[float, int]] = None
        for u in tree.query_ball_point(coords[v], max_dist):
            if u == v or not membership[u] or own.intersection(membership[u]):
                continue
            candidate = (float(np.hypot(*(coords[u] - coords[v]))), u)
            if best is None or candidate < best:
                best = candidate
        if best is None:
            continue
        dist, u = best
        diff = angle_difference(bearings[(membership[v][0], v)], bearings[(membership[u][0], u)])
        if min(diff, 180.0 - diff) <= max_angle and dist <= max_dist:
            sets[v].add(u)
            sets[u].add(v)

    structure = _from_sets("aux", sets, directed=False)
    logger.debug("aux structure links %d vertex pairs", len(structure.pairs()) // 2)
    return structure


def build_structures(
    graph: RoadGraph,
    names: Sequence[str] = DEFAULT_STRUCTURES,
    chains: Optional[Sequence[RoadChain]] = None,
    *,
    aux_max_dist: float = 30.0,
    aux_max_angle: float = 30.0,
) -> List[GraphStructure]:
    """Builds the named structures in order; chains are extracted once if needed."""
    unknown = [name for name in names if name not in STRUCTURE_NAMES]
    if unknown:
        raise ValueError(f"Unknown graph structure(s): {', '.join(unknown)}")
    if chains is None:
        chains = extract_road_chains(graph)

    n = graph.num_vertices
    built: Dict[str, GraphStructure] = {}
    result: List[GraphStructure] = []
    for name in names:
        if name not in built:
            if name == "original":
                built[name] = structure_original(graph)
            elif name == "road":
                built[name] = structure_road(chains, n)
            elif name in ("road_forward", "road_backward"):
                forward, backward = structure_road_directional(chains, n)
                built["road_forward"], built["road_backward"] = forward, backward
            else:
                built[name] = structure_aux_parallel(graph, chains, aux_max_dist, aux_max_angle)
        result.append(built[name])
    return result
