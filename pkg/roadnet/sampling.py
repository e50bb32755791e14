"""Training subgraph sampling by BFS/DFS from a seed vertex."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Literal, Sequence, Tuple

import networkx as nx
import numpy as np

from roadnet.base import RoadGraph
from roadnet.structures import GraphStructure

TraversalMode = Literal["bfs", "dfs"]


@dataclass(frozen=True)
class SubgraphSample:
    """Sampled vertices with every structure restricted to them.

    ``vertex_ids`` and ``loss_vertex_ids`` are global indices; structures and
    ``neighbors`` use local indices (positions in ``vertex_ids``).
    """

    vertex_ids: Tuple[int, ...]
    structures: Tuple[GraphStructure, ...]
    neighbors: Tuple[Tuple[int, ...], ...]
    loss_vertex_ids: Tuple[int, ...]

    @property
    def size(self) -> int:
        return len(self.vertex_ids)

    @property
    def loss_local(self) -> np.ndarray:
        local = {g: i for i, g in enumerate(self.vertex_ids)}
        return np.array([local[g] for g in self.loss_vertex_ids], dtype=np.int64)


def traversal_order(graph: RoadGraph, seed_vertex: int, mode: TraversalMode) -> List[int]:
    nx_graph = graph.to_networkx()
    if mode == "bfs":
        return [seed_vertex] + [v for _, v in nx.bfs_edges(nx_graph, seed_vertex)]
    if mode == "dfs":
        return list(nx.dfs_preorder_nodes(nx_graph, seed_vertex))
    raise ValueError(f"Unknown traversal mode: {mode!r}")


def sample_subgraph(
    graph: RoadGraph,
    structures: Sequence[GraphStructure],
    seed_vertex: int,
    n: int = 256,
    mode: TraversalMode = "bfs",
    loss_count: int = 128,
    rng_seed: int | np.random.SeedSequence = 0,
) -> SubgraphSample:
    """First ``n`` vertices of a BFS/DFS from ``seed_vertex`` plus a random loss subset."""
    if not 0 <= seed_vertex < graph.num_vertices:
        raise IndexError(f"seed vertex {seed_vertex} out of range for {graph.num_vertices} vertices")
    if n < 1:
        raise ValueError("Subgraph size must be >= 1")
    if loss_count > n:
        raise ValueError("loss_count must be <= subgraph size")

    vertex_ids = traversal_order(graph, seed_vertex, mode)[:n]
    original = GraphStructure("original", tuple(graph.adjacency)).restrict(vertex_ids)
    restricted = tuple(structure.restrict(vertex_ids) for structure in structures)

    rng = np.random.default_rng(rng_seed)
    count = min(loss_count, len(vertex_ids))
    picks = rng.choice(len(vertex_ids), size=count, replace=False)
    loss_ids = tuple(vertex_ids[i] for i in sorted(picks.tolist()))

    return SubgraphSample(
        vertex_ids=tuple(vertex_ids),
        structures=restricted,
        neighbors=original.sources,
        loss_vertex_ids=loss_ids,
    )
