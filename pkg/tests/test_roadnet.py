from __future__ import annotations

import math

import networkx as nx
import numpy as np
import pytest
from scipy.spatial import Delaunay

from roadnet.base import GeoPoint, RoadGraph, densify
from roadnet.chains import RoadChain, chain_membership, extract_road_chains
from roadnet.sampling import sample_subgraph, traversal_order
from roadnet.structures import (
    build_structures,
    structure_aux_parallel,
    structure_original,
    structure_road,
    structure_road_directional,
    union,
)
from synth.scenarios import ScenarioSpec, generate_world


def _edge_lengths(graph: RoadGraph) -> list[float]:
    return [graph.edge_length(u, v) for u, v in graph.edges()]


def test_densify_splits_edge_into_equal_segments(graph_from) -> None:
    graph = densify(graph_from([(0, 0), (50, 0)], [(0, 1)]), 20.0)
    assert graph.num_vertices == 4
    assert graph.num_edges == 3
    assert all(math.isclose(length, 50.0 / 3.0) for length in _edge_lengths(graph))
    assert graph.vertices[0] == GeoPoint(0.0, 0.0)
    assert graph.vertices[1] == GeoPoint(50.0, 0.0)


def test_densify_keeps_edge_at_exact_spacing(graph_from) -> None:
    graph = densify(graph_from([(0, 0), (20, 0)], [(0, 1)]), 20.0)
    assert graph.num_vertices == 2
    assert graph.edges() == [(0, 1)]


def test_densify_l_shape(graph_from) -> None:
    graph = densify(graph_from([(0, 0), (100, 0), (100, 100)], [(0, 1), (1, 2)]), 20.0)
    assert graph.num_vertices == 11
    assert graph.num_edges == 10
    assert all(math.isclose(length, 20.0) for length in _edge_lengths(graph))


def test_densify_empty_graph_and_bad_spacing() -> None:
    empty = RoadGraph([], [])
    assert densify(empty, 20.0).num_vertices == 0
    with pytest.raises(ValueError):
        densify(empty, 0.0)


def test_densify_is_idempotent(graph_from) -> None:
    once = densify(graph_from([(0, 0), (95, 0), (95, 47)], [(0, 1), (1, 2)]), 20.0)
    twice = densify(once, 20.0)
    assert twice.num_vertices == once.num_vertices
    assert twice.edges() == once.edges()


def test_graph_rejects_asymmetric_or_self_loops() -> None:
    points = [GeoPoint(0, 0), GeoPoint(1, 0)]
    with pytest.raises(ValueError):
        RoadGraph(points, [[1], []])
    with pytest.raises(ValueError):
        RoadGraph(points, [[0], []])
    with pytest.raises(ValueError):
        GeoPoint(float("nan"), 0.0)


def test_straight_path_is_one_chain(path_graph) -> None:
    chains = extract_road_chains(path_graph(5))
    assert chains == [RoadChain((0, 1, 2, 3, 4))]


def test_plus_intersection_gives_two_crossing_chains(plus_graph) -> None:
    chains = extract_road_chains(plus_graph)
    assert len(chains) == 2
    assert sorted(chains[0].vertices) == [0, 1, 2, 3, 4]
    assert sorted(chains[1].vertices) == [0, 5, 6, 7, 8]


def test_sharp_bend_breaks_chain(graph_from) -> None:
    angle = math.radians(70.0)
    bend = (20 + 20 * math.cos(angle), 20 * math.sin(angle))
    chains = extract_road_chains(graph_from([(0, 0), (20, 0), bend], [(0, 1), (1, 2)]))
    assert chains == [RoadChain((0, 1)), RoadChain((1, 2))]


def test_every_edge_in_exactly_one_chain(graph_from) -> None:
    points = [(0, 0), (20, 0), (40, 0), (40, 20), (20, 20), (0, 20), (60, 0), (40, -20)]
    edges = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0), (2, 6), (2, 7), (1, 4)]
    graph = graph_from(points, edges)
    seen = [edge for chain in extract_road_chains(graph) for edge in chain.edges()]
    assert sorted(seen) == sorted(graph.edges())


def test_closed_square_is_one_closed_chain(graph_from) -> None:
    # Heading changes of 45 degrees at every corner of an octagon-like loop stay below 60.
    points = [(math.cos(i * math.pi / 4) * 30, math.sin(i * math.pi / 4) * 30) for i in range(8)]
    graph = graph_from(points, [(i, (i + 1) % 8) for i in range(8)])
    (chain,) = extract_road_chains(graph)
    assert chain.closed
    assert sorted(chain.vertices) == list(range(8))


def test_structure_original_matches_adjacency(plus_graph) -> None:
    structure = structure_original(plus_graph)
    assert structure.sources == plus_graph.adjacency
    assert not structure.directed


def test_road_structure_only_links_chain_neighbors(graph_from) -> None:
    # A T junction: the side road at a right angle stays its own chain.
    graph = graph_from([(0, 0), (20, 0), (40, 0), (20, 20)], [(0, 1), (1, 2), (1, 3)])
    chains = extract_road_chains(graph)
    road = structure_road(chains, graph.num_vertices)
    assert set(road.sources[1]) == {0, 2, 3}
    assert road.sources[3] == (1,)


def test_directional_structures_are_reverses(path_graph) -> None:
    graph = path_graph(4)
    chains = extract_road_chains(graph)
    forward, backward = structure_road_directional(chains, graph.num_vertices)
    assert forward.sources == ((), (0,), (1,), (2,))
    assert backward.sources == ((1,), (2,), (3,), ())
    assert {(v, u) for u, v in forward.pairs()} == backward.pairs()


def test_aux_links_parallel_roads_only(graph_from) -> None:
    south = [(i * 20.0, 0.0) for i in range(5)]
    north = [(i * 20.0, 15.0) for i in range(5)]
    far = [(i * 20.0, 200.0) for i in range(5)]
    edges = [(i, i + 1) for i in range(4)] + [(i + 5, i + 6) for i in range(4)] + [(i + 10, i + 11) for i in range(4)]
    graph = graph_from(south + north + far, edges)
    aux = structure_aux_parallel(graph, extract_road_chains(graph))
    for i in range(5):
        assert aux.sources[i] == (i + 5,)
        assert aux.sources[i + 5] == (i,)
        assert aux.sources[i + 10] == ()


def test_build_structures_order_and_union(plus_graph) -> None:
    structures = build_structures(plus_graph, ("original", "road_forward", "road_backward", "aux"))
    assert [s.name for s in structures] == ["original", "road_forward", "road_backward", "aux"]
    combined = union(structures)
    assert set(combined.sources[0]) == {1, 3, 5, 7}
    with pytest.raises(ValueError):
        build_structures(plus_graph, ("nonsense",))


def test_empty_structure_aggregates_to_zero(path_graph) -> None:
    forward, _ = structure_road_directional(extract_road_chains(path_graph(3)), 3)
    matrix = forward.aggregation.toarray()
    assert np.allclose(matrix[0], 0.0)
    assert np.allclose(matrix[1], [1.0, 0.0, 0.0])


def test_sample_subgraph_bfs_and_restriction(plus_graph) -> None:
    structures = build_structures(plus_graph, ("original", "road_forward"))
    sample = sample_subgraph(plus_graph, structures, seed_vertex=0, n=5, mode="bfs", loss_count=3, rng_seed=1)
    assert sample.vertex_ids == (0, 1, 3, 5, 7)
    assert set(sample.loss_vertex_ids) <= set(sample.vertex_ids)
    assert len(sample.loss_vertex_ids) == 3
    for structure in sample.structures:
        assert structure.num_vertices == 5
        assert all(0 <= u < 5 for srcs in structure.sources for u in srcs)
    assert sample.neighbors[0] == (1, 2, 3, 4)


def test_sample_subgraph_dfs_prefix_is_connected(plus_graph) -> None:
    order = traversal_order(plus_graph, 2, "dfs")
    assert order[0] == 2
    sample = sample_subgraph(plus_graph, [], seed_vertex=2, n=4, mode="dfs", loss_count=4)
    sub = plus_graph.to_networkx().subgraph(sample.vertex_ids)
    assert nx.is_connected(sub)


def test_chain_membership_lists_junctions_twice(plus_graph) -> None:
    membership = chain_membership(extract_road_chains(plus_graph), plus_graph.num_vertices)
    assert membership[0] == [0, 1]
    assert membership[2] == [0]


def random_planar_graph(build, rng: np.random.Generator, n: int = 25, keep: float = 0.6) -> RoadGraph:
    points = rng.uniform(0.0, 200.0, size=(n, 2))
    edges = set()
    for simplex in Delaunay(points).simplices:
        for a, b in ((0, 1), (1, 2), (0, 2)):
            u, v = sorted((int(simplex[a]), int(simplex[b])))
            edges.add((u, v))
    kept = [edge for edge in sorted(edges) if rng.random() < keep]
    return build([tuple(p) for p in points.tolist()], kept)


def seeded_graphs(build):
    for seed in range(10):
        yield f"planar{seed}", random_planar_graph(build, np.random.default_rng(seed))
    for topology in ("grid", "parallel"):
        for seed in range(3):
            spec = ScenarioSpec(topology=topology, length=200.0, rng_seed=seed, grid_size=3)
            yield f"{topology}{seed}", generate_world(spec).network.graph


def test_directional_structures_union_to_road_structure(graph_from) -> None:
    for name, graph in seeded_graphs(graph_from):
        chains = extract_road_chains(graph)
        road = structure_road(chains, graph.num_vertices)
        forward, backward = structure_road_directional(chains, graph.num_vertices)
        assert union([forward, backward]).sources == road.sources, name
        assert {(v, u) for u, v in forward.pairs()} == backward.pairs(), name
        assert road.pairs() <= structure_original(graph).pairs(), name


def test_aux_structure_is_symmetric_across_chains(graph_from) -> None:
    linked = []
    for name, graph in seeded_graphs(graph_from):
        chains = extract_road_chains(graph)
        aux = structure_aux_parallel(graph, chains)
        pairs = aux.pairs()
        assert {(v, u) for u, v in pairs} == pairs, name
        membership = chain_membership(chains, graph.num_vertices)
        for u, v in pairs:
            assert u != v and not set(membership[u]) & set(membership[v]), name
            assert graph.vertices[u].distance_to(graph.vertices[v]) <= 30.0, name
        if name.startswith("parallel"):
            linked.append(bool(pairs))
    assert linked and all(linked)
