"""Finite-difference checks of every differentiable op and of the full model on a toy graph."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Tuple

import numpy as np

from autodiff import tensor as ops
from autodiff.gradcheck import DEFAULT_TOLERANCE, GradCheckResult, LossFn, check_gradients
from autodiff.tensor import Tensor, aggregation_matrix
from model.config import ModelConfig
from model.network import forward_tensors
from model.params import ModelParams
from roadnet.base import GeoPoint, RoadGraph, RoadGraphBuilder
from roadnet.chains import extract_road_chains
from roadnet.structures import build_structures
from training.losses import HeadTargets, total_loss

logger = logging.getLogger(__name__)

DEFAULT_INSTANCES = 20
TOY_CONFIG = ModelConfig(
    feature_dim=3,
    embed_dim=4,
    hidden_chunk=3,
    steps=8,
    lane_classes=6,
    type_classes=2,
    encoder_hidden=(5,),
    head_hidden=(5,),
)

Case = Tuple[LossFn, Dict[str, np.ndarray]]


@dataclass
class SuiteResult:
    results: Dict[str, List[GradCheckResult]] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.passed for runs in self.results.values() for r in runs)

    def worst(self) -> Dict[str, float]:
        return {name: max(r.worst for r in runs) for name, runs in self.results.items()}


def toy_graph() -> RoadGraph:
    """Six vertices: a four-vertex street with a two-vertex side road off vertex 1."""
    builder = RoadGraphBuilder()
    for x, y in ((0, 0), (20, 0), (40, 0), (60, 0), (20, 20), (20, 40)):
        builder.add_vertex(GeoPoint(float(x), float(y)))
    for u, v in ((0, 1), (1, 2), (2, 3), (1, 4), (4, 5)):
        builder.add_edge(u, v)
    return builder.build()


def _projected(out: Tensor, rng: np.random.Generator) -> Tensor:
    """Scalar <out, P> with a fixed random P, so every output coordinate matters."""
    return ops.sum(ops.mul(out, rng.normal(size=out.shape)))


def op_cases(rng: np.random.Generator) -> Dict[str, Case]:
    def normal(*shape: int) -> np.ndarray:
        return rng.normal(size=shape)

    index_lists = [(1, 2), (), (0,), (0, 1, 2, 3)]
    classes = rng.integers(0, 4, size=3)
    unary: Dict[str, Callable[[Tensor], Tensor]] = {
        "sigmoid": ops.sigmoid,
        "tanh": ops.tanh,
        "square": ops.square,
        "softmax": ops.softmax,
        "log_softmax": ops.log_softmax,
        "scale": lambda t: ops.scale(t, -1.7),
        "take_rows": lambda t: ops.take_rows(t, [2, 0, 2]),
        "slice_chunk": lambda t: ops.slice_chunk(t, 1, 2),
        "mean_rows": lambda t: ops.mean_rows(t, [(1, 2), (), (0,)]),
    }
    cases: Dict[str, Case] = {}
    for offset, (name, fn) in enumerate(unary.items()):
        cases[name] = (lambda x, fn=fn, seed=100 + offset: _projected(fn(x["x"]), np.random.default_rng(seed)), {"x": normal(3, 4)})

    # relu away from its kink
    away = normal(3, 4)
    away[np.abs(away) < 0.1] += 0.5
    cases["relu"] = (lambda x: _projected(ops.relu(x["x"]), np.random.default_rng(1)), {"x": away})
    cases["matmul"] = (lambda x: _projected(ops.matmul(x["a"], x["b"]), np.random.default_rng(2)), {"a": normal(3, 4), "b": normal(4, 2)})
    cases["add_broadcast"] = (lambda x: _projected(ops.add(x["a"], x["b"]), np.random.default_rng(3)), {"a": normal(3, 4), "b": normal(4)})
    cases["sub"] = (lambda x: _projected(ops.sub(x["a"], x["b"]), np.random.default_rng(4)), {"a": normal(3, 4), "b": normal(3, 4)})
    cases["mul"] = (lambda x: _projected(ops.mul(x["a"], x["b"]), np.random.default_rng(5)), {"a": normal(3, 4), "b": normal(3, 4)})
    cases["concat"] = (
        lambda x: _projected(ops.concat([x["a"], x["b"]]), np.random.default_rng(6)),
        {"a": normal(3, 2), "b": normal(3, 3)},
    )
    matrix = aggregation_matrix(index_lists, 4)
    cases["sparse_matmul"] = (lambda x: _projected(ops.sparse_matmul(matrix, x["x"]), np.random.default_rng(7)), {"x": normal(4, 3)})
    cases["linear"] = (
        lambda x: _projected(ops.linear(x["x"], x["w"], x["b"]), np.random.default_rng(8)),
        {"x": normal(3, 4), "w": normal(4, 2), "b": normal(2)},
    )
    cases["mean"] = (lambda x: ops.mean(ops.square(x["x"])), {"x": normal(3, 4)})
    cases["cross_entropy"] = (lambda x: ops.mean(ops.cross_entropy(x["x"], classes)), {"x": normal(3, 4)})
    return cases


def model_case(rng: np.random.Generator, config: ModelConfig = TOY_CONFIG) -> Case:
    """Full forward pass with T rounds plus both losses on the toy graph."""
    graph = toy_graph()
    n = graph.num_vertices
    chains = extract_road_chains(graph, config.angle_threshold)
    structures = build_structures(graph, config.structures, chains)
    neighbors = [graph.neighbors(v) for v in range(n)]

    # Mostly uniform labels so the Laplace term is active on some vertices.
    lanes = np.full(n, int(rng.integers(config.lane_classes)))
    lanes[int(rng.integers(n))] = int(rng.integers(config.lane_classes))
    lane = HeadTargets(lanes, rng.random(n) < 0.9)
    road_type = HeadTargets(rng.integers(0, config.type_classes, size=n), np.ones(n, dtype=bool))
    loss_vertices = np.arange(n)

    params = ModelParams.initialize(config, int(rng.integers(2**31)))
    inputs = {name: value * 2.0 for name, value in params.values.items()}
    for name in inputs:
        if name.endswith(".b") or name.startswith("gru.b_"):
            inputs[name] = rng.normal(scale=0.3, size=inputs[name].shape)
    inputs["features"] = rng.normal(size=(n, config.input_dim))

    def loss(x: Mapping[str, Tensor]) -> Tensor:
        output = forward_tensors(x["features"], structures, x, config)
        return total_loss(output, lane, road_type, loss_vertices, neighbors, laplace_weight=3.0).total

    return loss, inputs


def run_suite(
    rng_seed: int = 0,
    instances: int = DEFAULT_INSTANCES,
    *,
    tolerance: float = DEFAULT_TOLERANCE,
    max_coords: int = 8,
) -> SuiteResult:
    """``instances`` random draws of every op case and of the model case."""
    suite = SuiteResult()
    rng = np.random.default_rng(rng_seed)
    for instance in range(instances):
        cases = op_cases(rng)
        cases["model"] = model_case(rng)
        for name, (fn, inputs) in cases.items():
            result = check_gradients(
                fn, inputs, tolerance=tolerance, max_coords=max_coords, rng_seed=int(rng.integers(2**31))
            )
            suite.results.setdefault(name, []).append(result)
            if not result.passed:
                logger.warning("gradcheck %s instance %d: worst relative error %.3e", name, instance, result.worst)
    return suite
