"""A labeled network bundled with its features, road chains and graph structures."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from errors import ShapeError
from ingest.base import LabeledNetwork
from model.config import ModelConfig
from roadnet.chains import RoadChain, chain_membership, extract_road_chains
from roadnet.structures import GraphStructure, build_structures

logger = logging.getLogger(__name__)


def receptive_field_features(
    features: np.ndarray,
    chains: Sequence[RoadChain],
    hops: int,
) -> np.ndarray:
    """Appends the features of chain neighbors up to ``hops`` away.

    Column blocks are [self, pred 1, succ 1, pred 2, succ 2, ...] along the
    vertex's lowest-index chain; missing neighbors are zero blocks.
    """
    if hops == 0:
        return np.asarray(features, dtype=np.float64)
    n, width = features.shape
    membership = chain_membership(list(chains), n)
    out = np.zeros((n, width * (1 + 2 * hops)), dtype=np.float64)
    out[:, :width] = features
    for v in range(n):
        if not membership[v]:
            continue
        chain = chains[membership[v][0]]
        seq = chain.vertices
        pos = seq.index(v)
        for d in range(1, hops + 1):
            for side, offset in ((0, -d), (1, d)):
                at = pos + offset
                if chain.closed:
                    at %= len(seq)
                elif not 0 <= at < len(seq):
                    continue
                block = 1 + 2 * (d - 1) + side
                out[v, block * width : (block + 1) * width] = features[seq[at]]
    return out


@dataclass
class PreparedNetwork:
    network: LabeledNetwork
    features: np.ndarray
    chains: Tuple[RoadChain, ...]
    structures: Tuple[GraphStructure, ...]
    occluded: Optional[np.ndarray] = None
    _inputs: Dict[int, np.ndarray] = field(default_factory=dict, repr=False)

    @property
    def num_vertices(self) -> int:
        return self.network.num_vertices

    @property
    def name(self) -> str:
        return self.network.name

    def inputs(self, hops: int = 0) -> np.ndarray:
        if hops not in self._inputs:
            self._inputs[hops] = receptive_field_features(self.features, self.chains, hops)
        return self._inputs[hops]


def prepare_network(
    network: LabeledNetwork,
    features: np.ndarray,
    config: ModelConfig,
    *,
    occluded: Optional[np.ndarray] = None,
) -> PreparedNetwork:
    features = np.asarray(features, dtype=np.float64)
    if features.shape != (network.num_vertices, config.feature_dim):
        raise ShapeError("prepare_network", features.shape, (network.num_vertices, config.feature_dim))
    chains = tuple(extract_road_chains(network.graph, config.angle_threshold))
    structures = tuple(
        build_structures(
            network.graph,
            config.structures,
            chains,
            aux_max_dist=config.aux_max_dist,
            aux_max_angle=config.aux_max_angle,
        )
    )
    logger.debug("prepared %s: %d vertices, %d chains", network.name, network.num_vertices, len(chains))
    return PreparedNetwork(network, features, chains, structures, occluded)
