"""Parameter initialization schemes."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from autodiff.tensor import Tensor

SCHEMES = ("glorot_uniform", "zeros")


def glorot_limit(shape: Sequence[int]) -> float:
    fan_in = shape[0]
    fan_out = shape[1] if len(shape) > 1 else shape[0]
    return math.sqrt(6.0 / (fan_in + fan_out))


def init_params(
    shape: Sequence[int],
    scheme: str = "glorot_uniform",
    rng_seed: int | np.random.SeedSequence = 0,
) -> Tensor:
    """Draws U(-sqrt(6/(fan_in+fan_out)), +sqrt(...)); weights are laid out (fan_in, fan_out)."""
    shape = tuple(int(dim) for dim in shape)
    if not shape or any(dim <= 0 for dim in shape):
        raise ValueError(f"Cannot derive fan-in/fan-out from shape {shape}")
    if scheme == "zeros":
        return Tensor(np.zeros(shape))
    if scheme != "glorot_uniform":
        raise ValueError(f"Unknown init scheme {scheme!r}; expected one of {SCHEMES}")
    limit = glorot_limit(shape)
    rng = np.random.default_rng(rng_seed)
    return Tensor(rng.uniform(-limit, limit, size=shape))
