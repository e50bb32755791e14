"""Central finite-difference gradient checks."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Mapping, Optional

import numpy as np

from autodiff.tensor import Tape, Tensor, backward

logger = logging.getLogger(__name__)

DEFAULT_STEP = 1e-6
DEFAULT_TOLERANCE = 1e-5
# Below this norm both gradients count as zero.
_ZERO_NORM = 1e-7

LossFn = Callable[[Dict[str, Tensor]], Tensor]


@dataclass
class GradCheckResult:
    errors: Dict[str, float] = field(default_factory=dict)
    tolerance: float = DEFAULT_TOLERANCE

    @property
    def worst(self) -> float:
        return max(self.errors.values(), default=0.0)

    @property
    def passed(self) -> bool:
        return self.worst < self.tolerance


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    a_norm = float(np.linalg.norm(analytic))
    n_norm = float(np.linalg.norm(numeric))
    if a_norm < _ZERO_NORM and n_norm < _ZERO_NORM:
        return 0.0
    return float(np.linalg.norm(analytic - numeric)) / max(a_norm, n_norm)


def _evaluate(fn: LossFn, values: Mapping[str, np.ndarray]) -> float:
    return fn({name: Tensor(value) for name, value in values.items()}).item()


def check_gradients(
    fn: LossFn,
    inputs: Mapping[str, np.ndarray],
    *,
    step: float = DEFAULT_STEP,
    tolerance: float = DEFAULT_TOLERANCE,
    max_coords: Optional[int] = None,
    rng_seed: int = 0,
) -> GradCheckResult:
    """Compares tape gradients of ``fn`` with central differences.

    ``fn`` maps named input tensors to a scalar loss. When ``max_coords`` is
    set, each input is checked on a random subset of that many coordinates.
    """
    tape = Tape()
    params = {name: tape.parameter(name, np.asarray(value, dtype=np.float64)) for name, value in inputs.items()}
    analytic = backward(tape, fn(params))

    rng = np.random.default_rng(rng_seed)
    base = {name: np.array(value, dtype=np.float64) for name, value in inputs.items()}
    result = GradCheckResult(tolerance=tolerance)
    for name, value in base.items():
        flat_count = value.size
        coords = np.arange(flat_count)
        if max_coords is not None and flat_count > max_coords:
            coords = np.sort(rng.choice(flat_count, size=max_coords, replace=False))

        numeric = np.zeros(len(coords))
        for slot, coord in enumerate(coords):
            index = np.unravel_index(coord, value.shape)
            original = value[index]
            value[index] = original + step
            plus = _evaluate(fn, base)
            value[index] = original - step
            minus = _evaluate(fn, base)
            value[index] = original
            numeric[slot] = (plus - minus) / (2.0 * step)

        result.errors[name] = relative_error(analytic[name].reshape(-1)[coords], numeric)
        logger.debug("gradcheck %s: %d coords, relative error %.3e", name, len(coords), result.errors[name])
    return result
