"""Adam over named numpy parameter arrays."""

from __future__ import annotations

from typing import Dict, Mapping

import numpy as np


class Adam:
    """Updates the arrays in ``params`` in place."""

    def __init__(
        self,
        params: Dict[str, np.ndarray],
        *,
        beta1: float = 0.9,
        beta2: float = 0.999,
        epsilon: float = 1e-8,
    ) -> None:
        self._params = params
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.step_count = 0
        self._m = {name: np.zeros_like(value) for name, value in params.items()}
        self._v = {name: np.zeros_like(value) for name, value in params.items()}

    def step(self, grads: Mapping[str, np.ndarray], lr: float) -> None:
        self.step_count += 1
        t = self.step_count
        correction1 = 1.0 - self.beta1**t
        correction2 = 1.0 - self.beta2**t
        for name, grad in grads.items():
            if name not in self._params:
                continue
            m = self._m[name]
            v = self._v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * grad
            v *= self.beta2
            v += (1.0 - self.beta2) * grad * grad
            m_hat = m / correction1
            v_hat = v / correction2
            self._params[name] -= lr * m_hat / (np.sqrt(v_hat) + self.epsilon)
