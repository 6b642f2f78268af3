"""Decoupled-weight-decay Adam (AdamW), written against plain numpy arrays.

The update for step t with gradient g:

    m <- beta1 * m + (1 - beta1) * g
    v <- beta2 * v + (1 - beta2) * g^2
    m_hat = m / (1 - beta1^t)
    v_hat = v / (1 - beta2^t)
    theta <- theta - lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * theta)

Weight decay multiplies the parameter directly (decoupled); it never enters
the moment estimates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class OptimizerConfig:
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    weight_decay: float = 0.01

    def __post_init__(self) -> None:
        if not 0.0 <= self.beta1 < 1.0:
            raise ValueError(f"beta1 must be in [0, 1), got {self.beta1}")
        if not 0.0 <= self.beta2 < 1.0:
            raise ValueError(f"beta2 must be in [0, 1), got {self.beta2}")
        if self.epsilon <= 0.0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.weight_decay < 0.0:
            raise ValueError(f"weight_decay must be non-negative, got {self.weight_decay}")


def adamw_step(
    params: np.ndarray,
    grads: np.ndarray,
    m: np.ndarray,
    v: np.ndarray,
    t: int,
    lr: float,
    cfg: OptimizerConfig = OptimizerConfig(),
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """One AdamW update. Returns (params, m, v) as new arrays.

    t is the 1-based step count *including* this step.
    """
    if t < 1:
        raise ValueError(f"step count t must be >= 1, got {t}")
    if not (params.shape == grads.shape == m.shape == v.shape):
        raise ValueError("params, grads and moments must share one shape")
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * grads
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * np.square(grads)
    m_hat = m / (1.0 - cfg.beta1 ** t)
    v_hat = v / (1.0 - cfg.beta2 ** t)
    params = params - lr * (m_hat / (np.sqrt(v_hat) + cfg.epsilon)
                            + cfg.weight_decay * params)
    return params, m, v


class AdamW:
    """Stateful convenience wrapper: one optimizer per list of parameter arrays."""

    def __init__(self, shapes: list[tuple[int, ...]], lr: float,
                 cfg: OptimizerConfig = OptimizerConfig()) -> None:
        if lr <= 0:
            raise ValueError(f"learning rate must be positive, got {lr}")
        self.lr = lr
        self.cfg = cfg
        self.t = 0
        self._m = [np.zeros(s) for s in shapes]
        self._v = [np.zeros(s) for s in shapes]

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> list[np.ndarray]:
        if len(params) != len(self._m) or len(grads) != len(self._m):
            raise ValueError("parameter group count changed between steps")
        self.t += 1
        out: list[np.ndarray] = []
        for i, (p, g) in enumerate(zip(params, grads)):
            p, self._m[i], self._v[i] = adamw_step(
                p, g, self._m[i], self._v[i], self.t, self.lr, self.cfg)
            out.append(p)
        return out
