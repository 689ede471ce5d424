"""AdamW with decoupled weight decay and linear learning-rate warmup."""

from __future__ import annotations

import numpy as np


class AdamW:
    """Per-array AdamW over a named parameter dict.

    Weight decay is decoupled: the decay term is applied directly to the
    parameters, scaled by the scheduled learning rate, independent of the
    adaptive gradient step.  The learning rate ramps linearly from 0 to
    ``lr`` over ``warmup * total_steps`` steps, then decays linearly to 0
    at ``total_steps`` (constant when no horizon is given).
    """

    def __init__(
        self,
        params: dict[str, np.ndarray],
        lr: float,
        betas: tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
        weight_decay: float = 0.01,
        total_steps: int | None = None,
        warmup: float = 0.0,
    ):
        if lr <= 0:
            raise ValueError("learning rate must be positive")
        if not 0.0 <= warmup <= 1.0:
            raise ValueError("warmup fraction must lie in [0, 1]")
        self.params = params
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.total_steps = total_steps
        self.warmup_steps = 0
        if total_steps is not None:
            self.warmup_steps = int(round(warmup * total_steps))
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def lr_at(self, t: int) -> float:
        if self.warmup_steps > 0 and t <= self.warmup_steps:
            return self.lr * t / self.warmup_steps
        if self.total_steps is None or self.total_steps <= self.warmup_steps:
            return self.lr
        remaining = max(0, self.total_steps - t)
        return self.lr * remaining / (self.total_steps - self.warmup_steps)

    def step(self, grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        lr_t = self.lr_at(self.t)
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for name, p in self.params.items():
            g = grads[name]
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            update = (m / bc1) / (np.sqrt(v / bc2) + self.eps)
            if self.weight_decay:
                update = update + self.weight_decay * p
            p -= lr_t * update
