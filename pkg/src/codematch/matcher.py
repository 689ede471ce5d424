"""Siamese relation head scoring a (query, code) embedding pair.

Given embeddings q and c, the head builds the interaction feature
``x = [q, c, q - c, q * c]`` (concatenation, elementwise difference and
product), projects it to a relation embedding ``r = tanh(W1 @ x)`` and
scores the pair ``s = sigmoid(W2 @ r)``.  No bias terms.  The pre-sigmoid
logit is exposed so losses can be computed in a numerically stable form.
"""

from __future__ import annotations

import numpy as np


def sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


class PairCache:
    """Forward-pass values needed by the backward pass."""

    __slots__ = ("q", "c", "x", "r", "logits", "scores", "consumed")

    def __init__(self, q, c, x, r, logits, scores):
        self.q = q
        self.c = c
        self.x = x
        self.r = r
        self.logits = logits
        self.scores = scores
        self.consumed = False


class MatcherHead:
    """Relation head with weights W1 (d x 4d) and W2 (1 x d)."""

    def __init__(self, d: int, seed: int = 0, w1=None, w2=None):
        if d < 1:
            raise ValueError("d must be positive")
        self.d = d
        rng = np.random.default_rng(seed)
        if w1 is None:
            a = np.sqrt(6.0 / (4 * d + d))
            w1 = rng.uniform(-a, a, size=(d, 4 * d))
        if w2 is None:
            a = np.sqrt(6.0 / (d + 1))
            w2 = rng.uniform(-a, a, size=(1, d))
        w1 = np.asarray(w1, dtype=np.float64)
        w2 = np.asarray(w2, dtype=np.float64)
        if w1.shape != (d, 4 * d):
            raise ValueError(f"W1 shape {w1.shape} != ({d}, {4 * d})")
        if w2.shape != (1, d):
            raise ValueError(f"W2 shape {w2.shape} != (1, {d})")
        if not (np.isfinite(w1).all() and np.isfinite(w2).all()):
            raise ValueError("matcher parameters must be finite")
        self.w1 = w1
        self.w2 = w2

    def params(self) -> dict[str, np.ndarray]:
        return {"w1": self.w1, "w2": self.w2}

    def zero_grads(self) -> dict[str, np.ndarray]:
        return {name: np.zeros_like(arr) for name, arr in self.params().items()}

    def _check_pair(self, q, c):
        q = np.asarray(q, dtype=np.float64)
        c = np.asarray(c, dtype=np.float64)
        if q.ndim == 1:
            q = q[None, :]
        if c.ndim == 1:
            c = c[None, :]
        if q.shape != c.shape or q.shape[1] != self.d:
            raise ValueError(
                f"expected matching (k, {self.d}) inputs, got {q.shape} and {c.shape}"
            )
        return q, c

    def relation(self, q, c) -> np.ndarray:
        """Relation embedding tanh(W1 @ [q, c, q-c, q*c]); components in (-1, 1)."""
        q2, c2 = self._check_pair(q, c)
        x = np.concatenate([q2, c2, q2 - c2, q2 * c2], axis=1)
        r = np.tanh(x @ self.w1.T)
        return r[0] if np.asarray(q).ndim == 1 else r

    def forward_pairs(self, q, c) -> tuple[np.ndarray, np.ndarray, PairCache]:
        """Score k aligned (q, c) rows; returns (scores, logits, cache)."""
        q2, c2 = self._check_pair(q, c)
        x = np.concatenate([q2, c2, q2 - c2, q2 * c2], axis=1)
        r = np.tanh(x @ self.w1.T)
        logits = r @ self.w2[0]
        scores = sigmoid(logits)
        return scores, logits, PairCache(q2, c2, x, r, logits, scores)

    def score_pair(self, q, c):
        """Convenience scalar path: returns (score, logit, cache)."""
        scores, logits, cache = self.forward_pairs(q, c)
        return float(scores[0]), float(logits[0]), cache

    def backward_from_logits(
        self, cache: PairCache, d_logits, grads: dict[str, np.ndarray]
    ) -> tuple[np.ndarray, np.ndarray]:
        """Backprop from d(loss)/d(logit); returns (dq, dc) and fills grads."""
        if cache.consumed:
            raise ValueError("stale cache: backward already ran for this forward pass")
        cache.consumed = True
        d_logits = np.asarray(d_logits, dtype=np.float64).reshape(-1)
        if d_logits.shape[0] != cache.r.shape[0]:
            raise ValueError(
                f"expected {cache.r.shape[0]} upstream values, got {d_logits.shape[0]}"
            )
        grads["w2"] += (d_logits @ cache.r)[None, :]
        dr = d_logits[:, None] * self.w2[0][None, :]
        dpre = dr * (1.0 - cache.r * cache.r)
        grads["w1"] += dpre.T @ cache.x
        dx = dpre @ self.w1
        d = self.d
        dq = dx[:, :d] + dx[:, 2 * d : 3 * d] + dx[:, 3 * d :] * cache.c
        dc = dx[:, d : 2 * d] - dx[:, 2 * d : 3 * d] + dx[:, 3 * d :] * cache.q
        return dq, dc

    def backward_from_scores(
        self, cache: PairCache, d_scores, grads: dict[str, np.ndarray]
    ) -> tuple[np.ndarray, np.ndarray]:
        """Backprop from d(loss)/d(score), routing through the sigmoid."""
        d_scores = np.asarray(d_scores, dtype=np.float64).reshape(-1)
        s = cache.scores
        return self.backward_from_logits(cache, d_scores * s * (1.0 - s), grads)

    def matcher_gradient(self, cache: PairCache, upstream: float):
        """Gradients of ``upstream * score`` for a single cached pair.

        Returns a dict with parameter gradients plus dq/dc for the inputs.
        """
        grads = self.zero_grads()
        dq, dc = self.backward_from_scores(cache, [upstream], grads)
        grads["q"] = dq[0]
        grads["c"] = dc[0]
        return grads
