"""Input validation helpers shared by the estimator surface."""

from __future__ import annotations

import numpy as np


def check_text_pairs(X) -> list[tuple[str, str]]:
    """Validate a sequence of (query_text, code_text) string pairs."""
    pairs = []
    for i, item in enumerate(X):
        try:
            q, c = item
        except (TypeError, ValueError):
            raise ValueError(f"X[{i}] is not a (query, code) pair") from None
        if not isinstance(q, str) or not isinstance(c, str):
            raise ValueError(f"X[{i}] must contain two strings")
        if not q.strip():
            raise ValueError(f"X[{i}] has an empty query")
        if not c.strip():
            raise ValueError(f"X[{i}] has an empty code text")
        pairs.append((q, c))
    return pairs


def check_labels(y, n: int) -> np.ndarray:
    y = np.asarray(y)
    if y.shape != (n,):
        raise ValueError(f"y must have shape ({n},), got {y.shape}")
    y = y.astype(np.int64)
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")
    return y


def check_xy(X, y):
    pairs = check_text_pairs(X)
    labels = check_labels(y, len(pairs))
    return pairs, labels
