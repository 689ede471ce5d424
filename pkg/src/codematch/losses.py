"""Training losses for the contrastive matcher, plus query rewriting.

Three per-example terms combine into the training objective:

  base        L_b  = -[y log s + (1-y) log(1-s)]            (labeled pair)
  in-batch    L_ib = -(1/(n-1)) * sum_{j != i} log(1 - s_ij) (other codes in
                                                              the batch are
                                                              dissimilar)
  rewritten   L_qr = L_b' + L_ib'  with the query replaced by a lightly
                     rewritten copy; defined only for positive pairs.

All losses have logit-space forms (softplus based) so scores arbitrarily
close to 0 or 1 never produce log(0).
"""

from __future__ import annotations

import numpy as np

from .matcher import sigmoid

REWRITE_MODES = ("delete", "switch", "copy")


def softplus(x):
    """log(1 + exp(x)), stable for large |x|."""
    x = np.asarray(x, dtype=np.float64)
    return np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))


def _check_label(y):
    if y not in (0, 1):
        raise ValueError(f"label must be 0 or 1, got {y!r}")


def loss_base(s: float, y: int) -> float:
    """Binary cross entropy of score s in (0,1) against label y."""
    _check_label(y)
    if not 0.0 < s < 1.0:
        raise ValueError(f"score must lie strictly in (0, 1), got {s}")
    return float(-(y * np.log(s) + (1 - y) * np.log(1.0 - s)))


def loss_base_from_logit(logit: float, y: int) -> float:
    """Binary cross entropy computed from the pre-sigmoid logit."""
    _check_label(y)
    return float(softplus(logit) - y * logit)


def loss_inbatch(scores_row, i: int) -> float:
    """Mean of -log(1 - s_ij) over the row's other codes (j != i)."""
    scores_row = np.asarray(scores_row, dtype=np.float64)
    n = scores_row.shape[0]
    if n < 2:
        raise ValueError(f"in-batch loss needs a batch of size >= 2, got {n}")
    if not (0 <= i < n):
        raise ValueError(f"row index {i} out of range for batch of {n}")
    others = np.delete(scores_row, i)
    if not ((others > 0.0) & (others < 1.0)).all():
        raise ValueError("scores must lie strictly in (0, 1)")
    return float(-np.log(1.0 - others).sum() / (n - 1))


def loss_inbatch_from_logits(logit_row, i: int) -> float:
    """loss_inbatch computed from pre-sigmoid logits (log(1-s) = -softplus)."""
    logit_row = np.asarray(logit_row, dtype=np.float64)
    n = logit_row.shape[0]
    if n < 2:
        raise ValueError(f"in-batch loss needs a batch of size >= 2, got {n}")
    if not (0 <= i < n):
        raise ValueError(f"row index {i} out of range for batch of {n}")
    return float(softplus(np.delete(logit_row, i)).sum() / (n - 1))


def rewrite_query(tokens, mode: str, rng: np.random.Generator):
    """Rewrite a token sequence by one small edit; None when skipped.

    delete: drop one random token (skipped on length-1 input).
    switch: exchange two random positions (skipped on length-1 input).
    copy:   duplicate one random token adjacent to its source.

    Tokens are the plain query words, without [CLS]/[SEP].
    """
    if mode not in REWRITE_MODES:
        raise ValueError(f"unknown rewrite mode: {mode!r}")
    toks = list(tokens)
    if not toks:
        raise ValueError("cannot rewrite an empty query")
    if mode == "delete":
        if len(toks) < 2:
            return None
        idx = int(rng.integers(len(toks)))
        del toks[idx]
        return toks
    if mode == "switch":
        if len(toks) < 2:
            return None
        i, j = rng.choice(len(toks), size=2, replace=False)
        toks[int(i)], toks[int(j)] = toks[int(j)], toks[int(i)]
        return toks
    idx = int(rng.integers(len(toks)))
    toks.insert(idx + 1, toks[idx])
    return toks


def loss_qra(label: int, scores_prime_row, i: int) -> float:
    """Loss of the rewritten-query copy of example i.

    Zero for negative examples and for skipped rewrites (scores_prime_row
    is None); otherwise the rewritten pair is treated as positive and also
    contrasted against the other in-batch codes.
    """
    _check_label(label)
    if label == 0 or scores_prime_row is None:
        return 0.0
    scores_prime_row = np.asarray(scores_prime_row, dtype=np.float64)
    return loss_base(float(scores_prime_row[i]), 1) + loss_inbatch(scores_prime_row, i)


def loss_qra_from_logits(label: int, logit_prime_row, i: int) -> float:
    _check_label(label)
    if label == 0 or logit_prime_row is None:
        return 0.0
    logit_prime_row = np.asarray(logit_prime_row, dtype=np.float64)
    return loss_base_from_logit(float(logit_prime_row[i]), 1) + loss_inbatch_from_logits(
        logit_prime_row, i
    )


def d_loss_base_d_logit(logit: float, y: int) -> float:
    """d/d(logit) of loss_base_from_logit: sigmoid(logit) - y."""
    return float(sigmoid(np.asarray([logit]))[0] - y)
