import math
from collections import Counter

import numpy as np
import pytest

from codematch.losses import (
    d_loss_base_d_logit,
    loss_base,
    loss_base_from_logit,
    loss_inbatch,
    loss_inbatch_from_logits,
    loss_qra,
    rewrite_query,
)

LN2 = math.log(2.0)


def test_loss_base_closed_forms():
    assert math.isclose(loss_base(0.5, 1), LN2, rel_tol=0, abs_tol=1e-12)
    assert math.isclose(loss_base(0.5, 0), LN2, rel_tol=0, abs_tol=1e-12)
    assert math.isclose(loss_base(0.75, 1), -math.log(0.75), rel_tol=0, abs_tol=1e-12)
    assert abs(loss_base(0.75, 1) - 0.287682) < 1e-6


def test_loss_base_logit_path_agrees():
    # agreement holds where s and 1-s are well conditioned in float64
    for logit in [-8.0, -2.0, 0.0, math.log(3.0), 5.0, 8.0]:
        s = 1.0 / (1.0 + math.exp(-logit))
        for y in (0, 1):
            assert abs(loss_base(s, y) - loss_base_from_logit(logit, y)) < 1e-12
    # extreme logits stay finite on the logit path (the score path cannot)
    assert math.isfinite(loss_base_from_logit(800.0, 0))
    assert math.isfinite(loss_base_from_logit(-800.0, 1))


def test_loss_base_validates():
    with pytest.raises(ValueError):
        loss_base(0.0, 1)
    with pytest.raises(ValueError):
        loss_base(1.0, 0)
    with pytest.raises(ValueError):
        loss_base(0.5, 2)


def test_loss_inbatch_closed_forms():
    assert math.isclose(loss_inbatch([0.9, 0.5], 0), LN2, rel_tol=0, abs_tol=1e-12)
    assert math.isclose(loss_inbatch([0.5, 0.1, 0.5], 1), LN2, rel_tol=0, abs_tol=1e-12)
    got = loss_inbatch([0.25, 0.9, 0.75], 1)
    want = (-math.log(0.75) - math.log(0.25)) / 2.0
    assert math.isclose(got, want, rel_tol=0, abs_tol=1e-12)
    assert abs(got - 0.836988) < 1e-6


def test_loss_inbatch_excludes_diagonal_exactly():
    rng = np.random.default_rng(0)
    for _ in range(50):
        n = int(rng.integers(2, 8))
        row = rng.uniform(0.05, 0.95, size=n)
        i = int(rng.integers(n))
        base = loss_inbatch(row, i)
        row2 = row.copy()
        row2[i] = rng.uniform(0.05, 0.95)
        assert loss_inbatch(row2, i) == base  # bitwise identical


def test_loss_inbatch_needs_two():
    with pytest.raises(ValueError):
        loss_inbatch([0.5], 0)
    with pytest.raises(ValueError):
        loss_inbatch_from_logits([0.0], 0)


def test_loss_inbatch_logit_path_agrees():
    rng = np.random.default_rng(1)
    logits = rng.normal(size=5)
    scores = 1.0 / (1.0 + np.exp(-logits))
    for i in range(5):
        assert abs(loss_inbatch(scores, i) - loss_inbatch_from_logits(logits, i)) < 1e-12


def _forced_draws(mode, n_tokens, seed):
    # replay the exact random draws rewrite_query will make
    rng = np.random.default_rng(seed)
    if mode in ("delete", "copy"):
        return int(rng.integers(n_tokens))
    i, j = rng.choice(n_tokens, size=2, replace=False)
    return int(i), int(j)


def test_rewrite_switch_forced_indices():
    tokens = ["read", "write", "file"]
    i, j = _forced_draws("switch", 3, seed=11)
    expected = tokens.copy()
    expected[i], expected[j] = expected[j], expected[i]
    got = rewrite_query(tokens, "switch", np.random.default_rng(11))
    assert got == expected
    assert Counter(got) == Counter(tokens)


def test_rewrite_delete_forced_index():
    tokens = ["read", "write", "file"]
    idx = _forced_draws("delete", 3, seed=3)
    expected = [t for k, t in enumerate(tokens) if k != idx]
    assert rewrite_query(tokens, "delete", np.random.default_rng(3)) == expected


def test_rewrite_copy_duplicates_adjacent():
    tokens = ["read", "file"]
    idx = _forced_draws("copy", 2, seed=9)
    got = rewrite_query(tokens, "copy", np.random.default_rng(9))
    assert len(got) == 3
    assert got[idx] == got[idx + 1] == tokens[idx]
    # removing the inserted copy restores the original
    assert got[:idx] + got[idx + 1 :] == tokens


def test_rewrite_skips_short_queries():
    rng = np.random.default_rng(0)
    assert rewrite_query(["solo"], "delete", rng) is None
    assert rewrite_query(["solo"], "switch", rng) is None
    assert rewrite_query(["solo"], "copy", rng) == ["solo", "solo"]


def test_rewrite_validates():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        rewrite_query([], "delete", rng)
    with pytest.raises(ValueError):
        rewrite_query(["a"], "reverse", rng)


def test_rewrite_invariants_random():
    rng = np.random.default_rng(42)
    vocab = [f"w{i}" for i in range(30)]
    for _ in range(300):
        n = int(rng.integers(2, 10))
        tokens = list(rng.choice(vocab, size=n))
        switched = rewrite_query(tokens, "switch", rng)
        assert Counter(switched) == Counter(tokens)
        deleted = rewrite_query(tokens, "delete", rng)
        assert len(deleted) == n - 1
        copied = rewrite_query(tokens, "copy", rng)
        assert len(copied) == n + 1


def test_loss_qra_zero_for_negatives_and_skips():
    assert loss_qra(0, [0.5, 0.5], 0) == 0.0
    assert loss_qra(1, None, 0) == 0.0


def test_loss_qra_degenerate_rewrite_equals_original_terms():
    row = [0.62, 0.31, 0.18]
    i = 0
    # q' = q means the rewritten row equals the original row
    assert loss_qra(1, row, i) == loss_base(row[i], 1) + loss_inbatch(row, i)


def test_loss_qra_toy_batch():
    got = loss_qra(1, [0.5, 0.5], 0)
    assert math.isclose(got, 2 * LN2, rel_tol=0, abs_tol=1e-12)


def test_d_loss_base_d_logit_matches_finite_difference():
    step = 1e-6
    for logit in (-2.0, 0.0, 1.3):
        for y in (0, 1):
            fd = (loss_base_from_logit(logit + step, y) - loss_base_from_logit(logit - step, y)) / (
                2 * step
            )
            assert abs(d_loss_base_d_logit(logit, y) - fd) < 1e-8
