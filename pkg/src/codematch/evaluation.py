"""Task evaluation: QA accuracy, search MRR over a fixed codebase, and the
code-component ablation harness.

Search ranks the full codebase for every query (no sampled negatives);
duplicate scores break ties by codebase position, so rankings are stable
and deterministic.  MRR is reported in [0, 1]; result tables additionally
show it scaled by 100.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .funcparse import CodeFunction, ComponentMask, parse_function, strip_components


@dataclass(frozen=True)
class SearchResult:
    query_id: str
    rank_of_gold: int
    reciprocal_rank: float


@dataclass
class CodeBase:
    """Ordered code collection; order is the ranking tie-breaker."""

    codes: list[CodeFunction]

    def __post_init__(self):
        ids = [c.code_id for c in self.codes]
        if len(set(ids)) != len(ids):
            raise ValueError("codebase code_ids must be unique")
        self._index = {cid: i for i, cid in enumerate(ids)}

    def __len__(self) -> int:
        return len(self.codes)

    def index_of(self, code_id: str) -> int | None:
        return self._index.get(code_id)

    def texts(self) -> list[str]:
        return [c.raw_text for c in self.codes]


def qa_accuracy(model, X, y, threshold: float = 0.5) -> float:
    """Fraction of pairs whose thresholded score matches the label.

    Scores exactly at the threshold predict label 1 (>= convention).
    """
    X = list(X)
    y = np.asarray(y, dtype=np.int64)
    if len(X) == 0:
        raise ValueError("cannot compute accuracy over zero pairs")
    if len(X) != len(y):
        raise ValueError(f"length mismatch: {len(X)} pairs vs {len(y)} labels")
    scores = np.asarray(model.score_pairs(X), dtype=np.float64)
    preds = (scores >= threshold).astype(np.int64)
    return float(np.mean(preds == y))


def rank_codes(scores: np.ndarray) -> np.ndarray:
    """Indices of codes sorted by score descending, stable in codebase order."""
    return np.argsort(-np.asarray(scores, dtype=np.float64), kind="stable")


def search_mrr(model, test_pairs, codebase: CodeBase, collect: bool = False):
    """Mean reciprocal rank of each pair's gold code over the codebase.

    ``test_pairs`` is a sequence of (pair_id, query_text, gold_code_id).
    ``model`` must expose ``score_matrix(query_texts, code_texts)``.
    Returns the MRR, or (MRR, [SearchResult, ...]) when collect=True.
    """
    test_pairs = list(test_pairs)
    if not test_pairs:
        raise ValueError("cannot compute MRR over zero queries")
    for pair_id, _, gold in test_pairs:
        if codebase.index_of(gold) is None:
            raise ValueError(f"gold code {gold!r} of pair {pair_id!r} not in codebase")
    queries = [q for _, q, _ in test_pairs]
    score_mat = np.asarray(model.score_matrix(queries, codebase.texts()))
    results = []
    rr_sum = 0.0
    for row, (pair_id, _, gold) in zip(score_mat, test_pairs):
        order = rank_codes(row)
        gold_idx = codebase.index_of(gold)
        rank = int(np.nonzero(order == gold_idx)[0][0]) + 1
        rr_sum += 1.0 / rank
        if collect:
            results.append(SearchResult(pair_id, rank, 1.0 / rank))
    mrr = rr_sum / len(test_pairs)
    return (mrr, results) if collect else mrr


def strip_code_text(code_text: str, mask: ComponentMask) -> str:
    """Re-render code text keeping only the masked components."""
    return strip_components(parse_function(code_text), mask)


@dataclass(frozen=True)
class AblationRow:
    label: str
    mrr: float

    @property
    def mrr_x100(self) -> float:
        return 100.0 * self.mrr


def ablation_run(
    build_model,
    train_X,
    train_y,
    test_pairs,
    codebase: CodeBase,
    masks: list[ComponentMask],
) -> list[AblationRow]:
    """Retrain and test with code components stripped per mask.

    ``build_model()`` must return a fresh, identically-seeded model for
    every row so differences come only from the masked components.  Both
    the training codes and the test codebase are stripped.
    """
    rows = []
    for mask in masks:
        stripped_X = [(q, strip_code_text(c, mask)) for q, c in train_X]
        stripped_codebase = CodeBase(
            [
                CodeFunction(
                    code_id=c.code_id,
                    raw_text=strip_code_text(c.raw_text, mask),
                    header=c.header if mask.keep_header else "",
                    docstring=c.docstring if mask.keep_docstring else "",
                    body=c.body if mask.keep_body else "",
                )
                for c in codebase.codes
            ]
        )
        model = build_model()
        model.fit(stripped_X, train_y)
        mrr = search_mrr(model, test_pairs, stripped_codebase)
        rows.append(AblationRow(mask.label(), float(mrr)))
    return rows
