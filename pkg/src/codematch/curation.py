"""Candidate pair mining: best-matching code per query, gated and capped.

Every query keeps only its highest-similarity code; pairs under the
similarity threshold are dropped; each code may serve at most
``max_code_occurrence`` queries (the highest-similarity queries win).
Scoring is brute-force over all query-code combinations, O(|Q| * |C|)
embedding comparisons with code vectors normalized once up front.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Query
from .funcparse import CodeFunction


@dataclass(frozen=True)
class CurationConfig:
    similarity_threshold: float = 0.5
    max_code_occurrence: int = 10

    def __post_init__(self):
        if not -1.0 <= self.similarity_threshold <= 1.0:
            raise ValueError("similarity threshold must lie in [-1, 1]")
        if self.max_code_occurrence < 1:
            raise ValueError("max code occurrence must be >= 1")


@dataclass(frozen=True)
class CandidatePair:
    pair_id: str
    query_id: str
    code_id: str
    similarity: float


def cosine(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine similarity is undefined for a zero vector")
    return float(a @ b / (na * nb))


def curate(
    queries: list[Query],
    codes: list[CodeFunction],
    encoder,
    config: CurationConfig | None = None,
) -> list[CandidatePair]:
    """Mine candidate pairs; ``encoder`` must expose embed_query/embed_code.

    Ties (equal similarity) break deterministically by code_id, then
    query_id, ascending.
    """
    config = config or CurationConfig()
    if not codes:
        raise ValueError("cannot curate against an empty code store")

    code_vecs = np.stack([np.asarray(encoder.embed_code(c.raw_text)) for c in codes])
    norms = np.linalg.norm(code_vecs, axis=1)
    if (norms == 0.0).any():
        bad = codes[int(np.argmax(norms == 0.0))].code_id
        raise ValueError(f"zero embedding vector for code {bad}")
    code_unit = code_vecs / norms[:, None]
    code_order = np.argsort([c.code_id for c in codes], kind="stable")

    best: list[tuple[str, str, float]] = []  # (query_id, code_id, sim)
    for query in queries:
        qv = np.asarray(encoder.embed_query(query.text))
        qn = np.linalg.norm(qv)
        if qn == 0.0:
            raise ValueError(f"zero embedding vector for query {query.query_id}")
        sims = code_unit @ (qv / qn)
        top = sims.max()
        if top < config.similarity_threshold:
            continue
        # among equally-similar codes pick the smallest code_id
        winner = min(
            (i for i in code_order if sims[i] == top),
            key=lambda i: codes[i].code_id,
        )
        best.append((query.query_id, codes[winner].code_id, float(top)))

    per_code: dict[str, list[tuple[str, str, float]]] = {}
    for entry in best:
        per_code.setdefault(entry[1], []).append(entry)
    kept: set[tuple[str, str]] = set()
    for code_id in sorted(per_code):
        entries = sorted(per_code[code_id], key=lambda e: (-e[2], e[0]))
        for query_id, cid, _ in entries[: config.max_code_occurrence]:
            kept.add((query_id, cid))

    out = []
    for query_id, code_id, sim in best:
        if (query_id, code_id) in kept:
            out.append(
                CandidatePair(
                    pair_id=f"{query_id}:{code_id}",
                    query_id=query_id,
                    code_id=code_id,
                    similarity=sim,
                )
            )
    return out
