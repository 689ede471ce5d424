"""Canonical data model, JSONL ingestion/serialization, and split generation.

Canonical pair record (one JSON object per line, UTF-8):

    {"pair_id": str, "query": str, "code": str, "label": 0|1, "votes": [0|1, ...]}

``votes`` is optional.  Published upstream field names are accepted through
an alias map (``idx`` for pair_id, ``doc`` for query).  Query and code ids
are content hashes, so identical texts dedupe into shared stores.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .encoder import tokenize
from .funcparse import CodeFunction, ParseError, parse_function


class CorpusError(ValueError):
    """A pair file or split request violates the corpus contract."""


FIELD_ALIASES = {
    "pair_id": ("pair_id", "idx", "id"),
    "query": ("query", "doc", "text"),
    "code": ("code",),
    "label": ("label",),
    "votes": ("votes",),
}


@dataclass(frozen=True)
class Query:
    query_id: str
    text: str  # raw, lowercased
    tokens: tuple[str, ...]  # content tokens, no specials


@dataclass(frozen=True)
class LabeledPair:
    pair_id: str
    query_id: str
    code_id: str
    label: int
    votes: tuple[int, ...] = ()


@dataclass(frozen=True)
class SplitSpec:
    """Partition sizes for one task; counts must sum to the corpus size.

    task="qa" uses (train, valid); task="search" uses (train, valid, test)
    with valid/test restricted to positive pairs.
    """

    task: str
    seed: int
    counts: tuple[int, ...]

    def __post_init__(self):
        if self.task not in ("qa", "search"):
            raise CorpusError(f"unknown task: {self.task!r}")
        want = 2 if self.task == "qa" else 3
        if len(self.counts) != want:
            raise CorpusError(f"task {self.task!r} needs {want} partition counts")
        if any(c < 0 for c in self.counts):
            raise CorpusError("partition counts must be nonnegative")


@dataclass
class CorpusStats:
    n_pairs: int
    n_unique_queries: int
    n_unique_codes: int
    avg_query_len: float
    avg_code_len: float


@dataclass
class Corpus:
    pairs: list[LabeledPair] = field(default_factory=list)
    queries: dict[str, Query] = field(default_factory=dict)
    codes: dict[str, CodeFunction] = field(default_factory=dict)

    def query_of(self, pair: LabeledPair) -> Query:
        return self.queries[pair.query_id]

    def code_of(self, pair: LabeledPair) -> CodeFunction:
        return self.codes[pair.code_id]

    def text_pairs(self) -> list[tuple[str, str]]:
        """(query text, code text) view for model training/scoring."""
        return [
            (self.queries[p.query_id].text, self.codes[p.code_id].raw_text)
            for p in self.pairs
        ]

    def labels(self) -> np.ndarray:
        return np.array([p.label for p in self.pairs], dtype=np.int64)


def _content_id(prefix: str, text: str) -> str:
    return prefix + hashlib.sha1(text.encode("utf-8")).hexdigest()[:12]


def make_query(text: str) -> Query:
    lowered = text.lower()
    if not lowered.strip():
        raise CorpusError("query text must be nonempty")
    tokens = tuple(tokenize(lowered, kind="query", wrap=False))
    if not tokens:
        raise CorpusError(f"query has no tokens after tokenization: {text!r}")
    return Query(query_id=_content_id("q", lowered), text=lowered, tokens=tokens)


def make_code(raw_text: str) -> CodeFunction:
    func = parse_function(raw_text)
    code_id = _content_id("c", raw_text)
    return CodeFunction(
        code_id=code_id,
        raw_text=func.raw_text,
        header=func.header,
        docstring=func.docstring,
        body=func.body,
    )


def _lookup(record: dict, field_name: str):
    for alias in FIELD_ALIASES[field_name]:
        if alias in record:
            return record[alias]
    return None


def add_pair(
    corpus: Corpus,
    pair_id: str,
    query_text: str,
    code_text: str,
    label: int,
    votes: Iterable[int] = (),
) -> LabeledPair:
    """Build a pair (deduping query/code stores) and append it."""
    if label not in (0, 1):
        raise CorpusError(f"label must be 0 or 1, got {label!r}")
    votes = tuple(int(v) for v in votes)
    if any(v not in (0, 1) for v in votes):
        raise CorpusError("votes must all be 0 or 1")
    if votes and len(votes) < 3:
        raise CorpusError(
            f"retained pairs need at least 3 votes, got {len(votes)}"
        )
    query = make_query(query_text)
    code = make_code(code_text)
    corpus.queries.setdefault(query.query_id, query)
    corpus.codes.setdefault(code.code_id, code)
    pair = LabeledPair(
        pair_id=str(pair_id),
        query_id=query.query_id,
        code_id=code.code_id,
        label=int(label),
        votes=votes,
    )
    corpus.pairs.append(pair)
    return pair


def load_pairs(path) -> Corpus:
    """Read a JSONL pair file into a corpus with deduped query/code stores."""
    corpus = Corpus()
    seen_ids: set[str] = set()
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                raise CorpusError(f"line {lineno}: malformed JSON ({e.msg})") from e
            pair_id = _lookup(record, "pair_id")
            query_text = _lookup(record, "query")
            code_text = _lookup(record, "code")
            label = _lookup(record, "label")
            votes = _lookup(record, "votes") or ()
            missing = [
                name
                for name, val in (
                    ("pair_id", pair_id),
                    ("query", query_text),
                    ("code", code_text),
                    ("label", label),
                )
                if val is None
            ]
            if missing:
                raise CorpusError(f"line {lineno}: missing field(s) {missing}")
            pair_id = str(pair_id)
            if pair_id in seen_ids:
                raise CorpusError(f"line {lineno}: duplicate pair_id {pair_id!r}")
            seen_ids.add(pair_id)
            try:
                add_pair(corpus, pair_id, query_text, code_text, label, votes)
            except (CorpusError, ParseError) as e:
                raise CorpusError(f"line {lineno}: {e}") from e
    return corpus


def save_pairs(path, corpus: Corpus) -> None:
    """Write the corpus back out in the canonical schema."""
    with open(path, "w", encoding="utf-8") as f:
        for pair in corpus.pairs:
            record = {
                "pair_id": pair.pair_id,
                "query": corpus.queries[pair.query_id].text,
                "code": corpus.codes[pair.code_id].raw_text,
                "label": pair.label,
            }
            if pair.votes:
                record["votes"] = list(pair.votes)
            f.write(json.dumps(record, ensure_ascii=False) + "\n")


def load_candidates(path) -> list[tuple[str, str, str]]:
    """Read (pair_id, query, code) records; labels/votes are ignored.

    Candidate files produced by curation carry no labels yet; this loader
    shares the alias map, duplicate checks, and line-numbered errors of
    ``load_pairs``.
    """
    out: list[tuple[str, str, str]] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                raise CorpusError(f"line {lineno}: malformed JSON ({e.msg})") from e
            pair_id = _lookup(record, "pair_id")
            query_text = _lookup(record, "query")
            code_text = _lookup(record, "code")
            if pair_id is None or query_text is None or code_text is None:
                raise CorpusError(f"line {lineno}: need pair_id, query, and code fields")
            pair_id = str(pair_id)
            if pair_id in seen:
                raise CorpusError(f"line {lineno}: duplicate pair_id {pair_id!r}")
            seen.add(pair_id)
            out.append((pair_id, query_text, code_text))
    return out


def load_codebase(path) -> list[CodeFunction]:
    """Read a JSONL code collection ({"code": ...} records) into parsed
    functions with content-derived ids (consistent with load_pairs)."""
    codes: list[CodeFunction] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                raise CorpusError(f"line {lineno}: malformed JSON ({e.msg})") from e
            text = _lookup(record, "code")
            if text is None:
                raise CorpusError(f"line {lineno}: missing 'code' field")
            try:
                func = make_code(text)
            except ParseError as e:
                raise CorpusError(f"line {lineno}: {e}") from e
            if func.code_id in seen:
                raise CorpusError(f"line {lineno}: duplicate code text")
            seen.add(func.code_id)
            codes.append(func)
    return codes


def save_codebase(path, codes: Iterable[CodeFunction]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for code in codes:
            f.write(json.dumps({"code": code.raw_text}, ensure_ascii=False) + "\n")


def make_splits(pairs: list[LabeledPair], spec: SplitSpec) -> dict[str, list[LabeledPair]]:
    """Seed-deterministic partition of the pairs.

    Pairs are put in pair_id order and shuffled by a seeded PRNG; search
    valid/test partitions take the first positives encountered in shuffled
    order, so they contain only label=1 pairs.
    """
    if sum(spec.counts) != len(pairs):
        raise CorpusError(
            f"partition counts sum to {sum(spec.counts)} but corpus has {len(pairs)} pairs"
        )
    ordered = sorted(pairs, key=lambda p: p.pair_id)
    rng = np.random.default_rng(spec.seed)
    shuffled = [ordered[i] for i in rng.permutation(len(ordered))]

    if spec.task == "qa":
        n_train, n_valid = spec.counts
        return {"train": shuffled[:n_train], "valid": shuffled[n_train : n_train + n_valid]}

    n_train, n_valid, n_test = spec.counts
    n_pos_needed = n_valid + n_test
    positives = [p for p in shuffled if p.label == 1]
    if len(positives) < n_pos_needed:
        raise CorpusError(
            f"need {n_pos_needed} positive pairs for valid+test, found {len(positives)}"
            f" (short by {n_pos_needed - len(positives)})"
        )
    held = positives[:n_pos_needed]
    held_ids = {p.pair_id for p in held}
    train = [p for p in shuffled if p.pair_id not in held_ids]
    return {
        "train": train,
        "valid": held[:n_valid],
        "test": held[n_valid:],
    }


def stats(corpus: Corpus) -> CorpusStats:
    """Pair/store counts and mean tokenized lengths."""
    if not corpus.pairs:
        return CorpusStats(0, 0, 0, 0.0, 0.0)
    query_lens = [len(q.tokens) for q in corpus.queries.values()]
    code_lens = [
        len(tokenize(c.raw_text, kind="code", wrap=False)) for c in corpus.codes.values()
    ]
    return CorpusStats(
        n_pairs=len(corpus.pairs),
        n_unique_queries=len(corpus.queries),
        n_unique_codes=len(corpus.codes),
        avg_query_len=float(np.mean(query_lens)),
        avg_code_len=float(np.mean(code_lens)),
    )
