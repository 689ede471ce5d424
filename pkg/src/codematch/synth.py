"""Synthetic query-code corpus with a controlled, docstring-borne signal.

Every example owns a small "topic" of content words.  A positive pair
shares at least two topic words between the query and the code's
docstring; a negative pair shares none.  Content words never appear in
function headers or bodies, and the query filler / docstring template
vocabularies are disjoint from the content pool and from each other, so:

  * token overlap separates positives from negatives (learnable signal),
  * stripping docstrings removes the entire signal,
  * negatives share zero tokens between query and code.

That makes learning claims testable without any external corpus.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Corpus, add_pair
from .funcparse import CodeFunction

CONTENT_WORDS = [
    "parse", "json", "xml", "csv", "yaml", "html", "url", "path", "string", "integer",
    "float", "decimal", "binary", "hex", "hash", "digest", "checksum", "token", "regex", "pattern",
    "match", "search", "replace", "split", "join", "merge", "sort", "filter", "reduce", "map",
    "fold", "zip", "unzip", "batch", "chunk", "slice", "index", "key", "cache", "queue",
    "stack", "heap", "tree", "graph", "node", "edge", "matrix", "vector", "tensor", "array",
    "list", "tuple", "dict", "set", "frozen", "counter", "buffer", "stream", "socket", "packet",
    "header", "payload", "request", "response", "session", "cookie", "agent", "proxy", "client", "server",
    "database", "table", "row", "column", "schema", "record", "cursor", "transaction", "commit", "rollback",
    "thread", "process", "lock", "mutex", "signal", "event", "timer", "clock", "date", "time",
    "zone", "calendar", "epoch", "duration", "interval", "random", "sample", "shuffle", "seed", "noise",
    "mean", "median", "mode", "variance", "deviation", "percentile", "histogram", "density", "gradient", "slope",
    "image", "pixel", "color", "palette", "contrast", "brightness", "crop", "resize", "rotate", "flip",
    "audio", "frequency", "amplitude", "wave", "spectrum", "email", "address", "domain", "resolve", "encode",
    "decode", "compress", "archive", "extract", "encrypt", "decrypt", "cipher", "password", "salt", "permission",
    "directory", "folder", "glob", "walk", "copy", "move", "rename", "delete", "create", "append",
]

QUERY_FILLER = [
    "python", "how", "to", "in", "a", "get", "make", "using",
    "with", "code", "script", "example", "best", "way",
]

DOC_TEMPLATES = [
    "Return the {0} {1} of the given {2} input.",
    "Compute the {0} {1} for the provided {2} value.",
    "Apply the {0} {2} and return the {1} result.",
]

BODY_VARIANTS = [
    "    out = arg\n    return out\n",
    "    result = arg\n    return result\n",
    "    out = arg\n    out = out\n    return out\n",
]


@dataclass(frozen=True)
class SynthConfig:
    n_train: int = 2000
    n_valid: int = 0
    n_test: int = 200
    pos_fraction: float = 0.6
    seed: int = 0

    def __post_init__(self):
        if min(self.n_train, self.n_valid, self.n_test) < 0:
            raise ValueError("split sizes must be nonnegative")
        if not 0.0 < self.pos_fraction <= 1.0:
            raise ValueError("pos_fraction must lie in (0, 1]")


@dataclass
class SynthCorpus:
    train: Corpus
    valid: Corpus
    test: Corpus

    def test_codebase(self) -> list[CodeFunction]:
        return list(self.test.codes.values())


def _make_query(topic, rng: np.random.Generator, full_topic: bool = False) -> str:
    n_topic = len(topic) if full_topic else int(rng.integers(2, len(topic) + 1))
    chosen = list(rng.choice(topic, size=n_topic, replace=False))
    n_fill = int(rng.integers(2, 5))
    words = list(rng.choice(QUERY_FILLER, size=n_fill, replace=False)) + chosen
    rng.shuffle(words)
    return " ".join(words)


def _make_code(topic, idx: int, rng: np.random.Generator) -> str:
    template = DOC_TEMPLATES[int(rng.integers(len(DOC_TEMPLATES)))]
    doc = template.format(*topic)
    body = BODY_VARIANTS[int(rng.integers(len(BODY_VARIANTS)))]
    return f'def helper_{idx}(arg):\n    """{doc}"""\n{body}'


def _fresh_topic(rng: np.random.Generator, used_pairs: set | None):
    """Sample a 3-word topic; with ``used_pairs`` the topic is rejection
    sampled until it shares at most one word with every earlier topic."""
    while True:
        topic = sorted(rng.choice(CONTENT_WORDS, size=3, replace=False))
        if used_pairs is None:
            return topic
        pairs = {(topic[0], topic[1]), (topic[0], topic[2]), (topic[1], topic[2])}
        if not pairs & used_pairs:
            used_pairs |= pairs
            return topic


def _fill(corpus: Corpus, prefix: str, n: int, pos_fraction: float,
          rng: np.random.Generator, start_idx: int, ranked: bool) -> int:
    """ranked=True builds an all-positive split whose codes form a search
    codebase: topics are kept pairwise distinct (no two codes share two
    words) and the query carries the full topic, so every query has one
    uniquely best code."""
    used_pairs: set | None = set() if ranked else None
    idx = start_idx
    for i in range(n):
        positive = ranked or rng.random() < pos_fraction
        if positive:
            topic = _fresh_topic(rng, used_pairs)
            query = _make_query(topic, rng, full_topic=ranked)
            code = _make_code(topic, idx, rng)
        else:
            words = list(rng.choice(CONTENT_WORDS, size=6, replace=False))
            query = _make_query(words[:3], rng)
            code = _make_code(words[3:], idx, rng)
        add_pair(corpus, f"{prefix}-{i:06d}", query, code, 1 if positive else 0)
        idx += 1
    return idx


def generate(config: SynthConfig) -> SynthCorpus:
    """Deterministic synthetic corpus; test pairs are all positive with
    one distinct code each (the test codes double as the search codebase)."""
    rng = np.random.default_rng(config.seed)
    train, valid, test = Corpus(), Corpus(), Corpus()
    idx = 0
    idx = _fill(train, "tr", config.n_train, config.pos_fraction, rng, idx, False)
    idx = _fill(valid, "va", config.n_valid, 1.0, rng, idx, True)
    _fill(test, "te", config.n_test, 1.0, rng, idx, True)
    return SynthCorpus(train=train, valid=valid, test=test)
