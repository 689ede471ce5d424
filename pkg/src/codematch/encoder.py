"""Tokenization and the trainable reference encoder.

The reference encoder maps a token sequence to a d-dimensional vector as
``tanh(P @ mean(E[token ids]))`` where ``E`` is a token embedding table and
``P`` a square projection.  It stands in for a large pretrained sequence
encoder at desk scale: same interface (token list in, vector out, analytic
parameter gradients) so any stronger encoder can be dropped in behind it.

Mean pooling makes the encoder order-invariant over the pooled tokens; that
is a documented property of this reference implementation, not a contract
of the encoder interface.
"""

from __future__ import annotations

import re
from typing import Iterable, Sequence

import numpy as np

CLS = "[CLS]"
SEP = "[SEP]"
UNK = "[UNK]"
PAD = "[PAD]"
SPECIAL_TOKENS = (PAD, UNK, CLS, SEP)

DEFAULT_QUERY_MAX_TOKENS = 64
DEFAULT_CODE_MAX_TOKENS = 256

_QUERY_TOKEN_RE = re.compile(r"[a-z0-9]+")
_WORD_RUN_RE = re.compile(r"[A-Za-z0-9_]+")
_CAMEL_RE = re.compile(r"[A-Z]+(?=[A-Z][a-z0-9])|[A-Z]?[a-z0-9]+|[A-Z]+|[0-9]+")


def tokenize(
    text: str,
    kind: str = "query",
    max_tokens: int | None = None,
    wrap: bool = True,
) -> list[str]:
    """Lowercase and split text into tokens.

    kind="query" splits on whitespace/punctuation; kind="code" additionally
    splits snake_case and camelCase identifiers.  With wrap=True the result
    is bracketed by [CLS]/[SEP]; empty text yields just the brackets.
    """
    if kind == "query":
        toks = _QUERY_TOKEN_RE.findall(text.lower())
    elif kind == "code":
        toks = []
        for run in _WORD_RUN_RE.findall(text):
            for part in run.split("_"):
                for sub in _CAMEL_RE.findall(part):
                    toks.append(sub.lower())
    else:
        raise ValueError(f"unknown token kind: {kind!r}")
    if max_tokens is not None:
        toks = toks[:max_tokens]
    if wrap:
        return [CLS, *toks, SEP]
    return toks


class Vocabulary:
    """Token -> dense integer id map with fixed special tokens.

    Specials occupy ids 0..3 ([PAD], [UNK], [CLS], [SEP]); regular tokens
    follow, ordered by descending frequency then token for determinism.
    """

    def __init__(self, tokens: Sequence[str]):
        self._id_of: dict[str, int] = {}
        for tok in SPECIAL_TOKENS:
            self._id_of[tok] = len(self._id_of)
        for tok in tokens:
            if tok in self._id_of:
                raise ValueError(f"duplicate or special token in vocabulary: {tok!r}")
            self._id_of[tok] = len(self._id_of)
        self._token_of = {i: t for t, i in self._id_of.items()}

    @classmethod
    def from_token_lists(
        cls, token_lists: Iterable[Sequence[str]], min_freq: int = 2
    ) -> "Vocabulary":
        counts: dict[str, int] = {}
        for toks in token_lists:
            for tok in toks:
                if tok in SPECIAL_TOKENS:
                    continue
                counts[tok] = counts.get(tok, 0) + 1
        kept = sorted(
            (t for t, c in counts.items() if c >= min_freq),
            key=lambda t: (-counts[t], t),
        )
        return cls(kept)

    def __len__(self) -> int:
        return len(self._id_of)

    def __contains__(self, token: str) -> bool:
        return token in self._id_of

    def id_of(self, token: str) -> int:
        return self._id_of.get(token, self._id_of[UNK])

    def token_of(self, idx: int) -> str:
        return self._token_of[idx]

    def encode(self, tokens: Sequence[str]) -> np.ndarray:
        """Map tokens to ids; unknown tokens become [UNK], never an error."""
        unk = self._id_of[UNK]
        return np.array([self._id_of.get(t, unk) for t in tokens], dtype=np.int64)

    def to_tokens(self) -> list[str]:
        """Regular tokens in id order (specials excluded)."""
        return [self._token_of[i] for i in range(len(SPECIAL_TOKENS), len(self._id_of))]


class BagEncoder:
    """Mean-pooled token embeddings through a tanh projection.

    Parameters live in ``embedding`` (|V| x d) and ``projection`` (d x d).
    Forward/backward are pure given frozen parameters; gradient buffers are
    supplied by the caller so batches can be reduced externally.
    """

    def __init__(
        self,
        vocab: Vocabulary,
        d: int = 128,
        seed: int = 0,
        embedding: np.ndarray | None = None,
        projection: np.ndarray | None = None,
    ):
        if d < 2:
            raise ValueError(f"embedding dimension must be >= 2, got {d}")
        self.vocab = vocab
        self.d = d
        rng = np.random.default_rng(seed)
        if embedding is None:
            embedding = rng.uniform(-0.1, 0.1, size=(len(vocab), d))
        if projection is None:
            a = np.sqrt(6.0 / (d + d))
            projection = rng.uniform(-a, a, size=(d, d))
        embedding = np.asarray(embedding, dtype=np.float64)
        projection = np.asarray(projection, dtype=np.float64)
        if embedding.shape != (len(vocab), d):
            raise ValueError(
                f"embedding shape {embedding.shape} != ({len(vocab)}, {d})"
            )
        if projection.shape != (d, d):
            raise ValueError(f"projection shape {projection.shape} != ({d}, {d})")
        if not (np.isfinite(embedding).all() and np.isfinite(projection).all()):
            raise ValueError("encoder parameters must be finite")
        self.embedding = embedding
        self.projection = projection

    def params(self) -> dict[str, np.ndarray]:
        return {"embedding": self.embedding, "projection": self.projection}

    def zero_grads(self) -> dict[str, np.ndarray]:
        return {name: np.zeros_like(arr) for name, arr in self.params().items()}

    def forward_batch(self, ids_list: Sequence[np.ndarray]):
        """Encode a batch of id sequences; returns (vectors, cache)."""
        n = len(ids_list)
        if n == 0:
            raise ValueError("empty batch")
        lengths = np.array([len(ids) for ids in ids_list], dtype=np.int64)
        if (lengths == 0).any():
            raise ValueError("token sequences must be nonempty")
        # per-sequence id sort fixes the summation order, making the pooled
        # mean bitwise invariant under token permutation
        flat = np.concatenate(
            [np.sort(np.asarray(ids, dtype=np.int64)) for ids in ids_list]
        )
        seg = np.repeat(np.arange(n), lengths)
        pooled = np.zeros((n, self.d))
        np.add.at(pooled, seg, self.embedding[flat])
        pooled /= lengths[:, None]
        vecs = np.tanh(pooled @ self.projection.T)
        cache = (flat, seg, lengths, pooled, vecs)
        return vecs, cache

    def backward_batch(self, cache, upstream: np.ndarray, grads: dict[str, np.ndarray]):
        """Accumulate d(loss)/d(params) given d(loss)/d(vectors)."""
        flat, seg, lengths, pooled, vecs = cache
        upstream = np.asarray(upstream, dtype=np.float64)
        if upstream.shape != vecs.shape:
            raise ValueError(f"upstream shape {upstream.shape} != {vecs.shape}")
        dz = upstream * (1.0 - vecs * vecs)
        grads["projection"] += dz.T @ pooled
        dpooled = dz @ self.projection
        contrib = dpooled / lengths[:, None]
        np.add.at(grads["embedding"], flat, contrib[seg])

    def encode(self, tokens: Sequence[str]) -> np.ndarray:
        """Encode one token sequence to a d-vector."""
        if len(tokens) == 0:
            raise ValueError("cannot encode an empty token sequence")
        vecs, _ = self.forward_batch([self.vocab.encode(tokens)])
        return vecs[0]

    def encode_gradient(
        self, tokens: Sequence[str], upstream: np.ndarray
    ) -> dict[str, np.ndarray]:
        """Analytic parameter gradients of ``upstream . encode(tokens)``."""
        if len(tokens) == 0:
            raise ValueError("cannot encode an empty token sequence")
        upstream = np.asarray(upstream, dtype=np.float64)
        if upstream.shape != (self.d,):
            raise ValueError(f"upstream must have shape ({self.d},), got {upstream.shape}")
        _, cache = self.forward_batch([self.vocab.encode(tokens)])
        grads = self.zero_grads()
        self.backward_batch(cache, upstream[None, :], grads)
        return grads
