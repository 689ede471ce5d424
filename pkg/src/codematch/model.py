"""sklearn-style estimator tying together tokenizer, encoder, and matcher.

``ContrastiveMatcher`` learns from (query_text, code_text) pairs with
binary labels.  fit() builds a vocabulary from the training texts, trains
the reference encoder plus the relation head under the combined objective,
and keeps the learned state on ``*_``-suffixed attributes, so the class
plays well with sklearn tooling (get_params/set_params/clone).
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from . import checkpoint as ckpt
from .encoder import (
    CLS,
    DEFAULT_CODE_MAX_TOKENS,
    DEFAULT_QUERY_MAX_TOKENS,
    SEP,
    BagEncoder,
    Vocabulary,
    tokenize,
)
from .matcher import MatcherHead
from .train import TrainConfig, TrainExample, train
from .validation import check_text_pairs, check_xy


class NotFittedError(RuntimeError):
    pass


class ContrastiveMatcher(BaseEstimator):
    """Trainable query-code matcher with contrastive augmentation losses."""

    def __init__(
        self,
        d: int = 128,
        batch_size: int = 32,
        learning_rate: float = 0.02,
        warmup: float = 0.1,
        epochs: int = 10,
        seed: int = 0,
        enable_iba: bool = True,
        enable_qra: bool = True,
        qra_mode: str = "switch",
        weight_decay: float = 0.01,
        min_token_freq: int = 2,
        max_query_tokens: int = DEFAULT_QUERY_MAX_TOKENS,
        max_code_tokens: int = DEFAULT_CODE_MAX_TOKENS,
        valid_metric: str = "mrr",
    ):
        self.d = d
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.warmup = warmup
        self.epochs = epochs
        self.seed = seed
        self.enable_iba = enable_iba
        self.enable_qra = enable_qra
        self.qra_mode = qra_mode
        self.weight_decay = weight_decay
        self.min_token_freq = min_token_freq
        self.max_query_tokens = max_query_tokens
        self.max_code_tokens = max_code_tokens
        self.valid_metric = valid_metric

    # -- fitting -----------------------------------------------------------

    def _train_config(self) -> TrainConfig:
        return TrainConfig(
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            warmup=self.warmup,
            epochs=self.epochs,
            seed=self.seed,
            enable_iba=self.enable_iba,
            enable_qra=self.enable_qra,
            qra_mode=self.qra_mode,
            weight_decay=self.weight_decay,
            valid_metric=self.valid_metric,
        )

    def _query_tokens(self, text: str) -> list[str]:
        return tokenize(text, kind="query", max_tokens=self.max_query_tokens, wrap=False)

    def _code_tokens(self, text: str) -> list[str]:
        return tokenize(text, kind="code", max_tokens=self.max_code_tokens, wrap=False)

    def fit(self, X, y, valid=None, init_params=None):
        """Train on (query, code) text pairs with 0/1 labels.

        ``valid`` is an optional (X_valid, y_valid) tuple scored per epoch
        with the configured metric; the best epoch's parameters win.  For
        the "mrr" metric the validation codebase is the set of distinct
        valid codes and only positive pairs are ranked.  ``init_params``
        warm-starts from a parameter snapshot (advanced use).
        """
        config = self._train_config()
        pairs, labels = check_xy(X, y)
        if not pairs:
            raise ValueError("cannot fit on an empty training set")

        token_lists = [self._query_tokens(q) for q, _ in pairs]
        code_token_lists = [self._code_tokens(c) for _, c in pairs]
        vocab = Vocabulary.from_token_lists(
            token_lists + code_token_lists, min_freq=self.min_token_freq
        )

        seeds = np.random.SeedSequence(config.seed).generate_state(2)
        encoder = BagEncoder(vocab, d=self.d, seed=int(seeds[0]))
        matcher = MatcherHead(self.d, seed=int(seeds[1]))
        if init_params is not None:
            from .train import restore_params

            restore_params(encoder, matcher, init_params)

        examples = [
            TrainExample(
                query_tokens=q_toks,
                query_ids=vocab.encode([CLS, *q_toks, SEP]),
                code_ids=vocab.encode([CLS, *c_toks, SEP]),
                label=int(lbl),
            )
            for q_toks, c_toks, lbl in zip(token_lists, code_token_lists, labels)
        ]

        valid_fn = None
        if valid is not None:
            valid_fn = self._make_valid_fn(valid, vocab)

        self.vocab_ = vocab
        self.encoder_ = encoder
        self.matcher_ = matcher
        result = train(config, examples, encoder, matcher, valid_fn=valid_fn)
        self.history_ = result.history
        self.best_epoch_ = result.best_epoch
        return self

    def _make_valid_fn(self, valid, vocab):
        X_valid, y_valid = valid
        v_pairs, v_labels = check_xy(X_valid, y_valid)

        if self.valid_metric == "accuracy":

            def acc_fn(encoder, matcher):
                scores = self._score_with(encoder, matcher, v_pairs, vocab)
                return float(np.mean((scores >= 0.5).astype(int) == v_labels))

            return acc_fn

        positives = [(q, c) for (q, c), lbl in zip(v_pairs, v_labels) if lbl == 1]
        if not positives:
            raise ValueError("mrr validation needs at least one positive pair")
        code_texts = sorted({c for _, c in positives})
        code_index = {c: i for i, c in enumerate(code_texts)}

        def mrr_fn(encoder, matcher):
            mat = self._matrix_with(
                encoder, matcher, [q for q, _ in positives], code_texts, vocab
            )
            rr = 0.0
            for row, (_, gold) in zip(mat, positives):
                order = np.argsort(-row, kind="stable")
                rank = int(np.nonzero(order == code_index[gold])[0][0]) + 1
                rr += 1.0 / rank
            return rr / len(positives)

        return mrr_fn

    # -- scoring -----------------------------------------------------------

    def _require_fitted(self):
        if not hasattr(self, "matcher_"):
            raise NotFittedError("this ContrastiveMatcher is not fitted yet")

    def _encode_queries(self, encoder, texts, vocab):
        ids = [
            vocab.encode([CLS, *self._query_tokens(t), SEP]) for t in texts
        ]
        vecs, _ = encoder.forward_batch(ids)
        return vecs

    def _encode_codes(self, encoder, texts, vocab):
        ids = [vocab.encode([CLS, *self._code_tokens(t), SEP]) for t in texts]
        vecs, _ = encoder.forward_batch(ids)
        return vecs

    def _score_with(self, encoder, matcher, pairs, vocab) -> np.ndarray:
        q_vecs = self._encode_queries(encoder, [q for q, _ in pairs], vocab)
        c_vecs = self._encode_codes(encoder, [c for _, c in pairs], vocab)
        scores, _, _ = matcher.forward_pairs(q_vecs, c_vecs)
        return scores

    def _matrix_with(self, encoder, matcher, query_texts, code_texts, vocab) -> np.ndarray:
        q_vecs = self._encode_queries(encoder, query_texts, vocab)
        c_vecs = self._encode_codes(encoder, code_texts, vocab)
        nq, nc = len(query_texts), len(code_texts)
        q_rep = np.repeat(q_vecs, nc, axis=0)
        c_tile = np.tile(c_vecs, (nq, 1))
        scores, _, _ = matcher.forward_pairs(q_rep, c_tile)
        return scores.reshape(nq, nc)

    def score_pairs(self, X) -> np.ndarray:
        """Match scores in (0, 1) for (query, code) text pairs."""
        self._require_fitted()
        pairs = check_text_pairs(X)
        return self._score_with(self.encoder_, self.matcher_, pairs, self.vocab_)

    def score_matrix(self, query_texts, code_texts) -> np.ndarray:
        """(n_queries, n_codes) score matrix; each side is encoded once."""
        self._require_fitted()
        return self._matrix_with(
            self.encoder_, self.matcher_, list(query_texts), list(code_texts), self.vocab_
        )

    def predict_proba(self, X) -> np.ndarray:
        s = self.score_pairs(X)
        return np.column_stack([1.0 - s, s])

    def predict(self, X) -> np.ndarray:
        return (self.score_pairs(X) >= 0.5).astype(np.int64)

    def embed_query(self, text: str) -> np.ndarray:
        self._require_fitted()
        return self._encode_queries(self.encoder_, [text], self.vocab_)[0]

    def embed_code(self, text: str) -> np.ndarray:
        self._require_fitted()
        return self._encode_codes(self.encoder_, [text], self.vocab_)[0]

    # -- persistence ---------------------------------------------------------

    def save(self, path) -> None:
        self._require_fitted()
        ckpt.save_checkpoint(
            path,
            d=self.d,
            vocab_tokens=self.vocab_.to_tokens(),
            encoder_params=self.encoder_.params(),
            matcher_params=self.matcher_.params(),
            config=self.get_params(),
        )

    @classmethod
    def load(cls, path) -> "ContrastiveMatcher":
        state = ckpt.load_checkpoint(path)
        model = cls(**state["config"])
        vocab = Vocabulary(state["vocab"])
        model.vocab_ = vocab
        model.encoder_ = BagEncoder(
            vocab,
            d=state["d"],
            embedding=state["encoder"]["embedding"],
            projection=state["encoder"]["projection"],
        )
        model.matcher_ = MatcherHead(
            state["d"], w1=state["matcher"]["w1"], w2=state["matcher"]["w2"]
        )
        model.history_ = []
        model.best_epoch_ = None
        return model
