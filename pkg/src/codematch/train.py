"""Batch assembly, the combined training objective, and the training loop.

The batch objective averages per-example losses: every example contributes
its labeled base loss; with in-batch augmentation enabled it is also pushed
away from the other codes in the batch; with query-rewritten augmentation
enabled each positive example additionally contributes the loss of a
rewritten-query copy (treated as positive, contrasted in-batch the same
way).  Gradients flow analytically into the encoder and the relation head.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .encoder import CLS, SEP, BagEncoder
from .losses import (
    REWRITE_MODES,
    loss_base_from_logit,
    loss_inbatch_from_logits,
    rewrite_query,
)
from .matcher import MatcherHead, sigmoid


class TrainingDiverged(RuntimeError):
    """Loss became non-finite; carries the last finite checkpoint."""

    def __init__(self, message: str, checkpoint: dict):
        super().__init__(message)
        self.checkpoint = checkpoint


@dataclass
class TrainConfig:
    batch_size: int = 32
    learning_rate: float = 0.02
    warmup: float = 0.1
    epochs: int = 10
    seed: int = 0
    enable_iba: bool = True
    enable_qra: bool = True
    qra_mode: str = "switch"
    weight_decay: float = 0.01
    valid_metric: str = "mrr"

    def __post_init__(self):
        if self.batch_size < 2:
            raise ValueError("batch size must be >= 2")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if not 0.0 <= self.warmup <= 1.0:
            raise ValueError("warmup fraction must lie in [0, 1]")
        if self.epochs < 0:
            raise ValueError("epochs must be nonnegative")
        if self.qra_mode not in REWRITE_MODES:
            raise ValueError(f"qra_mode must be one of {REWRITE_MODES}")
        if self.valid_metric not in ("mrr", "accuracy"):
            raise ValueError("valid_metric must be 'mrr' or 'accuracy'")

    @classmethod
    def from_json(cls, path) -> "TrainConfig":
        with open(path, encoding="utf-8") as f:
            return cls(**json.load(f))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TrainExample:
    """One pre-tokenized training pair."""

    query_tokens: list[str]  # plain words, used for rewriting
    query_ids: np.ndarray  # wrapped ids
    code_ids: np.ndarray  # wrapped ids
    label: int


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    valid_metric: float | None = None


@dataclass
class TrainResult:
    params: dict[str, np.ndarray]
    history: list[EpochStats] = field(default_factory=list)
    best_epoch: int | None = None


def snapshot_params(encoder: BagEncoder, matcher: MatcherHead) -> dict[str, np.ndarray]:
    out = {}
    for name, arr in encoder.params().items():
        out[f"encoder.{name}"] = arr.copy()
    for name, arr in matcher.params().items():
        out[f"matcher.{name}"] = arr.copy()
    return out


def restore_params(
    encoder: BagEncoder, matcher: MatcherHead, params: dict[str, np.ndarray]
) -> None:
    for name, arr in encoder.params().items():
        arr[...] = params[f"encoder.{name}"]
    for name, arr in matcher.params().items():
        arr[...] = params[f"matcher.{name}"]


def batch_loss_and_grads(
    examples: list[TrainExample],
    rewritten_ids: list[np.ndarray | None],
    encoder: BagEncoder,
    matcher: MatcherHead,
    enable_iba: bool,
    enable_qra: bool,
):
    """Mean per-example loss over the batch plus parameter gradients.

    ``rewritten_ids`` aligns with ``examples``; entries are None for
    negatives, skipped rewrites, or when rewriting is disabled.  Returns
    (loss, grads) where grads keys are ``encoder.*`` and ``matcher.*``.
    """
    n = len(examples)
    if n == 0:
        raise ValueError("empty batch")
    labels = np.array([ex.label for ex in examples], dtype=np.int64)

    q_vecs, q_cache = encoder.forward_batch([ex.query_ids for ex in examples])
    c_vecs, c_cache = encoder.forward_batch([ex.code_ids for ex in examples])

    enc_grads = encoder.zero_grads()
    mat_grads = matcher.zero_grads()

    use_iba = enable_iba and n >= 2
    per_example = np.zeros(n)

    if use_iba or (enable_qra and n >= 2):
        full_rows = True
    else:
        full_rows = False

    if full_rows:
        # score every query against every code in the batch
        q_rep = np.repeat(q_vecs, n, axis=0)
        c_tile = np.tile(c_vecs, (n, 1))
        _, logits_flat, cache = matcher.forward_pairs(q_rep, c_tile)
        logits = logits_flat.reshape(n, n)
        d_logits = np.zeros((n, n))
        diag = np.arange(n)
        base_terms = np.array(
            [loss_base_from_logit(logits[i, i], int(labels[i])) for i in range(n)]
        )
        per_example += base_terms
        d_logits[diag, diag] += sigmoid(logits[diag, diag]) - labels
        if use_iba:
            ib_terms = np.array(
                [loss_inbatch_from_logits(logits[i], i) for i in range(n)]
            )
            per_example += ib_terms
            off = sigmoid(logits) / (n - 1)
            off[diag, diag] = 0.0
            d_logits += off
        d_q_rep, d_c_tile = matcher.backward_from_logits(
            cache, d_logits.reshape(-1) / n, mat_grads
        )
        d_q = d_q_rep.reshape(n, n, -1).sum(axis=1)
        d_c = d_c_tile.reshape(n, n, -1).sum(axis=0)
    else:
        # only the aligned diagonal pairs are needed
        _, logits_diag, cache = matcher.forward_pairs(q_vecs, c_vecs)
        base_terms = np.array(
            [loss_base_from_logit(logits_diag[i], int(labels[i])) for i in range(n)]
        )
        per_example += base_terms
        d_diag = (sigmoid(logits_diag) - labels) / n
        d_q, d_c = matcher.backward_from_logits(cache, d_diag, mat_grads)

    if enable_qra and n >= 2:
        rows = [i for i in range(n) if labels[i] == 1 and rewritten_ids[i] is not None]
        if rows:
            qp_vecs, qp_cache = encoder.forward_batch([rewritten_ids[i] for i in rows])
            k = len(rows)
            qp_rep = np.repeat(qp_vecs, n, axis=0)
            cp_tile = np.tile(c_vecs, (k, 1))
            _, logits_p_flat, cache_p = matcher.forward_pairs(qp_rep, cp_tile)
            logits_p = logits_p_flat.reshape(k, n)
            d_logits_p = np.zeros((k, n))
            for r, i in enumerate(rows):
                per_example[i] += loss_base_from_logit(logits_p[r, i], 1)
                per_example[i] += loss_inbatch_from_logits(logits_p[r], i)
                row_sig = sigmoid(logits_p[r])
                d_row = row_sig / (n - 1)
                d_row[i] = row_sig[i] - 1.0
                d_logits_p[r] = d_row
            d_qp_rep, d_cp_tile = matcher.backward_from_logits(
                cache_p, d_logits_p.reshape(-1) / n, mat_grads
            )
            d_qp = d_qp_rep.reshape(k, n, -1).sum(axis=1)
            d_c += d_cp_tile.reshape(k, n, -1).sum(axis=0)
            encoder.backward_batch(qp_cache, d_qp, enc_grads)

    encoder.backward_batch(q_cache, d_q, enc_grads)
    encoder.backward_batch(c_cache, d_c, enc_grads)

    loss = float(np.mean(per_example))
    grads = {f"encoder.{k}": v for k, v in enc_grads.items()}
    grads.update({f"matcher.{k}": v for k, v in mat_grads.items()})
    return loss, grads


def prepare_rewrites(
    examples: list[TrainExample],
    mode: str,
    rng: np.random.Generator,
    encoder: BagEncoder,
) -> list[np.ndarray | None]:
    """Draw one rewrite per positive example; None where skipped."""
    out: list[np.ndarray | None] = []
    for ex in examples:
        if ex.label != 1:
            out.append(None)
            continue
        rewritten = rewrite_query(ex.query_tokens, mode, rng)
        if rewritten is None:
            out.append(None)
        else:
            out.append(encoder.vocab.encode([CLS, *rewritten, SEP]))
    return out


def train(
    config: TrainConfig,
    examples: list[TrainExample],
    encoder: BagEncoder,
    matcher: MatcherHead,
    valid_fn=None,
) -> TrainResult:
    """Run the optimization loop; returns the best (or final) parameters.

    ``valid_fn(encoder, matcher) -> float`` is evaluated after each epoch
    when given; the checkpoint with the highest value wins (ties go to the
    earlier epoch).  Without it the final parameters are returned.
    Divergence (non-finite loss) raises TrainingDiverged carrying the last
    finite epoch-end parameters.
    """
    if not examples:
        raise ValueError("no training examples")
    from .optim import AdamW

    # independent streams: toggling augmentation must not reshuffle batches
    shuffle_seed, rewrite_seed = np.random.SeedSequence(config.seed).generate_state(2)
    shuffle_rng = np.random.default_rng(shuffle_seed)
    rewrite_rng = np.random.default_rng(rewrite_seed)
    n_batches = max(1, (len(examples) + config.batch_size - 1) // config.batch_size)
    opt = AdamW(
        {**{f"encoder.{k}": v for k, v in encoder.params().items()},
         **{f"matcher.{k}": v for k, v in matcher.params().items()}},
        lr=config.learning_rate,
        weight_decay=config.weight_decay,
        total_steps=config.epochs * n_batches,
        warmup=config.warmup,
    )

    history: list[EpochStats] = []
    last_good = snapshot_params(encoder, matcher)
    best_params = None
    best_metric = None
    best_epoch = None

    for epoch in range(config.epochs):
        order = shuffle_rng.permutation(len(examples))
        epoch_losses = []
        for start in range(0, len(order), config.batch_size):
            idx = order[start : start + config.batch_size]
            batch = [examples[i] for i in idx]
            if config.enable_qra:
                rewritten = prepare_rewrites(batch, config.qra_mode, rewrite_rng, encoder)
            else:
                rewritten = [None] * len(batch)
            loss, grads = batch_loss_and_grads(
                batch,
                rewritten,
                encoder,
                matcher,
                enable_iba=config.enable_iba,
                enable_qra=config.enable_qra,
            )
            if not np.isfinite(loss):
                raise TrainingDiverged(
                    f"non-finite loss at epoch {epoch}, step {start // config.batch_size}",
                    last_good,
                )
            opt.step(grads)
            epoch_losses.append(loss)
        last_good = snapshot_params(encoder, matcher)
        metric = None
        if valid_fn is not None:
            metric = float(valid_fn(encoder, matcher))
            if best_metric is None or metric > best_metric:
                best_metric = metric
                best_params = last_good
                best_epoch = epoch
        history.append(EpochStats(epoch, float(np.mean(epoch_losses)), metric))

    if best_params is not None:
        restore_params(encoder, matcher, best_params)
        return TrainResult(best_params, history, best_epoch)
    return TrainResult(snapshot_params(encoder, matcher), history, None)
