"""Single-file JSON checkpoint for the matcher model.

Layout (all one JSON object):

    {
      "magic": "codematch-checkpoint",
      "version": 1,
      "d": <embedding dimension>,
      "vocab_size": <|V| including specials>,
      "config": {...estimator hyperparameters...},
      "vocab": [...regular tokens in id order...],
      "encoder": {"embedding": [[...]], "projection": [[...]]},
      "matcher": {"w1": [[...]], "w2": [[...]]}
    }

Serialization is canonical (sorted keys, fixed separators, repr floats),
so identical models produce byte-identical files.
"""

from __future__ import annotations

import json

import numpy as np

MAGIC = "codematch-checkpoint"
VERSION = 1


def dumps_canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def save_checkpoint(path, *, d, vocab_tokens, encoder_params, matcher_params, config):
    state = {
        "magic": MAGIC,
        "version": VERSION,
        "d": int(d),
        "vocab_size": len(vocab_tokens) + 4,
        "config": config,
        "vocab": list(vocab_tokens),
        "encoder": {k: np.asarray(v).tolist() for k, v in encoder_params.items()},
        "matcher": {k: np.asarray(v).tolist() for k, v in matcher_params.items()},
    }
    with open(path, "w", encoding="utf-8") as f:
        f.write(dumps_canonical(state))
        f.write("\n")


def load_checkpoint(path) -> dict:
    with open(path, encoding="utf-8") as f:
        state = json.load(f)
    if state.get("magic") != MAGIC:
        raise ValueError(f"not a codematch checkpoint: {path}")
    if state.get("version") != VERSION:
        raise ValueError(f"unsupported checkpoint version: {state.get('version')}")
    state["encoder"] = {k: np.asarray(v, dtype=np.float64) for k, v in state["encoder"].items()}
    state["matcher"] = {k: np.asarray(v, dtype=np.float64) for k, v in state["matcher"].items()}
    return state
