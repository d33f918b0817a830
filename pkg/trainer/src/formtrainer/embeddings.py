"""Vocabulary transfer by embedding-row resampling.

The new embedding table's rows are drawn i.i.d. uniformly with replacement
from the old table's rows; every other parameter is copied bit for bit.  The
output head stays tied to the resampled table.
"""

from __future__ import annotations

import torch

from .model import ModelConfig


def resample_embeddings(checkpoint: dict, new_vocab_size: int, seed: int) -> dict:
    """New checkpoint whose embedding table has new_vocab_size resampled rows."""
    if new_vocab_size < 1:
        raise ValueError(f"new_vocab_size must be >= 1, got {new_vocab_size}")
    state = checkpoint["model_state"]
    old = state["wte.weight"]
    gen = torch.Generator().manual_seed(seed)
    rows = torch.randint(0, old.shape[0], (new_vocab_size,), generator=gen)
    new_table = old[rows].clone()

    new_state = {}
    for key, tensor in state.items():
        if key in ("wte.weight", "head.weight"):
            new_state[key] = new_table
        else:
            new_state[key] = tensor.clone()

    cfg = dict(checkpoint["model_cfg"])
    cfg["vocab_size"] = int(new_vocab_size)
    ModelConfig(**cfg)  # validate
    return {
        **checkpoint,
        "model_state": new_state,
        "model_cfg": cfg,
        "resampled_from": {
            "old_vocab_size": int(old.shape[0]),
            "seed": int(seed),
            "source_rows": rows,
        },
    }
