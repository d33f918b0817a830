"""Pretraining loop: AdamW with linear warmup, logged loss trajectory,
checkpoints as plain dicts."""

from __future__ import annotations

import math
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np
import torch

from . import shards
from .model import LN2, ModelConfig, TinyLM, TrainConfig, eval_bits, next_token_loss_nats


def _lr_at(step: int, cfg: TrainConfig) -> float:
    warm = max(cfg.warmup_steps, 1)
    scale = min((step + 1) / warm, 1.0)
    if cfg.schedule == "warmup-cosine" and step >= cfg.warmup_steps:
        progress = (step - cfg.warmup_steps) / max(cfg.steps - cfg.warmup_steps, 1)
        scale *= 0.1 + 0.9 * 0.5 * (1.0 + math.cos(math.pi * progress))
    elif cfg.schedule not in ("warmup-constant", "warmup-cosine"):
        raise ValueError(f"unknown schedule {cfg.schedule!r}")
    return cfg.lr * scale


def split_sequences(seqs: torch.Tensor, n_eval: int):
    if n_eval == 0:
        return seqs, seqs[:0]
    n_eval = min(n_eval, max(seqs.shape[0] // 10, 1))
    return seqs[:-n_eval], seqs[-n_eval:]


def train_model(
    model: TinyLM,
    sequences: torch.Tensor,
    train_cfg: TrainConfig,
    log_every: int = 100,
) -> dict:
    """Run the loop over pre-chunked sequences; returns the training log."""
    if train_cfg.deterministic:
        torch.use_deterministic_algorithms(True)
    train_seqs, eval_seqs = split_sequences(sequences, train_cfg.eval_sequences)
    opt = torch.optim.AdamW(
        model.parameters(), lr=train_cfg.lr, weight_decay=train_cfg.weight_decay
    )
    sampler = torch.Generator().manual_seed(train_cfg.seed)
    history = []
    t0 = time.time()
    for step in range(train_cfg.steps):
        lr = _lr_at(step, train_cfg)
        for group in opt.param_groups:
            group["lr"] = lr
        idx = torch.randint(0, train_seqs.shape[0], (train_cfg.batch_size,),
                            generator=sampler)
        loss = next_token_loss_nats(model, train_seqs[idx])
        opt.zero_grad()
        loss.backward()
        opt.step()
        if (step + 1) % log_every == 0 or step + 1 == train_cfg.steps:
            history.append(
                {"step": step + 1, "train_bits": float(loss.detach()) / LN2, "lr": lr}
            )
    final_bits = (
        eval_bits(model, eval_seqs) if train_cfg.steps > 0 and eval_seqs.shape[0] else None
    )
    return {
        "loss_history": history,
        "eval_bits": final_bits,
        "wall_seconds": time.time() - t0,
        "train_sequences": int(train_seqs.shape[0]),
        "eval_sequences": int(eval_seqs.shape[0]),
    }


def pretrain(manifest_path, model_cfg: ModelConfig, train_cfg: TrainConfig) -> dict:
    """Pretrain on a formal corpus; returns a checkpoint dict.

    With steps=0 the checkpoint is exactly the seeded initialization.
    """
    manifest = shards.load_manifest(manifest_path)
    corpus_vocab = shards.vocab_size(manifest)
    if model_cfg.vocab_size < corpus_vocab:
        raise ValueError(
            f"model vocab {model_cfg.vocab_size} smaller than corpus vocab {corpus_vocab}"
        )
    if model_cfg.max_seq_len != manifest["seq_len"]:
        raise ValueError(
            f"model max_seq_len {model_cfg.max_seq_len} != corpus seq_len "
            f"{manifest['seq_len']}"
        )
    tokens = shards.read_tokens(manifest)
    seqs = torch.from_numpy(shards.sequence_matrix(tokens, model_cfg.max_seq_len))
    model = TinyLM(model_cfg)
    if train_cfg.steps > 0:
        log = train_model(model, seqs, train_cfg)
    else:
        log = {"loss_history": [], "eval_bits": None, "wall_seconds": 0.0}
    return {
        "model_state": {k: v.clone() for k, v in model.state_dict().items()},
        "model_cfg": asdict(model_cfg),
        "train_cfg": asdict(train_cfg),
        "log": log,
        "corpus": {
            "manifest": str(manifest_path),
            "family": manifest["language_spec"]["family"],
            "total_tokens": manifest["total_tokens"],
            "seed": manifest["seed"],
        },
    }


def pretrain_on_sequences(seqs: torch.Tensor, model_cfg: ModelConfig,
                          train_cfg: TrainConfig, source: str) -> dict:
    """Pretrain on an explicit sequence matrix (the text-control condition)."""
    model = TinyLM(model_cfg)
    log = train_model(model, seqs, train_cfg) if train_cfg.steps > 0 else {
        "loss_history": [], "eval_bits": None, "wall_seconds": 0.0}
    return {
        "model_state": {k: v.clone() for k, v in model.state_dict().items()},
        "model_cfg": asdict(model_cfg),
        "train_cfg": asdict(train_cfg),
        "log": log,
        "corpus": {"manifest": source, "family": "text-control"},
    }


def load_model(checkpoint: dict) -> TinyLM:
    cfg = ModelConfig(**checkpoint["model_cfg"])
    model = TinyLM(cfg)
    model.load_state_dict(checkpoint["model_state"])
    return model


def save_checkpoint(checkpoint: dict, path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    torch.save(checkpoint, path)


def load_checkpoint(path) -> dict:
    return torch.load(path, weights_only=False)
