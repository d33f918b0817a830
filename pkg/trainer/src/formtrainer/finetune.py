"""Fine-tuning on byte-level text and held-out perplexity evaluation."""

from __future__ import annotations

import math
from dataclasses import replace

import numpy as np
import torch
from scipy import stats

from .model import LN2, TrainConfig, eval_bits
from .train import load_model, train_model

BYTE_VOCAB = 256


def encode_bytes(text: str) -> np.ndarray:
    return np.frombuffer(text.encode("utf-8"), dtype=np.uint8)


def byte_sequences(text: str, seq_len: int) -> torch.Tensor:
    data = encode_bytes(text)
    n = data.shape[0] // seq_len
    if n < 10:
        raise ValueError(f"text too small: {data.shape[0]} bytes at seq_len {seq_len}")
    return torch.from_numpy(data[: n * seq_len].astype(np.int64).reshape(n, seq_len))


def confidence_halfwidth(values: list[float], level: float = 0.95) -> float:
    if len(values) < 2:
        return 0.0
    sd = float(np.std(values, ddof=1))
    t = stats.t.ppf(0.5 + level / 2, len(values) - 1)
    return float(t * sd / math.sqrt(len(values)))


def finetune_eval(
    checkpoint: dict,
    text: str,
    epochs: float,
    seeds: list[int],
    lr: float = 1e-3,
    batch_size: int = 64,
    holdout_fraction: float = 0.1,
) -> dict:
    """Fine-tune per seed and evaluate held-out perplexity.

    The checkpoint's vocabulary must already cover bytes (resample first).
    Each seed reruns fine-tuning from the same checkpoint with its own data
    order; perplexity is exp(mean held-out nats/token).
    """
    if not text:
        raise ValueError("empty fine-tune corpus")
    if not seeds:
        raise ValueError("need at least one seed")
    if checkpoint["model_cfg"]["vocab_size"] < BYTE_VOCAB:
        raise ValueError("checkpoint vocabulary smaller than the byte vocabulary")
    seq_len = checkpoint["model_cfg"]["max_seq_len"]
    seqs = byte_sequences(text, seq_len)
    n_hold = max(int(seqs.shape[0] * holdout_fraction), 1)
    train_seqs, test_seqs = seqs[:-n_hold], seqs[-n_hold:]
    tokens_per_epoch = train_seqs.shape[0] * seq_len
    steps = max(int(epochs * train_seqs.shape[0] / batch_size), 1)

    per_seed = []
    for seed in seeds:
        model = load_model(checkpoint)
        cfg = TrainConfig(
            batch_size=batch_size, steps=steps, warmup_steps=max(steps // 10, 1),
            lr=lr, schedule="warmup-cosine", seed=seed, eval_sequences=0,
        )
        train_model(model, train_seqs, cfg)
        bits = eval_bits(model, test_seqs)
        per_seed.append({"seed": seed, "test_bits": bits,
                         "perplexity": float(math.exp(bits * LN2))})

    ppls = [r["perplexity"] for r in per_seed]
    return {
        "per_seed": per_seed,
        "mean_perplexity": float(np.mean(ppls)),
        "ci95_halfwidth": confidence_halfwidth(ppls),
        "epochs": epochs,
        "steps": steps,
        "train_tokens_per_epoch": int(tokens_per_epoch),
        "holdout_sequences": int(n_hold),
    }
