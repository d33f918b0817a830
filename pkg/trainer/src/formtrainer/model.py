"""Small decoder-only transformer LM with tied embeddings.

Attention combines absolute position embeddings with a learned per-head
relative-position bias; the bias gives position-offset structure (like the
repetition language's fixed copy offset) a direct gradient path, which is
what makes these tasks learnable at desk scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import torch
import torch.nn as nn
import torch.nn.functional as F

LN2 = math.log(2.0)


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    max_seq_len: int
    layers: int = 2
    heads: int = 4
    hidden: int = 64
    seed: int = 0

    def __post_init__(self):
        if self.hidden % self.heads:
            raise ValueError("hidden must divide evenly across heads")


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 64
    steps: int = 2500
    warmup_steps: int = 500
    lr: float = 3e-3
    schedule: str = "warmup-constant"  # or "warmup-cosine"
    weight_decay: float = 0.01
    seed: int = 0
    eval_sequences: int = 128
    deterministic: bool = False


# named presets: "paper" mirrors the source pipeline's published scale,
# "toy" is the desk-scale default, "test" fits a CI budget
PRESETS: dict[str, tuple[dict, dict]] = {
    "paper": (
        dict(layers=12, heads=12, hidden=768, max_seq_len=512),
        dict(batch_size=512, steps=5000, warmup_steps=1000, lr=6e-4,
             schedule="warmup-cosine"),
    ),
    "toy": (
        dict(layers=2, heads=4, hidden=128, max_seq_len=512),
        dict(batch_size=32, steps=2000, warmup_steps=400, lr=3e-3),
    ),
    "test": (
        dict(layers=2, heads=4, hidden=64, max_seq_len=40),
        dict(batch_size=64, steps=2500, warmup_steps=500, lr=3e-3),
    ),
}


def preset(name: str, vocab_size: int, **overrides) -> tuple[ModelConfig, TrainConfig]:
    m, t = PRESETS[name]
    m = dict(m)
    t = dict(t)
    for k, v in overrides.items():
        if k in ModelConfig.__dataclass_fields__:
            m[k] = v
        elif k in TrainConfig.__dataclass_fields__:
            t[k] = v
        else:
            raise KeyError(f"unknown preset override {k!r}")
    return ModelConfig(vocab_size=vocab_size, **m), TrainConfig(**t)


class Block(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        d = cfg.hidden
        self.ln1 = nn.LayerNorm(d)
        self.qkv = nn.Linear(d, 3 * d)
        self.proj = nn.Linear(d, d)
        self.ln2 = nn.LayerNorm(d)
        self.fc = nn.Linear(d, 4 * d)
        self.out = nn.Linear(4 * d, d)
        self.heads = cfg.heads
        self.rel_bias = nn.Parameter(torch.zeros(cfg.heads, cfg.max_seq_len))

    def forward(self, x, rel_idx, causal):
        B, T, D = x.shape
        q, k, v = self.qkv(self.ln1(x)).split(D, dim=2)
        q = q.view(B, T, self.heads, D // self.heads).transpose(1, 2)
        k = k.view(B, T, self.heads, D // self.heads).transpose(1, 2)
        v = v.view(B, T, self.heads, D // self.heads).transpose(1, 2)
        bias = self.rel_bias[:, rel_idx] + causal
        a = F.scaled_dot_product_attention(q, k, v, attn_mask=bias.unsqueeze(0))
        x = x + self.proj(a.transpose(1, 2).reshape(B, T, D))
        x = x + self.out(F.gelu(self.fc(self.ln2(x))))
        return x


class TinyLM(nn.Module):
    """Decoder-only LM; the output head is tied to the token embedding."""

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.cfg = cfg
        torch.manual_seed(cfg.seed)
        self.wte = nn.Embedding(cfg.vocab_size, cfg.hidden)
        self.wpe = nn.Embedding(cfg.max_seq_len, cfg.hidden)
        self.blocks = nn.ModuleList(Block(cfg) for _ in range(cfg.layers))
        self.ln_f = nn.LayerNorm(cfg.hidden)
        self.head = nn.Linear(cfg.hidden, cfg.vocab_size, bias=False)
        self.head.weight = self.wte.weight
        self.apply(self._init_weights)

    @staticmethod
    def _init_weights(module: nn.Module) -> None:
        # 0.02-std normal init; with tied embeddings the untrained model then
        # predicts near-uniform instead of confident noise
        if isinstance(module, (nn.Linear, nn.Embedding)):
            nn.init.normal_(module.weight, mean=0.0, std=0.02)
            if isinstance(module, nn.Linear) and module.bias is not None:
                nn.init.zeros_(module.bias)

    def forward(self, idx: torch.Tensor) -> torch.Tensor:
        T = idx.shape[1]
        if T > self.cfg.max_seq_len:
            raise ValueError(f"sequence length {T} exceeds max {self.cfg.max_seq_len}")
        pos = torch.arange(T, device=idx.device)
        rel_idx = (pos[:, None] - pos[None, :]).clamp(min=0)
        causal = torch.full((T, T), float("-inf"), device=idx.device).triu(1)
        x = self.wte(idx) + self.wpe(pos)
        for block in self.blocks:
            x = block(x, rel_idx, causal)
        return self.head(self.ln_f(x))

    def n_params(self) -> int:
        # tied head shares storage with wte
        seen = set()
        total = 0
        for p in self.parameters():
            if id(p) not in seen:
                seen.add(id(p))
                total += p.numel()
        return total


def next_token_loss_nats(model: nn.Module, batch: torch.Tensor) -> torch.Tensor:
    logits = model(batch[:, :-1])
    return F.cross_entropy(
        logits.reshape(-1, logits.shape[-1]), batch[:, 1:].reshape(-1)
    )


@torch.no_grad()
def eval_bits(model: nn.Module, sequences: torch.Tensor, batch_size: int = 64) -> float:
    """Mean next-token cross-entropy in bits/token over held-out sequences."""
    model.eval()
    total = 0.0
    count = 0
    for lo in range(0, sequences.shape[0], batch_size):
        batch = sequences[lo: lo + batch_size]
        nats = next_token_loss_nats(model, batch)
        n = batch.shape[0] * (batch.shape[1] - 1)
        total += float(nats) * n
        count += n
    model.train()
    return total / (count * LN2)


def grow_config(cfg: ModelConfig, **changes) -> ModelConfig:
    return replace(cfg, **changes)
