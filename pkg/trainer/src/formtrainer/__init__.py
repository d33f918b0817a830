"""Desk-scale bias-injection pipeline over formal-language corpora.

Pretrain a small decoder-only LM on a generated corpus (consumed through the
manifest + binary shard format), transfer to a new vocabulary by resampling
embedding rows with replacement, fine-tune on byte-level text, and report
held-out perplexities per condition with seed confidence intervals.
"""

from .model import ModelConfig, TrainConfig, TinyLM, PRESETS, preset, eval_bits
from .train import (
    pretrain,
    pretrain_on_sequences,
    train_model,
    load_model,
    save_checkpoint,
    load_checkpoint,
)
from .embeddings import resample_embeddings
from .finetune import BYTE_VOCAB, byte_sequences, finetune_eval
from .matrix import run_matrix, ordering_check, default_text
from . import shards, textgen

__version__ = "0.1.0"
