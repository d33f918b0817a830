"""Experiment matrix: pretrain -> resample embeddings -> fine-tune -> report.

A matrix is a declarative dict (usually a JSON file):

    {
      "preset": "test",
      "finetune_text": "path/to/text.txt",       # or null for the bundled sample
      "finetune_epochs": 2,
      "seeds": [0, 1],
      "resample_seed": 17,
      "cells": [
        {"name": "nest", "pretrain": "corpora/nest/manifest.json"},
        {"name": "none", "pretrain": null},       # random init baseline
        {"name": "control", "pretrain": "control"}  # text-pretrained, resampled
      ]
    }

Each completed cell persists its own JSON under the results directory, so an
interrupted matrix resumes where it stopped and a finished one is idempotent.
The consolidated report records per-cell mean perplexity with seed confidence
intervals plus the rank ordering, checked (pass/warn, never asserted) against
the expected cross < nest < rep < rand.
"""

from __future__ import annotations

import json
import time
from pathlib import Path

import torch

from . import textgen
from .embeddings import resample_embeddings
from .finetune import BYTE_VOCAB, byte_sequences, finetune_eval
from .model import ModelConfig, TrainConfig, preset
from .train import pretrain, pretrain_on_sequences, save_checkpoint

EXPECTED_ORDER = ("cross", "nest", "rep", "rand")  # best to worst


def default_text(n_bytes: int = 400_000) -> str:
    return textgen.sample_text(n_bytes, seed=1234)


def _cell_checkpoint(cell: dict, model_cfg: ModelConfig, train_cfg: TrainConfig,
                     text: str) -> dict:
    source = cell.get("pretrain")
    if source is None or source == "none":
        zero = TrainConfig(**{**train_cfg.__dict__, "steps": 0})
        cfg = ModelConfig(**{**model_cfg.__dict__, "vocab_size": BYTE_VOCAB})
        return pretrain_on_sequences(
            byte_sequences(text, model_cfg.max_seq_len)[:1], cfg, zero, "none"
        )
    if source == "control":
        # text-pretrained control; sees only the fine-tune training split so
        # the held-out perplexity stays honest
        cfg = ModelConfig(**{**model_cfg.__dict__, "vocab_size": BYTE_VOCAB})
        train_text = text[: int(len(text) * 0.9)]
        return pretrain_on_sequences(
            byte_sequences(train_text, model_cfg.max_seq_len), cfg, train_cfg, "control"
        )
    return pretrain(source, model_cfg, train_cfg)


def run_cell(cell: dict, matrix: dict, results_dir: Path, text: str) -> dict:
    model_cfg, train_cfg = preset(
        matrix.get("preset", "test"),
        vocab_size=matrix.get("pretrain_vocab", 500),
        **matrix.get("overrides", {}),
    )
    t0 = time.time()
    checkpoint = _cell_checkpoint(cell, model_cfg, train_cfg, text)
    transferred = resample_embeddings(
        checkpoint, BYTE_VOCAB, seed=matrix.get("resample_seed", 17)
    )
    if matrix.get("save_checkpoints"):
        save_checkpoint(checkpoint, results_dir / f"{cell['name']}.pt")
    result = finetune_eval(
        transferred,
        text,
        epochs=matrix.get("finetune_epochs", 2),
        seeds=matrix.get("seeds", [0]),
        lr=matrix.get("finetune_lr", 1e-3),
        batch_size=train_cfg.batch_size,
    )
    return {
        "name": cell["name"],
        "pretrain": cell.get("pretrain"),
        "pretrain_eval_bits": checkpoint["log"].get("eval_bits"),
        "pretrain_corpus": checkpoint["corpus"],
        "finetune": result,
        "model_cfg": checkpoint["model_cfg"],
        "train_cfg": checkpoint["train_cfg"],
        "wall_seconds": time.time() - t0,
    }


def ordering_check(cells: list[dict]) -> dict:
    """Compare the realized perplexity ranking with the expected one.

    Reported, never asserted: desk-scale runs need not reproduce it.
    """
    named = {c["name"]: c["finetune"]["mean_perplexity"] for c in cells}
    present = [n for n in EXPECTED_ORDER if n in named]
    comparisons = []
    ok = True
    for a, b in zip(present, present[1:]):
        holds = named[a] < named[b]
        ok = ok and holds
        comparisons.append({"better": a, "worse": b, "holds": holds,
                            "ppl": [named[a], named[b]]})
    realized = sorted(named, key=named.get)
    return {
        "expected": list(present),
        "realized": realized,
        "comparisons": comparisons,
        "status": "pass" if ok and len(present) >= 2 else "warn",
    }


def run_matrix(matrix: dict, results_dir) -> dict:
    """Execute every cell (resumable), then write the consolidated report."""
    results_dir = Path(results_dir)
    results_dir.mkdir(parents=True, exist_ok=True)
    if matrix.get("finetune_text"):
        text = Path(matrix["finetune_text"]).read_text()
    else:
        text = default_text()

    cells = []
    incomplete = []
    for cell in matrix.get("cells", []):
        cell_path = results_dir / f"cell-{cell['name']}.json"
        if cell_path.exists():
            cells.append(json.loads(cell_path.read_text()))
            continue
        try:
            result = run_cell(cell, matrix, results_dir, text)
        except FileNotFoundError as exc:
            incomplete.append({"name": cell["name"], "error": str(exc)})
            continue
        cell_path.write_text(json.dumps(result, indent=1))
        cells.append(result)

    report = {
        "matrix": {k: v for k, v in matrix.items() if not k.startswith("_")},
        "cells": cells,
        "incomplete": incomplete,
        "ordering": ordering_check(cells) if cells else None,
        "torch_version": torch.__version__,
        "completed_at": time.strftime("%Y-%m-%dT%H:%M:%S"),
    }
    (results_dir / "report.json").write_text(json.dumps(report, indent=1))
    return report
