import math

import pytest
import torch

from formtrainer import (
    ModelConfig,
    TrainConfig,
    finetune_eval,
    resample_embeddings,
    textgen,
)
from formtrainer.finetune import byte_sequences, confidence_halfwidth
from formtrainer.train import pretrain_on_sequences


@pytest.fixture(scope="module")
def small_checkpoint():
    cfg = ModelConfig(vocab_size=500, max_seq_len=32, hidden=32, seed=1)
    data = torch.randint(0, 500, (128, 32))
    ckpt = pretrain_on_sequences(
        data, cfg, TrainConfig(steps=10, warmup_steps=2, batch_size=8), "synthetic"
    )
    return resample_embeddings(ckpt, 256, seed=3)


@pytest.fixture(scope="module")
def text():
    return textgen.sample_text(120_000, seed=5)


def test_finetune_reports_per_seed_perplexities(small_checkpoint, text):
    cell = finetune_eval(small_checkpoint, text, epochs=0.3, seeds=[0, 1],
                         batch_size=16)
    assert len(cell["per_seed"]) == 2
    for entry in cell["per_seed"]:
        assert entry["perplexity"] > 1.0
        assert entry["perplexity"] == pytest.approx(
            math.exp(entry["test_bits"] * math.log(2)))
    assert cell["ci95_halfwidth"] >= 0.0
    assert cell["mean_perplexity"] < 256  # better than uniform bytes


def test_finetune_is_seed_deterministic(small_checkpoint, text):
    a = finetune_eval(small_checkpoint, text, epochs=0.1, seeds=[4], batch_size=16)
    b = finetune_eval(small_checkpoint, text, epochs=0.1, seeds=[4], batch_size=16)
    assert a["per_seed"][0]["perplexity"] == b["per_seed"][0]["perplexity"]


def test_finetune_input_validation(small_checkpoint):
    with pytest.raises(ValueError, match="empty"):
        finetune_eval(small_checkpoint, "", epochs=1, seeds=[0])
    with pytest.raises(ValueError, match="seed"):
        finetune_eval(small_checkpoint, "abc" * 1000, epochs=1, seeds=[])
    with pytest.raises(ValueError, match="too small"):
        byte_sequences("tiny", 32)


def test_vocabulary_must_cover_bytes(text):
    cfg = ModelConfig(vocab_size=100, max_seq_len=32, hidden=32, seed=1)
    ckpt = pretrain_on_sequences(
        torch.randint(0, 100, (64, 32)), cfg, TrainConfig(steps=0), "synthetic"
    )
    with pytest.raises(ValueError, match="byte"):
        finetune_eval(ckpt, text, epochs=0.1, seeds=[0])


def test_confidence_halfwidth():
    assert confidence_halfwidth([5.0]) == 0.0
    hw = confidence_halfwidth([10.0, 12.0, 11.0, 9.0, 13.0])
    assert 0.0 < hw < 5.0
    wider = confidence_halfwidth([10.0, 20.0])
    assert wider > hw


def test_textgen_is_deterministic_and_textlike():
    a = textgen.sample_text(10_000, seed=9)
    b = textgen.sample_text(10_000, seed=9)
    assert a == b
    assert len(a) >= 10_000
    assert a.count(".") > 50
    assert "\n\n" in a
    assert textgen.sample_text(5_000, seed=10) != textgen.sample_text(5_000, seed=11)
