import torch

from formtrainer import ModelConfig, TrainConfig, load_model, resample_embeddings
from formtrainer.train import pretrain_on_sequences


def _checkpoint(vocab=500, hidden=32, seed=2):
    cfg = ModelConfig(vocab_size=vocab, max_seq_len=16, hidden=hidden, seed=seed)
    data = torch.randint(0, vocab, (64, 16))
    return pretrain_on_sequences(
        data, cfg, TrainConfig(steps=5, warmup_steps=1, batch_size=8), "synthetic"
    )


def test_every_new_row_is_an_old_row():
    ckpt = _checkpoint()
    grown = resample_embeddings(ckpt, 50_257, seed=9)
    old = ckpt["model_state"]["wte.weight"]
    new = grown["model_state"]["wte.weight"]
    assert new.shape == (50_257, old.shape[1])
    rows = grown["resampled_from"]["source_rows"]
    assert torch.equal(new, old[rows])
    # with 50257 draws over 500 rows, every source row is used
    assert rows.unique().numel() == 500
    occupancy = 500 * (1 - (1 - 1 / 500) ** 50_257)
    assert abs(rows.unique().numel() - occupancy) < 1.0


def test_non_embedding_parameters_bit_identical():
    ckpt = _checkpoint()
    grown = resample_embeddings(ckpt, 50_257, seed=9)
    for key, old in ckpt["model_state"].items():
        if key in ("wte.weight", "head.weight"):
            continue
        assert torch.equal(grown["model_state"][key], old), key


def test_head_stays_tied_after_resampling():
    grown = resample_embeddings(_checkpoint(), 256, seed=4)
    model = load_model(grown)
    assert model.head.weight is model.wte.weight
    assert model.cfg.vocab_size == 256


def test_same_size_resample_is_deterministic_not_identity():
    ckpt = _checkpoint()
    a = resample_embeddings(ckpt, 500, seed=7)
    b = resample_embeddings(ckpt, 500, seed=7)
    assert torch.equal(a["model_state"]["wte.weight"], b["model_state"]["wte.weight"])
    assert not torch.equal(a["model_state"]["wte.weight"],
                           ckpt["model_state"]["wte.weight"])
    c = resample_embeddings(ckpt, 500, seed=8)
    assert not torch.equal(a["model_state"]["wte.weight"],
                           c["model_state"]["wte.weight"])
