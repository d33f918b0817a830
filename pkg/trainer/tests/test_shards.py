import numpy as np
import pytest

from formtrainer import shards


def test_read_tokens_matches_manifest(corpora):
    manifest = shards.load_manifest(corpora["rand"])
    tokens = shards.read_tokens(manifest)
    assert tokens.shape[0] == manifest["total_tokens"]
    assert tokens.dtype == np.uint16
    assert int(tokens.max()) < shards.vocab_size(manifest) == 500


def test_hash_verification(corpora, tmp_path):
    manifest = shards.load_manifest(corpora["rand"])
    shard = manifest["_root"] / manifest["shard_entries"][0]["path"]
    copy_root = tmp_path / "corrupt"
    copy_root.mkdir()
    data = bytearray(shard.read_bytes())
    data[100] ^= 0xFF
    (copy_root / shard.name).write_bytes(bytes(data))
    (copy_root / "manifest.json").write_text(
        (manifest["_root"] / "manifest.json").read_text()
    )
    with pytest.raises(shards.CorpusError, match="hash mismatch"):
        shards.read_tokens(shards.load_manifest(copy_root / "manifest.json"))


def test_sequence_matrix_shapes(corpora):
    manifest = shards.load_manifest(corpora["rep"])
    tokens = shards.read_tokens(manifest)
    seqs = shards.sequence_matrix(tokens, 40)
    assert seqs.shape[1] == 40
    assert seqs.shape[0] == tokens.shape[0] // 40
    assert seqs.dtype == np.int64
    # rows are consecutive windows
    assert np.array_equal(seqs[0], tokens[:40].astype(np.int64))
    with pytest.raises(shards.CorpusError):
        shards.sequence_matrix(tokens[:10], 40)


def test_rep_blocks_survive_the_pipeline(corpora):
    manifest = shards.load_manifest(corpora["rep"])
    tokens = shards.read_tokens(manifest)
    blocks = tokens[: 200 * 20].reshape(-1, 20)
    assert np.array_equal(blocks[:, :10], blocks[:, 10:])
