import json

import numpy as np
import pytest

import formlang as fl
from formlang.cli import main
from formlang.corpusio import CorpusManifest


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_generate_then_validate(tmp_path, capsys):
    out = tmp_path / "nest"
    code, _, _ = run(capsys, "generate", "--family", "nest", "--pairs", "250",
                     "--p-open", "0.49", "--tokens", "200000", "--seed", "7",
                     "--out", out, "--shard-size", "80000")
    assert code == 0
    manifest = CorpusManifest.load(out / "manifest.json")
    assert manifest.total_tokens >= 200_000
    code, stdout, _ = run(capsys, "validate", out / "manifest.json")
    assert code == 0
    assert "PASSED" in stdout


def test_validate_fails_on_family_mismatch(tmp_path, capsys):
    out = tmp_path / "rand"
    code, _, _ = run(capsys, "generate", "--family", "rand", "--tokens", "5000",
                     "--seed", "1", "--out", out)
    assert code == 0
    path = out / "manifest.json"
    raw = json.loads(path.read_text())
    raw["language_spec"]["family"] = "nest"
    raw["language_spec"]["pair_dist"] = raw["language_spec"].pop("token_dist")
    raw["language_spec"]["pair_dist"]["support_size"] = 250
    path.write_text(json.dumps(raw))
    code, stdout, _ = run(capsys, "validate", path)
    assert code == 1
    assert "well-nestedness violated at document 0" in stdout


def test_extract_dist_feeds_cross(tmp_path, capsys):
    nest_out = tmp_path / "nest"
    run(capsys, "generate", "--family", "nest", "--tokens", "400000",
        "--seed", "3", "--out", nest_out)
    ref = tmp_path / "ref.json"
    code, _, _ = run(capsys, "extract-dist", nest_out / "manifest.json", "-o", ref)
    assert code == 0
    cross_out = tmp_path / "cross"
    code, _, _ = run(capsys, "generate", "--family", "cross", "--tokens", "400000",
                     "--doc-len", "20000", "--dist-file", ref, "--seed", "5",
                     "--out", cross_out)
    assert code == 0
    code, stdout, _ = run(capsys, "validate", cross_out / "manifest.json")
    assert code == 0
    code, stdout, _ = run(capsys, "compare-dist", cross_out / "manifest.json",
                          "--max-kl", "0.05")
    assert code == 0
    assert "kl_bits" in stdout
    code, _, err = run(capsys, "compare-dist", cross_out / "manifest.json",
                       "--max-kl", "1e-9")
    assert code == 1


def test_stats_report(tmp_path, capsys):
    out = tmp_path / "rep"
    run(capsys, "generate", "--family", "rep", "--rep-block", "10",
        "--tokens", "100000", "--seed", "2", "--out", out)
    code, stdout, _ = run(capsys, "stats", out / "manifest.json")
    assert code == 0
    assert "family rep" in stdout
    assert "total_tokens" in stdout
    # the report is archived next to the manifest
    assert (out / "stats.txt").read_text() == stdout
    code, stdout, _ = run(capsys, "stats", out / "manifest.json", "--machine")
    assert json.loads(stdout)["family"] == "rep"
    assert (out / "stats.json").exists()


def test_sample_prefix_consk_with_generate(tmp_path, capsys):
    args = ["--family", "nest", "--pairs", "8", "--doc-len", "16", "--seed", "9"]
    code, sample_text, _ = run(capsys, "sample", *args, "--docs", "4")
    assert code == 0
    out = tmp_path / "g"
    run(capsys, "generate", *args, "--tokens", "2000", "--out", out)
    manifest = CorpusManifest.load(out / "manifest.json")
    from formlang import corpusio
    docs = list(corpusio.iter_documents(manifest))
    vocab = fl.make_vocab(8)
    expected = [fl.to_text(d, vocab) for d in docs[:4]]
    assert sample_text.splitlines() == expected


def test_spec_file_is_copied_verbatim(tmp_path, capsys):
    spec = {
        "family": "rep",
        "num_pairs": 250,
        "rep_block": 5,
        "seed": 12,
        "token_dist": {"kind": "zipf", "support_size": 500, "alpha": 1.0,
                       "beta": 2.7, "permute_seed": 4},
    }
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps(spec, indent=2))
    out = tmp_path / "corpus"
    code, _, _ = run(capsys, "generate", "--spec", spec_path,
                     "--tokens", "5000", "--out", out)
    assert code == 0
    manifest = CorpusManifest.load(out / "manifest.json")
    assert manifest.spec_file == spec_path.read_text()
    assert manifest.language_spec["rep_block"] == 5
    assert manifest.language_spec["token_dist"]["kind"] == "zipf"


def test_flag_overrides_spec_file(tmp_path, capsys):
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps({"family": "rep", "num_pairs": 250, "seed": 1}))
    out = tmp_path / "c2"
    code, _, _ = run(capsys, "generate", "--spec", spec_path, "--seed", "99",
                     "--tokens", "2000", "--out", out)
    assert code == 0
    assert CorpusManifest.load(out / "manifest.json").seed == 99


def test_usage_errors_exit_2(tmp_path, capsys):
    code, _, err = run(capsys, "generate", "--tokens", "100", "--out", tmp_path / "x")
    assert code == 2
    assert "family" in err
    code, _, err = run(capsys, "generate", "--family", "cross", "--tokens", "100",
                       "--out", tmp_path / "y")
    assert code == 2  # missing distance_ref
    assert not (tmp_path / "y" / "manifest.json").exists()
    with pytest.raises(SystemExit) as exc:
        main(["no-such-command"])
    assert exc.value.code == 2


def test_validate_detects_tampering(tmp_path, capsys):
    out = tmp_path / "t"
    run(capsys, "generate", "--family", "nest", "--tokens", "20000", "--seed", "1",
        "--out", out)
    manifest = CorpusManifest.load(out / "manifest.json")
    shard = manifest.shard_path(manifest.shard_entries[0])
    data = bytearray(shard.read_bytes())
    data[40] ^= 1
    shard.write_bytes(bytes(data))
    code, _, err = run(capsys, "validate", out / "manifest.json")
    assert code == 1
    assert "hash mismatch" in err
