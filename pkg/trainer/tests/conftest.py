import subprocess
import sys

import pytest

TOKENS = 3_000_000
SEQ_LEN = 40


def _cli(*args):
    cmd = [sys.executable, "-m", "formlang", *map(str, args)]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr + proc.stdout
    return proc.stdout


@pytest.fixture(scope="session")
def corpora(tmp_path_factory):
    """Pretraining corpora produced through the generator CLI, one per family."""
    root = tmp_path_factory.mktemp("corpora")
    common = ["--pairs", 250, "--seq-len", SEQ_LEN, "--tokens", TOKENS]
    _cli("generate", "--family", "rand", "--seed", 11, "--out", root / "rand", *common)
    _cli("generate", "--family", "rep", "--rep-block", 10, "--seed", 12,
         "--out", root / "rep", *common)
    _cli("generate", "--family", "nest", "--p-open", "0.49", "--seed", 13,
         "--out", root / "nest", *common)
    _cli("extract-dist", root / "nest" / "manifest.json", "-o", root / "nest_dist.json")
    _cli("generate", "--family", "cross", "--dist-file", root / "nest_dist.json",
         "--seed", 14, "--out", root / "cross", *common)
    return {
        name: root / name / "manifest.json"
        for name in ("rand", "rep", "nest", "cross")
    }
