import json
import subprocess
import sys

import pytest

from formtrainer import run_matrix, textgen
from formtrainer.matrix import ordering_check


@pytest.fixture(scope="module")
def tiny_matrix(corpora, tmp_path_factory):
    text_path = tmp_path_factory.mktemp("text") / "sample.txt"
    text_path.write_text(textgen.sample_text(80_000, seed=3))
    return {
        "preset": "test",
        "overrides": {"steps": 30, "warmup_steps": 6, "hidden": 32},
        "finetune_text": str(text_path),
        "finetune_epochs": 0.2,
        "seeds": [0, 1],
        "cells": [
            {"name": "rand", "pretrain": str(corpora["rand"])},
            {"name": "none", "pretrain": None},
            {"name": "control", "pretrain": "control"},
        ],
    }


def test_matrix_runs_and_is_resumable(tiny_matrix, tmp_path):
    results = tmp_path / "results"
    report = run_matrix(tiny_matrix, results)
    assert {c["name"] for c in report["cells"]} == {"rand", "none", "control"}
    for cell in report["cells"]:
        ft = cell["finetune"]
        assert len(ft["per_seed"]) == 2
        assert ft["mean_perplexity"] > 1.0
        assert ft["ci95_halfwidth"] >= 0.0
    assert (results / "report.json").exists()
    assert (results / "cell-rand.json").exists()

    # idempotent: a second run reuses every persisted cell verbatim
    first_cells = json.loads((results / "report.json").read_text())["cells"]
    report2 = run_matrix(tiny_matrix, results)
    assert report2["cells"] == first_cells


def test_matrix_marks_missing_artifacts_incomplete(tiny_matrix, tmp_path):
    broken = dict(tiny_matrix)
    broken["cells"] = [
        {"name": "rand", "pretrain": str(tmp_path / "nowhere" / "manifest.json")},
        {"name": "none", "pretrain": None},
    ]
    report = run_matrix(broken, tmp_path / "r2")
    assert [c["name"] for c in report["incomplete"]] == ["rand"]
    assert [c["name"] for c in report["cells"]] == ["none"]


def test_empty_matrix_yields_empty_report(tmp_path):
    report = run_matrix({"cells": []}, tmp_path / "empty")
    assert report["cells"] == []
    assert report["incomplete"] == []
    assert report["ordering"] is None
    assert (tmp_path / "empty" / "report.json").exists()


def test_ordering_check_logic():
    def cell(name, ppl):
        return {"name": name, "finetune": {"mean_perplexity": ppl}}

    good = [cell("cross", 5.0), cell("nest", 6.0), cell("rep", 7.0), cell("rand", 8.0)]
    assert ordering_check(good)["status"] == "pass"
    assert ordering_check(good)["realized"] == ["cross", "nest", "rep", "rand"]
    bad = [cell("cross", 9.0), cell("nest", 6.0), cell("rep", 7.0), cell("rand", 8.0)]
    out = ordering_check(bad)
    assert out["status"] == "warn"
    assert not out["comparisons"][0]["holds"]


def test_cli_run(tiny_matrix, tmp_path):
    exp = tmp_path / "experiment.json"
    exp.write_text(json.dumps(tiny_matrix))
    proc = subprocess.run(
        [sys.executable, "-m", "formtrainer", "run", str(exp),
         "--results", str(tmp_path / "out")],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert "ppl" in proc.stdout
    assert (tmp_path / "out" / "report.json").exists()
