"""End-to-end runs through the attack engine's CLI, over the wire.

The engine is consumed purely through its external interfaces: the
``nerbreaker`` command line, the exec adapter transport, and the frozen
JSONL record schema.

The real-model smoke needs a fine-tuned checkpoint, which this
repository does not ship.  Point NERBREAKER_SMOKE_MODEL at any Hugging
Face token-classification checkpoint with IOB labels (path or name) and
NERBREAKER_SMOKE_TEST at a CoNLL-format test file to run it.
"""

import json
import os
import subprocess
import sys

import pytest

SMOKE_MODEL = os.environ.get("NERBREAKER_SMOKE_MODEL")
SMOKE_TEST = os.environ.get("NERBREAKER_SMOKE_TEST")

TINY_CORPUS = """\
the DT O
cat NN O
visited VBD O
china NNP B-LOC
. . O

people NNS O
in IN O
china NNP B-LOC
bought VBD O
flowers NNS O
. . O

the DT O
republic NNP B-LOC
of IN I-LOC
china NNP I-LOC
sat VBD O
. . O
"""


def run_attack_cli(model: str, test_path: str, out_path: str, sample: int) -> int:
    adapter = f"exec:{sys.executable} -m ner_model_server --model {model}"
    return subprocess.call(
        [
            sys.executable, "-m", "nerbreaker.cli", "attack",
            "--mode", "entity",
            "--adapter", adapter,
            "--test", test_path,
            "--inventory-from", "test",
            "--sample", str(sample),
            "--seed", "1",
            "--out", out_path,
        ],
        env={**os.environ, "NERBREAKER_TIMEOUT_MS": "600000"},
    )


def read_jsonl(path: str) -> tuple[dict, list[dict]]:
    header, rows = {}, []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            data = json.loads(line)
            if data.get("kind") == "header":
                header = data
            else:
                rows.append(data)
    return header, rows


def test_pipeline_with_tiny_checkpoint(tiny_checkpoint, tmp_path):
    """The whole pipe holds together across the wire, desk scale."""
    corpus = tmp_path / "test.txt"
    corpus.write_text(TINY_CORPUS, encoding="utf-8")
    out = tmp_path / "records.jsonl"
    assert run_attack_cli(tiny_checkpoint, str(corpus), str(out), sample=3) == 0
    header, rows = read_jsonl(str(out))
    assert header["run_config"]["mode"] == "entity"
    assert header["model_id"].startswith("hf:")
    # a randomly initialized model rarely labels anything correctly, so the
    # record count is just "however many entities it got right by chance"
    for row in rows:
        assert row["mode"] == "entity"
        assert row["schema_version"].startswith("1.")


@pytest.mark.skipif(
    not (SMOKE_MODEL and SMOKE_TEST),
    reason="set NERBREAKER_SMOKE_MODEL and NERBREAKER_SMOKE_TEST to run",
)
def test_real_model_smoke(tmp_path):
    """Entity attack fools >= 50% of initially correct entities."""
    out = tmp_path / "smoke.jsonl"
    assert run_attack_cli(SMOKE_MODEL, SMOKE_TEST, str(out), sample=50) == 0
    _, rows = read_jsonl(str(out))
    attacked = [r for r in rows if r.get("status") == "ok"]
    assert attacked, "no initially-correct entities to attack"
    fooled = [r for r in attacked if r["result"]["replacement"] is not None]
    assert len(fooled) / len(attacked) >= 0.5
