"""The same golden request/reply suite the engine's mock passes."""

import json
from pathlib import Path

import pytest
from jsonschema import validate

GOLDEN = Path(__file__).parents[2] / "protocol" / "golden"


def golden_requests():
    return sorted(GOLDEN.glob("*.request.json"))


@pytest.mark.parametrize("request_path", golden_requests(), ids=lambda p: p.stem)
def test_golden_suite(server, request_path):
    request = json.loads(request_path.read_text(encoding="utf-8"))
    reply = server.handle(request)

    op = request_path.stem.replace(".request", "").split(".")[0]
    schema_name = op if (GOLDEN / "replies" / f"{op}.schema.json").exists() else "error"
    schema = json.loads(
        (GOLDEN / "replies" / f"{schema_name}.schema.json").read_text(encoding="utf-8")
    )
    validate(reply, schema)

    if op == "handshake":
        assert reply["tag_set"][0] == "O"
    if op == "predict":
        assert len(reply["predictions"]) == len(request["sentences"])
        for sent, row in zip(request["sentences"], reply["predictions"]):
            assert len(row) == len(sent)
            for cell in row:
                assert set(cell["scores"]) == set(server.tag_set)
                best = max(
                    cell["scores"],
                    key=lambda t: (cell["scores"][t], -server.tag_set.index(t)),
                )
                assert cell["label"] == best
    if op == "pos":
        assert [len(r) for r in reply["tags"]] == [len(s) for s in request["sentences"]]
    if op == "similarity":
        assert len(reply["similarities"]) == len(request["pairs"])
        assert reply["similarities"][0] == pytest.approx(1.0, abs=1e-6)
    if op == "unknown_op":
        assert server.handle({"op": "handshake"})["ok"]  # server survives
