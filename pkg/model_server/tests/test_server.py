import json
import random
import subprocess
import sys

import numpy as np
import pytest

from ner_model_server.alignment import AlignmentError, align_subtokens, first_piece_rows
from ner_model_server.pos_tagger import tag_sentence, tag_word
from ner_model_server.server import canonical_tag_order


def test_handshake_shape(server):
    reply = server.handle({"op": "handshake"})
    assert reply["ok"]
    assert reply["tag_set"][0] == "O"
    assert reply["tag_set"] == canonical_tag_order(reply["tag_set"])
    assert set(reply["capabilities"]) == {"predict", "pos", "similarity"}
    assert reply["deterministic"] is True


def test_predict_counts_and_argmax(server):
    sentences = [["The", "cat", "sat"], ["People", "in", "China", "bought", "flowers"]]
    reply = server.handle({"op": "predict", "sentences": sentences})
    assert reply["ok"]
    for sent, row in zip(sentences, reply["predictions"]):
        assert len(row) == len(sent)
        for cell in row:
            assert set(cell["scores"]) == set(server.tag_set)
            best = max(
                cell["scores"],
                key=lambda t: (cell["scores"][t], -server.tag_set.index(t)),
            )
            assert cell["label"] == best


def test_predict_returns_raw_scores(server):
    # logits, not probabilities: negative values and sums far from 1
    reply = server.handle({"op": "predict", "sentences": [["the", "cat", "sat"]]})
    cells = reply["predictions"][0]
    values = [v for c in cells for v in c["scores"].values()]
    assert min(values) < 0 or max(values) > 1
    assert any(abs(sum(c["scores"].values()) - 1.0) > 1e-3 for c in cells)


def test_predict_deterministic(server):
    request = {"op": "predict", "sentences": [["The", "republic", "of", "china"]]}
    first = server.handle(request)
    second = server.handle(request)
    assert json.dumps(first, sort_keys=True) == json.dumps(second, sort_keys=True)


def test_first_subtoken_convention(server):
    """A multi-piece word carries exactly its first piece's score vector."""
    sentence = ["visited", "xqzzy"]  # second word splits into many pieces
    enc = server.tokenizer([sentence], is_split_into_words=True, return_tensors="pt")
    word_ids = enc.word_ids(0)
    pieces_per_word = [sum(1 for w in word_ids if w == i) for i in (0, 1)]
    assert pieces_per_word[0] == 1 and pieces_per_word[1] >= 3

    import torch

    with torch.no_grad():
        logits = server.model(**enc).logits[0]
    rows = first_piece_rows(word_ids, len(sentence))
    reply = server.handle({"op": "predict", "sentences": [sentence]})
    for word_index in (0, 1):
        expected = {
            server._label_ids[i]: pytest.approx(float(logits[rows[word_index], i]))
            for i in range(len(server._label_ids))
        }
        assert reply["predictions"][0][word_index]["scores"] == expected


def test_alignment_unit_rules():
    scores = np.arange(12).reshape(4, 3)
    # one word in three pieces, after a special token
    word_ids = [None, 0, 0, 0]
    assert first_piece_rows(word_ids, 1) == [1]
    assert align_subtokens(word_ids, scores, 1).tolist() == [scores[1].tolist()]
    # one-piece word keeps its own row
    assert first_piece_rows([None, 0, 1, None], 2) == [1, 2]
    with pytest.raises(AlignmentError):
        first_piece_rows([None, 0, None], 2)  # second word has no pieces
    with pytest.raises(AlignmentError):
        first_piece_rows([None, 5], 2)


def test_alignment_word_counts_random(server):
    rng = random.Random(3)
    words = ["cat", "sat", "visited", "xq", "zebra9", "flowers", "a", "##odd"]
    for _ in range(50):
        sentence = [rng.choice(words) for _ in range(rng.randint(1, 10))]
        reply = server.handle({"op": "predict", "sentences": [sentence]})
        assert reply["ok"], reply
        assert len(reply["predictions"][0]) == len(sentence)


def test_alignment_failure_is_error_reply(server):
    reply = server.handle({"op": "predict", "sentences": [["cat", ""]]})
    assert reply["ok"] is False
    assert server.handle({"op": "handshake"})["ok"]  # still serving


def test_similarity_identity_and_symmetry(server):
    pairs = [
        [["the", "cat", "sat"], ["the", "cat", "sat"]],
        [["the", "cat", "sat"], ["the", "cat", "visited"]],
        [["the", "cat", "visited"], ["the", "cat", "sat"]],
    ]
    reply = server.handle({"op": "similarity", "pairs": pairs})
    values = reply["similarities"]
    assert values[0] == pytest.approx(1.0, abs=1e-6)
    assert values[1] == pytest.approx(values[2], abs=1e-6)
    assert all(0.0 <= v <= 1.0 for v in values)


def test_pos_reference_examples(server):
    reply = server.handle({"op": "pos", "sentences": [["The", "cat", "sat"]]})
    assert reply["tags"] == [["DT", "NN", "VBD"]]
    assert server.handle({"op": "pos", "sentences": []})["tags"] == []


def test_pos_tagger_rules():
    assert tag_sentence(["The", "cat", "sat"]) == ["DT", "NN", "VBD"]
    assert tag_word("quickly") == "RB"
    assert tag_word("jumped") == "VBD"
    assert tag_word("jumping") == "VBG"
    assert tag_word("Geneva") == "NNP"
    assert tag_word("12,500") == "CD"
    assert tag_word(".") == "."
    assert tag_word("tables") == "NNS"
    assert tag_word("glass") == "NN"


def test_unknown_op_and_malformed(server):
    assert server.handle({"op": "frobnicate"})["ok"] is False
    assert server.handle({"op": "predict"})["ok"] is False
    assert server.handle({"op": "predict", "sentences": [[]]})["ok"] is False


def test_stdio_transport_roundtrip(tiny_checkpoint):
    proc = subprocess.Popen(
        [sys.executable, "-m", "ner_model_server", "--model", tiny_checkpoint],
        stdin=subprocess.PIPE,
        stdout=subprocess.PIPE,
        stderr=subprocess.DEVNULL,
        text=True,
    )
    try:
        requests = [
            {"op": "handshake"},
            {"op": "predict", "sentences": [["the", "cat", "sat"]]},
            {"op": "nonsense"},
            {"op": "pos", "sentences": [["The", "cat", "sat"]]},
        ]
        for request in requests:
            proc.stdin.write(json.dumps(request) + "\n")
        proc.stdin.flush()
        replies = [json.loads(proc.stdout.readline()) for _ in requests]
    finally:
        proc.stdin.close()
        proc.wait(timeout=10)
    assert replies[0]["ok"] and replies[0]["protocol"].startswith("1.")
    assert len(replies[1]["predictions"][0]) == 3
    assert replies[2]["ok"] is False
    assert replies[3]["tags"] == [["DT", "NN", "VBD"]]
