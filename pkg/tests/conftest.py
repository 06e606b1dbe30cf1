from __future__ import annotations

import math

import numpy as np
import pytest

from nerbreaker.adapter import AdapterEndpoint, CallableTransport
from nerbreaker.corpus import TaggedSentence
from nerbreaker.labels import Label
from nerbreaker.lexical import VectorStore
from nerbreaker.mock import MockModelSpec, MockServer, dice_similarity


def plane_vector(dim: int, plane: int, degrees: float) -> list[float]:
    """Unit vector in the 2D plane spanned by axes (2*plane, 2*plane+1)."""
    vec = [0.0] * dim
    rad = math.radians(degrees)
    vec[2 * plane] = math.cos(rad)
    vec[2 * plane + 1] = math.sin(rad)
    return vec


def build_store(groups: dict[str, list[tuple[str, float]]]) -> VectorStore:
    """One orthogonal plane per group; angles control within-group cosine."""
    dim = 2 * len(groups)
    words, rows = [], []
    for plane, members in enumerate(groups.values()):
        for word, degrees in members:
            words.append(word)
            rows.append(plane_vector(dim, plane, degrees))
    return VectorStore(words, np.array(rows))


@pytest.fixture
def tiny_store() -> VectorStore:
    # cos(15) ~ .966, cos(30) ~ .866, cos(75) ~ .259 (below delta=0.5)
    return build_store(
        {
            "buy": [
                ("bought", 0.0),
                ("purchased", 15.0),
                ("purchase", 20.0),  # tagged as a noun by the scripted POS
                ("obtained", 30.0),
                ("forfeited", 75.0),
            ],
            "cat": [("cat", 0.0), ("puss", 30.0)],
            "clean": [("dustpan", 0.0), ("broom", 20.0)],
        }
    )


def endpoint_for(handler) -> AdapterEndpoint:
    endpoint = AdapterEndpoint(CallableTransport(handler))
    endpoint.handshake()
    return endpoint


@pytest.fixture
def mock_endpoint_basic() -> AdapterEndpoint:
    spec = MockModelSpec(
        gazetteer={("China",): "LOC", ("New", "York"): "LOC", ("Mara",): "PER"},
        trigger_words={"visited": ("LOC", 2)},
        pos_lexicon={"The": "DT", "the": "DT", "cat": "NN", "sat": "VBD"},
    )
    return endpoint_for(MockServer(spec).handle)


REPUBLIC_TOKENS = ("The", "Republic", "of", "China", "bought", "flowers")
REPUBLIC_GOLD = tuple(
    Label.parse(t) for t in ("O", "B-LOC", "I-LOC", "I-LOC", "O", "O")
)


class ScriptedRepublicModel:
    """Scripted adapter with a fixed before/after labelling rule.

    The three-token location is labelled correctly whenever the verb
    "bought" is present; without it only the final token is kept, as a
    B- tag.  Raw scores are 2.0 for the predicted label, 0.0 otherwise.
    """

    TAGS = ["O", "B-LOC", "I-LOC"]
    POS = {
        "bought": "VBD",
        "purchased": "VBD",
        "obtained": "VBD",
        "forfeited": "VBD",
        "purchase": "NN",
    }

    def labels_for(self, tokens: list[str]) -> list[str]:
        labels = ["O"] * len(tokens)
        for i in range(len(tokens) - 2):
            if tokens[i : i + 3] == ["Republic", "of", "China"]:
                if "bought" in tokens:
                    labels[i : i + 3] = ["B-LOC", "I-LOC", "I-LOC"]
                else:
                    labels[i + 2] = "B-LOC"
        return labels

    def handle(self, request: dict) -> dict:
        op = request.get("op")
        if op == "handshake":
            return {
                "ok": True,
                "protocol": "1.0",
                "model_id": "scripted:republic",
                "tag_set": self.TAGS,
                "capabilities": ["predict", "pos", "similarity"],
                "deterministic": True,
            }
        if op == "predict":
            rows = []
            for tokens in request["sentences"]:
                row = []
                for label in self.labels_for(list(tokens)):
                    scores = {t: 0.0 for t in self.TAGS}
                    scores[label] = 2.0
                    row.append({"label": label, "scores": scores})
                rows.append(row)
            return {"ok": True, "predictions": rows}
        if op == "pos":
            return {
                "ok": True,
                "tags": [
                    [self.POS.get(t, "NN") for t in sent]
                    for sent in request["sentences"]
                ],
            }
        if op == "similarity":
            return {
                "ok": True,
                "similarities": [dice_similarity(a, b) for a, b in request["pairs"]],
            }
        return {"ok": False, "error": f"unknown op {op!r}"}


@pytest.fixture
def republic_sentence() -> TaggedSentence:
    return TaggedSentence(REPUBLIC_TOKENS, REPUBLIC_GOLD, None, "s0")


@pytest.fixture
def republic_endpoint() -> AdapterEndpoint:
    return endpoint_for(ScriptedRepublicModel().handle)
