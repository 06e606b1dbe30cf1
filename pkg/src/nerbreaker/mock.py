"""Deterministic in-process mock model speaking the adapter protocol.

The mock is a word-level NER toy with fully documented scoring, so every
attack outcome can be re-derived by hand in tests:

* every label starts at ``base_score``;
* a token covered by an occurrence of a gazetteer surface gets ``margin``
  added to its positional label (B-type at the occurrence start, I-type
  inside); overlapping occurrences stack additively;
* a token within ``window`` of a trigger word of type t gets ``margin/2``
  added to both B-t and I-t, once per trigger occurrence (the trigger
  token itself is not boosted);
* support words act like triggers at quarter strength (``margin/4``);
* argmax over the canonical tag order decides, so O wins an all-base tie.

Prediction of token i therefore depends only on tokens within
``locality_radius`` of i, which gives perturbation-distance analyses a
known ground truth.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

from .labels import Kind, Label, canonical_tag_set, argmax_label

UNKNOWN_POS = "NN"


@dataclass(frozen=True)
class MockModelSpec:
    gazetteer: dict[tuple[str, ...], str] = field(default_factory=dict)
    trigger_words: dict[str, tuple[str, int]] = field(default_factory=dict)
    support_words: dict[str, tuple[str, int]] = field(default_factory=dict)
    pos_lexicon: dict[str, str] = field(default_factory=dict)
    base_score: float = 0.0
    margin: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.margin <= 0:
            raise ValueError("margin must be positive")

    def entity_types(self) -> list[str]:
        types = set(self.gazetteer.values())
        types.update(t for t, _ in self.trigger_words.values())
        types.update(t for t, _ in self.support_words.values())
        return sorted(types)

    def tag_set(self) -> list[Label]:
        return canonical_tag_set(self.entity_types())

    def locality_radius(self) -> int:
        radius = max((len(s) - 1 for s in self.gazetteer), default=0)
        for _, window in list(self.trigger_words.values()) + list(
            self.support_words.values()
        ):
            radius = max(radius, window)
        return radius

    def model_id(self) -> str:
        digest = hashlib.sha256(
            json.dumps(self.to_dict(), sort_keys=True).encode("utf-8")
        ).hexdigest()
        return f"mock:{digest[:12]}"

    def to_dict(self) -> dict:
        return {
            "gazetteer": {" ".join(k): v for k, v in self.gazetteer.items()},
            "trigger_words": {k: list(v) for k, v in self.trigger_words.items()},
            "support_words": {k: list(v) for k, v in self.support_words.items()},
            "pos_lexicon": dict(self.pos_lexicon),
            "base_score": self.base_score,
            "margin": self.margin,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MockModelSpec":
        return cls(
            gazetteer={
                tuple(k.split()): v for k, v in data.get("gazetteer", {}).items()
            },
            trigger_words={
                k: (v[0], int(v[1])) for k, v in data.get("trigger_words", {}).items()
            },
            support_words={
                k: (v[0], int(v[1])) for k, v in data.get("support_words", {}).items()
            },
            pos_lexicon=dict(data.get("pos_lexicon", {})),
            base_score=float(data.get("base_score", 0.0)),
            margin=float(data.get("margin", 1.0)),
            seed=int(data.get("seed", 0)),
        )

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(self.to_dict(), handle, indent=2, sort_keys=True)

    @classmethod
    def load(cls, path: str) -> "MockModelSpec":
        with open(path, encoding="utf-8") as handle:
            return cls.from_dict(json.load(handle))


def mock_scores(spec: MockModelSpec, tokens: Sequence[str]) -> list[dict[Label, float]]:
    """Raw scores for every token, per the module docstring's rule."""
    tag_set = spec.tag_set()
    scores = [{label: spec.base_score for label in tag_set} for _ in tokens]

    for surface, entity_type in spec.gazetteer.items():
        width = len(surface)
        for start in range(0, len(tokens) - width + 1):
            if tuple(tokens[start : start + width]) == surface:
                scores[start][Label(Kind.BEGIN, entity_type)] += spec.margin
                for offset in range(1, width):
                    scores[start + offset][Label(Kind.INSIDE, entity_type)] += spec.margin

    for words, strength in ((spec.trigger_words, 2), (spec.support_words, 4)):
        boost = spec.margin / strength
        for position, token in enumerate(tokens):
            hit = words.get(token)
            if hit is None:
                continue
            entity_type, window = hit
            begin = Label(Kind.BEGIN, entity_type)
            inside = Label(Kind.INSIDE, entity_type)
            for i in range(max(0, position - window), min(len(tokens), position + window + 1)):
                if i == position:
                    continue
                scores[i][begin] += boost
                scores[i][inside] += boost
    return scores


def mock_predict(spec: MockModelSpec, tokens: Sequence[str]) -> list[tuple[Label, dict[Label, float]]]:
    tag_set = spec.tag_set()
    return [
        (argmax_label(cell, tag_set), cell) for cell in mock_scores(spec, tokens)
    ]


def mock_pos(spec: MockModelSpec, tokens: Sequence[str]) -> list[str]:
    """Lexicon tag when known (exact, then lowercased), NN otherwise."""
    tags = []
    for token in tokens:
        tag = spec.pos_lexicon.get(token)
        if tag is None:
            tag = spec.pos_lexicon.get(token.lower(), UNKNOWN_POS)
        tags.append(tag)
    return tags


def dice_similarity(a: Sequence[str], b: Sequence[str]) -> float:
    """Sorensen-Dice coefficient over token multisets, in [0, 1]."""
    if not a and not b:
        return 1.0
    counts_a, counts_b = Counter(a), Counter(b)
    overlap = sum((counts_a & counts_b).values())
    return 2.0 * overlap / (len(a) + len(b))


class MockServer:
    """Protocol request handler around one :class:`MockModelSpec`."""

    def __init__(self, spec: MockModelSpec):
        self.spec = spec
        self._tag_set = spec.tag_set()

    def handle(self, request: dict) -> dict:
        try:
            op = request.get("op")
            if op == "handshake":
                return {
                    "ok": True,
                    "protocol": "1.0",
                    "model_id": self.spec.model_id(),
                    "tag_set": [str(t) for t in self._tag_set],
                    "capabilities": ["predict", "pos", "similarity"],
                    "deterministic": True,
                }
            if op == "predict":
                predictions = []
                for tokens in request["sentences"]:
                    predictions.append(
                        [
                            {
                                "label": str(label),
                                "scores": {str(k): v for k, v in cell.items()},
                            }
                            for label, cell in mock_predict(self.spec, tokens)
                        ]
                    )
                return {"ok": True, "predictions": predictions}
            if op == "pos":
                return {
                    "ok": True,
                    "tags": [mock_pos(self.spec, s) for s in request["sentences"]],
                }
            if op == "similarity":
                return {
                    "ok": True,
                    "similarities": [
                        dice_similarity(a, b) for a, b in request["pairs"]
                    ],
                }
            return {"ok": False, "error": f"unknown op {op!r}"}
        except (KeyError, TypeError, ValueError) as exc:
            return {"ok": False, "error": f"malformed request: {exc}"}


def serve_stdio(spec: MockModelSpec) -> None:
    server = MockServer(spec)
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        try:
            request = json.loads(line)
        except json.JSONDecodeError as exc:
            reply = {"ok": False, "error": f"bad JSON: {exc}"}
        else:
            reply = server.handle(request)
        sys.stdout.write(json.dumps(reply, ensure_ascii=False) + "\n")
        sys.stdout.flush()


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        description="Serve a deterministic mock NER model over stdio"
    )
    parser.add_argument("--spec", required=True, help="path to a mock spec JSON file")
    args = parser.parse_args(argv)
    serve_stdio(MockModelSpec.load(args.spec))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
