"""Independent oracles and generators shared by the test suite.

Everything here deliberately re-derives results from first principles
(direct rule evaluation, enumeration, pair counting) so the production
code is checked against a second, separately written path.
"""

from __future__ import annotations

import random
from itertools import product

from nerbreaker.corpus import EntitySpan, TaggedSentence
from nerbreaker.judge import token_correct
from nerbreaker.labels import Kind, Label, OUTSIDE
from nerbreaker.mock import MockModelSpec, mock_predict

ENTITY_TYPES = ["LOC", "PER", "ORG"]


def random_valid_sentence(rng: random.Random, sentence_id: str, with_pos=False) -> TaggedSentence:
    """A random IOB-valid sentence of 1..14 tokens."""
    n = rng.randint(1, 14)
    tokens = tuple(f"w{rng.randint(0, 30)}" for _ in range(n))
    labels: list[Label] = []
    i = 0
    while i < n:
        if rng.random() < 0.3:
            etype = rng.choice(ENTITY_TYPES)
            length = min(rng.randint(1, 3), n - i)
            labels.append(Label(Kind.BEGIN, etype))
            labels.extend(Label(Kind.INSIDE, etype) for _ in range(length - 1))
            i += length
        else:
            labels.append(OUTSIDE)
            i += 1
    pos = None
    if with_pos:
        pos = tuple(rng.choice(["NN", "VBD", "DT", "JJ"]) for _ in range(n))
    return TaggedSentence(tokens, tuple(labels), pos, sentence_id)


def scan_spans_naive(sentence: TaggedSentence) -> list[tuple[int, int, str]]:
    """Two-pass span scanner: mark begins, then grow each run."""
    begins = [
        i for i, l in enumerate(sentence.gold_labels) if l.kind is Kind.BEGIN
    ]
    spans = []
    for start in begins:
        etype = sentence.gold_labels[start].entity_type
        end = start + 1
        while (
            end < len(sentence)
            and sentence.gold_labels[end].kind is Kind.INSIDE
            and sentence.gold_labels[end].entity_type == etype
        ):
            end += 1
        spans.append((start, end, etype))
    return spans


def judge_truth_table(span_len: int, gold: list[Label], predicted: list[Label]) -> tuple[str, str | None]:
    """Literal restatement of the verdict rules, kept separate on purpose."""
    wrong = []
    for g, p in zip(gold, predicted):
        ok = p == g or (
            g.kind is Kind.INSIDE
            and p.kind is Kind.BEGIN
            and p.entity_type == g.entity_type
        )
        if not ok:
            wrong.append(p)
    half = (span_len + 1) // 2  # ceiling
    if len(wrong) == span_len:
        if all(p.is_outside for p in wrong):
            return "full", "missed_entity"
        return "full", "type_error"
    if len(wrong) >= half:
        return "partial", None
    return "failed", None


def all_label_assignments(tag_set: list[Label], length: int):
    return product(tag_set, repeat=length)


def importance_reference(
    spec: MockModelSpec, sentence: TaggedSentence, span: EntitySpan, position: int
) -> float:
    """Word importance recomputed from scratch against the mock directly."""
    base = mock_predict(spec, sentence.tokens)
    deleted = sentence.tokens[:position] + sentence.tokens[position + 1 :]
    variant = mock_predict(spec, deleted)
    total = 0.0
    for t in range(span.start, span.end):
        gold = sentence.gold_labels[t]
        shifted = t - 1 if t > position else t
        base_label, base_scores = base[t]
        var_label, var_scores = variant[shifted]
        total += base_scores[gold] - var_scores[gold]
        if not token_correct(gold, var_label):
            total += var_scores[var_label] - base_scores[var_label]
    return total


def cascade_reference(unresolved, candidates):
    """Brute-force the synonym selection cascade.

    `candidates` is a list of dicts with keys: similarity, flips (set of
    span positions), leftover_sum (summed correct scores of unflipped
    unresolved tokens), full_sum (summed correct scores of all unresolved
    tokens), current_sum.  Returns the winning index or None.
    """
    full = [i for i, c in enumerate(candidates) if set(c["flips"]) == set(unresolved)]
    if full:
        best = full[0]
        for i in full[1:]:
            if candidates[i]["similarity"] > candidates[best]["similarity"]:
                best = i
        return best
    some = [i for i, c in enumerate(candidates) if c["flips"]]
    if some:
        most = max(len(candidates[i]["flips"]) for i in some)
        tied = [i for i in some if len(candidates[i]["flips"]) == most]
        best = tied[0]
        for i in tied[1:]:
            if candidates[i]["leftover_sum"] < candidates[best]["leftover_sum"]:
                best = i
        return best
    reducers = [
        i for i, c in enumerate(candidates) if c["full_sum"] < c["current_sum"]
    ]
    if reducers:
        best = reducers[0]
        for i in reducers[1:]:
            if candidates[i]["full_sum"] < candidates[best]["full_sum"]:
                best = i
        return best
    return None


def table_model_handler(tags: list[str], table: dict, pos: dict | None = None):
    """Protocol handler serving per-token score dicts from a lookup table.

    `table` maps tuple(tokens) -> list of {tag: score} per token; the
    predicted label is the argmax under tag-set order.  Similarity is
    dice; POS comes from `pos` with an NN default.
    """
    from nerbreaker.mock import dice_similarity

    def argmax(scores: dict) -> str:
        return max(tags, key=lambda t: (scores[t], -tags.index(t)))

    def handler(request: dict) -> dict:
        op = request.get("op")
        if op == "handshake":
            return {
                "ok": True,
                "protocol": "1.0",
                "model_id": "table",
                "tag_set": tags,
                "capabilities": ["predict", "pos", "similarity"],
                "deterministic": True,
            }
        if op == "predict":
            rows = []
            for tokens in request["sentences"]:
                cells = table[tuple(tokens)]
                rows.append(
                    [{"label": argmax(c), "scores": c} for c in cells]
                )
            return {"ok": True, "predictions": rows}
        if op == "pos":
            lex = pos or {}
            return {
                "ok": True,
                "tags": [[lex.get(t, "NN") for t in s] for s in request["sentences"]],
            }
        if op == "similarity":
            return {
                "ok": True,
                "similarities": [dice_similarity(a, b) for a, b in request["pairs"]],
            }
        return {"ok": False, "error": f"unknown op {op!r}"}

    return handler


def u_statistic_by_pairs(x, y) -> float:
    """U of the first sample by direct pair counting."""
    u = 0.0
    for a in x:
        for b in y:
            if a > b:
                u += 1.0
            elif a == b:
                u += 0.5
    return u


def simulate_context_attack(spec, store, sentence: TaggedSentence, span: EntitySpan, cfg):
    """Literal step-by-step re-execution of the greedy context attack.

    Uses only direct mock evaluation plus the other reference helpers in
    this module; returns (status string, perturbed positions in order).
    """
    from nerbreaker.corpus import extract_spans
    from nerbreaker.lexical import is_stopword, match_case
    from nerbreaker.mock import dice_similarity, mock_pos

    in_entity = set()
    for s in extract_spans(sentence):
        in_entity.update(range(s.start, s.end))
    eligible = [
        i
        for i, tok in enumerate(sentence.tokens)
        if i not in in_entity and not is_stopword(tok)
    ]
    ranked = sorted(
        eligible,
        key=lambda p: (-importance_reference(spec, sentence, span, p), p),
    )

    gold = sentence.gold_labels
    current = list(sentence.tokens)
    unresolved = set(range(span.start, span.end))
    applied: list[int] = []

    def correct_scores(tokens, positions):
        preds = mock_predict(spec, tokens)
        return sum(preds[t][1][gold[t]] for t in positions)

    for position in ranked:
        word = current[position]
        synonyms = store.synonyms(word, cfg.delta, cfg.max_synonyms)
        original_tag = mock_pos(spec, current)[position]
        candidates = []
        for cand in synonyms:
            surface = match_case(word, cand.word)
            if surface == word:
                continue
            tokens = current[:]
            tokens[position] = surface
            if mock_pos(spec, tokens)[position] != original_tag:
                continue
            sim = dice_similarity(sentence.tokens, tokens)
            if sim < cfg.epsilon:
                continue
            preds = mock_predict(spec, tokens)
            flips = {
                t for t in unresolved if not token_correct(gold[t], preds[t][0])
            }
            candidates.append(
                {
                    "tokens": tokens,
                    "similarity": sim,
                    "flips": flips,
                    "leftover_sum": sum(
                        preds[t][1][gold[t]] for t in unresolved - flips
                    ),
                    "full_sum": sum(preds[t][1][gold[t]] for t in unresolved),
                    "current_sum": correct_scores(current, unresolved),
                }
            )
        winner = cascade_reference(unresolved, candidates)
        if winner is None:
            continue
        chosen = candidates[winner]
        current = chosen["tokens"]
        applied.append(position)
        unresolved -= chosen["flips"]
        if not unresolved:
            break

    final = mock_predict(spec, current)
    status, _ = judge_truth_table(
        len(span),
        list(gold[span.start : span.end]),
        [final[t][0] for t in range(span.start, span.end)],
    )
    return status, applied
