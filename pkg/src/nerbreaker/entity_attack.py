"""Entity replacement attack: swap a mention for another of the same type."""

from __future__ import annotations

import random
from dataclasses import dataclass

from .adapter import AdapterEndpoint, SimilarityScorer
from .corpus import EntityInventory, EntitySpan, TaggedSentence
from .judge import EntityVerdict, Status, judge_entity, token_correct
from .labels import Label, Kind

ENTITY_POS = "NNP"


@dataclass(frozen=True)
class EntityAttackConfig:
    epsilon: float = 0.8
    max_candidates: int = 50
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.epsilon <= 1:
            raise ValueError("epsilon must be in (0, 1]")
        if self.max_candidates < 1:
            raise ValueError("max_candidates must be >= 1")


@dataclass
class EntityAttackResult:
    target: EntitySpan
    replacement: tuple[str, ...] | None
    verdict: EntityVerdict
    similarity: float | None
    candidates_tried: int
    queries_used: int
    adversarial: TaggedSentence | None = None
    adversarial_span: EntitySpan | None = None


def splice(
    sentence: TaggedSentence, span: EntitySpan, replacement: tuple[str, ...]
) -> tuple[TaggedSentence, EntitySpan]:
    """Replace the span's tokens with `replacement`, relabelling B-type, I-type...

    Tokens outside the span are untouched; sentence length changes by the
    surface length difference.  POS tags, when present, are kept outside
    the span and filled with the proper-noun tag inside.
    """
    if not replacement:
        raise ValueError("replacement surface must be non-empty")
    tokens = sentence.tokens[: span.start] + replacement + sentence.tokens[span.end :]
    labels = (
        sentence.gold_labels[: span.start]
        + (Label(Kind.BEGIN, span.entity_type),)
        + (Label(Kind.INSIDE, span.entity_type),) * (len(replacement) - 1)
        + sentence.gold_labels[span.end :]
    )
    pos = None
    if sentence.pos_tags is not None:
        pos = (
            sentence.pos_tags[: span.start]
            + (ENTITY_POS,) * len(replacement)
            + sentence.pos_tags[span.end :]
        )
    new_span = EntitySpan(
        span.start, span.start + len(replacement), span.entity_type, replacement
    )
    spliced = TaggedSentence(tokens, labels, pos, sentence.sentence_id)
    return spliced, new_span


class EntityAttacker:
    """Try sampled same-type replacements; keep the most similar one that fools."""

    def __init__(
        self,
        endpoint: AdapterEndpoint,
        inventory: EntityInventory,
        similarity: SimilarityScorer,
        cfg: EntityAttackConfig,
    ):
        self.endpoint = endpoint
        self.inventory = inventory
        self.similarity = similarity
        self.cfg = cfg

    def attack(self, sentence: TaggedSentence, span: EntitySpan) -> EntityAttackResult:
        queries_before = self.endpoint.query_count
        surfaces = [
            s for s in self.inventory.surfaces(span.entity_type) if s != span.surface
        ]
        if not surfaces:
            return self._failed(span, 0, 0)

        rng = random.Random(self.cfg.seed)
        k = min(self.cfg.max_candidates, len(surfaces))
        sampled = rng.sample(surfaces, k)

        spliced = [splice(sentence, span, surface) for surface in sampled]
        similarities = self.similarity.many(
            sentence.tokens, [s.tokens for s, _ in spliced]
        )
        survivors = [
            (candidate, new_span, sim)
            for (candidate, new_span), sim in zip(spliced, similarities)
            if sim >= self.cfg.epsilon
        ]
        if not survivors:
            return self._failed(span, 0, self.endpoint.query_count - queries_before)

        predictions = self.endpoint.predict([c.tokens for c, _, _ in survivors])

        best = None  # (similarity, candidate, new_span, predicted labels)
        for (candidate, new_span, sim), preds in zip(survivors, predictions):
            predicted = [p.predicted for p in preds]
            fooled = any(
                not token_correct(candidate.gold_labels[i], predicted[i])
                for i in range(new_span.start, new_span.end)
            )
            if fooled and (best is None or sim > best[0]):
                best = (sim, candidate, new_span, predicted)

        queries = self.endpoint.query_count - queries_before
        if best is None:
            return self._failed(span, len(survivors), queries)
        sim, candidate, new_span, predicted = best
        verdict = judge_entity(new_span, candidate.gold_labels, predicted)
        return EntityAttackResult(
            target=span,
            replacement=new_span.surface,
            verdict=verdict,
            similarity=sim,
            candidates_tried=len(survivors),
            queries_used=queries,
            adversarial=candidate,
            adversarial_span=new_span,
        )

    def _failed(self, span: EntitySpan, tried: int, queries: int) -> EntityAttackResult:
        return EntityAttackResult(
            target=span,
            replacement=None,
            verdict=EntityVerdict(Status.FAILED, 0, len(span)),
            similarity=None,
            candidates_tried=tried,
            queries_used=queries,
        )
