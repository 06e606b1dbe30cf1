"""Entity context attack: importance-ranked greedy synonym substitution.

Out-of-mention words are ranked by how much deleting them degrades the
model's scores for the entity's correct labels, then visited once each.
At every visited word the synonym candidates are POS- and
similarity-filtered, scored in one batch, and the best one is chosen by
a fixed cascade: full flip of the still-correct entity tokens beats the
most per-token flips, which beats the largest reduction of the summed
correct-label scores.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Sequence

from .adapter import AdapterEndpoint, SimilarityScorer, TokenPrediction
from .corpus import EntitySpan, TaggedSentence, extract_spans
from .judge import EntityVerdict, judge_entity, token_correct
from .lexical import VectorStore, is_stopword, match_case


@dataclass(frozen=True)
class ContextAttackConfig:
    epsilon: float = 0.8
    delta: float = 0.5
    max_synonyms: int = 50
    use_importance_ranking: bool = True
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.epsilon <= 1:
            raise ValueError("epsilon must be in (0, 1]")
        if not -1 <= self.delta < 1:
            raise ValueError("delta must be in [-1, 1)")
        if self.max_synonyms < 1:
            raise ValueError("max_synonyms must be >= 1")


@dataclass(frozen=True)
class ImportanceEntry:
    position: int
    importance: float | None  # None when ranking is ablated


@dataclass(frozen=True)
class Perturbation:
    position: int
    original: str
    replacement: str
    rank: int  # 1-based application order


@dataclass(frozen=True)
class CandidateEval:
    """A synonym that survived both filters, with its filter evidence."""

    replacement: str
    cosine: float
    tokens: tuple[str, ...]
    similarity: float


@dataclass
class ContextAttackResult:
    target: EntitySpan
    perturbations: list[Perturbation]
    verdict: EntityVerdict
    similarity: float
    words_perturbed_pct: float
    out_of_mention_count: int
    eligible_count: int
    queries_used: int
    adversarial: TaggedSentence | None = None


class ContextAttacker:
    def __init__(
        self,
        endpoint: AdapterEndpoint,
        store: VectorStore,
        similarity: SimilarityScorer,
        cfg: ContextAttackConfig,
    ):
        self.endpoint = endpoint
        self.store = store
        self.similarity = similarity
        self.cfg = cfg

    # -- step 1: word importance ------------------------------------------

    def token_importance(
        self,
        sentence: TaggedSentence,
        span: EntitySpan,
        position: int,
        _cache: dict | None = None,
    ) -> float:
        """Summed importance of the word at `position` for the span's labels.

        For each entity token: the drop in the correct label's raw score
        caused by deleting the word; when the deletion flips the token to
        an incorrect label, the gain in that label's raw score is added.
        """
        if span.start <= position < span.end:
            raise ValueError("importance is defined for out-of-mention words only")
        cache = _cache if _cache is not None else {}
        if "base" not in cache:
            cache["base"] = self.endpoint.predict([sentence.tokens])[0]
        if position not in cache:
            deleted = sentence.tokens[:position] + sentence.tokens[position + 1 :]
            cache[position] = self.endpoint.predict([deleted])[0]
        base: list[TokenPrediction] = cache["base"]
        variant: list[TokenPrediction] = cache[position]

        total = 0.0
        for t in range(span.start, span.end):
            gold = sentence.gold_labels[t]
            shifted = t - 1 if t > position else t
            drop = base[t].score(gold) - variant[shifted].score(gold)
            after = variant[shifted].predicted
            if token_correct(gold, after):
                total += drop
            else:
                total += drop + variant[shifted].score(after) - base[t].score(after)
        return total

    def eligible_positions(self, sentence: TaggedSentence) -> list[int]:
        """Out-of-mention, non-stopword token positions."""
        in_entity = set()
        for span in extract_spans(sentence):
            in_entity.update(range(span.start, span.end))
        return [
            i
            for i, token in enumerate(sentence.tokens)
            if i not in in_entity and not is_stopword(token)
        ]

    def rank_words(
        self, sentence: TaggedSentence, span: EntitySpan, _cache: dict | None = None
    ) -> list[ImportanceEntry]:
        """Attack order over eligible positions.

        Importance-ranked (descending, ties by position) by default; a
        seeded shuffle when ranking is ablated.  Non-positive importances
        stay in the ranking: exhaustion, not thresholding.
        """
        positions = self.eligible_positions(sentence)
        if not self.cfg.use_importance_ranking:
            shuffled = positions[:]
            random.Random(self.cfg.seed).shuffle(shuffled)
            return [ImportanceEntry(p, None) for p in shuffled]

        cache = _cache if _cache is not None else {}
        # One batched round trip for the baseline plus every deletion variant.
        missing = [p for p in positions if p not in cache]
        batch = [] if "base" in cache else [list(sentence.tokens)]
        batch += [
            list(sentence.tokens[:p] + sentence.tokens[p + 1 :]) for p in missing
        ]
        if batch:
            replies = self.endpoint.predict(batch)
            if "base" not in cache:
                cache["base"] = replies.pop(0)
            for p, reply in zip(missing, replies):
                cache[p] = reply

        entries = [
            ImportanceEntry(p, self.token_importance(sentence, span, p, cache))
            for p in positions
        ]
        entries.sort(key=lambda e: (-e.importance, e.position))
        return entries

    # -- steps 2+3: synonym gathering and filtering ------------------------

    def candidate_synonyms(
        self,
        current: Sequence[str],
        position: int,
        original: Sequence[str],
        current_pos_tags: Sequence[str] | None = None,
    ) -> list[CandidateEval]:
        """Synonyms of the word at `position` that keep its POS tag and epsilon.

        POS tags are taken in context on each perturbed sentence and
        compared with the word's tag in the current sentence; sentence
        similarity is always measured against the original sentence.
        """
        word = current[position]
        synonyms = self.store.synonyms(word, self.cfg.delta, self.cfg.max_synonyms)
        if not synonyms:
            return []

        variants: list[tuple[str, float, list[str]]] = []
        for cand in synonyms:
            surface = match_case(word, cand.word)
            if surface == word:
                continue
            tokens = list(current)
            tokens[position] = surface
            variants.append((surface, cand.cosine, tokens))
        if not variants:
            return []

        if current_pos_tags is None:
            current_pos_tags = self.endpoint.pos([list(current)])[0]
        original_tag = current_pos_tags[position]
        tag_rows = self.endpoint.pos([tokens for _, _, tokens in variants])
        variants = [
            v for v, tags in zip(variants, tag_rows) if tags[position] == original_tag
        ]
        if not variants:
            return []

        sims = self.similarity.many(original, [tokens for _, _, tokens in variants])
        return [
            CandidateEval(surface, cosine, tuple(tokens), sim)
            for (surface, cosine, tokens), sim in zip(variants, sims)
            if sim >= self.cfg.epsilon
        ]

    # -- step 4: the selection cascade --------------------------------------

    def select_synonym(
        self,
        span: EntitySpan,
        gold: Sequence,
        unresolved: frozenset[int],
        candidates: Sequence[CandidateEval],
        current_predictions: Sequence[TokenPrediction],
    ) -> tuple[CandidateEval, list[TokenPrediction], frozenset[int]] | None:
        """Pick the replacement per the decision cascade, or None.

        (a) some candidate flips every unresolved token: highest sentence
        similarity wins; (b) some candidate flips at least one: most flips,
        then the lowest summed correct-label score over the tokens it
        leaves correct; (c) some candidate strictly reduces the summed
        correct-label scores: the strongest reducer; (d) otherwise nothing.
        Ties always break toward the earlier candidate.
        """
        if not candidates:
            return None
        predictions = self.endpoint.predict([c.tokens for c in candidates])

        current_sum = sum(current_predictions[t].score(gold[t]) for t in unresolved)
        evaluated = []
        for cand, preds in zip(candidates, predictions):
            flips = frozenset(
                t for t in unresolved if not token_correct(gold[t], preds[t].predicted)
            )
            leftover_sum = sum(
                preds[t].score(gold[t]) for t in unresolved - flips
            )
            evaluated.append((cand, preds, flips, leftover_sum))

        full = [e for e in evaluated if e[2] == unresolved]
        if full:
            best = max(full, key=lambda e: e[0].similarity)
            return best[0], best[1], best[2]

        partial = [e for e in evaluated if e[2]]
        if partial:
            most = max(len(e[2]) for e in partial)
            best = min(
                (e for e in partial if len(e[2]) == most), key=lambda e: e[3]
            )
            return best[0], best[1], best[2]

        reducers = [e for e in evaluated if e[3] < current_sum]
        if reducers:
            best = min(reducers, key=lambda e: e[3])
            return best[0], best[1], best[2]
        return None

    # -- the full attack -----------------------------------------------------

    def attack(
        self,
        sentence: TaggedSentence,
        span: EntitySpan,
        baseline: list[TokenPrediction] | None = None,
    ) -> ContextAttackResult:
        """Run the ranked word loop until the entity is fully flipped.

        The ranking is computed once on the original sentence; filters and
        predictions run on the cumulatively perturbed sentence; similarity
        is always measured against the original.
        """
        queries_before = self.endpoint.query_count
        cache: dict = {}
        if baseline is not None:
            cache["base"] = baseline

        gold = sentence.gold_labels
        ranking = self.rank_words(sentence, span, cache)
        if "base" not in cache:
            cache["base"] = self.endpoint.predict([sentence.tokens])[0]

        out_of_mention = len(sentence) - sum(
            len(s) for s in extract_spans(sentence)
        )
        current = list(sentence.tokens)
        current_predictions = cache["base"]
        unresolved = frozenset(range(span.start, span.end))
        perturbations: list[Perturbation] = []

        for entry in ranking:
            word = current[entry.position]
            candidates = self.candidate_synonyms(current, entry.position, sentence.tokens)
            if not candidates:
                continue
            chosen = self.select_synonym(
                span, gold, unresolved, candidates, current_predictions
            )
            if chosen is None:
                continue
            cand, predictions, flips = chosen
            current[entry.position] = cand.replacement
            perturbations.append(
                Perturbation(entry.position, word, cand.replacement, len(perturbations) + 1)
            )
            current_predictions = list(predictions)
            unresolved = unresolved - flips
            if not unresolved:
                break

        predicted = [p.predicted for p in current_predictions]
        verdict = judge_entity(span, gold, predicted)
        if perturbations:
            similarity = self.similarity.many(sentence.tokens, [current])[0]
            adversarial = TaggedSentence(
                tuple(current), gold, None, sentence.sentence_id
            )
        else:
            similarity = 1.0
            adversarial = None
        pct = 100.0 * len(perturbations) / out_of_mention if out_of_mention else 0.0
        return ContextAttackResult(
            target=span,
            perturbations=perturbations,
            verdict=verdict,
            similarity=similarity,
            words_perturbed_pct=pct,
            out_of_mention_count=out_of_mention,
            eligible_count=len(ranking),
            queries_used=self.endpoint.query_count - queries_before,
            adversarial=adversarial,
        )
