"""Success semantics: per-token correctness and per-entity verdicts."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .corpus import EntitySpan
from .labels import Kind, Label


class Status(str, Enum):
    FULL = "full"
    PARTIAL = "partial"
    FAILED = "failed"


class ErrorClass(str, Enum):
    MISSED_ENTITY = "missed_entity"
    TYPE_ERROR = "type_error"


@dataclass(frozen=True)
class EntityVerdict:
    status: Status
    wrong_tokens: int
    total_tokens: int
    error_class: ErrorClass | None = None

    def __post_init__(self):
        if (self.error_class is not None) != (self.status is Status.FULL):
            raise ValueError("error_class is present exactly for full successes")


def token_correct(gold: Label, predicted: Label) -> bool:
    """Exact match, or the one-directional I -> B leniency within a type."""
    if predicted == gold:
        return True
    return (
        gold.kind is Kind.INSIDE
        and predicted.kind is Kind.BEGIN
        and predicted.entity_type == gold.entity_type
    )


def judge_entity(
    span: EntitySpan, gold: Sequence[Label], predicted: Sequence[Label]
) -> EntityVerdict:
    """Classify the attack outcome for one entity.

    Full: every span token mislabelled.  Partial: at least half (ceiling
    on odd lengths) but not all.  Full successes split into missed
    entities (every token predicted O) and type errors (any wrong label
    that names an entity type).
    """
    wrong = [
        i
        for i in range(span.start, span.end)
        if not token_correct(gold[i], predicted[i])
    ]
    total = len(span)
    if len(wrong) == total:
        if all(predicted[i].is_outside for i in wrong):
            error_class = ErrorClass.MISSED_ENTITY
        else:
            error_class = ErrorClass.TYPE_ERROR
        return EntityVerdict(Status.FULL, total, total, error_class)
    if 2 * len(wrong) >= total:
        return EntityVerdict(Status.PARTIAL, len(wrong), total)
    return EntityVerdict(Status.FAILED, len(wrong), total)
