"""IOB token labels and the canonical ordering used for deterministic argmax."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .errors import ParseError


class Kind(str, Enum):
    OUTSIDE = "O"
    BEGIN = "B"
    INSIDE = "I"


@dataclass(frozen=True, order=False)
class Label:
    """One IOB label: ``O``, ``B-<TYPE>`` or ``I-<TYPE>``.

    Outside labels carry no entity type; Begin/Inside always carry a
    non-empty one.
    """

    kind: Kind
    entity_type: str | None = None

    def __post_init__(self):
        if self.kind is Kind.OUTSIDE:
            if self.entity_type is not None:
                raise ValueError("Outside labels carry no entity type")
        elif not self.entity_type:
            raise ValueError(f"{self.kind.value}- labels need a non-empty entity type")

    @property
    def is_outside(self) -> bool:
        return self.kind is Kind.OUTSIDE

    def to_string(self) -> str:
        if self.kind is Kind.OUTSIDE:
            return "O"
        return f"{self.kind.value}-{self.entity_type}"

    def __str__(self) -> str:
        return self.to_string()

    @classmethod
    def parse(cls, text: str) -> "Label":
        if text == "O":
            return OUTSIDE
        if len(text) > 2 and text[1] == "-" and text[0] in ("B", "I"):
            return cls(Kind(text[0]), text[2:])
        raise ParseError(f"not an IOB label: {text!r}")

    def as_begin(self) -> "Label":
        """The B- version of this label (identity for O)."""
        if self.kind is Kind.OUTSIDE:
            return self
        return Label(Kind.BEGIN, self.entity_type)

    def as_inside(self) -> "Label":
        if self.kind is Kind.OUTSIDE:
            return self
        return Label(Kind.INSIDE, self.entity_type)


OUTSIDE = Label(Kind.OUTSIDE)


def canonical_tag_set(entity_types: list[str]) -> list[Label]:
    """Tag set in canonical order: ``O`` first, then B-/I- labels sorted by string.

    This order doubles as the argmax tie-break order, so ``O`` wins a
    score tie against every entity label.
    """
    tags = [OUTSIDE]
    for name in sorted(set(entity_types)):
        tags.append(Label(Kind.BEGIN, name))
    for name in sorted(set(entity_types)):
        tags.append(Label(Kind.INSIDE, name))
    return sorted(tags, key=tag_sort_key)


def tag_sort_key(label: Label) -> tuple[int, str]:
    # "O" sorts before any entity label; entity labels sort by serialized form.
    return (0 if label.is_outside else 1, label.to_string())


def argmax_label(scores: dict[Label, float], order: list[Label]) -> Label:
    """Highest-scoring label; ties broken by position in `order`."""
    best = None
    best_rank = None
    rank = {label: i for i, label in enumerate(order)}
    for label, score in scores.items():
        key = (-score, rank[label])
        if best_rank is None or key < best_rank:
            best_rank = key
            best = label
    if best is None:
        raise ValueError("empty score map")
    return best
