"""CoNLL-style column corpora: parsing, entity spans, inventories, eval subsets."""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Protocol, Sequence

from .errors import ConfigurationError, ParseError
from .labels import Kind, Label, OUTSIDE

DOCSTART = "-DOCSTART-"


@dataclass(frozen=True)
class ColumnSpec:
    """Which whitespace-separated column holds what.

    ``label`` of ``None`` means the last column.  ``pos`` of ``"auto"``
    means column 1 when the file has three or more columns, else absent.
    """

    token: int = 0
    label: int | None = None
    pos: int | None | str = "auto"

    def resolve(self, n_columns: int) -> tuple[int, int, int | None]:
        label = (n_columns - 1) if self.label is None else self.label
        pos = self.pos
        if pos == "auto":
            pos = 1 if n_columns >= 3 else None
        for idx in (self.token, label) + ((pos,) if pos is not None else ()):
            if not 0 <= idx < n_columns:
                raise ParseError(
                    f"column spec refers to column {idx} but rows have {n_columns}"
                )
        if pos is not None and pos in (self.token, label):
            pos = None
        return self.token, label, pos


@dataclass(frozen=True)
class TaggedSentence:
    """A pre-tokenized sentence with gold IOB labels and optional POS tags."""

    tokens: tuple[str, ...]
    gold_labels: tuple[Label, ...]
    pos_tags: tuple[str, ...] | None = None
    sentence_id: str = ""

    def __post_init__(self):
        if len(self.tokens) == 0:
            raise ValueError("a sentence needs at least one token")
        if len(self.gold_labels) != len(self.tokens):
            raise ValueError("tokens and gold labels differ in length")
        if self.pos_tags is not None and len(self.pos_tags) != len(self.tokens):
            raise ValueError("tokens and POS tags differ in length")

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class EntitySpan:
    """A maximal gold entity mention: token range [start, end) of one type."""

    start: int
    end: int
    entity_type: str
    surface: tuple[str, ...]

    def __post_init__(self):
        if not 0 <= self.start < self.end:
            raise ValueError(f"bad span bounds [{self.start}, {self.end})")
        if len(self.surface) != self.end - self.start:
            raise ValueError("surface length does not match span bounds")

    def __len__(self) -> int:
        return self.end - self.start


class EntityInventory:
    """Per-type multiset of entity surfaces seen in a corpus."""

    def __init__(self):
        self.by_type: dict[str, Counter[tuple[str, ...]]] = {}

    def add(self, entity_type: str, surface: tuple[str, ...], count: int = 1) -> None:
        self.by_type.setdefault(entity_type, Counter())[surface] += count

    def surfaces(self, entity_type: str) -> list[tuple[str, ...]]:
        """Distinct surfaces of one type, in deterministic (sorted) order."""
        return sorted(self.by_type.get(entity_type, ()))

    def count(self, entity_type: str, surface: tuple[str, ...]) -> int:
        return self.by_type.get(entity_type, Counter())[surface]

    def types(self) -> list[str]:
        return sorted(self.by_type)

    def __len__(self) -> int:
        return sum(len(c) for c in self.by_type.values())


def normalize_iob(labels: Sequence[Label], strict: bool = False) -> tuple[Label, ...]:
    """Repair (lenient) or reject (strict) dangling Inside labels.

    An Inside that follows Outside, the sentence start, or a label of a
    different type is promoted to Begin; files in the wild mix IOB1 and
    IOB2 conventions.
    """
    fixed: list[Label] = []
    prev = OUTSIDE
    for i, label in enumerate(labels):
        if (
            label.kind is Kind.INSIDE
            and (prev.is_outside or prev.entity_type != label.entity_type)
        ):
            if strict:
                raise ParseError(f"dangling Inside label at token {i}: {label}")
            label = label.as_begin()
        fixed.append(label)
        prev = label
    return tuple(fixed)


def is_iob_valid(labels: Sequence[Label]) -> bool:
    prev = OUTSIDE
    for label in labels:
        if label.kind is Kind.INSIDE and (
            prev.is_outside or prev.entity_type != label.entity_type
        ):
            return False
        prev = label
    return True


def extract_spans(sentence: TaggedSentence) -> list[EntitySpan]:
    """Maximal B,I* runs of the gold labels, ordered by start index."""
    spans: list[EntitySpan] = []
    labels = sentence.gold_labels
    i = 0
    while i < len(labels):
        if labels[i].kind is Kind.BEGIN:
            j = i + 1
            while (
                j < len(labels)
                and labels[j].kind is Kind.INSIDE
                and labels[j].entity_type == labels[i].entity_type
            ):
                j += 1
            spans.append(
                EntitySpan(i, j, labels[i].entity_type, tuple(sentence.tokens[i:j]))
            )
            i = j
        else:
            i += 1
    return spans


def parse_conll(
    text: str,
    column_spec: ColumnSpec | None = None,
    strict: bool = False,
    id_prefix: str = "s",
) -> list[TaggedSentence]:
    """Parse blank-line separated column text into tagged sentences.

    ``-DOCSTART-`` rows are skipped.  Every data row must have the same
    number of columns; violations raise :class:`ParseError` with the
    offending line number.
    """
    spec = column_spec or ColumnSpec()
    sentences: list[TaggedSentence] = []
    rows: list[tuple[list[str], int]] = []
    n_columns: int | None = None

    def flush() -> None:
        nonlocal rows
        if not rows:
            return
        token_col, label_col, pos_col = spec.resolve(n_columns)
        tokens = tuple(r[token_col] for r, _ in rows)
        labels = []
        for r, lineno in rows:
            try:
                labels.append(Label.parse(r[label_col]))
            except ParseError as exc:
                raise ParseError(str(exc), line=lineno) from None
        pos = tuple(r[pos_col] for r, _ in rows) if pos_col is not None else None
        gold = normalize_iob(labels, strict=strict)
        sentences.append(
            TaggedSentence(tokens, gold, pos, f"{id_prefix}{len(sentences)}")
        )
        rows = []

    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            flush()
            continue
        cols = stripped.split()
        if cols[0] == DOCSTART:
            continue
        if n_columns is None:
            n_columns = len(cols)
        elif len(cols) != n_columns:
            raise ParseError(
                f"expected {n_columns} columns, found {len(cols)}", line=lineno
            )
        rows.append((cols, lineno))
    flush()
    return sentences


def serialize_conll(sentences: Iterable[TaggedSentence]) -> str:
    """Emit the column format :func:`parse_conll` reads back unchanged.

    The POS column is written only when every sentence carries POS tags,
    so the default :class:`ColumnSpec` round-trips.
    """
    sentences = list(sentences)
    with_pos = all(s.pos_tags is not None for s in sentences)
    blocks = []
    for s in sentences:
        lines = []
        for i, token in enumerate(s.tokens):
            if with_pos:
                lines.append(f"{token} {s.pos_tags[i]} {s.gold_labels[i]}")
            else:
                lines.append(f"{token} {s.gold_labels[i]}")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + ("\n" if blocks else "")


def build_inventory(corpus: Iterable[TaggedSentence]) -> EntityInventory:
    """Count every (type, surface) span occurrence in the corpus."""
    inventory = EntityInventory()
    for sentence in corpus:
        for span in extract_spans(sentence):
            inventory.add(span.entity_type, span.surface)
    return inventory


class PosTagger(Protocol):
    def pos(self, sentences: list[list[str]]) -> list[list[str]]: ...


def is_verb_tag(tag: str) -> bool:
    # Penn treebank verbs start with VB; the universal tag set uses VERB.
    upper = tag.upper()
    return upper.startswith("VB") or upper == "VERB"


def select_eligible(
    corpus: Sequence[TaggedSentence],
    n: int,
    seed: int,
    pos_source: PosTagger | None = None,
) -> list[TaggedSentence]:
    """Uniform, seed-deterministic sample of sentences with >=1 entity and >=1 verb.

    POS tags come from the data when present, otherwise from ``pos_source``.
    The returned sentences keep their corpus order.
    """
    untagged = [i for i, s in enumerate(corpus) if s.pos_tags is None]
    extra_tags: dict[int, tuple[str, ...]] = {}
    if untagged:
        if pos_source is None:
            raise ConfigurationError(
                "corpus has sentences without POS tags and no POS-capable "
                "adapter was supplied"
            )
        tags = pos_source.pos([list(corpus[i].tokens) for i in untagged])
        extra_tags = {i: tuple(t) for i, t in zip(untagged, tags)}

    eligible: list[int] = []
    for idx, sentence in enumerate(corpus):
        pos_tags = sentence.pos_tags or extra_tags[idx]
        if not any(is_verb_tag(t) for t in pos_tags):
            continue
        if not extract_spans(sentence):
            continue
        eligible.append(idx)

    k = min(n, len(eligible))
    chosen = sorted(random.Random(seed).sample(eligible, k))
    return [corpus[i] for i in chosen]
