"""Word-level score alignment for subword models.

The wire protocol is word level in, word level out; subword models are
aligned here by the first-subtoken convention: each word's score vector
is the score row of its first piece.
"""

from __future__ import annotations

from typing import Sequence


class AlignmentError(Exception):
    """Pieces do not reconstruct the words of the request sentence."""


def first_piece_rows(word_ids: Sequence[int | None], n_words: int) -> list[int]:
    """Index of the first piece of every word.

    `word_ids` maps each piece to its word index (None for special
    tokens), as produced by fast tokenizers.
    """
    first: list[int | None] = [None] * n_words
    seen = set()
    for piece_index, word_index in enumerate(word_ids):
        if word_index is None:
            continue
        if word_index >= n_words:
            raise AlignmentError(
                f"piece {piece_index} maps to word {word_index} of {n_words}"
            )
        if first[word_index] is None:
            first[word_index] = piece_index
        seen.add(word_index)
    missing = [i for i, f in enumerate(first) if f is None]
    if missing:
        raise AlignmentError(f"words without any pieces: {missing}")
    return first  # type: ignore[return-value]


def align_subtokens(word_ids: Sequence[int | None], piece_scores, n_words: int):
    """Word-level score matrix: one first-piece row per word."""
    rows = first_piece_rows(word_ids, n_words)
    return piece_scores[rows]
