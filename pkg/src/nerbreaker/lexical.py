"""Counter-fitted word vectors: synonym queries, stopwords, fallback similarity."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import VectorLoadError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SynonymCandidate:
    word: str
    cosine: float


class VectorStore:
    """Unit-normalized word vectors with brute-force cosine neighbors.

    Lookups are lowercase.  Vectors are L2-normalized at load time, so a
    dot product is a cosine.
    """

    def __init__(self, words: Sequence[str], matrix: np.ndarray):
        if matrix.ndim != 2 or len(words) != matrix.shape[0]:
            raise ValueError("one vector row per word required")
        norms = np.linalg.norm(matrix, axis=1, keepdims=True)
        if not np.all(norms > 0):
            log.warning("%d zero vectors kept unnormalized", int((norms == 0).sum()))
        self._matrix = matrix / np.where(norms > 0, norms, 1.0)
        self._words = list(words)
        self._index = {w.lower(): i for i, w in enumerate(self._words)}

    @property
    def dimension(self) -> int:
        return self._matrix.shape[1]

    def __len__(self) -> int:
        return len(self._words)

    def __contains__(self, word: str) -> bool:
        return word.lower() in self._index

    def vector(self, word: str) -> np.ndarray | None:
        i = self._index.get(word.lower())
        return None if i is None else self._matrix[i]

    def synonyms(self, word: str, delta: float, cap: int) -> list[SynonymCandidate]:
        """Up to `cap` neighbors with cosine strictly above `delta`.

        Sorted by descending cosine, ties by word string; never contains
        the query word itself.  Unknown words yield an empty list.
        """
        if cap < 1:
            raise ValueError("cap must be >= 1")
        query = word.lower()
        i = self._index.get(query)
        if i is None:
            return []
        cosines = self._matrix @ self._matrix[i]
        candidates = [
            SynonymCandidate(self._words[j], float(cosines[j]))
            for j in np.flatnonzero(cosines > delta)
            if self._words[j].lower() != query
        ]
        candidates.sort(key=lambda c: (-c.cosine, c.word))
        return candidates[:cap]

    def fallback_similarity(self, a: Sequence[str], b: Sequence[str]) -> float:
        """Cosine of mean token vectors, affinely mapped from [-1, 1] to [0, 1].

        Stands in for an encoder endpoint: tokens missing from the
        vocabulary are ignored, and 0.5 (the image of cosine 0) is
        returned when either side has no usable tokens.
        """
        mean_a = self._mean_vector(a)
        mean_b = self._mean_vector(b)
        if mean_a is None or mean_b is None:
            return 0.5
        denom = np.linalg.norm(mean_a) * np.linalg.norm(mean_b)
        if denom == 0:
            return 0.5
        cosine = float(np.dot(mean_a, mean_b) / denom)
        return (min(1.0, max(-1.0, cosine)) + 1.0) / 2.0

    def _mean_vector(self, tokens: Sequence[str]) -> np.ndarray | None:
        rows = [self._index[t.lower()] for t in tokens if t.lower() in self._index]
        if not rows:
            return None
        return self._matrix[rows].mean(axis=0)


def load_vectors(
    path: str | Path, vocab_filter: Iterable[str] | None = None
) -> VectorStore:
    """Load whitespace-separated ``word v1 ... vd`` text into a store.

    Inconsistent dimensions raise :class:`VectorLoadError` with the line
    number; duplicate words keep the last occurrence with a warning.
    """
    keep = {w.lower() for w in vocab_filter} if vocab_filter is not None else None
    rows: dict[str, tuple[int, list[float]]] = {}
    dimension: int | None = None
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            parts = line.split()
            if not parts:
                continue
            word, values = parts[0], parts[1:]
            if dimension is None:
                dimension = len(values)
                if dimension == 0:
                    raise VectorLoadError("row has no vector values", line=lineno)
            elif len(values) != dimension:
                raise VectorLoadError(
                    f"expected {dimension} values, found {len(values)}", line=lineno
                )
            if keep is not None and word.lower() not in keep:
                continue
            if word in rows:
                log.warning("duplicate vector for %r, keeping the later one", word)
            try:
                rows[word] = (lineno, [float(v) for v in values])
            except ValueError:
                raise VectorLoadError("non-numeric vector value", line=lineno) from None
    words = list(rows)
    matrix = np.array([rows[w][1] for w in words], dtype=np.float64)
    if not words:
        matrix = matrix.reshape(0, dimension or 0)
    return VectorStore(words, matrix)


@lru_cache(maxsize=1)
def _stopwords() -> frozenset[str]:
    text = resources.files("nerbreaker").joinpath("data/stopwords.txt").read_text("utf-8")
    return frozenset(w for w in text.split("\n") if w)


def is_stopword(word: str) -> bool:
    """Membership in the bundled English stopword list, case-insensitive."""
    return word.lower() in _stopwords()


def match_case(original: str, replacement: str) -> str:
    """Capitalize the replacement when the original word was capitalized."""
    if original[:1].isupper():
        return replacement[:1].upper() + replacement[1:]
    return replacement
