"""Aggregate attack records into the report metrics and analyses."""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import mean, median
from typing import Sequence

from .corpus import EntityInventory
from .errors import ConfigurationError
from .judge import ErrorClass, Status
from .records import AttackRecord


@dataclass
class MetricsReport:
    mode: str
    model_id: str
    n_entities_correct_originally: int
    n_entities_attacked: int
    n_aborted: int
    success_rate_pct: float
    partial_success_rate_pct: float
    missed_entity_pct: float
    type_error_pct: float
    median_similarity: float | None
    words_perturbed_pct: float | None
    single_change_pct: float | None

    def rows(self) -> list[tuple[str, str]]:
        def pct(v):
            return "-" if v is None else f"{v:.1f}"

        def num(v):
            return "-" if v is None else f"{v:.3f}"

        return [
            ("Entities correct originally", str(self.n_entities_correct_originally)),
            ("Entities attacked", str(self.n_entities_attacked)),
            ("Aborted attacks", str(self.n_aborted)),
            ("Success rate (%)", pct(self.success_rate_pct)),
            ("-- Missed entity (%)", pct(self.missed_entity_pct)),
            ("-- Entity type error (%)", pct(self.type_error_pct)),
            ("Partial success rate (%)", pct(self.partial_success_rate_pct)),
            ("Median semantic similarity", num(self.median_similarity)),
            ("Words perturbed (%)", pct(self.words_perturbed_pct)),
            ("Single-change successes (%)", pct(self.single_change_pct)),
        ]


def aggregate(records: Sequence[AttackRecord]) -> MetricsReport:
    """Compute the metric suite for one (model, mode, config) cell.

    Success counts full verdicts for context attacks and any emitted
    replacement for entity attacks; the missed/type split covers full
    successes only.  Rates use every initially-correct entity (every
    record) as the denominator.
    """
    modes = {r.mode for r in records}
    if len(modes) > 1:
        raise ValueError(f"records mix modes: {sorted(modes)}")
    mode = modes.pop() if modes else "entity"
    model_ids = {r.model_id for r in records}
    model_id = model_ids.pop() if len(model_ids) == 1 else "mixed"

    n = len(records)
    ok = [r for r in records if r.ok]
    if n == 0:
        return MetricsReport(mode, model_id, 0, 0, 0, 0.0, 0.0, 0.0, 0.0, None, None, None)

    successes = [r for r in ok if r.succeeded]
    verdicts = [r.verdict for r in ok]
    full = [v for v in verdicts if v.status is Status.FULL]
    n_partial = sum(1 for v in verdicts if v.status is Status.PARTIAL)
    n_missed = sum(1 for v in full if v.error_class is ErrorClass.MISSED_ENTITY)

    missed_pct = 100.0 * n_missed / len(full) if full else 0.0
    type_pct = 100.0 * (len(full) - n_missed) / len(full) if full else 0.0

    sims = [r.emitted_similarity for r in ok if r.emitted_similarity is not None]
    perturbed = [
        r.context_result.words_perturbed_pct
        for r in ok
        if r.context_result is not None and r.context_result.perturbations
    ]
    fooled = [
        r for r in ok if r.verdict.status in (Status.FULL, Status.PARTIAL)
    ]
    single = (
        100.0 * sum(1 for r in fooled if r.n_changes == 1) / len(fooled)
        if fooled
        else None
    )

    return MetricsReport(
        mode=mode,
        model_id=model_id,
        n_entities_correct_originally=n,
        n_entities_attacked=len(ok),
        n_aborted=n - len(ok),
        success_rate_pct=100.0 * len(successes) / n,
        partial_success_rate_pct=100.0 * n_partial / n,
        missed_entity_pct=missed_pct,
        type_error_pct=type_pct,
        median_similarity=median(sims) if sims else None,
        words_perturbed_pct=mean(perturbed) if perturbed else None,
        single_change_pct=single,
    )


def distance_histogram(records: Sequence[AttackRecord]) -> dict[int, int]:
    """Signed token distance of each perturbation to the entity boundary.

    Covers perturbations of full or partial context successes; positions
    left of the span measure to its start (negative), positions right of
    it to its last token (positive), in original-sentence coordinates.
    """
    histogram: dict[int, int] = {}
    for record in records:
        result = record.context_result
        if result is None or not record.ok:
            continue
        if result.verdict.status not in (Status.FULL, Status.PARTIAL):
            continue
        for p in result.perturbations:
            span = record.span
            if p.position < span.start:
                d = p.position - span.start
            else:
                d = p.position - (span.end - 1)
            histogram[d] = histogram.get(d, 0) + 1
    return dict(sorted(histogram.items()))


def histogram_csv(histogram: dict[int, int]) -> str:
    lines = ["distance,count"]
    lines += [f"{d},{c}" for d, c in sorted(histogram.items())]
    return "\n".join(lines) + "\n"


def _rank(values: Sequence[float]) -> list[float]:
    """Fractional ranks (ties share the mean rank), 1-based."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        shared = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = shared
        i = j + 1
    return ranks


def mann_whitney_u(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Two-sided Mann-Whitney U with tie-corrected normal approximation.

    Returns (U of the first sample, p).  U1 = R1 - n1(n1+1)/2 over joint
    fractional ranks; z uses a 0.5 continuity correction and the variance
    n1*n2/12 * ((n+1) - sum(t^3-t)/(n(n-1))) with t the tie-group sizes.
    """
    n1, n2 = len(x), len(y)
    if n1 == 0 or n2 == 0:
        raise ValueError("both samples must be non-empty")
    joint = list(x) + list(y)
    ranks = _rank(joint)
    u1 = sum(ranks[:n1]) - n1 * (n1 + 1) / 2.0

    n = n1 + n2
    tie_sum = 0.0
    for value in set(joint):
        t = joint.count(value)
        tie_sum += t**3 - t
    variance = n1 * n2 / 12.0 * ((n + 1) - tie_sum / (n * (n - 1)))
    if variance == 0:
        return u1, 1.0
    big_u = max(u1, n1 * n2 - u1)
    z = (big_u - n1 * n2 / 2.0 - 0.5) / math.sqrt(variance)
    p = 2.0 * (1.0 - _norm_cdf(z))
    return u1, min(1.0, max(0.0, p))


def _norm_cdf(z: float) -> float:
    return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))


@dataclass
class FrequencyComparison:
    median_original: float | None
    median_replacement: float | None
    u_statistic: float | None
    p_value: float | None
    n: int = 0


def frequency_comparison(
    records: Sequence[AttackRecord], inventory: EntityInventory
) -> FrequencyComparison:
    """Corpus frequency of original vs chosen replacement entities.

    Uses successful entity-mode records; the inventory should be the one
    the replacements were drawn from (train+dev by default).
    """
    originals: list[float] = []
    replacements: list[float] = []
    for record in records:
        result = record.entity_result
        if result is None or not record.ok or result.replacement is None:
            continue
        originals.append(inventory.count(record.span.entity_type, record.span.surface))
        replacements.append(
            inventory.count(record.span.entity_type, result.replacement)
        )
    n = len(originals)
    if n == 0:
        return FrequencyComparison(None, None, None, None, 0)
    med_o, med_r = median(originals), median(replacements)
    if n < 2:
        return FrequencyComparison(med_o, med_r, None, None, n)
    u, p = mann_whitney_u(originals, replacements)
    return FrequencyComparison(med_o, med_r, u, p, n)


@dataclass
class GroupStats:
    n: int
    mean_sentence_length: float
    mean_eligible_words: float
    mean_entity_length: float


def sentence_statistics(records: Sequence[AttackRecord]) -> dict[str, GroupStats]:
    """Mean sentence/eligible/entity sizes for fooled vs unfooled context attacks."""
    groups: dict[str, list[AttackRecord]] = {"fooled": [], "failed": []}
    for record in records:
        if record.context_result is None or not record.ok:
            continue
        status = record.context_result.verdict.status
        key = "fooled" if status in (Status.FULL, Status.PARTIAL) else "failed"
        groups[key].append(record)
    out: dict[str, GroupStats] = {}
    for key, rows in groups.items():
        if not rows:
            continue
        out[key] = GroupStats(
            n=len(rows),
            mean_sentence_length=mean(len(r.original_tokens) for r in rows),
            mean_eligible_words=mean(r.context_result.eligible_count for r in rows),
            mean_entity_length=mean(len(r.span) for r in rows),
        )
    return out


ABLATION_IGNORED_KEYS = {"use_importance_ranking", "out_path"}


def ablation_compare(
    ranked: MetricsReport,
    randomized: MetricsReport,
    ranked_config: dict | None = None,
    randomized_config: dict | None = None,
) -> list[tuple[str, float | None, float | None, float | None]]:
    """Side-by-side (ranked, random, delta) rows for the ablation table.

    Refuses configurations that differ in anything but the ranking flag.
    """
    if ranked_config is not None and randomized_config is not None:
        a = {k: v for k, v in ranked_config.items() if k not in ABLATION_IGNORED_KEYS}
        b = {
            k: v
            for k, v in randomized_config.items()
            if k not in ABLATION_IGNORED_KEYS
        }
        if a != b:
            differing = sorted(
                k for k in set(a) | set(b) if a.get(k) != b.get(k)
            )
            raise ConfigurationError(
                f"ablation arms differ beyond the ranking flag: {differing}"
            )

    def delta(x, y):
        return None if x is None or y is None else x - y

    rows = [
        ("Success rate (%)", ranked.success_rate_pct, randomized.success_rate_pct),
        (
            "Partial success rate (%)",
            ranked.partial_success_rate_pct,
            randomized.partial_success_rate_pct,
        ),
        ("Median semantic similarity", ranked.median_similarity, randomized.median_similarity),
        ("Words perturbed (%)", ranked.words_perturbed_pct, randomized.words_perturbed_pct),
    ]
    return [(name, a, b, delta(a, b)) for name, a, b in rows]


def format_table(title: str, rows: Sequence[tuple[str, ...]]) -> str:
    """Align rows into a plain-text table."""
    widths = [max(len(str(row[i])) for row in rows) for i in range(len(rows[0]))]
    lines = [title, "-" * max(len(title), sum(widths) + 2 * (len(widths) - 1))]
    for row in rows:
        lines.append(
            "  ".join(str(cell).ljust(w) for cell, w in zip(row, widths)).rstrip()
        )
    return "\n".join(lines)
