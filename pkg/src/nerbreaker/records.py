"""Versioned JSONL persistence for attack records.

One record per line; an optional header line (``"kind": "header"``)
carries run metadata including the only timestamp in the file.  Readers
reject any line whose schema major version is unknown.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .context_attack import ContextAttackResult, Perturbation
from .corpus import EntitySpan, TaggedSentence
from .entity_attack import EntityAttackResult
from .errors import ParseError
from .judge import EntityVerdict, ErrorClass, Status
from .labels import Label

SCHEMA_VERSION = "1.0"


@dataclass
class AttackRecord:
    """One attacked entity: input, configuration, and outcome."""

    mode: str  # "entity" | "context"
    sentence_id: str
    original_tokens: tuple[str, ...]
    gold_labels: tuple[Label, ...]
    span: EntitySpan
    model_id: str
    config: dict
    status: str = "ok"  # "ok" | "aborted"
    error: str | None = None
    entity_result: EntityAttackResult | None = None
    context_result: ContextAttackResult | None = None

    def __post_init__(self):
        if self.mode not in ("entity", "context"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.status == "ok":
            have = (self.entity_result is not None, self.context_result is not None)
            want = (self.mode == "entity", self.mode == "context")
            if have != want:
                raise ValueError("record must carry exactly the result of its mode")

    # -- helpers used by the aggregators ---------------------------------

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def verdict(self) -> EntityVerdict | None:
        if self.entity_result is not None:
            return self.entity_result.verdict
        if self.context_result is not None:
            return self.context_result.verdict
        return None

    @property
    def n_changes(self) -> int:
        if self.entity_result is not None:
            return 1 if self.entity_result.replacement else 0
        if self.context_result is not None:
            return len(self.context_result.perturbations)
        return 0

    @property
    def emitted_similarity(self) -> float | None:
        """Similarity of the emitted adversarial sentence, if one exists."""
        if self.entity_result is not None:
            return self.entity_result.similarity
        if self.context_result is not None and self.context_result.perturbations:
            return self.context_result.similarity
        return None

    @property
    def succeeded(self) -> bool:
        """Entity mode: any-token success (a replacement was emitted).
        Context mode: full success."""
        if not self.ok:
            return False
        if self.mode == "entity":
            return self.entity_result.replacement is not None
        return self.context_result.verdict.status is Status.FULL


def _span_dict(span: EntitySpan) -> dict:
    return {
        "start": span.start,
        "end": span.end,
        "entity_type": span.entity_type,
        "surface": list(span.surface),
    }


def _span_from(data: dict) -> EntitySpan:
    return EntitySpan(
        data["start"], data["end"], data["entity_type"], tuple(data["surface"])
    )


def _verdict_dict(v: EntityVerdict) -> dict:
    return {
        "status": v.status.value,
        "wrong_tokens": v.wrong_tokens,
        "total_tokens": v.total_tokens,
        "error_class": v.error_class.value if v.error_class else None,
    }


def _verdict_from(data: dict) -> EntityVerdict:
    return EntityVerdict(
        Status(data["status"]),
        data["wrong_tokens"],
        data["total_tokens"],
        ErrorClass(data["error_class"]) if data.get("error_class") else None,
    )


def record_to_dict(record: AttackRecord) -> dict:
    out = {
        "schema_version": SCHEMA_VERSION,
        "mode": record.mode,
        "status": record.status,
        "model_id": record.model_id,
        "sentence_id": record.sentence_id,
        "original_tokens": list(record.original_tokens),
        "gold_labels": [str(l) for l in record.gold_labels],
        "span": _span_dict(record.span),
        "config": record.config,
    }
    if record.error is not None:
        out["error"] = record.error
    r = record.entity_result
    if r is not None:
        out["result"] = {
            "replacement": list(r.replacement) if r.replacement else None,
            "verdict": _verdict_dict(r.verdict),
            "similarity": r.similarity,
            "candidates_tried": r.candidates_tried,
            "queries_used": r.queries_used,
            "adversarial_tokens": list(r.adversarial.tokens) if r.adversarial else None,
            "adversarial_span": _span_dict(r.adversarial_span)
            if r.adversarial_span
            else None,
        }
    c = record.context_result
    if c is not None:
        out["result"] = {
            "perturbations": [
                {
                    "position": p.position,
                    "original": p.original,
                    "replacement": p.replacement,
                    "rank": p.rank,
                }
                for p in c.perturbations
            ],
            "verdict": _verdict_dict(c.verdict),
            "similarity": c.similarity,
            "words_perturbed_pct": c.words_perturbed_pct,
            "out_of_mention_count": c.out_of_mention_count,
            "eligible_count": c.eligible_count,
            "queries_used": c.queries_used,
            "adversarial_tokens": list(c.adversarial.tokens) if c.adversarial else None,
        }
    return out


def record_from_dict(data: dict) -> AttackRecord:
    _check_version(data)
    mode = data["mode"]
    gold = tuple(Label.parse(l) for l in data["gold_labels"])
    sentence_id = data["sentence_id"]
    target = _span_from(data["span"])

    entity_result = context_result = None
    result = data.get("result")
    if result is not None and mode == "entity":
        adversarial = None
        span = None
        if result.get("adversarial_tokens"):
            span = _span_from(result["adversarial_span"])
            labels = (
                gold[: target.start]
                + (Label.parse(f"B-{span.entity_type}"),)
                + tuple(
                    Label.parse(f"I-{span.entity_type}")
                    for _ in range(len(span) - 1)
                )
                + gold[target.end :]
            )
            adversarial = TaggedSentence(
                tuple(result["adversarial_tokens"]), labels, None, sentence_id
            )
        entity_result = EntityAttackResult(
            target=target,
            replacement=tuple(result["replacement"]) if result["replacement"] else None,
            verdict=_verdict_from(result["verdict"]),
            similarity=result["similarity"],
            candidates_tried=result["candidates_tried"],
            queries_used=result["queries_used"],
            adversarial=adversarial,
            adversarial_span=span,
        )
    elif result is not None:
        adversarial = None
        if result.get("adversarial_tokens"):
            adversarial = TaggedSentence(
                tuple(result["adversarial_tokens"]), gold, None, sentence_id
            )
        context_result = ContextAttackResult(
            target=target,
            perturbations=[
                Perturbation(p["position"], p["original"], p["replacement"], p["rank"])
                for p in result["perturbations"]
            ],
            verdict=_verdict_from(result["verdict"]),
            similarity=result["similarity"],
            words_perturbed_pct=result["words_perturbed_pct"],
            out_of_mention_count=result["out_of_mention_count"],
            eligible_count=result["eligible_count"],
            queries_used=result["queries_used"],
            adversarial=adversarial,
        )

    return AttackRecord(
        mode=mode,
        sentence_id=sentence_id,
        original_tokens=tuple(data["original_tokens"]),
        gold_labels=gold,
        span=target,
        model_id=data.get("model_id", "unknown"),
        config=data.get("config", {}),
        status=data.get("status", "ok"),
        error=data.get("error"),
        entity_result=entity_result,
        context_result=context_result,
    )


def _check_version(data: dict) -> None:
    version = str(data.get("schema_version", ""))
    if version.split(".")[0] != SCHEMA_VERSION.split(".")[0]:
        raise ParseError(
            f"unsupported record schema version {version!r} "
            f"(this reader speaks {SCHEMA_VERSION})"
        )


def dump_line(data: dict) -> str:
    return json.dumps(data, ensure_ascii=False, sort_keys=True)


def write_records(
    path: str | Path, records: Iterable[AttackRecord], header: dict | None = None
) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        if header is not None:
            header = {"schema_version": SCHEMA_VERSION, "kind": "header", **header}
            handle.write(dump_line(header) + "\n")
        for record in records:
            handle.write(dump_line(record_to_dict(record)) + "\n")


def read_records(path: str | Path) -> tuple[dict | None, list[AttackRecord]]:
    header: dict | None = None
    records: list[AttackRecord] = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"bad JSON: {exc}", line=lineno) from None
            if data.get("kind") == "header":
                _check_version(data)
                header = data
                continue
            records.append(record_from_dict(data))
    return header, records
