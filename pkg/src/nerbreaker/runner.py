"""End-to-end attack runs: corpus in, JSONL records and a metrics report out."""

from __future__ import annotations

import datetime as _dt
import hashlib
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .adapter import AdapterEndpoint, SimilarityScorer, connect
from .context_attack import ContextAttackConfig, ContextAttacker
from .corpus import (
    EntityInventory,
    EntitySpan,
    TaggedSentence,
    build_inventory,
    extract_spans,
    parse_conll,
    select_eligible,
)
from .entity_attack import EntityAttackConfig, EntityAttacker
from .errors import AdapterError, ConfigurationError
from .evaluation import MetricsReport, aggregate
from .judge import token_correct
from .lexical import VectorStore, load_vectors
from .records import AttackRecord, write_records

log = logging.getLogger(__name__)


@dataclass
class RunConfig:
    mode: str  # "entity" | "context"
    adapter: str
    test_path: str
    out_path: str
    seed: int
    train_path: str | None = None
    dev_path: str | None = None
    vectors_path: str | None = None
    epsilon: float = 0.8
    delta: float = 0.5
    max_candidates: int = 50
    sample: int = 500
    use_importance_ranking: bool = True
    inventory_from: tuple[str, ...] = ("train", "dev")
    workers: int = 1
    batch_size: int = 64

    def __post_init__(self):
        if self.mode not in ("entity", "context"):
            raise ConfigurationError(f"unknown mode {self.mode!r}")
        if self.workers < 1:
            raise ConfigurationError("workers must be >= 1")

    def snapshot(self) -> dict:
        return {
            "mode": self.mode,
            "adapter": self.adapter,
            "test_path": str(self.test_path),
            "train_path": str(self.train_path) if self.train_path else None,
            "dev_path": str(self.dev_path) if self.dev_path else None,
            "vectors_path": str(self.vectors_path) if self.vectors_path else None,
            "epsilon": self.epsilon,
            "delta": self.delta,
            "max_candidates": self.max_candidates,
            "sample": self.sample,
            "seed": self.seed,
            "use_importance_ranking": self.use_importance_ranking,
            "inventory_from": list(self.inventory_from),
        }

    def attack_config_snapshot(self) -> dict:
        base = {"mode": self.mode, "epsilon": self.epsilon, "seed": self.seed}
        if self.mode == "entity":
            base["max_candidates"] = self.max_candidates
        else:
            base["delta"] = self.delta
            base["max_synonyms"] = self.max_candidates
            base["use_importance_ranking"] = self.use_importance_ranking
        return base


def derive_seed(base: int, sentence_id: str, span_start: int) -> int:
    """Per-attack seed, stable across platforms and worker scheduling."""
    digest = hashlib.sha256(f"{base}:{sentence_id}:{span_start}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def _read(path: str | Path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read {path}: {exc}") from exc


class AttackRun:
    """One configured run; owns endpoints and the worker pool."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self._endpoints: list[AdapterEndpoint] = []
        self._local = threading.local()
        self._lock = threading.Lock()
        self._inventory = EntityInventory()

    # -- wiring -----------------------------------------------------------

    def _new_endpoint(self) -> AdapterEndpoint:
        endpoint = connect(self.cfg.adapter, self.cfg.batch_size)
        with self._lock:
            self._endpoints.append(endpoint)
        return endpoint

    def _worker_endpoint(self) -> AdapterEndpoint:
        endpoint = getattr(self._local, "endpoint", None)
        if endpoint is None:
            endpoint = self._new_endpoint()
            self._local.endpoint = endpoint
        return endpoint

    def close(self) -> None:
        for endpoint in self._endpoints:
            endpoint.close()
        self._endpoints.clear()

    # -- pipeline ----------------------------------------------------------

    def execute(self) -> tuple[list[AttackRecord], MetricsReport]:
        cfg = self.cfg
        store: VectorStore | None = None
        if cfg.vectors_path:
            store = load_vectors(cfg.vectors_path)
        if cfg.mode == "context" and store is None:
            raise ConfigurationError("context attacks need --vectors for synonyms")

        endpoint = self._new_endpoint()
        self._local.endpoint = endpoint
        if cfg.mode == "context" and "pos" not in endpoint.capabilities:
            raise ConfigurationError(
                "context attacks need a POS-capable adapter for synonym filtering"
            )
        if "similarity" not in endpoint.capabilities and store is None:
            raise ConfigurationError(
                "adapter offers no similarity; supply --vectors for the fallback"
            )

        corpus = parse_conll(_read(cfg.test_path))
        pos_source = endpoint if "pos" in endpoint.capabilities else None
        selected = select_eligible(corpus, cfg.sample, cfg.seed, pos_source)
        log.info("selected %d eligible sentences", len(selected))

        self._inventory = EntityInventory()
        if cfg.mode == "entity":
            self._inventory = self._build_inventory(corpus)

        baselines = endpoint.predict([s.tokens for s in selected])
        tasks: list[tuple[TaggedSentence, EntitySpan, list]] = []
        for sentence, baseline in zip(selected, baselines):
            for span in extract_spans(sentence):
                correct = all(
                    token_correct(sentence.gold_labels[i], baseline[i].predicted)
                    for i in range(span.start, span.end)
                )
                if correct:
                    tasks.append((sentence, span, baseline))
        log.info("%d initially-correct entities to attack", len(tasks))

        model_id = endpoint.model_id
        if cfg.workers == 1:
            records = [self._attack_one(task, store, model_id) for task in tasks]
        else:
            with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
                records = list(
                    pool.map(lambda t: self._attack_one(t, store, model_id), tasks)
                )

        header = {
            "created_at": _dt.datetime.now(_dt.timezone.utc).isoformat(),
            "model_id": model_id,
            "run_config": cfg.snapshot(),
        }
        write_records(cfg.out_path, records, header)
        return records, aggregate(records)

    def _build_inventory(self, test_corpus) -> EntityInventory:
        splits = {
            "train": self.cfg.train_path,
            "dev": self.cfg.dev_path,
            "test": None,
        }
        sentences = []
        for name in self.cfg.inventory_from:
            if name == "test":
                sentences.extend(test_corpus)
                continue
            path = splits.get(name)
            if path is None:
                raise ConfigurationError(
                    f"inventory split {name!r} requested but no path given"
                )
            sentences.extend(parse_conll(_read(path)))
        inventory = build_inventory(sentences)
        if not inventory.by_type:
            raise ConfigurationError("entity inventory is empty")
        return inventory

    def _attack_one(
        self,
        task: tuple[TaggedSentence, EntitySpan, list],
        store: VectorStore | None,
        model_id: str,
    ) -> AttackRecord:
        sentence, span, baseline = task
        cfg = self.cfg
        endpoint = self._worker_endpoint()
        similarity = SimilarityScorer(endpoint, store)
        seed = derive_seed(cfg.seed, sentence.sentence_id, span.start)
        record = AttackRecord(
            mode=cfg.mode,
            sentence_id=sentence.sentence_id,
            original_tokens=sentence.tokens,
            gold_labels=sentence.gold_labels,
            span=span,
            model_id=model_id,
            config=cfg.attack_config_snapshot(),
            status="aborted",
        )
        try:
            if cfg.mode == "entity":
                attacker = EntityAttacker(
                    endpoint,
                    self._inventory,
                    similarity,
                    EntityAttackConfig(cfg.epsilon, cfg.max_candidates, seed),
                )
                record.entity_result = attacker.attack(sentence, span)
            else:
                attacker = ContextAttacker(
                    endpoint,
                    store,
                    similarity,
                    ContextAttackConfig(
                        cfg.epsilon,
                        cfg.delta,
                        cfg.max_candidates,
                        cfg.use_importance_ranking,
                        seed,
                    ),
                )
                record.context_result = attacker.attack(sentence, span, baseline)
            record.status = "ok"
        except AdapterError as exc:
            log.warning(
                "attack aborted for %s span %d: %s", sentence.sentence_id, span.start, exc
            )
            record.error = str(exc)
        return record


def run(cfg: RunConfig) -> tuple[list[AttackRecord], MetricsReport]:
    runner = AttackRun(cfg)
    try:
        return runner.execute()
    finally:
        runner.close()
