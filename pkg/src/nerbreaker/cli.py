"""Command line front end: attack, ablate, report, export-annotation."""

from __future__ import annotations

import argparse
import csv
import logging
import random
import sys
from collections import defaultdict
from pathlib import Path

from . import evaluation, runner
from .corpus import build_inventory, parse_conll
from .errors import NerbreakerError
from .records import AttackRecord, read_records


def _attack_flags(parser: argparse.ArgumentParser, with_mode: bool = True) -> None:
    if with_mode:
        parser.add_argument("--mode", choices=["entity", "context"], required=True)
    parser.add_argument(
        "--adapter",
        required=True,
        help="exec:<command>, http:<url> or mock:<spec file>",
    )
    parser.add_argument("--test", required=True, help="test corpus (CoNLL columns)")
    parser.add_argument("--train", help="training corpus, for the entity inventory")
    parser.add_argument("--dev", help="development corpus, for the entity inventory")
    parser.add_argument("--vectors", help="counter-fitted word vector text file")
    parser.add_argument("--epsilon", type=float, default=0.8)
    parser.add_argument("--delta", type=float, default=0.5)
    parser.add_argument("--max-candidates", type=int, default=50)
    parser.add_argument("--sample", type=int, default=500)
    parser.add_argument("--seed", type=int, required=True)
    parser.add_argument("--no-ranking", action="store_true")
    parser.add_argument(
        "--inventory-from",
        default="train,dev",
        help="comma-separated splits the entity inventory is built from",
    )
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--out", required=True, help="output JSONL path")


def _run_config(args: argparse.Namespace, **overrides) -> runner.RunConfig:
    values = dict(
        mode=getattr(args, "mode", "context"),
        adapter=args.adapter,
        test_path=args.test,
        out_path=args.out,
        seed=args.seed,
        train_path=args.train,
        dev_path=args.dev,
        vectors_path=args.vectors,
        epsilon=args.epsilon,
        delta=args.delta,
        max_candidates=args.max_candidates,
        sample=args.sample,
        use_importance_ranking=not args.no_ranking,
        inventory_from=tuple(s for s in args.inventory_from.split(",") if s),
        workers=args.workers,
    )
    values.update(overrides)
    return runner.RunConfig(**values)


def cmd_attack(args: argparse.Namespace) -> int:
    records, report = runner.run(_run_config(args))
    print(evaluation.format_table(f"{args.mode} attack ({report.model_id})", report.rows()))
    print(f"\n{len(records)} records written to {args.out}")
    return 0


def cmd_ablate(args: argparse.Namespace) -> int:
    base = Path(args.out)
    ranked_path = base.with_suffix(".ranked.jsonl")
    random_path = base.with_suffix(".random.jsonl")

    _, ranked_report = runner.run(
        _run_config(args, mode="context", use_importance_ranking=True, out_path=str(ranked_path))
    )
    _, random_report = runner.run(
        _run_config(args, mode="context", use_importance_ranking=False, out_path=str(random_path))
    )

    rows = [("metric", "ranked", "random", "delta")]
    for name, a, b, d in evaluation.ablation_compare(ranked_report, random_report):
        fmt = lambda v: "-" if v is None else f"{v:.3f}"
        rows.append((name, fmt(a), fmt(b), fmt(d)))
    print(evaluation.format_table("importance-ranking ablation", rows))
    print(f"\nrecords written to {ranked_path} and {random_path}")
    return 0


def _load_all(paths: list[str]) -> tuple[list[dict], list[AttackRecord]]:
    headers, records = [], []
    for path in paths:
        header, rows = read_records(path)
        if header:
            headers.append(header)
        records.extend(rows)
    return headers, records


def cmd_report(args: argparse.Namespace) -> int:
    _, records = _load_all(args.jsonl)
    if not records:
        print(evaluation.format_table("empty record set", [("records", "0")]))
        return 0

    groups: dict[tuple[str, str], list[AttackRecord]] = defaultdict(list)
    for record in records:
        groups[(record.model_id, record.mode)].append(record)

    out_prefix = Path(args.out_prefix) if args.out_prefix else None
    inventory = None
    if args.train or args.dev:
        sentences = []
        for path in (args.train, args.dev):
            if path:
                sentences.extend(parse_conll(Path(path).read_text(encoding="utf-8")))
        inventory = build_inventory(sentences)

    for (model_id, mode), rows in sorted(groups.items()):
        report = evaluation.aggregate(rows)
        print(evaluation.format_table(f"{mode} attack ({model_id})", report.rows()))
        print()
        if mode == "context":
            histogram = evaluation.distance_histogram(rows)
            stats = evaluation.sentence_statistics(rows)
            if stats:
                table = [("group", "n", "sent len", "eligible", "entity len")]
                for key, s in sorted(stats.items()):
                    table.append(
                        (
                            key,
                            str(s.n),
                            f"{s.mean_sentence_length:.2f}",
                            f"{s.mean_eligible_words:.2f}",
                            f"{s.mean_entity_length:.2f}",
                        )
                    )
                print(evaluation.format_table("sentence statistics", table))
                print()
            if out_prefix:
                csv_path = out_prefix.with_suffix(".histogram.csv")
                csv_path.write_text(evaluation.histogram_csv(histogram), encoding="utf-8")
                print(f"histogram written to {csv_path}")
        if mode == "entity" and inventory is not None:
            freq = evaluation.frequency_comparison(rows, inventory)
            if freq.n:
                table = [
                    ("n successes", str(freq.n)),
                    ("median original frequency", f"{freq.median_original:g}"),
                    ("median replacement frequency", f"{freq.median_replacement:g}"),
                    ("U statistic", "-" if freq.u_statistic is None else f"{freq.u_statistic:g}"),
                    ("p (two-sided)", "-" if freq.p_value is None else f"{freq.p_value:.4g}"),
                ]
                print(evaluation.format_table("replacement frequency comparison", table))
                print()
        if out_prefix:
            import json

            report_path = out_prefix.with_suffix(f".{mode}.report.json")
            report_path.write_text(
                json.dumps(report.__dict__, indent=2, sort_keys=True), encoding="utf-8"
            )
            print(f"report written to {report_path}")
    return 0


def cmd_export_annotation(args: argparse.Namespace) -> int:
    _, records = _load_all(args.jsonl)
    successes = [
        r
        for r in records
        if r.ok
        and r.n_changes > 0
        and (r.mode == "entity" or r.verdict.status.value in ("full", "partial"))
    ]
    by_sentence: dict[str, AttackRecord] = {}
    for record in successes:
        by_sentence.setdefault(record.sentence_id, record)

    rng = random.Random(args.seed)
    adv_ids = sorted(by_sentence)
    if len(adv_ids) < args.n:
        raise NerbreakerError(
            f"need {args.n} successful attacks on distinct sentences, have {len(adv_ids)}"
        )
    adv_chosen = rng.sample(adv_ids, args.n)

    original_pool = sorted(
        {r.sentence_id for r in records if r.sentence_id not in set(adv_chosen)}
    )
    if len(original_pool) < args.n:
        raise NerbreakerError(
            f"need {args.n} distinct original sentences not used for adversarial "
            f"rows, have {len(original_pool)}"
        )
    orig_chosen = rng.sample(original_pool, args.n)
    originals = {r.sentence_id: r for r in records}

    rows = []
    for sid in adv_chosen:
        record = by_sentence[sid]
        adversarial = (
            record.entity_result.adversarial
            if record.entity_result
            else record.context_result.adversarial
        )
        rows.append(("adversarial", sid, " ".join(adversarial.tokens)))
    for sid in orig_chosen:
        rows.append(("original", sid, " ".join(originals[sid].original_tokens)))
    rng.shuffle(rows)

    out = Path(args.out)
    key_path = out.with_suffix(".key.csv")
    with open(out, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["id", "sentence"])
        for i, (_, _, text) in enumerate(rows):
            writer.writerow([f"item-{i:04d}", text])
    with open(key_path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["id", "kind", "sentence_id"])
        for i, (kind, sid, _) in enumerate(rows):
            writer.writerow([f"item-{i:04d}", kind, sid])
    print(f"{len(rows)} rows written to {out} (key: {key_path})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nerbreaker",
        description="Black-box adversarial attacks on NER models",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    attack = sub.add_parser("attack", help="run one attack over a corpus")
    _attack_flags(attack)
    attack.set_defaults(func=cmd_attack)

    ablate = sub.add_parser(
        "ablate", help="context attack with and without importance ranking"
    )
    _attack_flags(ablate, with_mode=False)
    ablate.set_defaults(func=cmd_ablate)

    report = sub.add_parser("report", help="aggregate JSONL records into tables")
    report.add_argument("jsonl", nargs="+", help="record files from `attack`")
    report.add_argument("--train", help="corpus for the frequency comparison")
    report.add_argument("--dev", help="corpus for the frequency comparison")
    report.add_argument("--out-prefix", help="write JSON/CSV outputs with this prefix")
    report.set_defaults(func=cmd_report)

    export = sub.add_parser(
        "export-annotation", help="CSV of original and adversarial sentences"
    )
    export.add_argument("jsonl", nargs="+")
    export.add_argument("-n", type=int, default=100, help="sentences per condition")
    export.add_argument("--seed", type=int, required=True)
    export.add_argument("--out", required=True)
    export.set_defaults(func=cmd_export_annotation)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except NerbreakerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
