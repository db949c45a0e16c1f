"""evaluate: summaries against references, Likert ratings, extraction against gold"""
import argparse
import asyncio
import json
import logging
from pathlib import Path
from typing import List
from pydantic import ValidationError
from cli.runtime import banner, make_embeddings, pipeline_config
from core.errors import InputError
from core.evaluation import format_report, read_likert_csv, read_references, report
from core.extractor import score_extraction
from core.insight_store import InsightStore
from models.insight import Insight
from models.summary import SummaryBundle

logger = logging.getLogger(__name__)


def register(subparsers):
    parser = subparsers.add_parser("evaluate", help="Score summaries and extraction output")
    parser.add_argument("--summaries", type=Path, help="SummaryBundle JSONL from summarise")
    parser.add_argument("--references", type=Path,
                        help='Reference JSONL, lines {"entity_id", "key", "text"}; key is an aspect or "overall"')
    parser.add_argument("--likert", type=Path, help="Likert CSV: item_id,criterion,rater_id,score")
    parser.add_argument("--insights", type=Path, help="Insight store to score against --gold")
    parser.add_argument("--gold", type=Path, help="Gold insights JSONL")
    parser.add_argument("--out", type=Path, help="Write the report as JSON")
    parser.set_defaults(handler=handle)


def _read_models(path: Path, model):
    if not path.exists():
        raise InputError(f"file not found: {path}")
    items = []
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                items.append(model(**json.loads(line)))
            except (json.JSONDecodeError, TypeError, ValidationError) as e:
                raise InputError(f"{path}: line {line_no}: {e}") from e
    return items


def handle(args: argparse.Namespace) -> int:
    if not (args.summaries or args.likert or args.gold):
        raise InputError("evaluate needs --summaries, --likert or --gold")
    if args.gold and not args.insights:
        raise InputError("--gold needs --insights")
    cfg = pipeline_config(args)
    emb = make_embeddings(args, cfg)
    banner("Evaluating")

    bundles: List[SummaryBundle] = _read_models(args.summaries, SummaryBundle) if args.summaries else []
    references = read_references(args.references) if args.references else {}
    likert = read_likert_csv(args.likert) if args.likert else []
    if bundles and not references:
        logger.warning("⚠️  No --references given; automatic metrics skipped")

    rep = asyncio.run(report(bundles, references, likert, emb))
    print(format_report(rep), end="")

    payload = {"summaries": rep.model_dump(mode="json")}
    if args.gold:
        predicted = [i for insights in InsightStore(args.insights).load_all().values() for i in insights]
        gold = _read_models(args.gold, Insight)
        scores = asyncio.run(score_extraction(predicted, gold, emb, cfg.tp_jaccard, cfg.translation_cosine))
        print(f"extraction: P {scores.precision:.3f}  R {scores.recall:.3f}  F1 {scores.f1:.3f}  "
              f"T {scores.translation_accuracy:.3f}  ({scores.true_positives} TP of "
              f"{scores.n_predicted} predicted, {scores.n_gold} gold)")
        payload["extraction"] = scores.model_dump(mode="json")

    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        with open(args.out, "w", encoding="utf-8") as f:
            json.dump(payload, f, ensure_ascii=False, indent=2)
            f.write("\n")
    banner("✅ Evaluation complete")
    return 0
