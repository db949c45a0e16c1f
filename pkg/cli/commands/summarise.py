"""summarise: insight store -> SummaryBundle JSONL"""
import argparse
import asyncio
import logging
from pathlib import Path
from cli.runtime import banner, make_backend, make_embeddings, pipeline_config, write_jsonl
from core.errors import InputError
from core.insight_store import InsightStore
from core.llm_gateway import DynamicBatcher
from core.summariser import EntitySummariser
from models.config import OverallMode, SelectionKind

logger = logging.getLogger(__name__)


def register(subparsers):
    parser = subparsers.add_parser("summarise", help="Summarise stored insights per entity")
    parser.add_argument("--insights", type=Path, default=Path("insights"), help="Insight store directory")
    parser.add_argument("--entity", action="append", dest="entities",
                        help="Entity to summarise (repeatable); default every stored entity")
    parser.add_argument("--target-lang", dest="target_language", help="Language of the summaries")
    parser.add_argument("--strategy", dest="selection_strategy", choices=[k.value for k in SelectionKind],
                        help="Verbatim selection strategy")
    parser.add_argument("--top-aspects", dest="top_aspect_count", type=int, help="Aspects in the overall summary")
    parser.add_argument("--context-length", type=int, help="Token budget of summariser input")
    parser.add_argument("--overall-mode", choices=[m.value for m in OverallMode], help="Overall summary mode")
    parser.add_argument("--out", type=Path, default=Path("summaries.jsonl"), help="Output JSONL")
    parser.set_defaults(handler=handle)


async def _summarise(args, cfg, store, entities, explicit):
    backend = make_backend(args)
    emb = make_embeddings(args, cfg)
    bundles = []
    try:
        async with DynamicBatcher(backend, cfg.max_batch_size, cfg.max_wait_ms / 1000, cfg.max_in_flight) as batcher:
            summariser = EntitySummariser(batcher, emb, cfg)
            for entity_id in entities:
                insights = store.load(entity_id)
                if not insights and not explicit:
                    logger.warning("⚠️  Entity %r has no insights; skipped", entity_id)
                    continue
                bundles.append(await summariser.summarise_entity(
                    entity_id, insights, store.review_count(entity_id)
                ))
    finally:
        await backend.aclose()
    return bundles, summariser.calls


def handle(args: argparse.Namespace) -> int:
    cfg = pipeline_config(
        args,
        target_language=args.target_language,
        selection_strategy=args.selection_strategy,
        top_aspect_count=args.top_aspect_count,
        context_length=args.context_length,
        overall_mode=args.overall_mode,
    )
    banner(f"Summarising insights ({cfg.target_language.value}, {cfg.selection_strategy.value} selection)")

    if not args.insights.exists():
        raise InputError(f"insight store not found: {args.insights}")
    store = InsightStore(args.insights)
    entities = sorted(set(args.entities)) if args.entities else store.entities()
    if not entities:
        raise InputError(f"insight store {args.insights} holds no entities")

    bundles, calls = asyncio.run(_summarise(args, cfg, store, entities, explicit=bool(args.entities)))
    count = write_jsonl(args.out, bundles)
    for bundle in bundles:
        print(f"✓ {bundle.entity_id}: {len(bundle.aspect_summaries)} aspect summaries")
    banner(f"✅ {count} summary bundles written to {args.out} ({calls} generation calls)")
    return 0
