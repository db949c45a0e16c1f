"""extract: corpus -> insight store"""
import argparse
import asyncio
import logging
from pathlib import Path
from cli.runtime import banner, make_backend, make_embeddings, pipeline_config, write_jsonl
from core.aspect_registry import NewAspectRegistry
from core.config import settings
from core.data_loader import load_taxonomy, read_corpus
from core.extractor import InsightExtractor
from core.insight_store import InsightStore
from core.llm_gateway import DynamicBatcher
from core.taxonomy import validate_taxonomy

logger = logging.getLogger(__name__)


def register(subparsers):
    parser = subparsers.add_parser("extract", help="Extract insight quadruples from a review corpus")
    parser.add_argument("--corpus", required=True, type=Path, help="JSONL corpus, one review per line")
    parser.add_argument("--taxonomy", type=Path, default=settings.DEMO_TAXONOMY_FILE, help="Taxonomy YAML")
    parser.add_argument("--target-lang", dest="target_language", help="Language of translated verbatims")
    parser.add_argument("--out", type=Path, default=Path("insights"), help="Insight store directory")
    parser.add_argument("--traces", type=Path, help="Write the per-review prompt traces to this JSONL file")
    parser.add_argument("--registry", type=Path, help="JSONL audit file for new aspects")
    parser.add_argument("--workers", type=int, help="Reviews extracted concurrently")
    parser.set_defaults(handler=handle)


async def _extract(args, cfg, taxonomy, reviews):
    backend = make_backend(args, taxonomy)
    emb = make_embeddings(args, cfg)
    store = InsightStore(args.out, reset=True)
    try:
        async with DynamicBatcher(backend, cfg.max_batch_size, cfg.max_wait_ms / 1000, cfg.max_in_flight) as batcher:
            result = await InsightExtractor(taxonomy, batcher, emb, cfg).extract_corpus(reviews, store)
    finally:
        await backend.aclose()
    return result


def handle(args: argparse.Namespace) -> int:
    cfg = pipeline_config(args, target_language=args.target_language, workers=args.workers)
    banner(f"Extracting insights ({cfg.target_language.value})")

    taxonomy = load_taxonomy(args.taxonomy)
    report = validate_taxonomy(taxonomy)
    for warning in report.warnings:
        logger.warning("⚠️  %s", warning)
    if not report.valid:
        for error in report.errors:
            print(f"❌ {error}")
        print(f"{len(report.errors)} errors in taxonomy {args.taxonomy}")
        return 1
    taxonomy.attach_registry(NewAspectRegistry(args.registry))

    reviews = read_corpus(args.corpus)
    print(f"✓ Loaded {len(reviews)} reviews and taxonomy '{taxonomy.domain}'")

    result = asyncio.run(_extract(args, cfg, taxonomy, reviews))

    if args.traces:
        write_jsonl(args.traces, result.traces)
    stats = result.stats
    print(f"✓ {len(result.insights)} insights from {stats.n_reviews} reviews of {stats.n_entities} entities")
    print(f"  unique aspects {stats.n_unique_aspects}, aspects per review {stats.avg_aspects_per_review:.2f}")
    print(f"  tokens per review {stats.avg_tokens_per_review:.1f}, per verbatim "
          f"{stats.avg_tokens_per_verbatim:.1f}, context reduction {stats.clr_percent}%")
    if taxonomy.new_aspects.names():
        print(f"  new aspects: {', '.join(taxonomy.new_aspects.names())}")
    if result.warnings:
        print(f"⚠️  {len(result.warnings)} warnings (see log)")
    banner(f"✅ Insights written to {args.out}")
    return 0
