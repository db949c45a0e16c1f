"""bench: latency sweeps over batch size and input length"""
import argparse
import asyncio
import logging
from pathlib import Path
from cli.runtime import banner, make_backend, pipeline_config
from core.bench import DEFAULT_BATCH_SIZES, DEFAULT_INPUT_LENGTHS, Sweep, bench_frame, run_bench, write_outputs

logger = logging.getLogger(__name__)


def _int_list(value: str):
    try:
        return [int(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {value!r}") from None


def register(subparsers):
    parser = subparsers.add_parser("bench", help="Measure batched against unbatched latency")
    parser.add_argument("--batch-sizes", type=_int_list, default=list(DEFAULT_BATCH_SIZES),
                        help="Comma-separated batch-size axis")
    parser.add_argument("--input-lengths", type=_int_list, default=list(DEFAULT_INPUT_LENGTHS),
                        help="Comma-separated input-length axis in tokens")
    parser.add_argument("--trials", type=int, default=3, help="Repetitions per point")
    parser.add_argument("--latency-ms", type=float, default=50.0, help="Mock backend cost per call")
    parser.add_argument("--latency-per-token-ms", type=float, default=0.05, help="Mock backend cost per prompt token")
    parser.add_argument("--out", type=Path, default=Path("bench"), help="Output directory")
    parser.set_defaults(handler=handle)


async def _bench(backend, sweep):
    try:
        return await run_bench(backend, sweep)
    finally:
        await backend.aclose()


def handle(args: argparse.Namespace) -> int:
    pipeline_config(args)
    sweep = Sweep(batch_sizes=args.batch_sizes, input_lengths=args.input_lengths, trials=args.trials)
    backend = make_backend(
        args,
        latency_per_call=args.latency_ms / 1000,
        latency_per_token=args.latency_per_token_ms / 1000,
    )
    banner(f"Benchmarking {len(sweep.batch_sizes)} batch sizes and {len(sweep.input_lengths)} input lengths")

    report = asyncio.run(_bench(backend, sweep))
    paths = write_outputs(report, args.out)
    print(bench_frame(report).to_string(index=False))
    if not report.complete:
        for error in report.errors:
            print(f"❌ {error}")
        banner(f"⚠️  Partial results written to {', '.join(str(p) for p in paths)}")
        return 2
    banner(f"✅ Results written to {', '.join(str(p) for p in paths)}")
    return 0
