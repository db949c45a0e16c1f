"""
Latency benchmark: per-item latency of batched against unbatched serving
over a batch-size sweep, and per-call latency over an input-length sweep.
"""
import asyncio
import json
import logging
import shutil
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, List, Sequence, Tuple, Union
import numpy as np
import pandas as pd
from core.config import settings
from core.data_loader import DataLoader
from core.errors import BackendError
from core.llm_gateway import DynamicBatcher, GenerationBackend
from core.prompts import render
from models.bench import BenchReport, BenchResult, Scenario
from models.generation import GenParams, PromptName

logger = logging.getLogger(__name__)

DEFAULT_BATCH_SIZES = (5, 25, 50, 100, 200, 400, 600)
DEFAULT_INPUT_LENGTHS = (287, 361, 408, 469, 525, 573)
CSV_COLUMNS = ["scenario", "axis", "value", "mean_s", "p50_s", "p95_s", "n"]
BATCH_AXIS = "batch_size"
LENGTH_AXIS = "input_length"


@dataclass
class Sweep:
    """What to measure"""
    batch_sizes: Sequence[int] = DEFAULT_BATCH_SIZES
    input_lengths: Sequence[int] = DEFAULT_INPUT_LENGTHS
    trials: int = 3
    # prompt length on the batch-size axis, about one extracted verbatim
    verbatim_tokens: int = 40
    # unbatched per-item latency does not depend on item count, so fewer items are timed
    unbatched_items: int = 10
    length_batch_size: int = 64
    # average review tokens over average verbatim tokens, product reviews
    raw_inflation: float = 73 / 13
    max_in_flight: int = 1


def synthetic_prompt(tokens: int, index: int = 0) -> str:
    """A summarisation prompt whose input section is `tokens` words long"""
    words = " ".join(f"w{(index + i) % 97}" for i in range(tokens))
    return render(DataLoader().get_template(PromptName.SUMMARISE_MINIMAL), {"percent_contribution": words})


async def time_items(
    backend: GenerationBackend,
    prompts: Sequence[str],
    max_batch_size: int,
    max_in_flight: int = 1,
    clock: Callable[[], float] = time.perf_counter,
) -> float:
    """
    Wall time per item of pushing every prompt through a batcher. All
    prompts are queued before the first batch is cut.
    """
    params = GenParams(max_output_tokens=32)
    batcher = DynamicBatcher(backend, max_batch_size=max_batch_size, max_wait=0.0, max_in_flight=max_in_flight)
    start = clock()
    async with batcher:
        results = await asyncio.gather(*(batcher.submit(p, params) for p in prompts), return_exceptions=True)
    elapsed = clock() - start
    for result in results:
        if isinstance(result, BaseException):
            raise result
    return elapsed / len(prompts)


def summarise_trials(scenario: Scenario, axis: str, value: int, samples: Sequence[float]) -> BenchResult:
    values = np.asarray(samples, dtype=float)
    return BenchResult(
        scenario=scenario,
        axis=axis,
        value=value,
        mean_s=float(values.mean()),
        p50_s=float(np.percentile(values, 50)),
        p95_s=float(np.percentile(values, 95)),
        n=len(values),
    )


def _plan(sweep: Sweep) -> List[Tuple[Scenario, str, int, List[str], int]]:
    """(scenario, axis, value, prompts, max_batch_size) for every measurement point"""
    plan = []
    for size in sweep.batch_sizes:
        batched = [synthetic_prompt(sweep.verbatim_tokens, i) for i in range(size)]
        plan.append((Scenario.BATCHED, BATCH_AXIS, size, batched, size))
        plan.append((Scenario.UNBATCHED, BATCH_AXIS, size, batched[:min(size, sweep.unbatched_items)], 1))
    for length in sweep.input_lengths:
        batched = [synthetic_prompt(length, i) for i in range(sweep.length_batch_size)]
        plan.append((Scenario.BATCHED, LENGTH_AXIS, length, batched, sweep.length_batch_size))
        plan.append((Scenario.UNBATCHED, LENGTH_AXIS, length, batched[:1], 1))
        raw = [synthetic_prompt(round(length * sweep.raw_inflation))]
        plan.append((Scenario.RAW_REVIEWS, LENGTH_AXIS, length, raw, 1))
    return plan


async def run_bench(backend: GenerationBackend, sweep: Sweep = None) -> BenchReport:
    """
    Measure every point of the sweep. A backend failure stops the sweep and
    the points measured so far are returned with complete=False.
    """
    sweep = sweep or Sweep()
    report = BenchReport()
    for scenario, axis, value, prompts, batch_size in _plan(sweep):
        samples = []
        try:
            for _ in range(sweep.trials):
                samples.append(await time_items(backend, prompts, batch_size, sweep.max_in_flight))
        except BackendError as e:
            message = f"{scenario.value} {axis}={value}: {e}"
            logger.error("❌ Backend failed mid-sweep at %s", message)
            report.errors.append(message)
            report.complete = False
            break
        result = summarise_trials(scenario, axis, value, samples)
        logger.info("%-11s %s=%-4d mean %.4fs per item", scenario.value, axis, value, result.mean_s)
        report.results.append(result)
    return report


def bench_frame(report: BenchReport) -> pd.DataFrame:
    return pd.DataFrame([r.model_dump(mode="json") for r in report.results], columns=CSV_COLUMNS)


def plot_data(report: BenchReport) -> dict:
    """Series per axis and scenario as [x, mean seconds] pairs"""
    data = {"complete": report.complete, "errors": report.errors, BATCH_AXIS: {}, LENGTH_AXIS: {}}
    for result in report.results:
        data[result.axis].setdefault(result.scenario.value, []).append([result.value, result.mean_s])
    return data


def write_outputs(report: BenchReport, out_dir: Union[str, Path]) -> List[Path]:
    """bench.csv, bench_plot.json and the published reference coordinates"""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "bench.csv"
    bench_frame(report).to_csv(csv_path, index=False, float_format="%.6f")

    plot_path = out_dir / "bench_plot.json"
    with open(plot_path, "w", encoding="utf-8") as f:
        json.dump(plot_data(report), f, indent=2)
        f.write("\n")

    reference_path = out_dir / Path(settings.FIGURE_REFERENCE_FILE).name
    shutil.copyfile(settings.FIGURE_REFERENCE_FILE, reference_path)
    return [csv_path, plot_path, reference_path]
