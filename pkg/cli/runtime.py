"""Objects every subcommand builds the same way: config, backends, embeddings, output files"""
import json
import logging
from pathlib import Path
from typing import Any, Iterable, Optional
from pydantic import BaseModel
from core.backends import CassetteBackend, MockBackend, RemoteBackend
from core.config import load_pipeline_config
from core.embeddings import CachedEmbeddings, EmbeddingProvider, HashEmbeddingProvider, RemoteEmbeddingProvider
from core.errors import InputError
from core.llm_gateway import GenerationBackend
from models.config import PipelineConfig
from models.taxonomy import Taxonomy

logger = logging.getLogger(__name__)

BANNER = "=" * 60


def banner(title: str):
    print(BANNER)
    print(title)
    print(BANNER)


def pipeline_config(args, **overrides: Any) -> PipelineConfig:
    """Merge defaults, config file, environment and flags; flags win"""
    overrides["random_seed"] = getattr(args, "seed", None)
    cfg, sources = load_pipeline_config(args.config, overrides)
    if args.verbose:
        print("Configuration (flags > env > config file > defaults):")
        for name, value in cfg.model_dump(mode="json").items():
            print(f"  {name:<28} {value!r:<30} [{sources.get(name, 'default')}]")
    return cfg


def make_backend(args, taxonomy: Optional[Taxonomy] = None, **mock_options: Any) -> GenerationBackend:
    """The --backend choice, wrapped in a cassette for --record / --replay"""
    if args.record and args.replay:
        raise InputError("--record and --replay cannot be combined")
    if args.replay:
        return CassetteBackend(Path(args.replay), mode="replay")

    if args.backend == "remote":
        backend: GenerationBackend = RemoteBackend()
    else:
        backend = MockBackend(taxonomy=taxonomy, **mock_options)
    if args.record:
        return CassetteBackend(Path(args.record), inner=backend, mode="record")
    return backend


def make_embeddings(args, cfg: PipelineConfig) -> EmbeddingProvider:
    if args.backend == "remote":
        return CachedEmbeddings(RemoteEmbeddingProvider())
    return CachedEmbeddings(HashEmbeddingProvider(seed=cfg.random_seed))


def write_jsonl(path: Path, records: Iterable[BaseModel]) -> int:
    """Write one model per line; returns the number of lines"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with open(path, "w", encoding="utf-8") as f:
        for record in records:
            f.write(json.dumps(record.model_dump(mode="json"), ensure_ascii=False) + "\n")
            count += 1
    return count
