"""Application configuration"""
import os
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple
import yaml
from pydantic import ValidationError
from core.errors import InputError
from models.config import PipelineConfig

ENV_PREFIX = "REVIEWSUMM_"


class Settings:
    """Process-wide settings"""

    # Backend Configuration
    BACKEND_URL: str = os.getenv("REVIEWSUMM_BACKEND_URL", "http://localhost:8080/generate")
    BACKEND_AUTH_HEADER: str = os.getenv("REVIEWSUMM_BACKEND_AUTH_HEADER", "Authorization")
    API_KEY: Optional[str] = os.getenv("REVIEWSUMM_API_KEY")
    BACKEND_MAX_CONTEXT: int = int(os.getenv("REVIEWSUMM_BACKEND_MAX_CONTEXT", "4096"))
    BACKEND_TIMEOUT: float = float(os.getenv("REVIEWSUMM_BACKEND_TIMEOUT", "60"))
    EMBEDDING_URL: str = os.getenv("REVIEWSUMM_EMBEDDING_URL", "http://localhost:8081/embed")
    EMBEDDING_DIMENSION: int = int(os.getenv("REVIEWSUMM_EMBEDDING_DIMENSION", "512"))
    LOG_LEVEL: str = os.getenv("REVIEWSUMM_LOG_LEVEL", "WARNING")

    # Data Configuration
    BASE_DIR: Path = Path(__file__).resolve().parent.parent
    DATA_PATH: Path = BASE_DIR / "data"
    TAXONOMY_DIR: Path = DATA_PATH / "taxonomies"
    DEMO_TAXONOMY_FILE: Path = TAXONOMY_DIR / "products.yml"
    SEGMENT_RULES_FILE: Path = DATA_PATH / "segment_rules.yml"
    PROMPTS_DIR: Path = DATA_PATH / "prompts"
    MOCK_LEXICON_FILE: Path = DATA_PATH / "mock" / "lexicon.yml"
    MOCK_DICTIONARY_FILE: Path = DATA_PATH / "mock" / "dictionary.yml"
    DEMO_CORPUS_FILE: Path = DATA_PATH / "demo" / "reviews.jsonl"
    FIGURE_REFERENCE_FILE: Path = DATA_PATH / "bench" / "figure_reference.yml"


settings = Settings()


def _read_config_file(path: Path) -> Dict[str, Any]:
    if not path.exists():
        raise InputError(f"config file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
    except yaml.YAMLError as e:
        raise InputError(f"invalid config file {path}: {e}") from e
    if not isinstance(data, dict):
        raise InputError(f"config file {path} must hold a mapping")
    return data


def _read_env(env: Mapping[str, str]) -> Dict[str, Any]:
    values = {}
    for field in PipelineConfig.model_fields:
        if field == "thresholds":
            continue
        raw = env.get(ENV_PREFIX + field.upper())
        if raw is not None:
            values[field] = raw
    return values


def load_pipeline_config(
    path: Optional[Path] = None,
    overrides: Optional[Mapping[str, Any]] = None,
    env: Optional[Mapping[str, str]] = None,
) -> Tuple[PipelineConfig, Dict[str, str]]:
    """
    Build a PipelineConfig with precedence flags > env > config file > defaults.

    Returns the config and, for every field that did not come from the
    defaults, the name of the layer it came from.
    """
    env = os.environ if env is None else env
    merged: Dict[str, Any] = {}
    sources: Dict[str, str] = {}

    layers = [
        ("file", _read_config_file(Path(path)) if path else {}),
        ("env", _read_env(env)),
        ("flag", {k: v for k, v in (overrides or {}).items() if v is not None}),
    ]
    for source, values in layers:
        for key, value in values.items():
            if key == "thresholds" and isinstance(value, dict):
                merged["thresholds"] = {**merged.get("thresholds", {}), **value}
            else:
                merged[key] = value
            sources[key] = source

    unknown = set(merged) - set(PipelineConfig.model_fields)
    if unknown:
        raise InputError(f"unknown config keys: {', '.join(sorted(unknown))}")
    try:
        return PipelineConfig(**merged), sources
    except ValidationError as e:
        raise InputError(f"invalid configuration: {e}") from e
