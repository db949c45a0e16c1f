import asyncio
from pathlib import Path
from typing import List
import pytest
from core.backends import MockBackend
from core.config import settings
from core.data_loader import load_taxonomy
from core.embeddings import HashEmbeddingProvider
from core.llm_gateway import GenerationBackend
from models.config import PipelineConfig
from models.generation import GenParams

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"


def run(coro):
    return asyncio.run(coro)


class RecordingBackend(GenerationBackend):
    """Wraps a backend and keeps every batch it was asked to generate"""

    def __init__(self, inner: GenerationBackend, max_context_tokens: int = None):
        self.inner = inner
        self.max_context_tokens = max_context_tokens or inner.max_context_tokens
        self.batches: List[List[str]] = []

    @property
    def calls(self) -> int:
        return len(self.batches)

    @property
    def prompts(self) -> List[str]:
        return [p for batch in self.batches for p in batch]

    async def generate(self, prompts, params: GenParams):
        self.batches.append(list(prompts))
        return await self.inner.generate(prompts, params)


@pytest.fixture
def products():
    return load_taxonomy(settings.DEMO_TAXONOMY_FILE)


@pytest.fixture
def hospitality():
    return load_taxonomy(settings.TAXONOMY_DIR / "hospitality.yml")


@pytest.fixture
def mock_backend(products):
    return MockBackend(taxonomy=products)


@pytest.fixture
def emb():
    return HashEmbeddingProvider(dimension=128, seed=0)


@pytest.fixture
def cfg():
    return PipelineConfig(target_language="EN", max_wait_ms=0)
