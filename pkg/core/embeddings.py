"""Embedding providers: hashing test provider, lookup table, cache and remote service"""
import asyncio
import hashlib
import logging
import re
from abc import ABC, abstractmethod
from typing import Dict, List, Mapping, Optional, Sequence
import aiohttp
import numpy as np
from core.config import settings
from core.errors import EmbeddingError

logger = logging.getLogger(__name__)

_TOKEN_RE = re.compile(r"\w+")


class EmbeddingProvider(ABC):
    """Maps texts to fixed-dimension vectors, order-aligned with the input"""

    dimension: int

    @abstractmethod
    async def embed(self, texts: List[str]) -> np.ndarray:
        """Return an array of shape (len(texts), dimension)"""

    def _checked(self, vectors, texts: List[str]) -> np.ndarray:
        array = np.asarray(vectors, dtype=float)
        if len(texts) == 0:
            return np.zeros((0, self.dimension))
        if array.ndim != 2 or array.shape != (len(texts), self.dimension):
            raise EmbeddingError(
                f"expected {len(texts)} vectors of dimension {self.dimension}, got shape {array.shape}",
                texts,
            )
        if not np.all(np.isfinite(array)):
            raise EmbeddingError("provider returned non-finite components", texts)
        return array


class HashEmbeddingProvider(EmbeddingProvider):
    """
    Deterministic token-bag provider for hermetic runs.

    Every case-folded word token maps to a pseudo-random unit vector seeded
    from a hash of the token; a text is the normalised sum of its token
    vectors. Texts sharing words end up close, unrelated texts near-orthogonal.
    """

    def __init__(self, dimension: int = 256, seed: int = 0):
        self.dimension = dimension
        self.seed = seed
        self._token_vectors: Dict[str, np.ndarray] = {}

    def _token_vector(self, token: str) -> np.ndarray:
        vector = self._token_vectors.get(token)
        if vector is None:
            digest = hashlib.blake2b(f"{self.seed}:{token}".encode("utf-8"), digest_size=8).digest()
            rng = np.random.default_rng(int.from_bytes(digest, "little"))
            vector = rng.standard_normal(self.dimension)
            vector /= np.linalg.norm(vector)
            self._token_vectors[token] = vector
        return vector

    def embed_one(self, text: str) -> np.ndarray:
        tokens = _TOKEN_RE.findall(text.casefold()) or [text]
        total = np.sum([self._token_vector(t) for t in tokens], axis=0)
        norm = np.linalg.norm(total)
        if norm == 0:
            # tokens cancelled out exactly; fall back to the whole text
            return self._token_vector(text)
        return total / norm

    async def embed(self, texts: List[str]) -> np.ndarray:
        return self._checked([self.embed_one(t) for t in texts], texts)


class LookupEmbeddingProvider(EmbeddingProvider):
    """Fixed text -> vector table, with an optional provider for unknown texts"""

    def __init__(self, table: Mapping[str, Sequence[float]], fallback: Optional[EmbeddingProvider] = None):
        if not table:
            raise EmbeddingError("lookup table is empty")
        self._table = {text: np.asarray(vec, dtype=float) for text, vec in table.items()}
        self.dimension = len(next(iter(self._table.values())))
        self._fallback = fallback
        if fallback is not None and fallback.dimension != self.dimension:
            raise EmbeddingError("fallback provider dimension differs from the table")

    async def embed(self, texts: List[str]) -> np.ndarray:
        vectors = []
        for text in texts:
            if text in self._table:
                vectors.append(self._table[text])
            elif self._fallback is not None:
                vectors.append((await self._fallback.embed([text]))[0])
            else:
                raise EmbeddingError(f"no vector for {text!r}", [text])
        return self._checked(vectors, texts)


class CachedEmbeddings(EmbeddingProvider):
    """Memoises vectors per unique string for the lifetime of a run"""

    def __init__(self, provider: EmbeddingProvider):
        self._provider = provider
        self.dimension = provider.dimension
        self._cache: Dict[str, np.ndarray] = {}

    @property
    def inner(self) -> EmbeddingProvider:
        return self._provider

    async def embed(self, texts: List[str]) -> np.ndarray:
        missing = list(dict.fromkeys(t for t in texts if t not in self._cache))
        if missing:
            vectors = await self._provider.embed(missing)
            for text, vector in zip(missing, vectors):
                self._cache[text] = vector
        return self._checked([self._cache[t] for t in texts], texts)

    def __len__(self) -> int:
        return len(self._cache)


class RemoteEmbeddingProvider(EmbeddingProvider):
    """
    Embedding service over HTTP.

    Request body ``{"texts": [...]}``, response body
    ``{"embeddings": [[...], ...]}`` in request order.
    """

    def __init__(
        self,
        url: Optional[str] = None,
        dimension: Optional[int] = None,
        api_key: Optional[str] = None,
        auth_header: Optional[str] = None,
        timeout: Optional[float] = None,
    ):
        self.url = url or settings.EMBEDDING_URL
        self.dimension = dimension or settings.EMBEDDING_DIMENSION
        self.api_key = api_key if api_key is not None else settings.API_KEY
        self.auth_header = auth_header or settings.BACKEND_AUTH_HEADER
        self.timeout = timeout or settings.BACKEND_TIMEOUT

    def _headers(self) -> Dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers[self.auth_header] = self.api_key
        return headers

    async def embed(self, texts: List[str]) -> np.ndarray:
        if not texts:
            return np.zeros((0, self.dimension))
        timeout = aiohttp.ClientTimeout(total=self.timeout)
        try:
            async with aiohttp.ClientSession(timeout=timeout) as session:
                async with session.post(self.url, json={"texts": texts}, headers=self._headers()) as response:
                    if response.status != 200:
                        raise EmbeddingError(f"embedding service returned HTTP {response.status}", texts)
                    payload = await response.json()
        except asyncio.TimeoutError as e:
            raise EmbeddingError(f"embedding service timed out after {self.timeout}s", texts) from e
        except aiohttp.ClientError as e:
            raise EmbeddingError(f"embedding service unreachable: {e}", texts) from e

        embeddings = payload.get("embeddings") if isinstance(payload, dict) else None
        if not isinstance(embeddings, list):
            raise EmbeddingError("embedding response has no 'embeddings' list", texts)
        return self._checked(embeddings, texts)
