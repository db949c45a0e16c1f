"""
Generation backend interface and client-side dynamic batching.

Callers submit one prompt at a time; the batcher coalesces whatever arrives
within a short window into batches of up to max_batch_size prompts (only
prompts with identical GenParams share a batch) and keeps at most
max_in_flight batches running against the backend.
"""
import asyncio
import logging
from abc import ABC, abstractmethod
from typing import Dict, List, Optional, Tuple
from core.config import settings
from core.errors import BudgetError, ContentError, TransportError
from core.tokens import TokenCounter, count_tokens
from models.generation import GenParams

logger = logging.getLogger(__name__)


class GenerationBackend(ABC):
    """A text generator: one output per prompt, order-aligned"""

    max_context_tokens: int = settings.BACKEND_MAX_CONTEXT
    # True when the backend cannot serve concurrent generate calls
    single_flight: bool = False

    @abstractmethod
    async def generate(self, prompts: List[str], params: GenParams) -> List[str]:
        """Generate one completion per prompt"""

    async def aclose(self):
        """Release resources held by the backend"""


_Request = Tuple[str, GenParams, asyncio.Future]


class DynamicBatcher:
    """Coalesces single-prompt submissions into backend batches"""

    POLL_INTERVAL = 0.001

    def __init__(
        self,
        backend: GenerationBackend,
        max_batch_size: int = 64,
        max_wait: float = 0.01,
        max_in_flight: int = 4,
        count: TokenCounter = count_tokens,
    ):
        if max_batch_size < 1 or max_in_flight < 1:
            raise ValueError("max_batch_size and max_in_flight must be at least 1")
        self.backend = backend
        self.max_batch_size = max_batch_size
        self.max_wait = max_wait
        self.max_in_flight = 1 if backend.single_flight else max_in_flight
        self._count = count
        self._queue: Optional[asyncio.Queue] = None
        self._semaphore: Optional[asyncio.Semaphore] = None
        self._worker: Optional[asyncio.Task] = None
        self._inflight: set = set()
        self.batches_sent = 0
        self.retries = 0

    # ===== Lifecycle =====

    def _ensure_started(self):
        if self._worker is None or self._worker.done():
            self._queue = asyncio.Queue()
            self._semaphore = asyncio.Semaphore(self.max_in_flight)
            self._worker = asyncio.get_running_loop().create_task(self._run())

    async def aclose(self):
        """Stop the batching loop once every submitted prompt is answered"""
        if self._inflight:
            await asyncio.gather(*self._inflight, return_exceptions=True)
        if self._worker is not None:
            self._worker.cancel()
            try:
                await self._worker
            except asyncio.CancelledError:
                pass
            self._worker = None

    async def __aenter__(self):
        return self

    async def __aexit__(self, *exc):
        await self.aclose()

    # ===== Submission =====

    def check_budget(self, prompt: str):
        tokens = self._count(prompt)
        if tokens > self.backend.max_context_tokens:
            raise BudgetError(
                f"prompt of {tokens} tokens exceeds the backend context of {self.backend.max_context_tokens}"
            )

    async def submit(self, prompt: str, params: Optional[GenParams] = None) -> str:
        """Queue one prompt and wait for its completion"""
        self.check_budget(prompt)
        self._ensure_started()
        future = asyncio.get_running_loop().create_future()
        await self._queue.put((prompt, params or GenParams(), future))
        return await future

    # ===== Batching loop =====

    async def _collect(self) -> List[_Request]:
        loop = asyncio.get_running_loop()
        batch = [await self._queue.get()]
        deadline = loop.time() + self.max_wait
        while len(batch) < self.max_batch_size:
            try:
                batch.append(self._queue.get_nowait())
                continue
            except asyncio.QueueEmpty:
                pass
            remaining = deadline - loop.time()
            if remaining <= 0:
                break
            await asyncio.sleep(min(remaining, self.POLL_INTERVAL))
        return batch

    async def _run(self):
        while True:
            batch = await self._collect()
            groups: Dict[GenParams, List[_Request]] = {}
            for request in batch:
                groups.setdefault(request[1], []).append(request)
            for params, group in groups.items():
                await self._semaphore.acquire()
                task = asyncio.get_running_loop().create_task(self._dispatch(params, group))
                self._inflight.add(task)
                task.add_done_callback(self._inflight.discard)

    async def _call(self, prompts: List[str], params: GenParams) -> List[str]:
        for prompt in prompts:
            assert self._count(prompt) <= self.backend.max_context_tokens, "oversize prompt dispatched"
        outputs = await self.backend.generate(prompts, params)
        if len(outputs) != len(prompts):
            raise ContentError(f"backend returned {len(outputs)} outputs for {len(prompts)} prompts")
        return outputs

    async def _dispatch(self, params: GenParams, group: List[_Request]):
        prompts = [prompt for prompt, _, _ in group]
        try:
            self.batches_sent += 1
            try:
                outputs = await self._call(prompts, params)
            except TransportError as e:
                logger.warning("⚠️  Batch of %d failed (%s); retrying each prompt once", len(group), e)
                await self._retry_solo(params, group)
                return
            except ContentError as e:
                if len(group) > 1:
                    logger.warning("⚠️  Batch of %d was rejected (%s); isolating the failing prompts", len(group), e)
                    await self._retry_solo(params, group)
                    return
                if not group[0][2].done():
                    group[0][2].set_exception(e)
                return
            except Exception as e:
                for _, _, future in group:
                    if not future.done():
                        future.set_exception(e)
                return
            for (_, _, future), output in zip(group, outputs):
                if not future.done():
                    future.set_result(output)
        finally:
            self._semaphore.release()

    async def _retry_solo(self, params: GenParams, group: List[_Request]):
        for prompt, _, future in group:
            self.retries += 1
            self.batches_sent += 1
            try:
                output = (await self._call([prompt], params))[0]
            except Exception as e:
                if not future.done():
                    future.set_exception(e)
                continue
            if not future.done():
                future.set_result(output)


async def dispatch_batched(
    requests: List[str],
    params: Optional[GenParams],
    backend: GenerationBackend,
    max_batch_size: int = 64,
    max_wait: float = 0.01,
    max_in_flight: int = 4,
) -> List[str]:
    """
    Send a list of prompts through a fresh batcher and return the
    completions in request order. Oversize prompts are rejected before
    anything is sent.
    """
    if not requests:
        return []
    batcher = DynamicBatcher(backend, max_batch_size, max_wait, max_in_flight)
    for prompt in requests:
        batcher.check_budget(prompt)
    async with batcher:
        results = await asyncio.gather(
            *(batcher.submit(prompt, params) for prompt in requests), return_exceptions=True
        )
    for result in results:
        if isinstance(result, BaseException):
            raise result
    return list(results)


