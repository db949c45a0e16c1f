"""
Aspect-level and overall summarisation of extracted insights.

Verbatims are pooled per granular aspect, a subset is selected, and the
subset is summarised recursively so that no prompt asks the backend to read
more than context_length tokens of input. The overall summary combines the
top aspects ranked by the share of reviews that mention them.
"""
import asyncio
import logging
import math
import random
from collections import OrderedDict
from typing import Dict, List, Optional, Sequence, Tuple
import numpy as np
from core.data_loader import DataLoader
from core.embeddings import EmbeddingProvider
from core.errors import BudgetError, InputError
from core.llm_gateway import DynamicBatcher, GenerationBackend
from core.prompts import render
from core.tokens import TokenCounter, count_tokens
from models.config import OverallMode, PipelineConfig, SelectionKind
from models.generation import GenParams, PromptName, PromptTemplate
from models.insight import Insight, Sentiment, Verbatim
from models.review import LanguageCode
from models.summary import SelectionStrategy, SummaryBundle, VerbatimPool

logger = logging.getLogger(__name__)

OVERALL_KEY = "overall"
SENTIMENT_LABELS = {
    Sentiment.POSITIVE: "positive",
    Sentiment.NEGATIVE: "negative",
    Sentiment.BOTH: "positive and negative",
}


# ===== Pools and ranking =====

def mention_percent(mentioning: int, total: int) -> int:
    """Rounded share of reviews, halves rounded up"""
    if total <= 0:
        return 0
    return min(100, int(math.floor(100 * mentioning / total + 0.5)))


def build_pools(
    entity_id: str,
    insights: Sequence[Insight],
    total_reviews: Optional[int] = None,
    sentiment: Optional[Sentiment] = None,
) -> List[VerbatimPool]:
    """
    One pool of translated verbatims per granular aspect of an entity, in
    order of first appearance. With a sentiment, only insights of that
    polarity (or of both) contribute. The denominator is total_reviews when
    known, else the number of distinct reviews among the entity's insights.
    """
    own = [i for i in insights if i.entity_id == entity_id]
    total = total_reviews or len({i.review_id for i in own})
    if sentiment is not None:
        own = [i for i in own if i.sentiment in (sentiment, Sentiment.BOTH)]

    grouped: Dict[str, List[Insight]] = OrderedDict()
    for insight in own:
        grouped.setdefault(insight.l3_aspect, []).append(insight)

    pools = []
    for aspect, members in grouped.items():
        verbatims, review_ids = [], []
        for insight in members:
            for verbatim in insight.translated_verbatims:
                verbatims.append(verbatim)
                review_ids.append(insight.review_id)
        pools.append(VerbatimPool(
            aspect=aspect,
            entity_id=entity_id,
            verbatims=verbatims,
            review_ids=review_ids,
            insight_ids=[i.insight_id for i in members],
            mention_percent=mention_percent(len({i.review_id for i in members}), total),
        ))
    return pools


def rank_aspects(pools: Sequence[VerbatimPool]) -> List[VerbatimPool]:
    """Descending mention percentage; ties broken alphabetically"""
    return sorted(pools, key=lambda p: (-p.mention_percent, p.aspect))


def pool_sentiment(insights: Sequence[Insight], pool: VerbatimPool) -> Sentiment:
    ids = set(pool.insight_ids)
    sentiment = None
    for insight in insights:
        if insight.insight_id in ids and insight.entity_id == pool.entity_id:
            sentiment = insight.sentiment if sentiment is None else sentiment.combine(insight.sentiment)
    return sentiment or Sentiment.BOTH


# ===== Selection =====

def _leader_clusters(vectors: np.ndarray, threshold: float) -> List[List[int]]:
    """Greedy single pass: a member joins the first cluster whose leader is close enough"""
    unit = vectors / np.linalg.norm(vectors, axis=1, keepdims=True)
    clusters: List[List[int]] = []
    for i in range(len(unit)):
        for cluster in clusters:
            if float(unit[cluster[0]] @ unit[i]) >= threshold:
                cluster.append(i)
                break
        else:
            clusters.append([i])
    return clusters


async def select_indices(pool: VerbatimPool, strategy: SelectionStrategy,
                         emb: Optional[EmbeddingProvider] = None) -> List[int]:
    """Positions in the pool of the selected verbatims, most representative first"""
    n = len(pool.verbatims)
    if n == 0:
        raise InputError(f"empty pool for aspect {pool.aspect!r}")
    if strategy.k >= n:
        return list(range(n))

    if strategy.kind == SelectionKind.RANDOM:
        return random.Random(strategy.seed).sample(range(n), strategy.k)

    if emb is None:
        raise ValueError(f"{strategy.kind.value} selection needs an embedding provider")
    vectors = await emb.embed(pool.texts)

    if strategy.kind == SelectionKind.CENTROID:
        unit = vectors / np.linalg.norm(vectors, axis=1, keepdims=True)
        centroid = unit.mean(axis=0)
        norm = np.linalg.norm(centroid)
        sims = unit @ (centroid / norm) if norm > 0 else np.zeros(n)
        order = sorted(range(n), key=lambda i: (-float(sims[i]), i))
        return order[:strategy.k]

    clusters = _leader_clusters(vectors, strategy.cluster_cosine)
    sizes = np.array([len(c) for c in clusters], dtype=float)
    rng = np.random.default_rng(strategy.seed)
    picked = rng.choice(len(clusters), size=min(strategy.k, len(clusters)), replace=False, p=sizes / sizes.sum())
    picked = sorted((int(c) for c in picked), key=lambda c: (-len(clusters[c]), c))
    chosen = [clusters[c][0] for c in picked]
    if len(chosen) < strategy.k:
        by_size = sorted(range(len(clusters)), key=lambda c: (-len(clusters[c]), c))
        spare = [i for c in by_size for i in clusters[c][1:]]
        chosen.extend(spare[:strategy.k - len(chosen)])
    return chosen


async def select(pool: VerbatimPool, strategy: SelectionStrategy,
                 emb: Optional[EmbeddingProvider] = None) -> List[Verbatim]:
    """
    At most strategy.k verbatims of a pool. random is seeded sampling;
    weighted clusters near-duplicates and draws cluster leaders with
    probability proportional to cluster size; centroid keeps the verbatims
    closest to the pool's mean embedding.
    """
    return [pool.verbatims[i] for i in await select_indices(pool, strategy, emb)]


# ===== Recursive summarisation =====

def chunk_elements(elements: Sequence[str], budget: int, count: TokenCounter = count_tokens) -> List[List[str]]:
    """
    Greedy contiguous chunks whose newline-joined token count fits the
    budget. An element that alone exceeds the budget cannot be placed.
    """
    chunks: List[List[str]] = []
    current: List[str] = []
    for element in elements:
        if count(element) > budget:
            raise BudgetError(f"verbatim exceeds context budget of {budget} tokens: {element[:40]!r}")
        if current and count("\n".join(current + [element])) > budget:
            chunks.append(current)
            current = []
        current.append(element)
    if current:
        chunks.append(current)
    return chunks


class RecursiveSummariser:
    """
    Summarises a list of elements with a template whose input section never
    exceeds context_length tokens: if the joined elements fit, one call;
    otherwise each chunk is summarised (siblings concurrently) and the
    partial summaries are summarised in turn.
    """

    def __init__(
        self,
        batcher: DynamicBatcher,
        template: PromptTemplate,
        context_length: int,
        max_depth: int = 8,
        params: Optional[GenParams] = None,
        count: TokenCounter = count_tokens,
    ):
        self.batcher = batcher
        self.template = template
        self.context_length = context_length
        self.max_depth = max_depth
        self.params = params or GenParams()
        self.count = count
        self.calls = 0
        self.depth_reached = 0

    async def _call(self, text: str, variables: dict) -> str:
        self.calls += 1
        prompt = render(self.template, {**variables, "percent_contribution": text})
        return (await self.batcher.submit(prompt, self.params)).strip()

    async def summarise(self, elements: Sequence[str], variables: dict) -> str:
        return await self._summarise(elements, variables, 1)

    async def _summarise(self, elements: Sequence[str], variables: dict, depth: int) -> str:
        if depth > self.max_depth:
            raise BudgetError(f"recursive summarisation did not converge within {self.max_depth} levels")
        self.depth_reached = max(self.depth_reached, depth)
        elements = [" ".join(e.split()) for e in elements if e.strip()]
        if not elements:
            raise InputError("nothing to summarise")

        joined = "\n".join(elements)
        if self.count(joined) <= self.context_length:
            return await self._call(joined, variables)

        chunks = chunk_elements(elements, self.context_length, self.count)
        partials = await asyncio.gather(*(self._call("\n".join(c), variables) for c in chunks))
        logger.debug("Level %d: %d elements -> %d partial summaries", depth, len(elements), len(partials))
        return await self._summarise(partials, variables, depth + 1)


def _aspect_variables(cfg: PipelineConfig, pool: VerbatimPool, sentiment: Sentiment) -> dict:
    if cfg.aspect_template == PromptName.SUMMARISE_ASPECT.value:
        return {"word_count": cfg.words_per_aspect, "aspect": pool.aspect}
    return {
        "word_count": cfg.words_per_aspect,
        "aspect_count": 1,
        "sentiment": SENTIMENT_LABELS[sentiment],
    }


async def rec_summ(
    aspect: str,
    target_language: LanguageCode,
    pools: Sequence[VerbatimPool],
    backend: GenerationBackend,
    cfg: PipelineConfig,
) -> str:
    """
    Summarise the whole pool of one aspect through a batcher of its own.
    An empty pool is skipped with a warning and no backend call.
    """
    pool = next((p for p in pools if p.aspect == aspect), None)
    if pool is None:
        raise InputError(f"no pool for aspect {aspect!r}")
    if not pool.verbatims:
        logger.warning("⚠️  Empty pool for aspect %r; skipped", aspect)
        return ""
    stray = {v.language for v in pool.verbatims} - {target_language}
    if stray:
        raise InputError(f"pool for {aspect!r} has verbatims in {', '.join(sorted(l.value for l in stray))}, "
                         f"not {target_language.value}")
    template = DataLoader().get_template(PromptName(cfg.aspect_template))
    async with DynamicBatcher(backend, cfg.max_batch_size, cfg.max_wait_ms / 1000, cfg.max_in_flight) as batcher:
        summariser = RecursiveSummariser(batcher, template, cfg.context_length, cfg.max_recursion_depth)
        return await summariser.summarise(pool.texts, _aspect_variables(cfg, pool, Sentiment.BOTH))


# ===== Entity summaries =====

class EntitySummariser:
    """Builds the SummaryBundle of one entity at a time"""

    def __init__(
        self,
        batcher: DynamicBatcher,
        emb: Optional[EmbeddingProvider],
        cfg: PipelineConfig,
        params: Optional[GenParams] = None,
        count: TokenCounter = count_tokens,
    ):
        self.batcher = batcher
        self.emb = emb
        self.cfg = cfg
        self.params = params or GenParams()
        self.count = count
        loader = DataLoader()
        self.aspect_template = loader.get_template(PromptName(cfg.aspect_template))
        self.overall_template = loader.get_template(PromptName.SUMMARISE)
        self.strategy = SelectionStrategy(
            kind=cfg.selection_strategy, k=cfg.selection_k,
            seed=cfg.random_seed, cluster_cosine=cfg.cluster_cosine,
        )
        self.calls = 0
        self.warnings: List[str] = []

    def _warn(self, entity_id: str, message: str):
        logger.warning("⚠️  %s: %s", entity_id, message)
        self.warnings.append(f"{entity_id}: {message}")

    def _check_language(self, insights: Sequence[Insight]):
        target = self.cfg.target_language
        for insight in insights:
            if insight.translated_verbatims and insight.target_language != target:
                raise InputError(
                    f"insight {insight.insight_id} was translated to {insight.target_language.value}, "
                    f"not {target.value}; re-run extraction for this target language"
                )

    async def _aspect_summary(self, insights: Sequence[Insight], pool: VerbatimPool) -> Tuple[str, int]:
        selected = await select(pool, self.strategy, self.emb)
        summariser = RecursiveSummariser(
            self.batcher, self.aspect_template, self.cfg.context_length,
            self.cfg.max_recursion_depth, self.params, self.count,
        )
        variables = _aspect_variables(self.cfg, pool, pool_sentiment(insights, pool))
        summary = await summariser.summarise([v.text for v in selected], variables)
        return summary, summariser.calls

    async def _overall(self, ranked: Sequence[VerbatimPool], sentiment: Sentiment) -> Tuple[str, List[str]]:
        top = list(ranked[:self.cfg.top_aspect_count])
        lines, provenance = [], []
        for pool in top:
            selected = await select(pool, self.strategy, self.emb)
            texts = [" ".join(v.text.split()) for v in selected[:self.cfg.overall_verbatims_per_aspect]]
            lines.append(f"{pool.mention_percent}% of the reviews mention {pool.aspect}: {' | '.join(texts)}")
            provenance.extend(i for i in pool.insight_ids if i not in provenance)
        prompt = render(self.overall_template, {
            "word_count": len(top) * self.cfg.words_per_aspect,
            "aspect_count": len(top),
            "sentiment": SENTIMENT_LABELS[sentiment],
            "percent_contribution": "\n".join(lines),
        })
        self.calls += 1
        return (await self.batcher.submit(prompt, self.params)).strip(), provenance

    async def summarise_entity(
        self,
        entity_id: str,
        insights: Sequence[Insight],
        total_reviews: Optional[int] = None,
    ) -> SummaryBundle:
        own = [i for i in insights if i.entity_id == entity_id]
        if not own:
            raise InputError(f"no insights for entity {entity_id!r}")
        self._check_language(own)

        ranked = rank_aspects(build_pools(entity_id, own, total_reviews))
        summarisable = []
        for pool in ranked:
            if pool.verbatims:
                summarisable.append(pool)
            else:
                self._warn(entity_id, f"aspect {pool.aspect!r} has no verbatims; skipped")

        results = await asyncio.gather(*(self._aspect_summary(own, pool) for pool in summarisable))
        aspect_summaries: Dict[str, str] = {}
        provenance: Dict[str, List[str]] = {}
        for pool, (summary, calls) in zip(summarisable, results):
            aspect_summaries[pool.aspect] = summary
            provenance[pool.aspect] = list(pool.insight_ids)
            self.calls += calls

        by_sentiment: Dict[str, str] = {}
        overall_ids: List[str] = []
        if self.cfg.overall_mode == OverallMode.MIXED:
            overall, overall_ids = await self._overall(summarisable, Sentiment.BOTH)
        else:
            parts = []
            for sentiment in (Sentiment.POSITIVE, Sentiment.NEGATIVE):
                pools = [p for p in rank_aspects(build_pools(entity_id, own, total_reviews, sentiment)) if p.verbatims]
                if not pools:
                    self._warn(entity_id, f"no {sentiment.value} aspects; {sentiment.value} overall summary skipped")
                    continue
                text, ids = await self._overall(pools, sentiment)
                by_sentiment[sentiment.value] = text
                provenance[f"{OVERALL_KEY}:{sentiment.value}"] = ids
                overall_ids.extend(i for i in ids if i not in overall_ids)
                parts.append(text)
            overall = " ".join(parts)
        if overall_ids:
            provenance[OVERALL_KEY] = overall_ids

        logger.info("✓ Summarised %s: %d aspects", entity_id, len(aspect_summaries))
        return SummaryBundle(
            entity_id=entity_id,
            target_language=self.cfg.target_language,
            aspect_summaries=aspect_summaries,
            overall_summary=overall,
            overall_by_sentiment=by_sentiment,
            provenance=provenance,
            aspect_stats={p.aspect: p.mention_percent for p in ranked},
        )


async def summarise_entity(
    entity_id: str,
    insights: Sequence[Insight],
    backend: GenerationBackend,
    emb: Optional[EmbeddingProvider],
    cfg: PipelineConfig,
    total_reviews: Optional[int] = None,
) -> SummaryBundle:
    """Summarise one entity through a batcher of its own"""
    async with DynamicBatcher(backend, cfg.max_batch_size, cfg.max_wait_ms / 1000, cfg.max_in_flight) as batcher:
        return await EntitySummariser(batcher, emb, cfg).summarise_entity(entity_id, insights, total_reviews)
