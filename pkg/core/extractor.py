"""
Decomposed prompting extraction of insight quadruples.

Per review, one prompt identifies the aspects, then each aspect gets a
sentiment prompt, a verbatim prompt and a translation prompt, in that order:
3N + 1 prompts for N aspects. Generated aspects are then standardised
against the taxonomy and merged per granular aspect.
"""
import asyncio
import logging
import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple
import numpy as np
from core.data_loader import DataLoader
from core.embeddings import EmbeddingProvider
from core.errors import BackendError, InputError
from core.insight_store import InsightStore
from core.llm_gateway import DynamicBatcher, GenerationBackend
from core.matcher import cosine, standardise
from core.prompts import render
from core.segmenter import segment
from core.tokens import TokenCounter, count_tokens
from models.config import PipelineConfig
from models.extraction import AspectRecord, ClrStats, ExtractionScores, ExtractionTrace, PhaseCall
from models.generation import GenParams, PromptName
from models.insight import Insight, Sentiment, Verbatim
from models.match import MatchKind
from models.review import Review
from models.taxonomy import Taxonomy, normalise_name

logger = logging.getLogger(__name__)

_BULLET_RE = re.compile(r"^\s*(?:[-*•]+|\d+[.)]|\(\d+\))\s*")
_SENTIMENT_RE = re.compile(r"\b(positive|negative|both)\b", re.IGNORECASE)
_TOKEN_RE = re.compile(r"\w+")
_NOTHING = {"none", "n/a", "no aspects", "nothing"}
MAX_ASPECT_WORDS = 6


# ===== Response parsing =====

def _clean(item: str) -> str:
    item = _BULLET_RE.sub("", item)
    return item.strip().strip("\"'`“”«»").strip().rstrip(".").strip()


def parse_aspect_list(response: str) -> Tuple[List[str], bool]:
    """
    Aspect names from a comma- or line-separated answer, deduplicated in
    order. Returns (names, parsed); parsed is False when the answer had
    content but no usable name.
    """
    names, seen = [], set()
    pieces = [_clean(p) for p in re.split(r"[,;\n]", response)]
    pieces = [p for p in pieces if p]
    for piece in pieces:
        if piece.casefold() in _NOTHING:
            continue
        if len(piece.split()) > MAX_ASPECT_WORDS:
            continue
        key = normalise_name(piece)
        if key not in seen:
            seen.add(key)
            names.append(piece)
    nothing_said = all(p.casefold() in _NOTHING for p in pieces)
    return names, bool(names) or nothing_said


def parse_sentiment(response: str) -> Optional[Sentiment]:
    match = _SENTIMENT_RE.search(response)
    return Sentiment.parse(match.group(1)) if match else None


def parse_lines(response: str) -> List[str]:
    return [line for line in (_clean(raw) for raw in response.split("\n")) if line]


def jaccard(a: str, b: str) -> float:
    """Token-level Jaccard overlap of two texts"""
    left = set(_TOKEN_RE.findall(a.casefold()))
    right = set(_TOKEN_RE.findall(b.casefold()))
    if not left and not right:
        return 1.0
    return len(left & right) / len(left | right)


def clr_percent(avg_tokens_per_review: float, avg_tokens_per_verbatim: float) -> int:
    """Context-length reduction from whole reviews to verbatims, in percent"""
    return ClrStats(
        n_reviews=0,
        avg_tokens_per_review=avg_tokens_per_review,
        avg_tokens_per_verbatim=avg_tokens_per_verbatim,
    ).clr_percent


def f1_score(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


# ===== Extraction =====

@dataclass
class CorpusExtraction:
    """Everything extract_corpus produces"""
    insights: List[Insight]
    traces: List[ExtractionTrace]
    stats: ClrStats
    warnings: List[str] = field(default_factory=list)


class InsightExtractor:
    """Runs the four prompting phases for reviews against one taxonomy"""

    def __init__(
        self,
        taxonomy: Taxonomy,
        batcher: DynamicBatcher,
        emb: EmbeddingProvider,
        cfg: PipelineConfig,
        params: Optional[GenParams] = None,
        count: TokenCounter = count_tokens,
    ):
        self.taxonomy = taxonomy
        self.batcher = batcher
        self.emb = emb
        self.cfg = cfg
        self.params = params or GenParams()
        self.count = count
        loader = DataLoader()
        self.templates = {name: loader.get_template(name) for name in (
            PromptName.ASPECT_ID, PromptName.SENTIMENT, PromptName.VERBATIM, PromptName.TRANSLATE,
        )}

    async def _ask(self, trace: ExtractionTrace, phase: PromptName, variables: dict,
                   context: str, aspect: Optional[str] = None) -> str:
        prompt = render(self.templates[phase], variables, context)
        response = await self.batcher.submit(prompt, self.params)
        trace.phase_calls.append(PhaseCall(phase=phase, aspect=aspect, prompt=prompt, response=response))
        return response

    def _warn(self, trace: ExtractionTrace, message: str):
        logger.warning("⚠️  %s: %s", trace.review_id, message)
        trace.warnings.append(message)

    async def extract(self, review: Review) -> Tuple[List[Insight], ExtractionTrace]:
        """
        Insights of one review and the audit trace of the prompts sent.
        A backend failure is re-raised with the partial trace attached as
        ``error.trace``.
        """
        trace = ExtractionTrace(review_id=review.review_id)
        try:
            records = await self._run_phases(review, trace)
        except BackendError as e:
            trace.failed = True
            trace.warnings.append(f"backend failure: {e}")
            e.trace = trace
            raise
        assert trace.prompt_count == trace.expected_prompt_count(), "prompt count law violated"

        insights = await self._standardise(review, records, trace)
        return self._merge(insights), trace

    async def _run_phases(self, review: Review, trace: ExtractionTrace) -> List[AspectRecord]:
        language = review.language.value
        target = self.cfg.target_language.value
        context = review.text

        response = await self._ask(trace, PromptName.ASPECT_ID, {"language": language}, context)
        aspects, parsed = parse_aspect_list(response)
        if not parsed:
            self._warn(trace, f"unparseable aspect list {response!r}")
        trace.aspects = aspects

        segments = [seg.text for seg in segment(review)]
        records = []
        for aspect in aspects:
            record = AspectRecord(generated_aspect=aspect)

            answer = await self._ask(trace, PromptName.SENTIMENT,
                                     {"aspect": aspect, "language": language}, context, aspect)
            record.sentiment = parse_sentiment(answer)
            if record.sentiment is None:
                self._warn(trace, f"unparseable sentiment {answer!r} for {aspect!r}")

            sentiment_label = record.sentiment.value if record.sentiment else "expressed"
            answer = await self._ask(trace, PromptName.VERBATIM, {
                "aspect": aspect, "sentiment": sentiment_label, "language": language,
            }, context, aspect)
            verbatims = parse_lines(answer)
            if not verbatims:
                self._warn(trace, f"no verbatim returned for {aspect!r}")

            answer = await self._ask(trace, PromptName.TRANSLATE, {
                "source_language": language,
                "target_language": target,
                "verbatims": "\n".join(verbatims),
            }, context, aspect)
            translations = parse_lines(answer)
            if len(translations) != len(verbatims):
                self._warn(trace, f"translation count mismatch for {aspect!r}: "
                                  f"{len(verbatims)} verbatims, {len(translations)} translations")
                records.append(record)
                continue

            for source, translated in zip(verbatims, translations):
                best = max((jaccard(source, seg) for seg in segments), default=0.0)
                if best >= self.cfg.grounding_jaccard:
                    record.source_verbatims.append(source)
                    record.translated_verbatims.append(translated)
                else:
                    self._warn(trace, f"hallucinated verbatim {source!r} for {aspect!r}")
            records.append(record)

        trace.records = records
        return records

    async def _standardise(self, review: Review, records: List[AspectRecord],
                           trace: ExtractionTrace) -> List[Insight]:
        insights = []
        for record in records:
            if record.sentiment is None or not record.source_verbatims:
                continue
            if len(record.translated_verbatims) != len(record.source_verbatims):
                continue
            evidence = record.source_verbatims[0] if record.source_verbatims else review.text
            outcome = await standardise(
                record.generated_aspect, evidence, self.taxonomy, self.emb, self.cfg.thresholds,
                review_id=review.review_id, match_new_aspects=self.cfg.match_new_aspects,
            )
            record.resolved_aspect = outcome.l3_aspect
            record.match_kind = outcome.kind.value

            l3 = outcome.l3_aspect
            l1, l2 = self.taxonomy.lineage(l3)
            insights.append(Insight(
                entity_id=review.entity_id,
                review_id=review.review_id,
                l1_aspect=l1,
                l2_aspect=l2,
                l3_aspect=l3,
                l4_aspect=outcome.resolved_aspect if outcome.kind == MatchKind.NEW_L4 else None,
                new_aspect=outcome.kind == MatchKind.NEW_ASPECT,
                sentiment=record.sentiment,
                source_verbatims=[Verbatim(text=t, language=review.language) for t in record.source_verbatims],
                translated_verbatims=[
                    Verbatim(text=t, language=self.cfg.target_language) for t in record.translated_verbatims
                ],
            ))
        return insights

    @staticmethod
    def _merge(insights: List[Insight]) -> List[Insight]:
        """One insight per granular aspect; verbatims unioned, sentiments combined"""
        merged: Dict[str, Insight] = {}
        for insight in insights:
            current = merged.get(insight.l3_aspect)
            if current is None:
                merged[insight.l3_aspect] = insight
                continue
            pairs = list(zip(current.source_verbatims, current.translated_verbatims))
            known = {source.text for source, _ in pairs}
            for source, translated in zip(insight.source_verbatims, insight.translated_verbatims):
                if source.text not in known:
                    known.add(source.text)
                    pairs.append((source, translated))
            merged[insight.l3_aspect] = current.model_copy(update={
                "sentiment": current.sentiment.combine(insight.sentiment),
                "l4_aspect": current.l4_aspect or insight.l4_aspect,
                "source_verbatims": [s for s, _ in pairs],
                "translated_verbatims": [t for _, t in pairs],
            })
        return list(merged.values())

    async def extract_corpus(self, reviews: Sequence[Review],
                             store: Optional[InsightStore] = None) -> CorpusExtraction:
        """
        Extract every review with at most cfg.workers in progress at once.
        Results keep corpus order; a backend failure aborts the run.
        """
        if not reviews:
            raise InputError("corpus is empty")
        semaphore = asyncio.Semaphore(self.cfg.workers)

        async def run_one(review: Review):
            async with semaphore:
                return await self.extract(review)

        results = await asyncio.gather(*(run_one(r) for r in reviews))

        insights: List[Insight] = []
        traces: List[ExtractionTrace] = []
        warnings: List[str] = []
        for review, (review_insights, trace) in zip(reviews, results):
            insights.extend(review_insights)
            traces.append(trace)
            warnings.extend(f"{review.review_id}: {w}" for w in trace.warnings)
            if store is not None:
                store.record_review(review.entity_id, review.review_id)
                store.extend(review_insights)
        if store is not None:
            store.flush()

        stats = corpus_stats(reviews, insights, domain=self.taxonomy.domain, count=self.count)
        logger.info("✓ Extracted %d insights from %d reviews (CLR %d%%)",
                    len(insights), len(reviews), stats.clr_percent)
        return CorpusExtraction(insights=insights, traces=traces, stats=stats, warnings=warnings)


def corpus_stats(reviews: Sequence[Review], insights: Sequence[Insight],
                 domain: str = "default", count: TokenCounter = count_tokens) -> ClrStats:
    """Token-length accounting of reviews against their extracted verbatims"""
    review_tokens = [count(r.text) for r in reviews]
    verbatim_tokens = [count(v.text) for i in insights for v in i.source_verbatims]
    return ClrStats(
        domain=domain,
        n_reviews=len(reviews),
        n_entities=len({r.entity_id for r in reviews}),
        n_unique_aspects=len({i.l3_aspect for i in insights}),
        avg_aspects_per_review=len(insights) / len(reviews) if reviews else 0.0,
        avg_tokens_per_review=float(np.mean(review_tokens)) if review_tokens else 0.0,
        avg_tokens_per_verbatim=float(np.mean(verbatim_tokens)) if verbatim_tokens else 0.0,
    )


async def extract(
    review: Review,
    tax: Taxonomy,
    backend: GenerationBackend,
    emb: EmbeddingProvider,
    cfg: PipelineConfig,
) -> Tuple[List[Insight], ExtractionTrace]:
    """Extract one review through a batcher of its own"""
    async with DynamicBatcher(backend, cfg.max_batch_size, cfg.max_wait_ms / 1000, cfg.max_in_flight) as batcher:
        return await InsightExtractor(tax, batcher, emb, cfg).extract(review)


# ===== Scoring against gold quadruples =====

def _is_true_positive(pred: Insight, gold: Insight, tp_jaccard: float) -> bool:
    if pred.review_id != gold.review_id:
        return False
    if normalise_name(pred.l3_aspect) != normalise_name(gold.l3_aspect):
        return False
    if pred.sentiment != gold.sentiment:
        return False
    return any(
        jaccard(p.text, g.text) >= tp_jaccard
        for p in pred.source_verbatims for g in gold.source_verbatims
    )


async def score_extraction(
    predicted: Sequence[Insight],
    gold: Sequence[Insight],
    emb: EmbeddingProvider,
    tp_jaccard: float = 0.5,
    translation_cosine: float = 0.9,
) -> ExtractionScores:
    """
    Quadruple-level precision, recall and F1, plus the share of true
    positives whose translation matches the gold translation.
    """
    if not gold:
        raise InputError("gold set is empty; recall is undefined")

    unmatched = list(range(len(gold)))
    pairs: List[Tuple[Insight, Insight]] = []
    for pred in predicted:
        for position, g in enumerate(unmatched):
            if _is_true_positive(pred, gold[g], tp_jaccard):
                pairs.append((pred, gold[g]))
                del unmatched[position]
                break

    tp = len(pairs)
    precision = tp / len(predicted) if predicted else 0.0
    recall = tp / len(gold)

    correct = 0
    if pairs:
        texts = []
        for pred, g in pairs:
            texts.append(" ".join(v.text for v in pred.translated_verbatims))
            texts.append(" ".join(v.text for v in g.translated_verbatims))
        vectors = await emb.embed(texts)
        for i in range(0, len(texts), 2):
            if texts[i] == texts[i + 1] or cosine(vectors[i], vectors[i + 1]) >= translation_cosine:
                correct += 1

    return ExtractionScores(
        precision=precision,
        recall=recall,
        f1=f1_score(precision, recall),
        translation_accuracy=correct / tp if tp else 0.0,
        true_positives=tp,
        n_predicted=len(predicted),
        n_gold=len(gold),
    )
