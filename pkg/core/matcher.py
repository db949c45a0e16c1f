"""
Standardisation of generated aspect names against the taxonomy.

A generated aspect first goes through syntactic matching (exact name, then
token-subsequence containment). Only when that fails are embeddings
consulted: the best taxonomy name for the aspect itself (score_t) and the
best keyword list for the supporting verbatim (score_v) decide whether the
aspect replaces an L3, becomes an L4 under one, or is a new aspect.
"""
import logging
from typing import Iterable, List, NamedTuple, Optional, Sequence, Tuple
import numpy as np
from core.embeddings import EmbeddingProvider
from core.errors import EmbeddingError
from models.config import Thresholds
from models.match import MatchedBy, MatchKind, MatchOutcome
from models.taxonomy import Taxonomy, normalise_name

logger = logging.getLogger(__name__)


class SemanticScores(NamedTuple):
    aspect_t: str
    score_t: float
    aspect_v: str
    score_v: float


def cosine(u, v) -> float:
    """Cosine similarity of two non-zero vectors of equal dimension"""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise EmbeddingError(f"dimension mismatch: {u.shape} vs {v.shape}")
    norm_u = np.linalg.norm(u)
    norm_v = np.linalg.norm(v)
    if norm_u == 0 or norm_v == 0:
        raise EmbeddingError("cosine of a zero vector is undefined")
    return float(np.clip(np.dot(u, v) / (norm_u * norm_v), -1.0, 1.0))


def phi(aspects: Sequence[str], scores: Sequence[float]) -> Tuple[str, float]:
    """Leading aspect and its score; ties go to the lowest index"""
    if not aspects or len(aspects) != len(scores):
        raise ValueError("phi needs equal, non-empty aspect and score lists")
    best = int(np.argmax(np.asarray(scores, dtype=float)))
    return aspects[best], float(scores[best])


def _is_token_subsequence(needle: List[str], haystack: List[str]) -> bool:
    it = iter(haystack)
    return all(token in it for token in needle)


def _syntactic(generated: str, names: Iterable[str]) -> Optional[Tuple[str, MatchedBy]]:
    key = normalise_name(generated)
    if not key:
        return None
    names = list(names)
    for name in names:
        if normalise_name(name) == key:
            return name, MatchedBy.EXACT

    tokens = key.split()
    containing = [
        (len(normalise_name(name).split()), len(name), index, name)
        for index, name in enumerate(names)
        if _is_token_subsequence(tokens, normalise_name(name).split())
    ]
    if containing:
        return min(containing)[3], MatchedBy.SUBSTRING
    return None


def syntactic_match(generated: str, tax: Taxonomy) -> Optional[str]:
    """
    Taxonomy L3 equal to the generated name, or else the shortest L3 that
    contains it as a token subsequence ("battery" -> "battery life").
    Comparison is case-folded and whitespace-normalised.
    """
    hit = _syntactic(generated, tax.l3_names())
    return hit[0] if hit else None


async def semantic_scores(
    generated: str,
    evidence: str,
    tax: Taxonomy,
    emb: EmbeddingProvider,
) -> SemanticScores:
    """
    score_t: best cosine between the generated aspect and an L3 name.
    score_v: best cosine between the evidence verbatim and any keyword,
    maximised per L3 first.
    """
    names = tax.l3_names()
    if not names:
        raise ValueError("taxonomy has no L3 aspects")

    vectors = await emb.embed([generated, *names])
    topic_scores = [cosine(vectors[0], vec) for vec in vectors[1:]]
    aspect_t, score_t = phi(names, topic_scores)

    keyword_lists = [tax.keywords.get(name, []) for name in names]
    flat = [kw for kws in keyword_lists for kw in kws]
    verbatim_scores = []
    if flat:
        kw_vectors = await emb.embed([evidence, *flat])
        position = 1
        for kws in keyword_lists:
            sims = [cosine(kw_vectors[0], kw_vectors[position + i]) for i in range(len(kws))]
            verbatim_scores.append(max(sims) if sims else -1.0)
            position += len(kws)
    else:
        verbatim_scores = [-1.0] * len(names)
    aspect_v, score_v = phi(names, verbatim_scores)

    return SemanticScores(aspect_t, score_t, aspect_v, score_v)


def decide_branch(score_t: float, score_v: float, thresholds: Thresholds) -> MatchKind:
    """Strict comparisons: a score equal to a threshold does not pass it"""
    if score_t > thresholds.sem_replace:
        return MatchKind.EXISTING_L3
    if score_t > thresholds.sem_l4_topic and score_v > thresholds.sem_l4_verbatim:
        return MatchKind.NEW_L4
    return MatchKind.NEW_ASPECT


async def standardise(
    generated: str,
    evidence: str,
    tax: Taxonomy,
    emb: EmbeddingProvider,
    thresholds: Thresholds,
    review_id: str = "",
    match_new_aspects: bool = False,
) -> MatchOutcome:
    """Resolve one generated aspect; new aspects are recorded in tax.new_aspects"""
    generated = " ".join(generated.split())

    hit = _syntactic(generated, tax.l3_names())
    if hit:
        name, matched_by = hit
        return MatchOutcome(
            kind=MatchKind.EXISTING_L3,
            resolved_aspect=name,
            generated_aspect=generated,
            matched_by=matched_by,
        )

    if match_new_aspects:
        known = {normalise_name(n): n for n in tax.new_aspects.names()}
        if normalise_name(generated) in known:
            return MatchOutcome(
                kind=MatchKind.NEW_ASPECT,
                resolved_aspect=known[normalise_name(generated)],
                generated_aspect=generated,
                matched_by=MatchedBy.EXACT,
            )

    scores = await semantic_scores(generated, evidence, tax, emb)
    kind = decide_branch(scores.score_t, scores.score_v, thresholds)
    common = dict(
        generated_aspect=generated,
        score_t=scores.score_t,
        score_v=scores.score_v,
        aspect_t=scores.aspect_t,
        aspect_v=scores.aspect_v,
        matched_by=MatchedBy.SEMANTIC,
    )

    if kind == MatchKind.EXISTING_L3:
        return MatchOutcome(kind=kind, resolved_aspect=scores.aspect_t, **common)

    if kind == MatchKind.NEW_L4:
        logger.info(
            "L4 %r filed under %r (topic match); verbatim match was %r (score_v=%.3f)",
            generated, scores.aspect_t, scores.aspect_v, scores.score_v,
        )
        return MatchOutcome(kind=kind, resolved_aspect=generated, parent_l3=scores.aspect_t, **common)

    if tax.new_aspects.register(generated, review_id, None, scores.score_t, scores.score_v):
        logger.info("New aspect %r (score_t=%.3f, score_v=%.3f)", generated, scores.score_t, scores.score_v)
    return MatchOutcome(kind=kind, resolved_aspect=generated, **common)
