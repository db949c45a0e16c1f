"""
Summary quality metrics and human-evaluation ingestion.

ROUGE and the embedding score compare generated summaries with references;
Likert ratings are read from CSV and reduced to a mean with a 95% margin of
error per criterion, plus Cohen's kappa for every pair of raters.
"""
import asyncio
import json
import logging
import re
from collections import Counter
from itertools import combinations
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union
import numpy as np
import pandas as pd
from rouge_score import rouge_scorer, tokenizers
from sklearn.metrics import cohen_kappa_score
from core.embeddings import EmbeddingProvider
from core.errors import InputError
from models.evaluation import (
    CRITERION_SCALES, Criterion, EvalReport, LikertRecord, MoeSummary, Prf, RougeScores, SummaryScoreRow,
)
from models.review import LanguageCode
from models.summary import SummaryBundle

logger = logging.getLogger(__name__)

_WORD_RE = re.compile(r"\w+")
FINAL_RATER = "final"
LIKERT_COLUMNS = ["item_id", "criterion", "rater_id", "score"]


# ===== ROUGE =====

def tokenize(text: str, lang: Optional[LanguageCode] = None) -> List[str]:
    """Case-folded Unicode word tokens, no stemming"""
    return _WORD_RE.findall(text.casefold())


class _WordTokenizer(tokenizers.Tokenizer):
    """Hands rouge_score the same tokens as tokenize(); its default drops non-ASCII words"""

    def tokenize(self, text):
        return tokenize(text)


_SCORER = rouge_scorer.RougeScorer(["rouge1", "rouge2", "rougeL"], use_stemmer=False, tokenizer=_WordTokenizer())


def rouge(candidate: str, reference: str, lang: Optional[LanguageCode] = None) -> RougeScores:
    """ROUGE-1, ROUGE-2 and ROUGE-L precision, recall and F1"""
    if not tokenize(candidate, lang) or not tokenize(reference, lang):
        raise InputError("rouge needs non-empty candidate and reference texts")

    scores = _SCORER.score(reference, candidate)
    return RougeScores(**{
        name: Prf(precision=scores[key].precision, recall=scores[key].recall)
        for name, key in (("r1", "rouge1"), ("r2", "rouge2"), ("rl", "rougeL"))
    })


# ===== Embedding similarity =====

async def embed_score(candidate: str, reference: str, emb: EmbeddingProvider) -> float:
    """
    Greedy token matching F1: every token is matched to its most similar
    token on the other side, precision and recall are the mean best
    cosines. Clipped to [0, 1].
    """
    cand = tokenize(candidate)
    ref = tokenize(reference)
    if not cand or not ref:
        raise InputError("embed_score needs non-empty candidate and reference texts")

    vocab = sorted(set(cand) | set(ref))
    vectors = await emb.embed(vocab)
    unit = vectors / np.linalg.norm(vectors, axis=1, keepdims=True)
    position = {token: i for i, token in enumerate(vocab)}
    sims = unit[[position[t] for t in cand]] @ unit[[position[t] for t in ref]].T

    precision = float(sims.max(axis=1).mean())
    recall = float(sims.max(axis=0).mean())
    if precision + recall <= 0:
        return 0.0
    return float(np.clip(2 * precision * recall / (precision + recall), 0.0, 1.0))


# ===== Human evaluation =====

def moe_from_stats(criterion: str, mean: float, sd: float, n: int) -> MoeSummary:
    return MoeSummary(criterion=criterion, mean=mean, sd=sd, n=n)


def moe(records: Sequence[LikertRecord], criterion: Union[Criterion, str]) -> MoeSummary:
    """Mean, sample standard deviation and 95% margin of error of one criterion"""
    criterion = Criterion(criterion)
    scores = np.array([r.score for r in records if r.criterion == criterion], dtype=float)
    if len(scores) < 2:
        raise InputError(f"margin of error for {criterion.value} needs at least 2 ratings, got {len(scores)}")
    return moe_from_stats(criterion.value, float(scores.mean()), float(scores.std(ddof=1)), len(scores))


def cohens_kappa(a: Sequence, b: Sequence, chance: str = "pooled") -> float:
    """
    Agreement of two raters beyond chance. The pooled chance model uses the
    label distribution of both raters together; per_rater uses each
    rater's own marginals.
    """
    if len(a) != len(b):
        raise InputError(f"rating lists differ in length: {len(a)} vs {len(b)}")
    if not a:
        raise InputError("cohens_kappa needs at least one rating")

    observed = sum(x == y for x, y in zip(a, b)) / len(a)
    if chance == "per_rater":
        if len(set(a) | set(b)) == 1:
            return 1.0
        return float(cohen_kappa_score(list(a), list(b)))
    if chance != "pooled":
        raise ValueError(f"unknown chance model {chance!r}")

    pooled = Counter(a) + Counter(b)
    expected = sum((count / (2 * len(a))) ** 2 for count in pooled.values())
    if expected == 1:
        return 1.0 if observed == 1 else 0.0
    return (observed - expected) / (1 - expected)


def read_likert_csv(path: Union[str, Path]) -> List[LikertRecord]:
    """Ratings from a CSV with header item_id,criterion,rater_id,score"""
    path = Path(path)
    try:
        frame = pd.read_csv(path, dtype={"item_id": str, "rater_id": str})
    except FileNotFoundError:
        raise InputError(f"Likert file not found: {path}") from None
    except pd.errors.EmptyDataError:
        return []
    missing = [c for c in LIKERT_COLUMNS if c not in frame.columns]
    if missing:
        raise InputError(f"{path}: missing column(s) {', '.join(missing)}")

    records = []
    for row_no, row in enumerate(frame[LIKERT_COLUMNS].itertuples(index=False), 2):
        try:
            records.append(LikertRecord(
                item_id=str(row.item_id), criterion=row.criterion,
                rater_id=str(row.rater_id).strip(), score=int(row.score),
            ))
        except (ValueError, TypeError) as e:
            raise InputError(f"{path}: row {row_no}: {e}") from e
    logger.info("✓ Loaded %d ratings from %s", len(records), path)
    return records


def human_summary(records: Sequence[LikertRecord]) -> Tuple[Dict[str, MoeSummary], Dict[str, float], List[str]]:
    """
    MoE per criterion and kappa per rater pair. When a "final" rater is
    present its reconciled scores are the ones averaged.
    """
    warnings = []
    final = [r for r in records if r.rater_id == FINAL_RATER]
    averaged = final or list(records)

    summaries = {}
    for criterion in Criterion:
        rated = [r for r in averaged if r.criterion == criterion]
        if not rated:
            continue
        if len(rated) < 2:
            warnings.append(f"{criterion.value}: a single rating, no margin of error")
            continue
        summaries[criterion.value] = moe(rated, criterion)

    kappas = {}
    raters = sorted({r.rater_id for r in records if r.rater_id != FINAL_RATER})
    for criterion in Criterion:
        by_rater = {
            rater: {r.item_id: r.score for r in records if r.rater_id == rater and r.criterion == criterion}
            for rater in raters
        }
        for first, second in combinations(raters, 2):
            shared = sorted(set(by_rater[first]) & set(by_rater[second]))
            if not shared:
                continue
            kappas[f"{criterion.value}:{first}~{second}"] = cohens_kappa(
                [by_rater[first][i] for i in shared], [by_rater[second][i] for i in shared]
            )
    return summaries, kappas, warnings


# ===== Report =====

def read_references(path: Union[str, Path]) -> Dict[Tuple[str, str], str]:
    """Reference summaries from JSONL lines {"entity_id", "key", "text"}"""
    references = {}
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                item = json.loads(line)
                references[(item["entity_id"], item.get("key", "overall"))] = item["text"]
            except (json.JSONDecodeError, KeyError, TypeError) as e:
                raise InputError(f"{path}: line {line_no}: {e}") from e
    return references


async def report(
    bundles: Sequence[SummaryBundle],
    references: Dict[Tuple[str, str], str],
    likert: Sequence[LikertRecord],
    emb: EmbeddingProvider,
) -> EvalReport:
    """Automatic metrics for every summary with a reference, then the human section"""
    warnings: List[str] = []
    pairs = []
    for bundle in bundles:
        items = [("aspect", aspect, text) for aspect, text in bundle.aspect_summaries.items()]
        if bundle.overall_summary:
            items.append(("overall", "overall", bundle.overall_summary))
        for level, key, text in items:
            reference = references.get((bundle.entity_id, key))
            if reference is None:
                message = f"{bundle.entity_id}/{key}: no reference summary; skipped"
                logger.warning("⚠️  %s", message)
                warnings.append(message)
                continue
            pairs.append((bundle, level, key, text, reference))

    async def score(bundle, level, key, text, reference):
        return SummaryScoreRow(
            entity_id=bundle.entity_id, level=level, key=key,
            rouge=rouge(text, reference, bundle.target_language),
            embed_score=await embed_score(text, reference, emb),
        )

    rows = list(await asyncio.gather(*(score(*p) for p in pairs)))

    human = None
    kappa: Dict[str, float] = {}
    if likert:
        human, kappa, human_warnings = human_summary(likert)
        warnings.extend(human_warnings)
    return EvalReport(rows=rows, human=human, kappa=kappa, warnings=warnings)


def _mean_sd(summary: Optional[MoeSummary]) -> str:
    return f"{summary.mean:.2f}_{summary.sd:.2f}" if summary else "n/a"


def _scale_legend() -> str:
    lines = ["scale (1-5):"]
    for criterion, labels in CRITERION_SCALES.items():
        lines.append(f"  {criterion.value}: " + "; ".join(f"{i} {label}" for i, label in enumerate(labels, 1)))
    return "\n".join(lines)


def format_report(rep: EvalReport) -> str:
    """Aligned text tables: automatic metrics per summary level, then human criteria as mean_sd"""
    sections = []
    if rep.rows:
        frame = pd.DataFrame([{
            "entity": row.entity_id,
            "level": row.level,
            "key": row.key,
            "R1": round(row.rouge.r1.f1, 4),
            "R2": round(row.rouge.r2.f1, 4),
            "R-L": round(row.rouge.rl.f1, 4),
            "score": round(row.embed_score, 4),
        } for row in rep.rows])
        for level, group in frame.groupby("level", sort=True):
            sections.append(f"[{level}]\n" + group.drop(columns="level").to_string(index=False))
    else:
        sections.append("automatic metrics: no summary had a reference")

    if rep.human is None:
        sections.append("human evaluation: n/a")
    else:
        frame = pd.DataFrame([{c.value: _mean_sd(rep.human.get(c.value)) for c in Criterion}])
        moe_frame = pd.DataFrame([
            {"criterion": s.criterion, "mean": round(s.mean, 4), "sd": round(s.sd, 4), "n": s.n,
             "moe": round(s.moe, 4), "ci_low": round(s.ci[0], 4), "ci_high": round(s.ci[1], 4)}
            for s in rep.human.values()
        ])
        sections.append(frame.to_string(index=False))
        if not moe_frame.empty:
            sections.append(moe_frame.to_string(index=False))
        sections.append(_scale_legend())

    if rep.kappa:
        sections.append("\n".join(f"kappa {pair}: {value:.3f}" for pair, value in sorted(rep.kappa.items())))
    return "\n\n".join(sections) + "\n"
