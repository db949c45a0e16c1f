import pytest
from pydantic import ValidationError
from models.config import PipelineConfig, Thresholds
from models.evaluation import LikertRecord, MoeSummary, Prf
from models.insight import Insight, Sentiment, Verbatim
from models.review import LanguageCode, Review
from models.summary import SelectionStrategy, SummaryBundle, VerbatimPool


def _insight(**overrides):
    data = dict(
        entity_id="p1",
        review_id="r1",
        l3_aspect="battery life",
        sentiment="positive",
        source_verbatims=[{"text": "Great battery", "language": "EN"}],
        translated_verbatims=[{"text": "Gran batería", "language": "ES"}],
    )
    data.update(overrides)
    return Insight(**data)


def test_language_code_is_a_closed_set():
    assert LanguageCode.parse("es") == LanguageCode.ES
    assert LanguageCode.parse(" de ") == LanguageCode.DE
    with pytest.raises(ValueError, match="unsupported language"):
        LanguageCode.parse("PT")


def test_review_rejects_blank_text_and_bad_rating():
    with pytest.raises(ValidationError):
        Review(review_id="r1", entity_id="p1", language="EN", text="   ")
    with pytest.raises(ValidationError):
        Review(review_id="r1", entity_id="p1", language="EN", text="ok", rating=6)


def test_sentiment_parse():
    assert Sentiment.parse("Positive") == Sentiment.POSITIVE
    assert Sentiment.parse("BOTH.") == Sentiment.BOTH
    with pytest.raises(ValueError):
        Sentiment.parse("neutral")


def test_sentiment_combine():
    assert Sentiment.POSITIVE.combine(Sentiment.POSITIVE) == Sentiment.POSITIVE
    assert Sentiment.POSITIVE.combine(Sentiment.NEGATIVE) == Sentiment.BOTH


def test_insight_id_and_target_language():
    insight = _insight()
    assert insight.insight_id == "r1:battery life"
    assert insight.target_language == LanguageCode.ES


def test_insight_needs_aligned_verbatims():
    with pytest.raises(ValidationError, match="align"):
        _insight(translated_verbatims=[])
    with pytest.raises(ValidationError):
        _insight(source_verbatims=[], translated_verbatims=[])


def test_insight_translations_share_one_language():
    with pytest.raises(ValidationError, match="target language"):
        _insight(
            source_verbatims=[{"text": "a b", "language": "EN"}, {"text": "c d", "language": "EN"}],
            translated_verbatims=[{"text": "a b", "language": "ES"}, {"text": "c d", "language": "FR"}],
        )


def test_summary_bundle_requires_provenance_per_aspect():
    with pytest.raises(ValidationError, match="provenance"):
        SummaryBundle(entity_id="p1", target_language="EN", aspect_summaries={"prices": "cheap"})


def test_summary_bundle_percent_range():
    with pytest.raises(ValidationError, match="out of range"):
        SummaryBundle(entity_id="p1", target_language="EN", aspect_stats={"prices": 101})


def test_verbatim_pool_alignment():
    with pytest.raises(ValidationError):
        VerbatimPool(aspect="prices", entity_id="p1",
                     verbatims=[Verbatim(text="cheap", language="EN")], review_ids=[])


@pytest.mark.parametrize("values", [
    dict(sem_replace=0.7, sem_l4_topic=0.7),
    dict(sem_replace=1.2),
    dict(sem_l4_verbatim=0),
    dict(sem_replce=0.5),
])
def test_invalid_thresholds(values):
    with pytest.raises(ValidationError):
        Thresholds(**values)


def test_pipeline_config_defaults():
    cfg = PipelineConfig()
    assert cfg.words_per_aspect == 10
    assert cfg.thresholds.sem_replace == 0.95
    assert cfg.thresholds.sem_l4_topic == 0.7
    assert cfg.thresholds.sem_l4_verbatim == 0.4
    assert cfg.selection_strategy.value == "random"
    assert cfg.overall_mode.value == "per_sentiment"


def test_pipeline_config_bounds():
    with pytest.raises(ValidationError):
        PipelineConfig(context_length=31)
    with pytest.raises(ValidationError):
        PipelineConfig(aspect_template="summarise_minimal")
    assert PipelineConfig(target_language="fr").target_language == LanguageCode.FR


def test_selection_strategy_k_positive():
    with pytest.raises(ValidationError):
        SelectionStrategy(k=0)


def test_prf_f1():
    assert Prf(precision=0.0, recall=0.0).f1 == 0.0
    assert Prf(precision=0.90, recall=0.91).f1 == pytest.approx(0.905, abs=5e-4)


def test_likert_record_criterion_and_range():
    record = LikertRecord(item_id="1", criterion="Aspect Specificity", rater_id="a", score=5)
    assert record.criterion.value == "aspect_specificity"
    with pytest.raises(ValidationError):
        LikertRecord(item_id="1", criterion="coverage", rater_id="a", score=0)


def test_moe_summary():
    summary = MoeSummary(criterion="coverage", mean=4.18, sd=0.40, n=100)
    assert summary.moe == pytest.approx(0.0784)
    assert summary.ci == pytest.approx((4.1016, 4.2584))
