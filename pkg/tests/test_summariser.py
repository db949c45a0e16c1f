import random
import pytest
from conftest import RecordingBackend, run
from core.backends import MockBackend
from core.data_loader import DataLoader
from core.embeddings import CachedEmbeddings, HashEmbeddingProvider
from core.errors import BudgetError, InputError
from core.llm_gateway import DynamicBatcher, GenerationBackend
from core.prompts import input_section
from core.summariser import (
    OVERALL_KEY, RecursiveSummariser, build_pools, chunk_elements, mention_percent, rank_aspects,
    rec_summ, select, select_indices, summarise_entity,
)
from core.tokens import count_tokens
from models.config import PipelineConfig, SelectionKind
from models.generation import PromptName
from models.insight import Insight, Verbatim
from models.summary import SelectionStrategy, VerbatimPool

ASPECT_VARS = {"word_count": 10, "aspect": "prices"}


def _insight(review_id, aspect, text, sentiment="positive", entity_id="p1", language="EN"):
    return Insight(
        entity_id=entity_id, review_id=review_id, l3_aspect=aspect, sentiment=sentiment,
        source_verbatims=[{"text": text, "language": "EN"}],
        translated_verbatims=[{"text": text, "language": language}],
    )


def _pool(texts, aspect="prices", language="EN"):
    return VerbatimPool(
        aspect=aspect, entity_id="p1",
        verbatims=[Verbatim(text=t, language=language) for t in texts],
        review_ids=[f"r{i}" for i in range(len(texts))],
    )


def _verbatim(index, tokens=30):
    return " ".join([f"[[m{index}]]"] + [f"v{index}w{j}" for j in range(tokens - 1)])


class EchoInputBackend(GenerationBackend):
    """Answers a summarisation prompt with its own input; never shrinks anything"""

    async def generate(self, prompts, params):
        return [input_section(p) for p in prompts]


def _summarise(backend, elements, context_length, max_depth=8):
    template = DataLoader().get_template(PromptName.SUMMARISE_ASPECT)

    async def go():
        async with DynamicBatcher(backend, max_wait=0.0) as batcher:
            summariser = RecursiveSummariser(batcher, template, context_length, max_depth)
            text = await summariser.summarise(elements, ASPECT_VARS)
            return summariser, text

    return run(go())


def _input_tokens(backend):
    return [count_tokens(input_section(p)) for p in backend.prompts]


# ===== Ranking =====

@pytest.mark.parametrize("mentioning, total, expected", [
    (39, 100, 39), (1, 8, 13), (2, 3, 67), (1, 3, 33), (5, 5, 100), (0, 4, 0), (3, 0, 0),
])
def test_mention_percent(mentioning, total, expected):
    assert mention_percent(mentioning, total) == expected


def test_build_pools_uses_review_denominator():
    insights = [
        _insight("r1", "prices", "cheap"),
        _insight("r2", "prices", "good value"),
        _insight("r2", "shipping", "fast"),
        _insight("r9", "prices", "other entity", entity_id="p2"),
    ]
    pools = build_pools("p1", insights, total_reviews=4)
    assert [(p.aspect, p.mention_percent) for p in pools] == [("prices", 50), ("shipping", 25)]
    assert pools[0].texts == ["cheap", "good value"]
    assert pools[0].insight_ids == ["r1:prices", "r2:prices"]

    by_insights = build_pools("p1", insights)
    assert [p.mention_percent for p in by_insights] == [100, 50]


def test_build_pools_by_sentiment():
    insights = [
        _insight("r1", "prices", "cheap", "positive"),
        _insight("r2", "shipping", "late", "negative"),
        _insight("r3", "screen quality", "bright but dim", "both"),
    ]
    negative = build_pools("p1", insights, sentiment="negative")
    assert [p.aspect for p in negative] == ["shipping", "screen quality"]
    assert negative[0].mention_percent == 33


def test_rank_ties_are_alphabetical():
    pools = [
        VerbatimPool(aspect="prices", entity_id="p1", mention_percent=50),
        VerbatimPool(aspect="battery life", entity_id="p1", mention_percent=50),
        VerbatimPool(aspect="shipping", entity_id="p1", mention_percent=75),
    ]
    assert [p.aspect for p in rank_aspects(pools)] == ["shipping", "battery life", "prices"]


# ===== Selection =====

@pytest.mark.parametrize("kind", list(SelectionKind))
def test_selection_saturates(kind, emb):
    pool = _pool(["a b", "c d", "e f"])
    chosen = run(select(pool, SelectionStrategy(kind=kind, k=3), emb))
    assert [v.text for v in chosen] == ["a b", "c d", "e f"]


def test_random_selection_is_seeded():
    pool = _pool([f"verbatim {i}" for i in range(10)])
    strategy = SelectionStrategy(kind="random", k=3, seed=7)
    first = run(select(pool, strategy))
    assert first == run(select(pool, strategy))
    assert len(first) == 3
    assert len({v.text for v in first}) == 3


def test_selection_rejects_empty_pool(emb):
    with pytest.raises(InputError, match="empty pool"):
        run(select(_pool([]), SelectionStrategy(k=2), emb))


def test_embedding_strategies_need_a_provider():
    with pytest.raises(ValueError):
        run(select(_pool(["a", "b", "c"]), SelectionStrategy(kind="centroid", k=1)))


def test_weighted_selection_follows_cluster_sizes():
    pool = _pool(["great price", "Great price!", "great price.", "great  price", "GREAT PRICE", "rude staff"])
    emb = CachedEmbeddings(HashEmbeddingProvider(64, 0))

    pair = run(select(pool, SelectionStrategy(kind="weighted", k=2, seed=3), emb))
    assert [v.text for v in pair] == ["great price", "rude staff"]

    async def trials(n):
        hits = 0
        for seed in range(n):
            picked = await select_indices(pool, SelectionStrategy(kind="weighted", k=1, seed=seed), emb)
            hits += picked[0] != 5
        return hits / n

    assert run(trials(10_000)) == pytest.approx(5 / 6, abs=0.02)


def test_weighted_selection_fills_from_cluster_members():
    pool = _pool(["great price", "great price!", "great price.", "rude staff"])
    chosen = run(select_indices(pool, SelectionStrategy(kind="weighted", k=3, seed=0), HashEmbeddingProvider(64, 0)))
    assert sorted(chosen[:2]) == [0, 3]
    assert chosen[2] == 1


def test_centroid_selection_prefers_the_majority(emb):
    pool = _pool(["great price", "great price overall", "price is great", "rude staff at desk"])
    chosen = run(select(pool, SelectionStrategy(kind="centroid", k=2), emb))
    assert "rude staff at desk" not in [v.text for v in chosen]


# ===== Recursive summarisation =====

def test_chunking_is_greedy_and_contiguous():
    elements = ["a b c", "d e", "f g h i", "j"]
    assert chunk_elements(elements, 5) == [["a b c", "d e"], ["f g h i", "j"]]
    with pytest.raises(BudgetError, match="verbatim exceeds context budget"):
        chunk_elements(["one two three"], 2)


def test_short_input_needs_one_call():
    backend = RecordingBackend(MockBackend())
    summariser, text = _summarise(backend, ["cheap", "good value", "fair price"], 100)
    assert backend.calls == 1
    assert summariser.depth_reached == 1
    assert text == "prices: cheap good value fair price"


def test_eight_verbatims_over_budget_take_four_calls():
    backend = RecordingBackend(MockBackend())
    elements = [_verbatim(i) for i in range(8)]
    summariser, text = _summarise(backend, elements, 100)
    assert summariser.calls == 4
    assert backend.calls == 4
    assert summariser.depth_reached == 2
    assert max(_input_tokens(backend)) <= 100
    for i in range(8):
        assert f"[[m{i}]]" in text


def test_markers_reach_leaf_summaries():
    backend = RecordingBackend(MockBackend())
    elements = [_verbatim(i, tokens=12) for i in range(20)]
    _, text = _summarise(backend, elements, 50)
    leaves = [MockBackend().respond(p) for p in backend.prompts if "prices:" not in input_section(p)]
    assert len(leaves) == 5
    for i in range(20):
        assert any(f"[[m{i}]]" in summary for summary in leaves)
        assert f"[[m{i}]]" in text


@pytest.mark.parametrize("context_length", [50, 100, 500])
def test_every_call_respects_the_budget(context_length):
    rng = random.Random(context_length)
    for trial in range(170):
        elements = [
            " ".join(f"t{trial}x{i}y{j}" for j in range(rng.randint(1, 40)))
            for i in range(rng.randint(1, 60))
        ]
        backend = RecordingBackend(MockBackend())
        summariser, text = _summarise(backend, elements, context_length)
        assert text
        assert max(_input_tokens(backend)) <= context_length
        assert summariser.depth_reached <= 8


def test_non_shrinking_backend_hits_the_depth_guard():
    elements = [_verbatim(i, tokens=20) for i in range(6)]
    with pytest.raises(BudgetError, match="did not converge"):
        _summarise(EchoInputBackend(), elements, 50, max_depth=3)


def test_rec_summ(cfg):
    backend = RecordingBackend(MockBackend())
    pools = [_pool(["cheap", "good value"]), _pool([], aspect="shipping")]
    assert run(rec_summ("prices", cfg.target_language, pools, backend, cfg)) == "prices: cheap good value"
    assert backend.calls == 1

    assert run(rec_summ("shipping", cfg.target_language, pools, backend, cfg)) == ""
    assert backend.calls == 1

    with pytest.raises(InputError, match="no pool"):
        run(rec_summ("packaging", cfg.target_language, pools, backend, cfg))


def test_rec_summ_rejects_untranslated_pools(cfg):
    pools = [_pool(["barato"], language="ES")]
    with pytest.raises(InputError, match="verbatims in ES"):
        run(rec_summ("prices", cfg.target_language, pools, MockBackend(), cfg))


def test_rec_summ_rejects_oversize_verbatim():
    cfg = PipelineConfig(target_language="EN", context_length=32, max_wait_ms=0)
    pools = [_pool([_verbatim(0, tokens=40), "cheap"])]
    with pytest.raises(BudgetError, match="verbatim exceeds context budget"):
        run(rec_summ("prices", cfg.target_language, pools, MockBackend(), cfg))


# ===== Entity summaries =====

def _overall_prompts(backend):
    return [p for p in backend.prompts if p.startswith("Below is an instruction")]


def test_percent_contribution_reaches_the_overall_summary(emb, cfg):
    insights = [_insight(f"r{i}", "Food Quality", f"tasty food {i}") for i in range(39)]
    backend = RecordingBackend(MockBackend())
    bundle = run(summarise_entity("p1", insights, backend, emb, cfg, total_reviews=100))
    assert bundle.aspect_stats == {"Food Quality": 39}
    [prompt] = _overall_prompts(backend)
    assert "39% of the reviews mention Food Quality: tasty food 0 | tasty food 1 | tasty food 2" in prompt
    assert "top 1 positive aspects" in prompt
    assert bundle.overall_summary.startswith("39% of the reviews mention Food Quality:")
    assert bundle.overall_by_sentiment == {"positive": bundle.overall_summary}


def test_single_top_aspect_stays_within_word_budget(emb):
    cfg = PipelineConfig(target_language="EN", top_aspect_count=1, max_wait_ms=0)
    insights = [
        _insight("r1", "prices", "cheap for what you get and honestly a bargain overall"),
        _insight("r2", "prices", "fair price"),
    ]
    bundle = run(summarise_entity("p1", insights, MockBackend(), emb, cfg))
    prefix = "100% of the reviews mention prices:"
    assert bundle.overall_summary.startswith(prefix)
    assert len(bundle.overall_summary[len(prefix):].split()) <= 10


def test_tied_aspects_are_listed_alphabetically(emb, cfg):
    insights = [_insight("r1", "prices", "fair price"), _insight("r2", "battery life", "long battery")]
    backend = RecordingBackend(MockBackend())
    bundle = run(summarise_entity("p1", insights, backend, emb, cfg))
    [prompt] = _overall_prompts(backend)
    lines = input_section(prompt).split("\n")
    assert lines == [
        "50% of the reviews mention battery life: long battery",
        "50% of the reviews mention prices: fair price",
    ]
    assert "within 20 words" in prompt
    assert list(bundle.aspect_stats) == ["battery life", "prices"]


def test_per_sentiment_overall_summaries(emb, cfg):
    insights = [
        _insight("r1", "prices", "fair price", "positive"),
        _insight("r2", "shipping", "late parcel", "negative"),
        _insight("r3", "screen quality", "bright but dim", "both"),
    ]
    backend = RecordingBackend(MockBackend())
    bundle = run(summarise_entity("p1", insights, backend, emb, cfg))
    assert set(bundle.overall_by_sentiment) == {"positive", "negative"}
    assert bundle.provenance["overall:positive"] == ["r1:prices", "r3:screen quality"]
    assert bundle.provenance["overall:negative"] == ["r3:screen quality", "r2:shipping"]
    assert set(bundle.provenance[OVERALL_KEY]) == {"r1:prices", "r2:shipping", "r3:screen quality"}
    assert bundle.overall_summary == f"{bundle.overall_by_sentiment['positive']} {bundle.overall_by_sentiment['negative']}"
    for aspect in bundle.aspect_summaries:
        assert bundle.provenance[aspect]


def test_missing_sentiment_is_skipped(emb, cfg):
    bundle = run(summarise_entity("p1", [_insight("r1", "prices", "fair price")], MockBackend(), emb, cfg))
    assert list(bundle.overall_by_sentiment) == ["positive"]
    assert "overall:negative" not in bundle.provenance


def test_mixed_overall_mode(emb):
    cfg = PipelineConfig(target_language="EN", overall_mode="mixed", max_wait_ms=0)
    insights = [_insight("r1", "prices", "fair price"), _insight("r2", "shipping", "late parcel", "negative")]
    backend = RecordingBackend(MockBackend())
    bundle = run(summarise_entity("p1", insights, backend, emb, cfg))
    [prompt] = _overall_prompts(backend)
    assert "top 2 positive and negative aspects" in prompt
    assert bundle.overall_by_sentiment == {}
    assert bundle.provenance[OVERALL_KEY] == ["r1:prices", "r2:shipping"]


def test_summaries_are_deterministic(emb):
    cfg = PipelineConfig(target_language="EN", selection_strategy="weighted", selection_k=2,
                         random_seed=11, max_wait_ms=0)
    insights = [_insight(f"r{i}", "prices", f"price note {i % 3}") for i in range(9)]
    first = run(summarise_entity("p1", insights, MockBackend(), emb, cfg))
    second = run(summarise_entity("p1", insights, MockBackend(), emb, cfg))
    assert first.model_dump_json() == second.model_dump_json()


def test_entity_without_insights(emb, cfg):
    with pytest.raises(InputError, match="no insights"):
        run(summarise_entity("p9", [_insight("r1", "prices", "cheap")], MockBackend(), emb, cfg))


def test_insights_in_another_language_are_rejected(emb, cfg):
    insights = [_insight("r1", "prices", "barato", language="ES")]
    with pytest.raises(InputError, match="re-run extraction"):
        run(summarise_entity("p1", insights, MockBackend(), emb, cfg))
