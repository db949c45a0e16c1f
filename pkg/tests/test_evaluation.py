import random
import pytest
from conftest import run
from core.embeddings import HashEmbeddingProvider
from core.errors import InputError
from core.evaluation import (
    cohens_kappa, embed_score, format_report, human_summary, moe, moe_from_stats, read_likert_csv,
    read_references, report, rouge, tokenize,
)
from models.evaluation import EvalReport, LikertRecord
from models.summary import SummaryBundle

TABLE_ROW = {
    "aspect_specificity": (4.01, 0.25, 0.049),
    "factuality": (4.23, 0.12, 0.0235),
    "coverage": (4.18, 0.40, 0.0784),
    "fluency": (4.36, 0.19, 0.03724),
    "brevity": (4.32, 0.23, 0.04508),
}


def _ratings(criterion, rater, scores, start=0):
    return [
        LikertRecord(item_id=str(start + i), criterion=criterion, rater_id=rater, score=s)
        for i, s in enumerate(scores)
    ]


def _bundle(entity_id="p1"):
    return SummaryBundle(
        entity_id=entity_id,
        target_language="EN",
        aspect_summaries={"prices": "prices: cheap and good value"},
        overall_summary="100% of the reviews mention prices: cheap and good value",
        provenance={"prices": ["r1:prices"], "overall": ["r1:prices"]},
        aspect_stats={"prices": 100},
    )


# ===== ROUGE =====

def test_tokenize_folds_case_and_punctuation():
    assert tokenize("Schön: GUT, très bien!") == ["schön", "gut", "très", "bien"]


def test_rouge_hand_counted_example():
    scores = rouge("the cat sat", "the cat slept")
    assert scores.r1.precision == scores.r1.recall == pytest.approx(2 / 3)
    assert scores.r1.f1 == pytest.approx(2 / 3)
    assert scores.r2.precision == scores.r2.recall == pytest.approx(1 / 2)
    assert scores.rl.f1 == pytest.approx(2 / 3)


def test_rouge_identical_and_disjoint():
    same = rouge("fast delivery and great packaging", "fast delivery and great packaging")
    assert (same.r1.f1, same.r2.f1, same.rl.f1) == (1.0, 1.0, 1.0)
    apart = rouge("fast delivery", "rude staff")
    assert (apart.r1.f1, apart.r2.f1, apart.rl.f1) == (0.0, 0.0, 0.0)


def test_rouge_keeps_non_ascii_words_whole():
    scores = rouge("Größe über alles", "größe ÜBER alles")
    assert (scores.r1.f1, scores.r2.f1, scores.rl.f1) == (1.0, 1.0, 1.0)
    scores = rouge("très bien", "tres bien")
    assert scores.r1.f1 == pytest.approx(0.5)
    assert scores.r2.f1 == 0.0


def test_rouge_rejects_empty_text():
    with pytest.raises(InputError):
        rouge("", "something")
    with pytest.raises(InputError):
        rouge("something", "!!!")


def _random_text(rng):
    return " ".join(rng.choice("abcdef") for _ in range(rng.randint(1, 12)))


def test_rouge_f1_symmetry_and_bigram_bound():
    rng = random.Random(5)
    for _ in range(500):
        a, b = _random_text(rng), _random_text(rng)
        forward, backward = rouge(a, b), rouge(b, a)
        for name in ("r1", "r2", "rl"):
            f, g = getattr(forward, name), getattr(backward, name)
            assert f.f1 == pytest.approx(g.f1)
            assert f.precision == pytest.approx(g.recall)
        assert forward.r2.f1 <= forward.r1.f1 + 1e-12


# ===== Embedding score =====

def test_embed_score_identity_and_word_order(emb):
    text = "battery lasts two days"
    assert run(embed_score(text, text, emb)) == pytest.approx(1.0)
    assert run(embed_score(text, "days two lasts battery", emb)) == pytest.approx(1.0)


def test_embed_score_unrelated_texts_stay_low():
    emb = HashEmbeddingProvider(dimension=256, seed=3)
    rng = random.Random(11)
    for _ in range(100):
        left = " ".join(f"a{rng.randint(0, 10_000)}" for _ in range(rng.randint(2, 8)))
        right = " ".join(f"b{rng.randint(0, 10_000)}" for _ in range(rng.randint(2, 8)))
        score = run(embed_score(left, right, emb))
        assert 0.0 <= score < 0.5


# ===== Margin of error =====

@pytest.mark.parametrize("criterion", list(TABLE_ROW))
def test_moe_matches_reported_values(criterion):
    mean, sd, expected = TABLE_ROW[criterion]
    assert moe_from_stats(criterion, mean, sd, 100).moe == pytest.approx(expected, abs=1e-3)


def test_moe_from_ratings():
    summary = moe(_ratings("coverage", "a", [4, 5, 4, 5]), "coverage")
    assert summary.mean == 4.5
    assert summary.sd == pytest.approx(0.57735, abs=1e-5)
    assert summary.moe == pytest.approx(1.96 * 0.57735 / 2, abs=1e-5)


def test_moe_identical_scores_and_shift():
    flat = moe(_ratings("fluency", "a", [3, 3, 3]), "fluency")
    assert (flat.sd, flat.moe) == (0.0, 0.0)
    low = moe(_ratings("brevity", "a", [1, 2, 3, 3]), "brevity")
    high = moe(_ratings("brevity", "a", [3, 4, 5, 5]), "brevity")
    assert high.mean == pytest.approx(low.mean + 2)
    assert high.moe == pytest.approx(low.moe)


def test_moe_needs_two_ratings():
    with pytest.raises(InputError, match="at least 2"):
        moe(_ratings("coverage", "a", [4]), "coverage")


# ===== Kappa =====

@pytest.mark.parametrize("a, b, expected", [
    ([1, 2, 3, 1], [1, 2, 3, 1], 1.0),
    ([1, 1, 2, 2], [1, 2, 1, 2], 0.0),
    ([1, 1], [2, 2], -1.0),
    ([4, 4, 4], [4, 4, 4], 1.0),
])
def test_cohens_kappa_examples(a, b, expected):
    assert cohens_kappa(a, b) == pytest.approx(expected)


def test_per_rater_chance_model():
    assert cohens_kappa([1, 1, 2, 2], [1, 2, 1, 2], chance="per_rater") == pytest.approx(0.0)
    assert cohens_kappa([3, 3], [3, 3], chance="per_rater") == 1.0
    with pytest.raises(ValueError):
        cohens_kappa([1], [1], chance="other")


def test_cohens_kappa_rejects_bad_input():
    with pytest.raises(InputError, match="differ in length"):
        cohens_kappa([1, 2], [1])
    with pytest.raises(InputError):
        cohens_kappa([], [])


def test_cohens_kappa_bounds():
    rng = random.Random(99)
    for _ in range(10_000):
        n = rng.randint(1, 10)
        a = [rng.randint(1, 5) for _ in range(n)]
        b = [rng.randint(1, 5) for _ in range(n)]
        assert -1.0 - 1e-12 <= cohens_kappa(a, b) <= 1.0 + 1e-12


# ===== Ingestion and report =====

def test_read_likert_csv(tmp_path):
    path = tmp_path / "likert.csv"
    path.write_text(
        "item_id,criterion,rater_id,score\n"
        "1,Aspect Specificity,a,5\n"
        "1,coverage,b,4\n",
        encoding="utf-8",
    )
    records = read_likert_csv(path)
    assert [(r.criterion.value, r.rater_id, r.score) for r in records] == [
        ("aspect_specificity", "a", 5), ("coverage", "b", 4),
    ]


def test_read_likert_csv_errors(tmp_path):
    with pytest.raises(InputError, match="not found"):
        read_likert_csv(tmp_path / "missing.csv")

    empty = tmp_path / "empty.csv"
    empty.write_text("", encoding="utf-8")
    assert read_likert_csv(empty) == []

    no_score = tmp_path / "no_score.csv"
    no_score.write_text("item_id,criterion,rater_id\n1,coverage,a\n", encoding="utf-8")
    with pytest.raises(InputError, match="missing column"):
        read_likert_csv(no_score)

    bad = tmp_path / "bad.csv"
    bad.write_text("item_id,criterion,rater_id,score\n1,coverage,a,4\n2,coverage,a,7\n", encoding="utf-8")
    with pytest.raises(InputError, match="row 3"):
        read_likert_csv(bad)


def test_human_summary_prefers_final_ratings():
    records = (
        _ratings("coverage", "a", [5, 4, 3, 4])
        + _ratings("coverage", "b", [5, 4, 4, 4])
        + _ratings("coverage", "final", [5, 4, 4, 4])
    )
    summaries, kappas, warnings = human_summary(records)
    assert summaries["coverage"].mean == pytest.approx(4.25)
    assert list(kappas) == ["coverage:a~b"]
    assert warnings == []


def test_read_references(tmp_path):
    path = tmp_path / "refs.jsonl"
    path.write_text(
        '{"entity_id": "p1", "key": "prices", "text": "cheap"}\n\n'
        '{"entity_id": "p1", "text": "all good"}\n',
        encoding="utf-8",
    )
    assert read_references(path) == {("p1", "prices"): "cheap", ("p1", "overall"): "all good"}
    path.write_text('{"entity_id": "p1"}\n', encoding="utf-8")
    with pytest.raises(InputError, match="line 1"):
        read_references(path)


def test_report_with_self_reference_and_no_ratings(emb):
    bundle = _bundle()
    references = {("p1", "prices"): bundle.aspect_summaries["prices"]}
    rep = run(report([bundle], references, [], emb))
    [row] = rep.rows
    assert (row.level, row.key) == ("aspect", "prices")
    assert row.rouge.r1.f1 == 1.0
    assert row.embed_score == pytest.approx(1.0)
    assert rep.human is None
    assert rep.warnings == ["p1/overall: no reference summary; skipped"]

    text = format_report(rep)
    assert "human evaluation: n/a" in text
    assert "R-L" in text


def test_report_without_references(emb):
    rep = run(report([_bundle()], {}, [], emb))
    assert rep.rows == []
    assert len(rep.warnings) == 2
    assert "automatic metrics: no summary had a reference" in format_report(rep)


def test_format_report_shows_mean_sd_columns():
    human = {c: moe_from_stats(c, mean, sd, 100) for c, (mean, sd, _) in TABLE_ROW.items()}
    text = format_report(EvalReport(human=human, kappa={"coverage:a~b": 0.61}))
    assert "4.01_0.25" in text
    assert "0.0784" in text
    assert "kappa coverage:a~b: 0.610" in text


def test_format_report_groups_rows_by_level(emb):
    bundle = _bundle()
    references = {
        ("p1", "prices"): "cheap and good value",
        ("p1", "overall"): "most reviews mention prices",
    }
    text = format_report(run(report([bundle], references, [], emb)))
    assert text.index("[aspect]") < text.index("prices") < text.index("[overall]")
    aspect_block = text.split("[overall]")[0]
    assert "overall" not in aspect_block.replace("[aspect]", "")


def test_format_report_prints_the_likert_scales():
    human = {c: moe_from_stats(c, mean, sd, 100) for c, (mean, sd, _) in TABLE_ROW.items()}
    text = format_report(EvalReport(human=human))
    assert "scale (1-5):" in text
    assert "coverage: 1 Does not cover any source verbatims (< 5%);" in text
    assert "fluency: 1 incomprehensible; 2 disfluent; 3 can make sense; 4 good; 5 flawless" in text
    assert "human evaluation: n/a" not in text
