import io
import json
import pytest
from core.config import load_pipeline_config, settings
from core.data_loader import DataLoader, load_taxonomy, parse_corpus, read_corpus, serialise_review
from core.errors import CorpusError, InputError
from models.config import SelectionKind
from models.generation import PromptName
from models.review import LanguageCode


def _stream(*lines):
    return io.BytesIO("\n".join(lines).encode("utf-8"))


def test_parse_single_review():
    reviews = parse_corpus(_stream('{"review_id":"r1","entity_id":"p1","language":"EN","text":"Great battery"}'))
    assert len(reviews) == 1
    assert reviews[0].text == "Great battery"
    assert reviews[0].language == LanguageCode.EN


def test_parse_unsupported_language_reports_line():
    with pytest.raises(CorpusError, match="unsupported language") as exc:
        parse_corpus(_stream(
            '{"review_id":"r1","entity_id":"p1","language":"EN","text":"ok"}',
            '{"review_id":"r2","entity_id":"p1","language":"PT","text":"bom"}',
        ))
    assert exc.value.line_no == 2


def test_parse_duplicate_review_id():
    line = '{"review_id":"r1","entity_id":"p1","language":"EN","text":"ok"}'
    with pytest.raises(CorpusError, match="duplicate review_id r1"):
        parse_corpus(_stream(line, line))


def test_parse_skips_blank_lines_and_rejects_bad_json():
    reviews = parse_corpus(_stream("", '{"review_id":"r1","entity_id":"p1","language":"EN","text":"ok"}', "  "))
    assert [r.review_id for r in reviews] == ["r1"]
    with pytest.raises(CorpusError, match="line 1: invalid JSON"):
        parse_corpus(_stream("{not json"))
    with pytest.raises(CorpusError, match="expected a JSON object"):
        parse_corpus(_stream("[1, 2]"))


def test_parse_rejects_invalid_utf8():
    with pytest.raises(CorpusError, match="UTF-8"):
        parse_corpus(io.BytesIO(b'{"text": "\xff"}\n'))


def test_serialise_round_trip_on_demo_corpus():
    reviews = read_corpus(settings.DEMO_CORPUS_FILE)
    assert len(reviews) >= 10
    with open(settings.DEMO_CORPUS_FILE, "r", encoding="utf-8") as f:
        originals = [json.loads(line) for line in f if line.strip()]
    for review, original in zip(reviews, originals):
        line = serialise_review(review)
        assert json.loads(line) == original
        assert parse_corpus([line])[0] == review


def test_read_corpus_missing_file(tmp_path):
    with pytest.raises(InputError, match="not found"):
        read_corpus(tmp_path / "missing.jsonl")


def test_demo_taxonomies_load():
    products = load_taxonomy(settings.DEMO_TAXONOMY_FILE)
    assert products.domain == "products"
    assert "battery life" in products.l3_names()
    assert products.lineage("shipping") == ("Consumer Products and Retail", "Order Fulfilment")
    hospitality = load_taxonomy(settings.TAXONOMY_DIR / "hospitality.yml")
    assert hospitality.lineage("Accommodation") == ("Hospitality", "Hotel Services")


def test_taxonomy_missing_keys(tmp_path):
    path = tmp_path / "broken.yml"
    path.write_text("l1: [A]\nl2: {B: A}\n", encoding="utf-8")
    with pytest.raises(InputError, match="missing keys: l3, keywords"):
        load_taxonomy(path)


def test_templates_and_rules_are_loaded():
    loader = DataLoader()
    assert loader.rules_version == 1
    assert set(loader.get_rule_sets()) == set(LanguageCode)
    for name in PromptName:
        assert loader.get_template(name).text
    with pytest.raises(InputError, match="unsupported language"):
        loader.get_segment_rules("PT")


def test_reload_keeps_the_same_tables():
    loader = DataLoader()
    before = loader.get_templates()
    loader.reload_data()
    assert DataLoader() is loader
    assert loader.get_templates() == before
    assert set(loader.get_rule_sets()) == set(LanguageCode)


def test_summarise_template_placeholders():
    template = DataLoader().get_template(PromptName.SUMMARISE)
    assert template.placeholders == {"word_count", "aspect_count", "sentiment", "percent_contribution"}
    assert "Generate a fluent descriptive within {word_count} words" in template.text


def test_dictionary_maps_both_directions():
    to_english, from_english = DataLoader().get_dictionary()
    assert to_english[(LanguageCode.ES, "batería")] == "battery"
    assert from_english[(LanguageCode.ES, "battery")] == "batería"


def test_config_precedence(tmp_path):
    path = tmp_path / "config.yml"
    path.write_text("context_length: 100\ntop_aspect_count: 3\nselection_strategy: centroid\n", encoding="utf-8")
    cfg, sources = load_pipeline_config(
        path,
        overrides={"top_aspect_count": 7, "random_seed": None},
        env={"REVIEWSUMM_CONTEXT_LENGTH": "200"},
    )
    assert cfg.context_length == 200
    assert cfg.top_aspect_count == 7
    assert cfg.selection_strategy == SelectionKind.CENTROID
    assert sources == {"context_length": "env", "top_aspect_count": "flag", "selection_strategy": "file"}


def test_config_rejects_unknown_keys(tmp_path):
    path = tmp_path / "config.yml"
    path.write_text("context_lenght: 100\n", encoding="utf-8")
    with pytest.raises(InputError, match="unknown config keys: context_lenght"):
        load_pipeline_config(path, env={})


def test_config_rejects_invalid_values():
    with pytest.raises(InputError, match="invalid configuration"):
        load_pipeline_config(overrides={"context_length": 8}, env={})


def test_config_rejects_malformed_yaml(tmp_path):
    path = tmp_path / "config.yml"
    path.write_text("context_length: [unclosed\n", encoding="utf-8")
    with pytest.raises(InputError, match="invalid config file"):
        load_pipeline_config(path, env={})


def test_config_rejects_misspelt_threshold(tmp_path):
    path = tmp_path / "config.yml"
    path.write_text("thresholds:\n  sem_replce: 0.5\n", encoding="utf-8")
    with pytest.raises(InputError, match="invalid configuration"):
        load_pipeline_config(path, env={})
