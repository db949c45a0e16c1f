"""Data loading utilities for the YAML tables and JSONL corpora under data/"""
import json
import logging
from pathlib import Path
from typing import Any, Dict, FrozenSet, IO, Iterable, List, Optional, Tuple, Union
import yaml
from pydantic import ValidationError
from core.config import settings
from core.errors import CorpusError, InputError
from models.generation import PromptName, PromptTemplate
from models.review import LanguageCode, Review
from models.segment import SegmentRuleSet
from models.taxonomy import Taxonomy

logger = logging.getLogger(__name__)

# language -> (positive words, negative words)
Lexicon = Dict[LanguageCode, Tuple[FrozenSet[str], FrozenSet[str]]]
# (source language, word) -> English word, and English word -> target form
Dictionary = Tuple[Dict[Tuple[LanguageCode, str], str], Dict[Tuple[LanguageCode, str], str]]


def load_yaml_file(file_path: Path) -> Dict[str, Any]:
    """Load and parse a YAML document that must hold a mapping"""
    file_path = Path(file_path)
    if not file_path.exists():
        raise InputError(f"file not found: {file_path}")
    try:
        with open(file_path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise InputError(f"cannot parse {file_path}: {e}") from e
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise InputError(f"{file_path} must hold a mapping at the top level")
    return data


def _pydantic_message(error: ValidationError) -> str:
    first = error.errors()[0]
    loc = ".".join(str(part) for part in first.get("loc", ()))
    msg = first.get("msg", str(error)).removeprefix("Value error, ")
    return f"{loc}: {msg}" if loc else msg


class DataLoader:
    """
    Loads the segmentation rule tables, prompt templates and the mock
    backend's lexicon and dictionary. Everything is read once and then
    served from RAM.
    """

    # Class-level cache (singleton pattern) - data persists in RAM
    _rules_cache: Optional[Dict[LanguageCode, SegmentRuleSet]] = None
    _rules_version: Optional[int] = None
    _templates_cache: Optional[Dict[PromptName, PromptTemplate]] = None
    _lexicon_cache: Optional[Lexicon] = None
    _dictionary_cache: Optional[Dictionary] = None
    _instance = None

    def __new__(cls):
        """Singleton pattern to ensure only one instance exists"""
        if cls._instance is None:
            cls._instance = super(DataLoader, cls).__new__(cls)
        return cls._instance

    def __init__(self):
        if DataLoader._rules_cache is None:
            DataLoader._rules_cache = self._load_segment_rules()
            logger.info("✓ Loaded %d segmentation rule sets", len(DataLoader._rules_cache))

        if DataLoader._templates_cache is None:
            DataLoader._templates_cache = self._load_templates()
            logger.info("✓ Loaded %d prompt templates", len(DataLoader._templates_cache))

    def _load_segment_rules(self) -> Dict[LanguageCode, SegmentRuleSet]:
        data = load_yaml_file(settings.SEGMENT_RULES_FILE)
        DataLoader._rules_version = data.get("version")
        rules = {}
        for entry in data.get("Body", []):
            try:
                rule_set = SegmentRuleSet(
                    language=entry.get("Language"),
                    sentence_delimiters=entry.get("SentenceDelimiters", []),
                    phrase_delimiters=entry.get("PhraseDelimiters", []),
                    min_phrase_words=entry.get("MinPhraseWords", 2),
                )
            except ValidationError as e:
                raise InputError(
                    f"bad rule set {entry.get('Language', 'unknown')}: {_pydantic_message(e)}"
                ) from e
            rules[rule_set.language] = rule_set
        return rules

    def _load_templates(self) -> Dict[PromptName, PromptTemplate]:
        templates = {}
        for file_path in sorted(settings.PROMPTS_DIR.glob("*.yml")):
            for entry in load_yaml_file(file_path).get("Body", []):
                try:
                    template = PromptTemplate(name=entry.get("Name"), text=entry.get("Text", ""))
                except ValidationError as e:
                    raise InputError(f"bad template in {file_path.name}: {_pydantic_message(e)}") from e
                templates[template.name] = template
        return templates

    def _load_lexicon(self) -> Lexicon:
        lexicon = {}
        for entry in load_yaml_file(settings.MOCK_LEXICON_FILE).get("Body", []):
            language = LanguageCode.parse(entry["Language"])
            positive = frozenset(w.casefold() for w in entry.get("Positive", []))
            negative = frozenset(w.casefold() for w in entry.get("Negative", []))
            lexicon[language] = (positive, negative)
        return lexicon

    def _load_dictionary(self) -> Dictionary:
        to_english: Dict[Tuple[LanguageCode, str], str] = {}
        from_english: Dict[Tuple[LanguageCode, str], str] = {}
        for entry in load_yaml_file(settings.MOCK_DICTIONARY_FILE).get("Body", []):
            english = str(entry["EN"]).casefold()
            for code, forms in entry.items():
                language = LanguageCode.parse(code)
                if language == LanguageCode.EN:
                    continue
                forms = [forms] if isinstance(forms, str) else list(forms)
                from_english.setdefault((language, english), str(forms[0]).casefold())
                for form in forms:
                    to_english.setdefault((language, str(form).casefold()), english)
        return to_english, from_english

    # ===== Rule tables =====

    def get_rule_sets(self) -> Dict[LanguageCode, SegmentRuleSet]:
        return dict(DataLoader._rules_cache)

    def get_segment_rules(self, language) -> SegmentRuleSet:
        """Rule set for one language; InputError if the table has none"""
        try:
            code = LanguageCode.parse(language)
        except ValueError as e:
            raise InputError(str(e)) from None
        rules = DataLoader._rules_cache.get(code)
        if rules is None:
            raise InputError(f"unsupported language {code.value!r}: no segmentation rules")
        return rules

    @property
    def rules_version(self) -> Optional[int]:
        return DataLoader._rules_version

    # ===== Prompt templates =====

    def get_template(self, name) -> PromptTemplate:
        try:
            return DataLoader._templates_cache[PromptName(name)]
        except (KeyError, ValueError):
            raise InputError(f"unknown prompt template {name!r}") from None

    def get_templates(self) -> Dict[PromptName, PromptTemplate]:
        return dict(DataLoader._templates_cache)

    # ===== Mock backend tables =====

    def get_lexicon(self) -> Lexicon:
        if DataLoader._lexicon_cache is None:
            DataLoader._lexicon_cache = self._load_lexicon()
            logger.info("✓ Loaded opinion lexicon for %d languages", len(DataLoader._lexicon_cache))
        return DataLoader._lexicon_cache

    def get_dictionary(self) -> Dictionary:
        if DataLoader._dictionary_cache is None:
            DataLoader._dictionary_cache = self._load_dictionary()
            logger.info("✓ Loaded %d dictionary forms", len(DataLoader._dictionary_cache[0]))
        return DataLoader._dictionary_cache

    def reload_data(self):
        """Force reload all tables from the YAML files"""
        DataLoader._rules_cache = self._load_segment_rules()
        DataLoader._templates_cache = self._load_templates()
        DataLoader._lexicon_cache = None
        DataLoader._dictionary_cache = None
        logger.info(
            "✓ Reloaded %d rule sets and %d templates",
            len(DataLoader._rules_cache), len(DataLoader._templates_cache),
        )


# ===== Taxonomy files =====

def load_taxonomy(path: Union[str, Path]) -> Taxonomy:
    """
    Read a taxonomy document with keys ``l1`` (list), ``l2`` (name -> L1),
    ``l3`` (name -> L2) and ``keywords`` (L3 -> list). Structure is checked
    by validate_taxonomy, not here.
    """
    data = load_yaml_file(Path(path))
    missing = [key for key in ("l1", "l2", "l3", "keywords") if key not in data]
    if missing:
        raise InputError(f"taxonomy {path} is missing keys: {', '.join(missing)}")
    try:
        return Taxonomy(
            domain=str(data.get("domain", Path(path).stem)),
            l1_aspects=[str(name) for name in data["l1"] or []],
            l2_aspects={str(k): str(v) for k, v in (data["l2"] or {}).items()},
            l3_aspects={str(k): str(v) for k, v in (data["l3"] or {}).items()},
            keywords={
                str(k): [str(kw) for kw in (v or [])]
                for k, v in (data["keywords"] or {}).items()
            },
        )
    except (AttributeError, TypeError) as e:
        raise InputError(f"taxonomy {path} has the wrong shape: {e}") from e
    except ValidationError as e:
        raise InputError(f"taxonomy {path}: {_pydantic_message(e)}") from e


# ===== Review corpora =====

def parse_corpus(stream: Union[IO, Iterable[Union[bytes, str]]]) -> List[Review]:
    """
    Parse a UTF-8 JSONL corpus, one review object per line, in file order.
    Blank lines are skipped; duplicate review IDs are rejected.
    """
    reviews: List[Review] = []
    seen = set()
    for line_no, raw in enumerate(stream, start=1):
        if isinstance(raw, bytes):
            try:
                raw = raw.decode("utf-8")
            except UnicodeDecodeError as e:
                raise CorpusError(line_no, f"not valid UTF-8: {e}") from e
        line = raw.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise CorpusError(line_no, f"invalid JSON: {e.msg}") from e
        if not isinstance(obj, dict):
            raise CorpusError(line_no, "expected a JSON object")
        try:
            review = Review(**obj)
        except ValidationError as e:
            raise CorpusError(line_no, _pydantic_message(e)) from e
        if review.review_id in seen:
            raise CorpusError(line_no, f"duplicate review_id {review.review_id}")
        seen.add(review.review_id)
        reviews.append(review)
    return reviews


def read_corpus(path: Union[str, Path]) -> List[Review]:
    path = Path(path)
    if not path.exists():
        raise InputError(f"corpus not found: {path}")
    with open(path, "rb") as f:
        reviews = parse_corpus(f)
    logger.info("✓ Loaded %d reviews from %s", len(reviews), path)
    return reviews


def serialise_review(review: Review) -> str:
    """One corpus line for a review; parse_corpus reads it back unchanged"""
    return json.dumps(review.model_dump(mode="json", exclude_none=True), ensure_ascii=False)
