"""
Rule-based multilingual segmentation of reviews into candidate verbatims.

Reviews are split into sentences on the language's sentence delimiters, then
each sentence into phrases on its phrase delimiters. A phrase split is only
applied when both sides keep at least ``min_phrase_words`` words.
"""
import logging
import re
from functools import lru_cache
from typing import List, Optional, Tuple
from core.data_loader import DataLoader
from models.review import Review
from models.segment import Segment, SegmentRuleSet

logger = logging.getLogger(__name__)


def _is_word(delimiter: str) -> bool:
    return any(ch.isalnum() for ch in delimiter)


def _punct_alternatives(delimiters: Tuple[str, ...]) -> List[str]:
    parts = []
    for d in delimiters:
        if _is_word(d):
            continue
        if d.strip() == ".":
            # "4.5 stars" stays whole
            parts.append(r"\.+(?=\s|$)")
        else:
            parts.append(f"(?:{re.escape(d.strip())})+")
    return parts


def _word_alternative(delimiters: Tuple[str, ...]) -> Optional[str]:
    words = sorted({d.strip() for d in delimiters if _is_word(d)}, key=lambda w: (-len(w), w))
    if not words:
        return None
    escaped = [r"\s+".join(re.escape(part) for part in w.split()) for w in words]
    return r"(?<!\w)(?:" + "|".join(escaped) + r")(?!\w)"


def _alternation(delimiters: Tuple[str, ...]) -> str:
    parts = []
    word = _word_alternative(delimiters)
    if word:
        parts.append(word)
    parts.extend(_punct_alternatives(delimiters))
    return "|".join(parts)


@lru_cache(maxsize=32)
def _compile(sentence: Tuple[str, ...], phrase: Tuple[str, ...]):
    punct_chars = "".join(sorted({ch for d in sentence + phrase if not _is_word(d) for ch in d.strip()}))
    return (
        re.compile(_alternation(sentence), re.IGNORECASE),
        re.compile(_alternation(phrase), re.IGNORECASE),
        punct_chars,
    )


def _patterns(rules: SegmentRuleSet):
    return _compile(tuple(rules.sentence_delimiters), tuple(rules.phrase_delimiters))


def delimiter_gap_pattern(rules: SegmentRuleSet) -> "re.Pattern":
    """
    Regex matching everything segmentation may consume between two segments:
    whitespace, delimiter words and delimiter punctuation.
    """
    delimiters = tuple(rules.sentence_delimiters) + tuple(rules.phrase_delimiters)
    _, _, punct_chars = _patterns(rules)
    parts = [r"\s+"]
    word = _word_alternative(delimiters)
    if word:
        parts.append(word)
    if punct_chars:
        parts.append(f"[{re.escape(punct_chars)}]")
    return re.compile(r"(?:" + "|".join(parts) + r")*", re.IGNORECASE)


def _trim(text: str, start: int, end: int, strip_chars: str) -> Tuple[int, int]:
    while start < end and (text[start].isspace() or text[start] in strip_chars):
        start += 1
    while end > start and (text[end - 1].isspace() or text[end - 1] in strip_chars):
        end -= 1
    return start, end


def _words(text: str) -> int:
    return len(text.split())


def _rules_for(review_language, rules: Optional[SegmentRuleSet]) -> SegmentRuleSet:
    if rules is not None:
        return rules
    return DataLoader().get_segment_rules(review_language)


def split_sentences(review: Review, rules: Optional[SegmentRuleSet] = None) -> List[Segment]:
    """Ordered sentence segments of a review; delimiters are consumed"""
    rules = _rules_for(review.language, rules)
    sentence_re, _, punct_chars = _patterns(rules)
    text = review.text

    segments = []
    cursor = 0
    bounds = [(m.start(), m.end()) for m in sentence_re.finditer(text)]
    bounds.append((len(text), len(text)))
    for delim_start, delim_end in bounds:
        start, end = _trim(text, cursor, delim_start, punct_chars)
        if start < end:
            segments.append(Segment(
                text=text[start:end],
                review_id=review.review_id,
                char_span=(start, end),
                language=review.language,
            ))
        cursor = max(cursor, delim_end)
    return segments


def split_phrases(sentence: Segment, rules: Optional[SegmentRuleSet] = None) -> List[Segment]:
    """
    Split a sentence on phrase delimiters, left to right. A candidate split
    is accepted when the text since the previous accepted split and the text
    up to the next candidate both have at least min_phrase_words words.
    """
    rules = _rules_for(sentence.language, rules)
    _, phrase_re, punct_chars = _patterns(rules)
    text = sentence.text
    offset = sentence.char_span[0]
    candidates = [(m.start(), m.end()) for m in phrase_re.finditer(text)]

    cuts = []
    cursor = 0
    for i, (cand_start, cand_end) in enumerate(candidates):
        next_start = candidates[i + 1][0] if i + 1 < len(candidates) else len(text)
        left = text[cursor:cand_start].strip(" \t\n" + punct_chars)
        right = text[cand_end:next_start].strip(" \t\n" + punct_chars)
        if _words(left) >= rules.min_phrase_words and _words(right) >= rules.min_phrase_words:
            cuts.append((cand_start, cand_end))
            cursor = cand_end

    phrases = []
    cursor = 0
    for cut_start, cut_end in cuts + [(len(text), len(text))]:
        start, end = _trim(text, cursor, cut_start, punct_chars)
        if start < end:
            phrases.append(Segment(
                text=text[start:end],
                review_id=sentence.review_id,
                char_span=(offset + start, offset + end),
                language=sentence.language,
            ))
        cursor = cut_end
    return phrases


def segment(review: Review, rules: Optional[SegmentRuleSet] = None) -> List[Segment]:
    """Sentences, then phrases within each sentence, in review order"""
    rules = _rules_for(review.language, rules)
    segments = []
    for sentence in split_sentences(review, rules):
        segments.extend(split_phrases(sentence, rules))
    logger.debug("Review %s -> %d segments", review.review_id, len(segments))
    return segments
