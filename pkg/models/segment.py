"""Segmentation models"""
from typing import List, Tuple
from pydantic import BaseModel, Field, field_validator, model_validator
from models.review import LanguageCode


class SegmentRuleSet(BaseModel):
    """Sentence and phrase breakers for one language"""
    language: LanguageCode = Field(..., description="Language the rules apply to")
    sentence_delimiters: List[str] = Field(..., min_length=1, description="Review -> sentence breakers")
    phrase_delimiters: List[str] = Field(..., min_length=1, description="Sentence -> phrase breakers")
    min_phrase_words: int = Field(2, description="Shortest phrase a split may produce")

    model_config = {"frozen": True}

    @field_validator("language", mode="before")
    @classmethod
    def _parse_language(cls, value):
        return LanguageCode.parse(value)

    @field_validator("min_phrase_words")
    @classmethod
    def _at_least_two(cls, value: int) -> int:
        if value < 2:
            raise ValueError("min_phrase_words cannot be below 2")
        return value


class Segment(BaseModel):
    """A candidate verbatim and where it sits in the review"""
    text: str = Field(..., description="Segment text")
    review_id: str = Field(..., description="Source review")
    char_span: Tuple[int, int] = Field(..., description="[start, end) offsets into the review text")
    language: LanguageCode = Field(..., description="Review language")

    model_config = {"frozen": True}

    @model_validator(mode="after")
    def _span_consistent(self):
        start, end = self.char_span
        if not 0 <= start <= end:
            raise ValueError(f"invalid span {self.char_span}")
        if end - start != len(self.text):
            raise ValueError("span length does not match text length")
        return self

    @property
    def word_count(self) -> int:
        return len(self.text.split())
