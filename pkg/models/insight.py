"""Insight quadruple models"""
from enum import Enum
from typing import List, Optional
from pydantic import BaseModel, Field, field_validator, model_validator
from models.review import LanguageCode


class Sentiment(str, Enum):
    """Polarity of an opinion about one aspect"""
    POSITIVE = "positive"
    NEGATIVE = "negative"
    BOTH = "both"

    @classmethod
    def parse(cls, value) -> "Sentiment":
        """Parse a label case-insensitively; anything else (e.g. neutral) is rejected"""
        if isinstance(value, cls):
            return value
        label = str(value).strip().strip(".\"'").casefold()
        try:
            return cls(label)
        except ValueError:
            raise ValueError(
                f"unsupported sentiment {value!r}; expected positive, negative or both"
            ) from None

    def combine(self, other: "Sentiment") -> "Sentiment":
        return self if self == other else Sentiment.BOTH


class Verbatim(BaseModel):
    """A review snippet and the language it is written in"""
    text: str = Field(..., min_length=1, description="Snippet text")
    language: LanguageCode = Field(..., description="Snippet language")

    model_config = {"frozen": True}

    @field_validator("language", mode="before")
    @classmethod
    def _parse_language(cls, value):
        return LanguageCode.parse(value)


class Insight(BaseModel):
    """(aspect, sentiment, source verbatims, translated verbatims) for one review"""
    entity_id: str = Field(..., description="Entity the review is about")
    review_id: str = Field(..., description="Source review")
    l1_aspect: Optional[str] = Field(None, description="Coarse aspect from the taxonomy")
    l2_aspect: Optional[str] = Field(None, description="Hinge aspect from the taxonomy")
    l3_aspect: str = Field(..., min_length=1, description="Granular aspect")
    l4_aspect: Optional[str] = Field(None, description="Emergent sub-aspect of l3_aspect")
    new_aspect: bool = Field(False, description="l3_aspect is not in the taxonomy")
    sentiment: Sentiment = Field(..., description="Polarity")
    source_verbatims: List[Verbatim] = Field(..., min_length=1, description="Verbatims in the review language")
    translated_verbatims: List[Verbatim] = Field(..., description="Verbatims in the target language")

    model_config = {
        "frozen": True,
        "json_schema_extra": {
            "example": {
                "entity_id": "p1",
                "review_id": "r1",
                "l1_aspect": "Electronics",
                "l2_aspect": "Device Performance",
                "l3_aspect": "battery life",
                "sentiment": "positive",
                "source_verbatims": [{"text": "Great battery", "language": "EN"}],
                "translated_verbatims": [{"text": "Gran batería", "language": "ES"}]
            }
        }
    }

    @field_validator("sentiment", mode="before")
    @classmethod
    def _parse_sentiment(cls, value):
        return Sentiment.parse(value)

    @model_validator(mode="after")
    def _check_alignment(self):
        if len(self.translated_verbatims) != len(self.source_verbatims):
            raise ValueError("translated_verbatims must align one-to-one with source_verbatims")
        languages = {v.language for v in self.translated_verbatims}
        if len(languages) > 1:
            raise ValueError("translated verbatims must all be in the target language")
        return self

    @property
    def insight_id(self) -> str:
        return f"{self.review_id}:{self.l3_aspect}"

    @property
    def target_language(self) -> LanguageCode:
        return self.translated_verbatims[0].language
