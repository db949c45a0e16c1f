"""Review and language models"""
from enum import Enum
from typing import Optional
from pydantic import BaseModel, Field, field_validator


class LanguageCode(str, Enum):
    """Languages the pipeline reads and writes (closed set)"""
    EN = "EN"
    ES = "ES"
    FR = "FR"
    DE = "DE"
    IT = "IT"

    @classmethod
    def parse(cls, value) -> "LanguageCode":
        """Parse a code case-insensitively, rejecting anything outside the set"""
        if isinstance(value, cls):
            return value
        code = str(value).strip().upper()
        try:
            return cls(code)
        except ValueError:
            raise ValueError(f"unsupported language {value!r}") from None


class Review(BaseModel):
    """One customer review linked to the entity it talks about"""
    review_id: str = Field(..., min_length=1, description="Unique review ID within a corpus")
    entity_id: str = Field(..., min_length=1, description="Product, service or location ID")
    language: LanguageCode = Field(..., description="Declared review language")
    text: str = Field(..., description="Review body")
    rating: Optional[int] = Field(None, ge=1, le=5, description="Star rating (1-5)")

    model_config = {
        "frozen": True,
        "json_schema_extra": {
            "example": {
                "review_id": "r1",
                "entity_id": "p1",
                "language": "EN",
                "text": "Great battery. Slow delivery",
                "rating": 4
            }
        }
    }

    @field_validator("language", mode="before")
    @classmethod
    def _parse_language(cls, value):
        return LanguageCode.parse(value)

    @field_validator("text")
    @classmethod
    def _text_not_blank(cls, value: str) -> str:
        if not value.strip():
            raise ValueError("review text is empty")
        return value
