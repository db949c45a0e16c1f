"""Summary models"""
from typing import Dict, List
from pydantic import BaseModel, Field, field_validator, model_validator
from models.review import LanguageCode
from models.insight import Verbatim
from models.config import SelectionKind


class VerbatimPool(BaseModel):
    """Target-language verbatims gathered for one aspect of one entity"""
    aspect: str = Field(..., description="Granular aspect")
    entity_id: str = Field(..., description="Entity ID")
    verbatims: List[Verbatim] = Field(default_factory=list, description="Pool members")
    review_ids: List[str] = Field(default_factory=list, description="Source review per verbatim")
    insight_ids: List[str] = Field(default_factory=list, description="Insights feeding the pool")
    mention_percent: int = Field(0, ge=0, le=100, description="Share of entity reviews mentioning the aspect")

    model_config = {"frozen": True}

    @model_validator(mode="after")
    def _aligned(self):
        if len(self.review_ids) != len(self.verbatims):
            raise ValueError("review_ids must align with verbatims")
        return self

    @property
    def texts(self) -> List[str]:
        return [v.text for v in self.verbatims]


class SummaryBundle(BaseModel):
    """Aspect-level and overall summaries of one entity in a target language"""
    entity_id: str = Field(..., description="Entity ID")
    target_language: LanguageCode = Field(..., description="Language of every summary")
    aspect_summaries: Dict[str, str] = Field(default_factory=dict, description="L3 aspect -> summary")
    overall_summary: str = Field("", description="Summary over the top aspects")
    overall_by_sentiment: Dict[str, str] = Field(default_factory=dict, description="Sentiment -> overall summary")
    provenance: Dict[str, List[str]] = Field(default_factory=dict, description="Summary key -> insight IDs")
    aspect_stats: Dict[str, int] = Field(default_factory=dict, description="L3 aspect -> percent_contribution")

    model_config = {
        "frozen": True,
        "json_schema_extra": {
            "example": {
                "entity_id": "p1",
                "target_language": "ES",
                "aspect_summaries": {"battery life": "battery life: gran batería"},
                "overall_summary": "100% of the reviews mention battery life: gran batería",
                "provenance": {"battery life": ["r1:battery life"]},
                "aspect_stats": {"battery life": 100}
            }
        }
    }

    @field_validator("aspect_stats")
    @classmethod
    def _percent_range(cls, value: Dict[str, int]) -> Dict[str, int]:
        for aspect, pct in value.items():
            if not 0 <= pct <= 100:
                raise ValueError(f"percent_contribution of {aspect!r} out of range: {pct}")
        return value

    @model_validator(mode="after")
    def _provenance_complete(self):
        for aspect in self.aspect_summaries:
            if not self.provenance.get(aspect):
                raise ValueError(f"aspect summary {aspect!r} has no provenance")
        return self


class SelectionStrategy(BaseModel):
    """Which verbatims of a pool feed the summariser"""
    kind: SelectionKind = Field(SelectionKind.RANDOM, description="random, weighted or centroid")
    k: int = Field(50, ge=1, description="Pool size cap")
    seed: int = Field(0, description="Seed for the random and weighted strategies")
    cluster_cosine: float = Field(0.9, gt=0, le=1, description="Near-duplicate cut-off for weighted")

    model_config = {"frozen": True}
