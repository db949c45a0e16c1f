"""Extraction trace and statistics models"""
from typing import List, Optional
from pydantic import BaseModel, Field, computed_field
from models.generation import PromptName
from models.insight import Sentiment


class PhaseCall(BaseModel):
    """One prompt sent during extraction and the raw answer"""
    phase: PromptName
    aspect: Optional[str] = None
    prompt: str
    response: str


class AspectRecord(BaseModel):
    """What the four phases produced for one generated aspect"""
    generated_aspect: str
    sentiment: Optional[Sentiment] = None
    source_verbatims: List[str] = Field(default_factory=list)
    translated_verbatims: List[str] = Field(default_factory=list)
    resolved_aspect: Optional[str] = None
    match_kind: Optional[str] = None


class ExtractionTrace(BaseModel):
    """Audit trail of the decomposed prompting for one review"""
    review_id: str
    phase_calls: List[PhaseCall] = Field(default_factory=list)
    aspects: List[str] = Field(default_factory=list, description="Aspect names parsed from the first phase")
    records: List[AspectRecord] = Field(default_factory=list)
    warnings: List[str] = Field(default_factory=list)
    failed: bool = Field(False, description="Backend failed part-way; trace is partial")

    @computed_field
    @property
    def prompt_count(self) -> int:
        return len(self.phase_calls)

    def expected_prompt_count(self) -> int:
        return 3 * len(self.aspects) + 1

    def phases_in_order(self) -> bool:
        """One aspect_id call, then sentiment/verbatim/translate per aspect"""
        expected = [PromptName.ASPECT_ID]
        for _ in self.aspects:
            expected += [PromptName.SENTIMENT, PromptName.VERBATIM, PromptName.TRANSLATE]
        return [call.phase for call in self.phase_calls] == expected


class ClrStats(BaseModel):
    """Context-length accounting of an extracted corpus"""
    domain: str = Field("default", description="Domain label")
    n_reviews: int = Field(..., ge=0, description="Reviews processed")
    n_entities: int = Field(0, ge=0, description="Distinct entities")
    n_unique_aspects: int = Field(0, ge=0, description="Distinct granular aspects")
    avg_aspects_per_review: float = Field(0.0, ge=0, description="Insights per review")
    avg_tokens_per_review: float = Field(..., ge=0, description="Mean review length in tokens")
    avg_tokens_per_verbatim: float = Field(..., ge=0, description="Mean verbatim length in tokens")

    @computed_field
    @property
    def clr_percent(self) -> int:
        if self.avg_tokens_per_review <= 0:
            return 0
        return round(100 * (1 - self.avg_tokens_per_verbatim / self.avg_tokens_per_review))


class ExtractionScores(BaseModel):
    """Quadruple-level precision/recall/F1 and translation accuracy"""
    precision: float
    recall: float
    f1: float
    translation_accuracy: float
    true_positives: int
    n_predicted: int
    n_gold: int
