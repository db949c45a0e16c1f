"""Pipeline configuration model"""
from enum import Enum
from pydantic import BaseModel, Field, field_validator, model_validator
from models.review import LanguageCode


class SelectionKind(str, Enum):
    """How verbatims are picked before summarisation"""
    RANDOM = "random"
    WEIGHTED = "weighted"
    CENTROID = "centroid"


class OverallMode(str, Enum):
    """One overall summary per sentiment, or a single mixed one"""
    PER_SENTIMENT = "per_sentiment"
    MIXED = "mixed"


class Thresholds(BaseModel):
    """Cut-offs used when standardising generated aspects"""
    syntactic: str = Field("exact_or_substring", description="Syntactic matching discipline")
    sem_replace: float = Field(0.95, description="score_t above this replaces with the taxonomy aspect")
    sem_l4_topic: float = Field(0.7, description="score_t above this may surface an L4 aspect")
    sem_l4_verbatim: float = Field(0.4, description="score_v above this may surface an L4 aspect")

    model_config = {"frozen": True, "extra": "forbid"}

    @model_validator(mode="after")
    def _ordered(self):
        if not 0 < self.sem_l4_topic < self.sem_replace <= 1:
            raise ValueError("thresholds must satisfy 0 < sem_l4_topic < sem_replace <= 1")
        if not 0 < self.sem_l4_verbatim <= 1:
            raise ValueError("sem_l4_verbatim must be in (0, 1]")
        return self


class PipelineConfig(BaseModel):
    """Every knob of the extraction and summarisation pipeline"""
    target_language: LanguageCode = Field(LanguageCode.EN, description="Language of translations and summaries")
    context_length: int = Field(512, ge=32, description="Token budget for summariser input")
    top_aspect_count: int = Field(5, ge=1, description="Aspects in the overall summary")
    words_per_aspect: int = Field(10, ge=1, description="Summary words per aspect")
    thresholds: Thresholds = Field(default_factory=Thresholds)
    selection_strategy: SelectionKind = Field(SelectionKind.RANDOM, description="Verbatim selection")
    selection_k: int = Field(50, ge=1, description="Verbatims kept per aspect pool")
    random_seed: int = Field(0, description="Seed for every stochastic path")

    max_batch_size: int = Field(64, ge=1, description="Prompts per backend call")
    max_wait_ms: float = Field(10.0, ge=0, description="Batch coalescing window")
    max_in_flight: int = Field(4, ge=1, description="Concurrent backend calls")
    workers: int = Field(8, ge=1, description="Reviews extracted concurrently")
    max_recursion_depth: int = Field(8, ge=1, description="Reduce levels allowed in recursive summarisation")
    overall_mode: OverallMode = Field(OverallMode.PER_SENTIMENT, description="Overall summary mode")
    match_new_aspects: bool = Field(False, description="Match against aspects registered earlier in the run")
    grounding_jaccard: float = Field(0.5, gt=0, le=1, description="Verbatim-to-segment overlap required")
    tp_jaccard: float = Field(0.5, gt=0, le=1, description="Verbatim overlap for a true positive")
    translation_cosine: float = Field(0.9, gt=0, le=1, description="Cosine for a correct translation")
    cluster_cosine: float = Field(0.9, gt=0, le=1, description="Near-duplicate cosine for weighted selection")
    overall_verbatims_per_aspect: int = Field(3, ge=1, description="Verbatims per line of the overall prompt")
    aspect_template: str = Field("summarise_aspect", description="Template for aspect-level summaries")

    model_config = {"frozen": True}

    @field_validator("target_language", mode="before")
    @classmethod
    def _parse_language(cls, value):
        return LanguageCode.parse(value)

    @field_validator("aspect_template")
    @classmethod
    def _known_template(cls, value: str) -> str:
        if value not in ("summarise_aspect", "summarise"):
            raise ValueError("aspect_template must be summarise_aspect or summarise")
        return value
