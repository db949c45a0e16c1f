"""Latency benchmark models"""
from enum import Enum
from typing import List
from pydantic import BaseModel, Field, model_validator


class Scenario(str, Enum):
    BATCHED = "batched"
    UNBATCHED = "unbatched"
    RAW_REVIEWS = "raw_reviews"


class BenchResult(BaseModel):
    """Latency of one scenario at one point of a sweep axis"""
    scenario: Scenario
    axis: str = Field(..., description="batch_size or input_length")
    value: int = Field(..., description="Batch size or input length in tokens")
    mean_s: float = Field(..., ge=0, description="Mean per-item latency in seconds")
    p50_s: float = Field(..., ge=0)
    p95_s: float = Field(..., ge=0)
    n: int = Field(..., ge=1, description="Number of trials")

    @model_validator(mode="after")
    def _ordered(self):
        if self.p95_s < self.p50_s:
            raise ValueError("p95 must not be below p50")
        return self


class BenchReport(BaseModel):
    results: List[BenchResult] = Field(default_factory=list)
    complete: bool = Field(True, description="False when the backend failed mid-sweep")
    errors: List[str] = Field(default_factory=list)
