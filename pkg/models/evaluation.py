"""Evaluation models"""
from enum import Enum
from typing import Dict, List, Optional, Tuple
from pydantic import BaseModel, Field, computed_field, field_validator


class Prf(BaseModel):
    """Precision, recall and their harmonic mean"""
    precision: float = Field(..., ge=0, le=1)
    recall: float = Field(..., ge=0, le=1)

    model_config = {"frozen": True}

    @computed_field
    @property
    def f1(self) -> float:
        if self.precision + self.recall == 0:
            return 0.0
        return 2 * self.precision * self.recall / (self.precision + self.recall)


class RougeScores(BaseModel):
    r1: Prf
    r2: Prf
    rl: Prf

    model_config = {"frozen": True}


class Criterion(str, Enum):
    """Human evaluation criteria, each rated 1-5"""
    ASPECT_SPECIFICITY = "aspect_specificity"
    FACTUALITY = "factuality"
    COVERAGE = "coverage"
    FLUENCY = "fluency"
    BREVITY = "brevity"


CRITERION_SCALES: Dict[Criterion, Tuple[str, ...]] = {
    Criterion.ASPECT_SPECIFICITY: (
        "Does not talk about the aspect",
        "Remotely talks about the aspect",
        "Somewhat talks about the aspect",
        "Mostly talks about the aspect",
        "Completely talks about the aspect",
    ),
    Criterion.FACTUALITY: (
        "Completely hallucinating",
        "Mostly hallucinating",
        "Somewhat true, somewhat hallucinating",
        "Mostly true of source verbatim",
        "Completely true of source verbatim",
    ),
    Criterion.COVERAGE: (
        "Does not cover any source verbatims (< 5%)",
        "Remotely covers source verbatims (5-20%)",
        "Somewhat covers source verbatims (20-40%)",
        "Mostly covers source verbatims (40-65%)",
        "Almost covers the source verbatims (> 65%)",
    ),
    Criterion.FLUENCY: ("incomprehensible", "disfluent", "can make sense", "good", "flawless"),
    Criterion.BREVITY: (
        "Poor and highly repetitive",
        "Fair but with some redundancy",
        "Good",
        "Excellent",
        "Flawless",
    ),
}


class LikertRecord(BaseModel):
    """One rater's 1-5 score of one item on one criterion"""
    item_id: str
    criterion: Criterion
    rater_id: str
    score: int = Field(..., ge=1, le=5)

    model_config = {"frozen": True}

    @field_validator("criterion", mode="before")
    @classmethod
    def _parse_criterion(cls, value):
        return str(value).strip().casefold().replace("-", "_").replace(" ", "_")


class MoeSummary(BaseModel):
    """Mean with a 95% margin of error"""
    criterion: str
    mean: float
    sd: float
    n: int
    z: float = 1.96

    @computed_field
    @property
    def moe(self) -> float:
        return self.z * self.sd / self.n ** 0.5

    @computed_field
    @property
    def ci(self) -> Tuple[float, float]:
        return (self.mean - self.moe, self.mean + self.moe)


class SummaryScoreRow(BaseModel):
    """Automatic metrics of one generated summary against its reference"""
    entity_id: str
    level: str = Field(..., description="aspect or overall")
    key: str = Field(..., description="Aspect name or 'overall'")
    rouge: RougeScores
    embed_score: float


class EvalReport(BaseModel):
    """Everything the evaluate command produces"""
    rows: List[SummaryScoreRow] = Field(default_factory=list)
    human: Optional[Dict[str, MoeSummary]] = Field(None, description="None when no ratings were given")
    kappa: Dict[str, float] = Field(default_factory=dict, description="'criterion:raterA~raterB' -> kappa")
    warnings: List[str] = Field(default_factory=list)
