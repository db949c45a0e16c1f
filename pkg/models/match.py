"""Aspect standardisation outcome models"""
from enum import Enum
from typing import Optional
from pydantic import BaseModel, Field, model_validator


class MatchKind(str, Enum):
    EXISTING_L3 = "existing_l3"
    NEW_L4 = "new_l4"
    NEW_ASPECT = "new_aspect"


class MatchedBy(str, Enum):
    EXACT = "exact"
    SUBSTRING = "substring"
    SEMANTIC = "semantic"


class MatchOutcome(BaseModel):
    """Where a generated aspect landed relative to the taxonomy"""
    kind: MatchKind = Field(..., description="existing_l3, new_l4 (of parent_l3) or new_aspect")
    resolved_aspect: str = Field(..., description="Taxonomy L3, or the generated name")
    parent_l3: Optional[str] = Field(None, description="Parent L3 when kind is new_l4")
    generated_aspect: str = Field(..., description="Aspect name as generated")
    score_t: Optional[float] = Field(None, ge=-1, le=1, description="Best topic-name similarity")
    score_v: Optional[float] = Field(None, ge=-1, le=1, description="Best verbatim-keyword similarity")
    aspect_t: Optional[str] = Field(None, description="Argmax of topic-name similarity")
    aspect_v: Optional[str] = Field(None, description="Argmax of verbatim-keyword similarity")
    matched_by: MatchedBy = Field(..., description="exact, substring or semantic")

    model_config = {"frozen": True}

    @model_validator(mode="after")
    def _parent_iff_l4(self):
        if (self.kind == MatchKind.NEW_L4) != (self.parent_l3 is not None):
            raise ValueError("parent_l3 is set exactly when kind is new_l4")
        return self

    @property
    def l3_aspect(self) -> str:
        """Granular aspect the insight is filed under"""
        return self.parent_l3 if self.kind == MatchKind.NEW_L4 else self.resolved_aspect
