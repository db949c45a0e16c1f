"""Generation request models"""
from enum import Enum
from string import Formatter
from typing import FrozenSet, Tuple
from pydantic import BaseModel, Field, computed_field


class PromptName(str, Enum):
    ASPECT_ID = "aspect_id"
    SENTIMENT = "sentiment"
    VERBATIM = "verbatim"
    TRANSLATE = "translate"
    SUMMARISE = "summarise"
    SUMMARISE_ASPECT = "summarise_aspect"
    SUMMARISE_MINIMAL = "summarise_minimal"


class GenParams(BaseModel):
    """Decoding parameters sent with a batch of prompts"""
    max_output_tokens: int = Field(256, ge=1, description="Upper bound on generated tokens")
    temperature: float = Field(0.0, ge=0, description="0 requests deterministic decoding")
    stop_sequences: Tuple[str, ...] = Field((), description="Generation stops at any of these")

    model_config = {"frozen": True}


class PromptTemplate(BaseModel):
    """A named prompt with ``{placeholder}`` slots"""
    name: PromptName = Field(..., description="Which phase the template serves")
    text: str = Field(..., description="Template text")

    model_config = {"frozen": True}

    @computed_field
    @property
    def placeholders(self) -> FrozenSet[str]:
        return frozenset(
            field for _, field, _, _ in Formatter().parse(self.text) if field
        )
