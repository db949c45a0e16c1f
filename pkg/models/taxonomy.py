"""Aspect taxonomy models"""
from typing import Dict, List, Optional, Tuple
from pydantic import BaseModel, Field, PrivateAttr, computed_field
from core.aspect_registry import NewAspectRegistry


def normalise_name(name: str) -> str:
    """Case-fold and collapse whitespace so names compare reliably"""
    return " ".join(name.casefold().split())


class Taxonomy(BaseModel):
    """
    Three-level aspect hierarchy (L1 coarse, L2 hinge, L3 granular) with a
    keyword list per granular aspect. Emergent aspects found while matching
    are collected in the ``new_aspects`` registry.
    """
    domain: str = Field("default", description="Domain label, e.g. products or hospitality")
    l1_aspects: List[str] = Field(default_factory=list, description="Coarse aspects")
    l2_aspects: Dict[str, str] = Field(default_factory=dict, description="Hinge aspect -> parent L1")
    l3_aspects: Dict[str, str] = Field(default_factory=dict, description="Granular aspect -> parent L2")
    keywords: Dict[str, List[str]] = Field(default_factory=dict, description="Granular aspect -> keywords")

    _new_aspects: NewAspectRegistry = PrivateAttr(default_factory=NewAspectRegistry)

    model_config = {
        "frozen": True,
        "json_schema_extra": {
            "example": {
                "domain": "hospitality",
                "l1_aspects": ["Hospitality"],
                "l2_aspects": {"Hotel Services": "Hospitality"},
                "l3_aspects": {"Accommodation": "Hotel Services"},
                "keywords": {"Accommodation": ["room", "bed", "suite"]}
            }
        }
    }

    @property
    def new_aspects(self) -> NewAspectRegistry:
        return self._new_aspects

    def attach_registry(self, registry: NewAspectRegistry) -> None:
        """Swap the in-memory registry for another one (e.g. file-backed)"""
        self._new_aspects = registry

    def l3_names(self) -> List[str]:
        return list(self.l3_aspects)

    def has_l3(self, name: str) -> bool:
        return name in self.l3_aspects

    def lineage(self, l3: str) -> Tuple[Optional[str], Optional[str]]:
        """Return (L1, L2) for a granular aspect, or (None, None) if unknown"""
        l2 = self.l3_aspects.get(l3)
        if l2 is None:
            return None, None
        return self.l2_aspects.get(l2), l2

    def keyword_index(self) -> List[Tuple[str, str]]:
        """All (keyword, L3) pairs, longest keyword first"""
        pairs = [(kw, l3) for l3, kws in self.keywords.items() for kw in kws]
        return sorted(pairs, key=lambda pair: -len(pair[0]))


class ValidationReport(BaseModel):
    """Outcome of a taxonomy validation"""
    errors: List[str] = Field(default_factory=list, description="Structural problems")
    warnings: List[str] = Field(default_factory=list, description="Curation advice")

    @computed_field
    @property
    def valid(self) -> bool:
        return not self.errors
