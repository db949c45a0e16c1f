"""Taxonomy validation"""
import logging
from collections import defaultdict
from typing import Dict, List
from models.taxonomy import Taxonomy, ValidationReport, normalise_name

logger = logging.getLogger(__name__)

MIN_KEYWORDS = 15


def validate_taxonomy(tax: Taxonomy) -> ValidationReport:
    """
    Check the L1 -> L2 -> L3 tree and the keyword lists.

    Errors: dangling parents, duplicate names across levels, L3 aspects
    without keywords. Warnings: fewer than 15 keywords, one keyword filed
    under several L3 aspects. Never raises.
    """
    errors: List[str] = []
    warnings: List[str] = []
    l1_set = set(tax.l1_aspects)

    for l2, parent in tax.l2_aspects.items():
        if parent not in l1_set:
            errors.append(f"dangling parent: L2 {l2!r} points to unknown L1 {parent!r}")
    for l3, parent in tax.l3_aspects.items():
        if parent not in tax.l2_aspects:
            errors.append(f"dangling parent: L3 {l3!r} points to unknown L2 {parent!r}")

    seen: Dict[str, str] = {}
    levels = [("L1", name) for name in tax.l1_aspects]
    levels += [("L2", name) for name in tax.l2_aspects]
    levels += [("L3", name) for name in tax.l3_aspects]
    for level, name in levels:
        key = normalise_name(name)
        if key in seen:
            errors.append(f"duplicate name: {level} {name!r} clashes with {seen[key]}")
        else:
            seen[key] = f"{level} {name!r}"

    owners: Dict[str, List[str]] = defaultdict(list)
    for l3 in tax.l3_aspects:
        keywords = [kw for kw in tax.keywords.get(l3, []) if kw.strip()]
        if not keywords:
            errors.append(f"empty keyword list: L3 {l3!r}")
            continue
        if len(keywords) < MIN_KEYWORDS:
            warnings.append(f"L3 {l3!r} has {len(keywords)} keywords, below {MIN_KEYWORDS} keywords")
        for kw in {normalise_name(kw) for kw in keywords}:
            owners[kw].append(l3)

    for l3 in tax.keywords:
        if not tax.has_l3(l3):
            errors.append(f"dangling parent: keywords listed for unknown L3 {l3!r}")

    for kw, l3s in sorted(owners.items()):
        if len(l3s) > 1:
            warnings.append(f"keyword {kw!r} is shared by {', '.join(l3s)}")

    report = ValidationReport(errors=errors, warnings=warnings)
    logger.debug("Validated taxonomy %s: %d errors, %d warnings", tax.domain, len(errors), len(warnings))
    return report
