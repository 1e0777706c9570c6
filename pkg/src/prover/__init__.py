"""Inference rules, SInE levels and clause selection.

The saturation loop lives in src.prover.saturation; it depends on
src.derivation, which in turn imports the rules from here.
"""
from .rules import RuleId, all_factors, all_resolvents, factor, resolve, subsumes, subsumption_resolve
from .selection import (
    SOURCE_A,
    SOURCE_B,
    SOURCE_FALLBACK,
    ClauseQueue,
    Guidance,
    GuidanceContext,
    LayeredSelector,
    SelectorConfig,
    parse_ratio,
)
from .sine import DEFAULT_TOLERANCE, UNREACHED, SineLevels, sine_levels, symbol_occurrences

__all__ = [
    "DEFAULT_TOLERANCE",
    "SOURCE_A",
    "SOURCE_B",
    "SOURCE_FALLBACK",
    "UNREACHED",
    "ClauseQueue",
    "Guidance",
    "GuidanceContext",
    "LayeredSelector",
    "RuleId",
    "SelectorConfig",
    "SineLevels",
    "all_factors",
    "all_resolvents",
    "factor",
    "parse_ratio",
    "resolve",
    "sine_levels",
    "subsumes",
    "subsumption_resolve",
    "symbol_occurrences",
]
