"""Metaphor identification from lemma, argument and discourse-context features."""

from .corpus import ArgumentSpan, Example, ExampleSet, ParsedSentence
from .embeddings import PrecomputedVectors, VectorTable
from .features import FeatureConfig, FeatureMatrix
from .gbdt import GBDTModel, GBDTParams

__version__ = "0.1.0"

__all__ = [
    "ArgumentSpan", "Example", "ExampleSet", "ParsedSentence",
    "PrecomputedVectors", "VectorTable", "FeatureConfig", "FeatureMatrix",
    "GBDTModel", "GBDTParams",
]
