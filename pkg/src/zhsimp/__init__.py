"""Chinese lexical simplification toolkit."""

from .core import Dataset, GoldSubstitute, Instance, load_dataset, parse_dataset, serialize_dataset
from .evaluation import categorize_errors, sg_metrics, system_metrics
from .generation import CandidateSet, GeneratorConfig, Method, generate
from .lexicons import LexiconBundle
from .mlm import MockBackend, TokenSequence
from .pipeline import SimplificationTrace, Simplifier
from .ranking import Feature, RankerConfig

__all__ = [
    "CandidateSet",
    "Dataset",
    "Feature",
    "GeneratorConfig",
    "GoldSubstitute",
    "Instance",
    "LexiconBundle",
    "Method",
    "MockBackend",
    "RankerConfig",
    "SimplificationTrace",
    "Simplifier",
    "TokenSequence",
    "categorize_errors",
    "generate",
    "load_dataset",
    "parse_dataset",
    "serialize_dataset",
    "sg_metrics",
    "system_metrics",
]
