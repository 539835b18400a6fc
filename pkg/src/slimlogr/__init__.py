"""SlimLogR: joint sparse linear drug recommendation with ADR label prediction."""

from .core import (
    DatasetError,
    DrugVocabulary,
    LabeledDataset,
    ParseError,
    PrescriptionMatrix,
    VocabularyMismatchError,
)
from .joint import JointHyper, JointModel, train_joint, train_separate
from .logreg import LogRHyper, LogRModel, train_logr
from .recommend import RecConfig, Recommendation
from .slim import SlimHyper, SlimModel, train_slim

__all__ = [
    "DatasetError", "DrugVocabulary", "LabeledDataset", "ParseError", "PrescriptionMatrix",
    "VocabularyMismatchError", "JointHyper", "JointModel", "train_joint", "train_separate",
    "LogRHyper", "LogRModel", "train_logr", "RecConfig", "Recommendation",
    "SlimHyper", "SlimModel", "train_slim",
]
