"""Structured prediction by learning the enqueue function of beam search."""

from .linalg import FeatureIndexer, SparseVector, WeightVector
from .search import EnqueuePolicy, SearchFailure, SearchNode, TaskContractError, TaskDefinition, search
from .learning import LearnerConfig, TrainingReport, UpdateRule, learn_one, train

__version__ = "0.1.0"

__all__ = [
    "EnqueuePolicy",
    "FeatureIndexer",
    "LearnerConfig",
    "SearchFailure",
    "SearchNode",
    "SparseVector",
    "TaskContractError",
    "TaskDefinition",
    "TrainingReport",
    "UpdateRule",
    "WeightVector",
    "learn_one",
    "search",
    "train",
]
