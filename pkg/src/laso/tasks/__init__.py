"""Task instantiations and the registry used by model files."""

from __future__ import annotations

from typing import Optional

from ..linalg import FeatureIndexer
from .chunking import ChunkingTask, ChunkState, gold_tiling
from .features import FeatureTemplateConfig, extract_base_features, meta_predicates
from .joint import JointTask
from .synthetic import SyntheticTask, make_separable_dataset

TASKS = {ChunkingTask.name: ChunkingTask, JointTask.name: JointTask}


def task_from_header(header: dict, indexer: Optional[FeatureIndexer] = None):
    name = header.get("task")
    if name not in TASKS:
        raise ValueError(f"unknown task {name!r}; expected one of {sorted(TASKS)}")
    return TASKS[name].from_header(header, indexer)


__all__ = [
    "ChunkState",
    "ChunkingTask",
    "FeatureTemplateConfig",
    "JointTask",
    "SyntheticTask",
    "TASKS",
    "extract_base_features",
    "gold_tiling",
    "make_separable_dataset",
    "meta_predicates",
    "task_from_header",
]
