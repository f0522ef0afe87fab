"""Evaluation, transfer, embedding export and reporting.

``transfer`` and ``report`` depend on the trainer and are imported from their
submodules directly.
"""

from cody.evalbench.embeddings import EmbeddingDump, collect_embeddings
from cody.evalbench.evaluation import EvalRecord, evaluate, random_policy_baseline
from cody.evalbench.grid import grid_assign, pca_project
from cody.evalbench.probe import ProbeResult, smoothness_probe

__all__ = [
    "EmbeddingDump",
    "EvalRecord",
    "ProbeResult",
    "collect_embeddings",
    "evaluate",
    "grid_assign",
    "pca_project",
    "random_policy_baseline",
    "smoothness_probe",
]
