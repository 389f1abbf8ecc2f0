"""Hidden-object discovery from trajectory data."""

from .anneal import anneal_split, seed_hypotheses, seed_new_object
from .cie import CieReport, bellman_update, cie_of_model
from .data import (
    Dataset,
    ZeroVelocitySample,
    dataset_from_arrays,
    dataset_from_trajectory,
    featurize,
)
from .metrics import direction_cosine, is_one_hot, recovery_summary, region_agreement
from .models import (
    InferenceConfig,
    InferenceConfigError,
    ObjectModel,
    SystemModel,
    fit_object,
)
from .structure import affordance_graph, grow, structure_learning_loop, try_unify

__all__ = [
    "CieReport",
    "Dataset",
    "InferenceConfig",
    "InferenceConfigError",
    "ObjectModel",
    "SystemModel",
    "ZeroVelocitySample",
    "affordance_graph",
    "anneal_split",
    "bellman_update",
    "cie_of_model",
    "dataset_from_arrays",
    "dataset_from_trajectory",
    "direction_cosine",
    "featurize",
    "fit_object",
    "grow",
    "is_one_hot",
    "recovery_summary",
    "region_agreement",
    "seed_hypotheses",
    "seed_new_object",
    "structure_learning_loop",
    "try_unify",
]
