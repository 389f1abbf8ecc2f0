"""Complex information entropy workbench.

Entropy accounting for random graphs, a seeded ball-world simulator, hidden
object discovery from its trajectories, and Game of Life macro-objects.
"""

__version__ = "0.1.0"
# schema version stamped on every report and manifest
SPEC_VERSION = "1.0"

from .entropy import (
    BITS,
    NATS,
    CieTerms,
    EntropyError,
    InvalidProbabilityVector,
    bernoulli_entropy,
    cie_total,
    differential_entropy_gaussian_fit,
    shannon_entropy,
    state_surprisal,
)
from .graph import (
    BlockEntropyReport,
    EdgeProbabilityGraph,
    NodePartition,
    best_bipartition,
    block_entropies,
    conditional_block_entropy,
    graph_entropy,
)
from .world import Trajectory, WorldConfig, read_trajectory, simulate

__all__ = [
    "BITS",
    "NATS",
    "SPEC_VERSION",
    "BlockEntropyReport",
    "CieTerms",
    "EdgeProbabilityGraph",
    "EntropyError",
    "InvalidProbabilityVector",
    "NodePartition",
    "Trajectory",
    "WorldConfig",
    "__version__",
    "bernoulli_entropy",
    "best_bipartition",
    "block_entropies",
    "cie_total",
    "conditional_block_entropy",
    "differential_entropy_gaussian_fit",
    "graph_entropy",
    "read_trajectory",
    "shannon_entropy",
    "simulate",
    "state_surprisal",
]
