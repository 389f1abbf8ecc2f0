"""Random-graph entropy accounting over node partitions.

A graph here is a symmetric matrix of independent per-edge Bernoulli
probabilities, self-loops included, so an ``n``-node graph carries
``n (n + 1) / 2`` binary variables.
"""

from __future__ import annotations

import json
from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from .entropy import BITS, bernoulli_entropy_array

DEFAULT_MAX_EXHAUSTIVE_N = 16
TIE_TOL = 1e-12


class GraphError(ValueError):
    pass


class PartitionMismatch(GraphError):
    pass


class TooLargeForExhaustive(GraphError):
    pass


@dataclass(frozen=True)
class EdgeProbabilityGraph:
    p: np.ndarray

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        if p.ndim != 2 or p.shape[0] != p.shape[1] or p.shape[0] < 1:
            raise GraphError("p must be a square n x n matrix with n >= 1")
        if not np.all(np.isfinite(p)) or np.any(p < 0) or np.any(p > 1):
            raise GraphError("edge probabilities must lie in [0, 1]")
        if not np.array_equal(p, p.T):
            raise GraphError("edge probabilities must be symmetric")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @property
    def n(self) -> int:
        return self.p.shape[0]

    @property
    def n_slots(self) -> int:
        return self.n * (self.n + 1) // 2

    @classmethod
    def uniform(cls, n: int, p: float) -> EdgeProbabilityGraph:
        return cls(np.full((n, n), float(p)))

    @classmethod
    def planted(cls, blocks: Sequence[int], p_in: float, p_cross: float) -> EdgeProbabilityGraph:
        """Graph whose edge probability is ``p_in`` inside a block, ``p_cross`` across."""
        b = np.asarray(blocks)
        same = b[:, None] == b[None, :]
        return cls(np.where(same, p_in, p_cross))

    def edge_entropies(self) -> np.ndarray:
        """Per-slot entropy matrix in bits (symmetric; read the upper triangle)."""
        return bernoulli_entropy_array(self.p, BITS)

    def to_json(self) -> dict:
        return {"n": self.n, "p": self.p.tolist()}


def graph_from_json(doc: Mapping) -> EdgeProbabilityGraph:
    """Build a graph from ``{"n": int, "p": [[...]]}`` or ``{"n": int, "uniform_p": x}``."""
    if not isinstance(doc, Mapping):
        raise GraphError("graph document must be a JSON object")
    if "n" not in doc:
        raise GraphError("graph document: missing field 'n'")
    n = doc["n"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise GraphError("graph document: field 'n' must be a positive integer")
    if "p" in doc:
        try:
            p = np.array(doc["p"], dtype=float)
        except (TypeError, ValueError) as exc:
            raise GraphError(f"graph document: field 'p' is not a numeric matrix ({exc})") from None
        if p.shape != (n, n):
            raise GraphError(f"graph document: field 'p' has shape {p.shape}, expected ({n}, {n})")
        try:
            return EdgeProbabilityGraph(p)
        except GraphError as exc:
            raise GraphError(f"graph document: field 'p': {exc}") from None
    if "uniform_p" in doc:
        u = doc["uniform_p"]
        if not isinstance(u, (int, float)) or isinstance(u, bool) or not 0 <= u <= 1:
            raise GraphError("graph document: field 'uniform_p' must be a number in [0, 1]")
        return EdgeProbabilityGraph.uniform(n, u)
    raise GraphError("graph document: needs field 'p' or 'uniform_p'")


def load_graph(path) -> EdgeProbabilityGraph:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise GraphError(f"{path}: invalid JSON ({exc})") from None
    return graph_from_json(doc)


@dataclass(frozen=True)
class NodePartition:
    """Assignment of nodes ``0..n-1`` to blocks ``0..k-1``.

    Block ids are relabelled in order of first appearance, so two partitions
    with the same grouping compare equal.
    """

    block_of: tuple

    def __post_init__(self):
        raw = tuple(int(b) for b in self.block_of)
        if not raw:
            raise GraphError("a partition needs at least one node")
        relabel: dict[int, int] = {}
        canon = tuple(relabel.setdefault(b, len(relabel)) for b in raw)
        object.__setattr__(self, "block_of", canon)

    @property
    def n(self) -> int:
        return len(self.block_of)

    @property
    def k(self) -> int:
        return max(self.block_of) + 1

    def blocks(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.k)]
        for node, b in enumerate(self.block_of):
            out[b].append(node)
        return out

    @classmethod
    def from_blocks(cls, blocks: Sequence[Sequence[int]], n: int | None = None) -> NodePartition:
        """Build from explicit node lists (0-based). Every node must appear exactly once."""
        seen: dict[int, int] = {}
        for b, nodes in enumerate(blocks):
            if len(nodes) == 0:
                raise GraphError("empty block")
            for v in nodes:
                if v in seen:
                    raise GraphError(f"node {v} assigned to more than one block")
                seen[v] = b
        size = n if n is not None else len(seen)
        if sorted(seen) != list(range(size)):
            raise PartitionMismatch("blocks must cover nodes 0..n-1 exactly once")
        return cls(tuple(seen[v] for v in range(size)))

    @classmethod
    def single(cls, n: int) -> NodePartition:
        return cls((0,) * n)


def parse_blocks(text: str, n: int) -> NodePartition:
    """Parse a block list such as ``"1-4,5-8"``, ``"1+3,2+4"`` or ``"all"`` (1-based nodes)."""
    text = text.strip()
    if text == "all":
        return NodePartition.single(n)
    groups = []
    for chunk in text.replace(";", ",").split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        nodes = []
        for part in chunk.split("+"):
            try:
                if "-" in part:
                    lo, hi = part.split("-", 1)
                    nodes.extend(range(int(lo) - 1, int(hi)))
                else:
                    nodes.append(int(part) - 1)
            except ValueError:
                raise GraphError(f"blocks: cannot parse {part.strip()!r}") from None
        groups.append(nodes)
    if not groups:
        raise GraphError("blocks: no blocks given")
    return NodePartition.from_blocks(groups, n)


@dataclass(frozen=True)
class BlockEntropyReport:
    within_block: tuple  # ((block, bits), ...)
    cross_block: tuple  # (((b1, b2), bits), ...)
    total: float

    def to_json(self) -> dict:
        return {
            "within_block": [{"block": b, "bits": h} for b, h in self.within_block],
            "cross_block": [{"blocks": list(pair), "bits": h} for pair, h in self.cross_block],
            "total": self.total,
        }


def _upper(n: int):
    return np.triu_indices(n)


def graph_entropy(g: EdgeProbabilityGraph) -> float:
    """Total entropy in bits: the sum over slots ``i <= j`` of edge entropies."""
    iu = _upper(g.n)
    return float(g.edge_entropies()[iu].sum())


def block_entropies(g: EdgeProbabilityGraph, part: NodePartition) -> BlockEntropyReport:
    if part.n != g.n:
        raise PartitionMismatch(f"partition has {part.n} nodes, graph has {g.n}")
    h = g.edge_entropies()
    iu, ju = _upper(g.n)
    b = np.asarray(part.block_of)
    bi, bj = b[iu], b[ju]
    lo, hi = np.minimum(bi, bj), np.maximum(bi, bj)
    slot_h = h[iu, ju]
    within = []
    cross = []
    for a in range(part.k):
        within.append((a, float(slot_h[(lo == a) & (hi == a)].sum())))
    for a in range(part.k):
        for c in range(a + 1, part.k):
            cross.append(((a, c), float(slot_h[(lo == a) & (hi == c)].sum())))
    total = sum(v for _, v in within) + sum(v for _, v in cross)
    return BlockEntropyReport(tuple(within), tuple(cross), total)


def conditional_block_entropy(g: EdgeProbabilityGraph, part: NodePartition, target_block: int) -> float:
    """Entropy of one block as ``H(G) - H(rest)``, where *rest* is every other section.

    Edges are independent, so the joint entropy of the other sections is the sum
    of their entropies.
    """
    if not 0 <= target_block < part.k:
        raise GraphError(f"unknown block id {target_block}")
    rep = block_entropies(g, part)
    rest = sum(h for b, h in rep.within_block if b != target_block)
    rest += sum(h for _, h in rep.cross_block)
    return graph_entropy(g) - rest


OBJECTIVES = ("cross_per_slot", "cross")


def bipartition_scores(g: EdgeProbabilityGraph, objective: str = "cross_per_slot"):
    """Enumerate every nontrivial bipartition with node 0 fixed in block 0.

    Returns ``(assignments, cross_bits, scores)`` where ``assignments`` is a
    ``(2**(n-1) - 1, n)`` 0/1 array sorted lexicographically.
    """
    if objective not in OBJECTIVES:
        raise GraphError(f"unknown objective {objective!r}")
    n = g.n
    codes = np.arange(1, 2 ** (n - 1), dtype=np.int64)
    # node i (i >= 1) takes bit (n-1-i): numeric order == lexicographic order of rows
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    assign = ((codes[:, None] >> shifts[None, :]) & 1).astype(np.int8)
    iu, ju = np.triu_indices(n, k=1)
    h = g.edge_entropies()[iu, ju]
    cut = assign[:, iu] != assign[:, ju]
    cross = cut.astype(float) @ h
    if objective == "cross":
        scores = cross
    else:
        size1 = assign.sum(axis=1).astype(float)
        scores = cross / (size1 * (n - size1))
    return assign, cross, scores


def best_bipartition(
    g: EdgeProbabilityGraph,
    max_exhaustive_n: int = DEFAULT_MAX_EXHAUSTIVE_N,
    objective: str = "cross_per_slot",
) -> tuple[NodePartition, BlockEntropyReport]:
    """Exhaustive search for the two-block split with the least cross-block entropy.

    ``objective="cross_per_slot"`` (default) minimises H(B) divided by the
    number of cross slots ``|A_1| |A_2|``; ``"cross"`` minimises raw H(B),
    which always favours peeling off a single node. Near-ties (within 1e-12)
    go to the lexicographically smallest assignment.
    """
    if g.n < 2:
        raise GraphError("bipartition needs n >= 2")
    if g.n > max_exhaustive_n:
        raise TooLargeForExhaustive(f"n={g.n} exceeds exhaustive cap {max_exhaustive_n}")
    assign, _, scores = bipartition_scores(g, objective)
    best = scores.min()
    idx = int(np.flatnonzero(scores <= best + TIE_TOL)[0])
    part = NodePartition(tuple(int(x) for x in assign[idx]))
    return part, block_entropies(g, part)


def sample_graph(g: EdgeProbabilityGraph, seed: int) -> np.ndarray:
    """Draw one realised symmetric 0/1 adjacency matrix."""
    rng = np.random.default_rng(np.uint64(seed % 2**64))
    iu, ju = np.triu_indices(g.n)
    draws = rng.random(iu.size) < g.p[iu, ju]
    adj = np.zeros((g.n, g.n), dtype=np.uint8)
    adj[iu, ju] = draws
    adj[ju, iu] = draws
    return adj


def example_graph() -> EdgeProbabilityGraph:
    """The built-in 8-node graph with every edge an unbiased coin."""
    return EdgeProbabilityGraph.uniform(8, 0.5)


def planted_instance(n: int, p_in: float, p_cross: float, seed: int, jitter: float = 0.0):
    """Random two-community graph; returns ``(graph, planted partition)``.

    The seed picks the community sizes (each at least 2 when ``n >= 4``) and a
    random node labelling. ``jitter`` perturbs every slot probability
    uniformly by up to that amount, clipped to ``[0.001, 0.999]``.
    """
    rng = np.random.default_rng(seed)
    lo = 2 if n >= 4 else 1
    size = int(rng.integers(lo, n - lo + 1))
    nodes = rng.permutation(n)
    block_of = np.zeros(n, dtype=np.int64)
    block_of[nodes[size:]] = 1
    same = block_of[:, None] == block_of[None, :]
    p = np.where(same, p_in, p_cross).astype(float)
    if jitter > 0:
        noise = rng.uniform(-jitter, jitter, size=(n, n))
        noise = np.triu(noise) + np.triu(noise, 1).T
        p = np.clip(p + noise, 0.001, 0.999)
    return EdgeProbabilityGraph(p), NodePartition(tuple(int(b) for b in block_of))
