"""Object approximators, system models and inference settings."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields

import numpy as np

CRITERIA = ("loss", "cie")
DRIVERS = ("em", "bellman")
SEED_MODES = ("spatial", "residual")


class InferenceConfigError(ValueError):
    pass


@dataclass(frozen=True)
class InferenceConfig:
    min_improvement: float = 0.05
    max_objects: int = 8
    max_anneal_iters: int = 100
    seed_fraction: float = 0.2
    # "spatial": seeds are the neighbourhood of the worst-fitted map area;
    # "residual": seeds are simply the worst-fitted samples
    seed_mode: str = "spatial"
    n_seed_hypotheses: int = 3
    smoothing_fraction: float = 0.01
    temperature0: float = 0.0
    cooling_alpha: float = 0.9
    unify_tolerance: float = 0.01
    gamma: float = 1.1
    seed: int = 0
    min_fit_size: int = 6
    ridge_lambda: float = 1e-8
    # mean-loss scale treated as "nothing left to explain"
    loss_floor: float = 1e-10
    # residual std at or below which an object's entropy is the -inf sentinel
    sigma_floor: float = 1e-9
    criterion: str = "loss"
    driver: str = "em"
    recursion_depth: int = 1
    max_passes: int = 4

    def __post_init__(self):
        for name in ("min_improvement", "unify_tolerance"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise InferenceConfigError(f"{name} must lie in (0, 1), got {v!r}")
        if not 0 < self.seed_fraction <= 1:
            raise InferenceConfigError("seed_fraction must lie in (0, 1]")
        if not 0 < self.cooling_alpha <= 1:
            raise InferenceConfigError("cooling_alpha must lie in (0, 1]")
        if self.temperature0 < 0:
            raise InferenceConfigError("temperature0 must be non-negative")
        if not self.gamma > 0:
            raise InferenceConfigError("gamma must be positive")
        if self.max_objects < 1 or self.max_anneal_iters < 0 or self.min_fit_size < 1:
            raise InferenceConfigError("max_objects, max_anneal_iters and min_fit_size must be positive")
        if self.seed_mode not in SEED_MODES:
            raise InferenceConfigError(f"seed_mode must be one of {SEED_MODES}")
        if self.n_seed_hypotheses < 1 or not 0 < self.smoothing_fraction <= 1:
            raise InferenceConfigError("n_seed_hypotheses >= 1 and smoothing_fraction in (0, 1] required")
        if self.criterion not in CRITERIA:
            raise InferenceConfigError(f"criterion must be one of {CRITERIA}")
        if self.driver not in DRIVERS:
            raise InferenceConfigError(f"driver must be one of {DRIVERS}")
        if self.recursion_depth < 0 or self.max_passes < 1:
            raise InferenceConfigError("recursion_depth >= 0 and max_passes >= 1 required")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, doc: dict) -> InferenceConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise InferenceConfigError(f"unknown inference field(s): {', '.join(sorted(unknown))}")
        return cls(**doc)


@dataclass(frozen=True)
class ObjectModel:
    """Affine map from ``(1, vx_hat, vy_hat)`` to the predicted unit acceleration.

    ``weights`` is 2x3: row ``r`` gives output ``r`` as ``weights[r] @ features``.
    """

    weights: np.ndarray
    n_points: int
    sse: float
    residual_sigma: np.ndarray
    ridge: bool = False

    def predict(self, X: np.ndarray) -> np.ndarray:
        return X @ self.weights.T

    def sq_residuals(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        r = Y - self.predict(X)
        return np.einsum("ij,ij->i", r, r)

    def restated(self, X: np.ndarray, Y: np.ndarray) -> ObjectModel:
        """Same weights, statistics recomputed on a new point set."""
        return _stats(self.weights, X, Y, self.ridge)

    def to_json(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "n_points": self.n_points,
            "sse": self.sse,
            "sigma": self.residual_sigma.tolist(),
            "ridge": self.ridge,
        }


def _stats(W: np.ndarray, X: np.ndarray, Y: np.ndarray, ridge: bool) -> ObjectModel:
    r = Y - X @ W.T
    n = int(X.shape[0])
    sse = float(np.einsum("ij,ij->", r, r))
    sigma = r.std(axis=0, ddof=1) if n >= 2 else np.zeros(Y.shape[1])
    W = np.array(W, dtype=float)
    W.setflags(write=False)
    return ObjectModel(W, n, sse, sigma, ridge)


def fit_object(X, Y, ridge_lambda: float = 1e-8) -> ObjectModel:
    """Least-squares affine fit of targets ``Y`` (n, 2) on features ``X`` (n, 3).

    A rank-deficient design falls back to ridge regression with ``ridge_lambda``.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.shape[0] == 0:
        raise ValueError("cannot fit an object to zero samples")
    if np.linalg.matrix_rank(X) < X.shape[1]:
        A = X.T @ X + ridge_lambda * np.eye(X.shape[1])
        W = np.linalg.solve(A, X.T @ Y).T
        return _stats(W, X, Y, ridge=True)
    W = np.linalg.lstsq(X, Y, rcond=None)[0].T
    return _stats(W, X, Y, ridge=False)


@dataclass(frozen=True)
class SystemModel:
    """A set of fitted objects plus the sample-to-object assignment.

    ``assignment`` covers every original sample; excluded (zero-velocity)
    samples carry -1. ``transition_counts[i, j]`` counts consecutive samples
    handed from object ``i`` to object ``j``.
    """

    objects: tuple
    assignment: np.ndarray
    transition_counts: np.ndarray
    a_mag_hat: float
    loss: float
    trace: tuple = ()
    ledger: tuple = field(default=())

    @property
    def k(self) -> int:
        return len(self.objects)

    @property
    def sse(self) -> float:
        return float(sum(o.sse for o in self.objects))

    def activation(self) -> np.ndarray:
        """One-hot activation timeline (n_samples, k); excluded samples are all-zero."""
        act = np.zeros((self.assignment.size, self.k), dtype=np.int8)
        ok = self.assignment >= 0
        act[np.flatnonzero(ok), self.assignment[ok]] = 1
        return act

    def to_json(self) -> dict:
        return {
            "objects": [o.to_json() for o in self.objects],
            "assignment": self.assignment.tolist(),
            "transitions": self.transition_counts.tolist(),
            "a_mag_hat": self.a_mag_hat,
            "loss": self.loss,
        }
