"""Entropy primitives shared by the graph, inference and reporting code.

Everything is computed in nats internally; public functions take an explicit
``unit`` of ``"bits"`` or ``"nats"`` and convert at the boundary.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

BITS = "bits"
NATS = "nats"
LN2 = math.log(2.0)
PROB_TOL = 1e-9


class EntropyError(ValueError):
    """Raised for inputs outside an entropy function's domain."""


class InvalidProbabilityVector(EntropyError):
    pass


def _check_unit(unit: str) -> None:
    if unit not in (BITS, NATS):
        raise EntropyError(f"unit must be 'bits' or 'nats', got {unit!r}")


def to_unit(value_nats: float, unit: str) -> float:
    """Convert a nat-valued quantity to ``unit``."""
    _check_unit(unit)
    return value_nats / LN2 if unit == BITS else value_nats


def from_unit(value: float, unit: str) -> float:
    _check_unit(unit)
    return value * LN2 if unit == BITS else value


def validate_probabilities(p) -> np.ndarray:
    arr = np.asarray(p, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidProbabilityVector("probability vector must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(arr)):
        raise InvalidProbabilityVector("probability vector has non-finite entries")
    if np.any(arr < 0) or np.any(arr > 1):
        raise InvalidProbabilityVector("probabilities must lie in [0, 1]")
    total = float(arr.sum())
    if abs(total - 1.0) > PROB_TOL:
        raise InvalidProbabilityVector(f"probabilities sum to {total!r}, not 1")
    return arr


def _plogp_sum(arr: np.ndarray) -> float:
    nz = arr[arr > 0]
    return float(-np.sum(nz * np.log(nz)))


def shannon_entropy(p: Sequence[float], unit: str = BITS) -> float:
    """Shannon entropy of a discrete distribution, with 0 log 0 = 0."""
    _check_unit(unit)
    return to_unit(_plogp_sum(validate_probabilities(p)), unit)


def bernoulli_entropy(p: float, unit: str = BITS) -> float:
    """Entropy of a single binary variable that is 1 with probability ``p``."""
    _check_unit(unit)
    p = float(p)
    if not (0.0 <= p <= 1.0):
        raise EntropyError(f"Bernoulli parameter {p!r} outside [0, 1]")
    if p in (0.0, 1.0):
        return 0.0
    h = -p * math.log(p) - (1.0 - p) * math.log1p(-p)
    return to_unit(h, unit)


def bernoulli_entropy_array(p, unit: str = BITS) -> np.ndarray:
    """Vectorised :func:`bernoulli_entropy`; used for whole adjacency matrices."""
    _check_unit(unit)
    p = np.asarray(p, dtype=float)
    if np.any(~np.isfinite(p)) or np.any(p < 0) or np.any(p > 1):
        raise EntropyError("Bernoulli parameters must lie in [0, 1]")
    q = 1.0 - p
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -np.where(p > 0, p * np.log(p), 0.0) - np.where(q > 0, q * np.log(q), 0.0)
    return h / LN2 if unit == BITS else h


def differential_entropy_gaussian_fit(samples, min_sigma: float = 0.0) -> float:
    """Differential entropy (nats) of ``samples`` under a per-dimension Gaussian fit.

    Each dimension contributes ``0.5 * ln(2 pi e sigma_d^2)`` where ``sigma_d``
    is the unbiased sample standard deviation. If any ``sigma_d <= min_sigma``
    the estimate is degenerate and ``-inf`` is returned as a sentinel.

    Parameters
    ----------
    samples : array-like, shape (n,) or (n, d)
    min_sigma : float
        Resolution below which a dimension is treated as zero-variance.
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[1] < 1:
        raise EntropyError("samples must be a list of equal-length vectors")
    if x.shape[0] < 2:
        raise EntropyError("need at least 2 samples per dimension")
    sigma = x.std(axis=0, ddof=1)
    if np.any(sigma <= min_sigma):
        return -math.inf
    return float(np.sum(0.5 * np.log(2.0 * math.pi * math.e * sigma**2)))


def gaussian_entropy_from_sigma(sigma) -> float:
    """Closed-form entropy (nats) of independent Gaussians with std ``sigma``."""
    sigma = np.atleast_1d(np.asarray(sigma, dtype=float))
    if np.any(sigma <= 0):
        return -math.inf
    return float(np.sum(0.5 * np.log(2.0 * math.pi * math.e * sigma**2)))


def state_surprisal(p_s: float) -> float:
    """Entropy carried by an object sitting in a state of probability ``p_s``: -p ln p.

    ``p_s == 0`` is rejected: a state that was never modelled has no entry.
    """
    p_s = float(p_s)
    if not (0.0 < p_s <= 1.0):
        raise EntropyError(f"state probability {p_s!r} outside (0, 1]")
    return -p_s * math.log(p_s)


@dataclass(frozen=True)
class CieTerms:
    """Weighted object and coupling entropies that make up a CIE total.

    ``object_entropies`` and ``coupling_entropies`` hold ``(id, H)`` pairs in
    ``unit``; ``c`` and ``d`` are the matching coefficients.
    """

    object_entropies: tuple = ()
    coupling_entropies: tuple = ()
    c: tuple = ()
    d: tuple = ()
    unit: str = NATS
    differential: bool = field(default=False)

    def __post_init__(self):
        _check_unit(self.unit)
        object.__setattr__(self, "object_entropies", tuple(tuple(t) for t in self.object_entropies))
        object.__setattr__(self, "coupling_entropies", tuple(tuple(t) for t in self.coupling_entropies))
        object.__setattr__(self, "c", tuple(float(x) for x in self.c))
        object.__setattr__(self, "d", tuple(float(x) for x in self.d))
        if len(self.c) != len(self.object_entropies):
            raise EntropyError("one c coefficient is required per object entropy")
        if len(self.d) != len(self.coupling_entropies):
            raise EntropyError("one d coefficient is required per coupling entropy")
        if not self.differential:
            for _, h in self.object_entropies + self.coupling_entropies:
                if h < 0:
                    raise EntropyError("negative entropy in a discrete CIE term; set differential=True")


def _weighted(coef: float, h: float) -> float:
    # a zero coefficient removes the term, including -inf sentinels
    return 0.0 if coef == 0.0 else coef * h


def cie_total(terms: CieTerms) -> float:
    """Sum of ``c_i H(A_i)`` over objects plus ``d_ij H(B_ij)`` over couplings.

    An ``H(A_i)`` may itself be the ``cie_total`` of that object's own parts.
    """
    total = 0.0
    for coef, (_, h) in zip(terms.c, terms.object_entropies):
        total += _weighted(coef, h)
    for coef, (_, h) in zip(terms.d, terms.coupling_entropies):
        total += _weighted(coef, h)
    return total
