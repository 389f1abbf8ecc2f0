"""CIE bookkeeping for fitted system models.

Object entropies are Gaussian differential entropies of each object's
residuals (nats); affordance entropies come from the empirical distribution
of object-to-object hand-offs between consecutive samples (bits).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from ..entropy import (
    BITS,
    LN2,
    NATS,
    CieTerms,
    cie_total,
    differential_entropy_gaussian_fit,
    gaussian_entropy_from_sigma,
)

STAY = "stay"


def transition_counts(t: np.ndarray, assign: np.ndarray, k: int, ordered: bool = True) -> np.ndarray:
    """Count hand-offs ``i -> j`` between samples whose time indices differ by one."""
    counts = np.zeros((k, k), dtype=np.int64)
    if not ordered or assign.size < 2:
        return counts
    step = np.diff(t) == 1
    np.add.at(counts, (assign[:-1][step], assign[1:][step]), 1)
    return counts


def affordance_entropies(counts: np.ndarray) -> list[tuple[tuple[int, int], float]]:
    """Entropy (bits) carried by each observed object pair ``i < j``.

    The transition counts are normalised over all entries; a pair contributes
    ``-P_ij log2 P_ij - P_ji log2 P_ji``. Pairs never observed are pruned.
    """
    total = counts.sum()
    out = []
    if total == 0:
        return out
    P = counts / total
    k = counts.shape[0]
    for i in range(k):
        for j in range(i + 1, k):
            if counts[i, j] == 0 and counts[j, i] == 0:
                continue
            h = 0.0
            for p in (P[i, j], P[j, i]):
                if p > 0:
                    h -= p * math.log2(p)
            out.append(((i, j), h))
    return out


@dataclass(frozen=True)
class BellmanStep:
    iteration: int
    value: float  # C_i, the accumulated Bellman value
    state_cie: float  # C(s) of the model after the move
    move: str

    def to_json(self) -> dict:
        return {"iteration": self.iteration, "C": self.value, "state_cie": self.state_cie, "move": self.move}


def bellman_update(trace, candidate_moves, gamma: float):
    """One application of the CIE value update over candidate boundary moves.

    ``trace`` is the list of :class:`BellmanStep` so far (its last entry gives
    ``C_i`` and the current state's CIE). ``candidate_moves`` is a sequence of
    ``(description, cie_after_move)``. Each move costs ``R = C(s_a) - C(s)``
    and is valued ``R + gamma * C_i``; staying put costs nothing. Returns
    ``(chosen_move, C_next, cie_after_chosen)``; ties go to staying.
    """
    last = trace[-1]
    base = gamma * last.value
    best_move, best_val, best_cie = STAY, base, last.state_cie
    for move, c_after in candidate_moves:
        val = (c_after - last.state_cie) + base
        if val < best_val:
            best_move, best_val, best_cie = move, val, c_after
    return best_move, best_val, best_cie


@dataclass(frozen=True)
class CieReport:
    per_object_H: tuple  # nats; -inf marks a degenerate (exactly fitted) object
    degenerate: tuple
    n_points: tuple
    affordance_pairs: tuple
    affordance_H: tuple  # bits
    c: tuple
    d: tuple
    total: float  # nats
    resolved_total: float  # nats, residual std floored at sigma_floor
    resolved_object_H: tuple
    bellman_trace: tuple = ()

    @property
    def exact_fraction(self) -> float:
        n = sum(self.n_points)
        if n == 0:
            return 0.0
        return sum(np_ for np_, deg, c in zip(self.n_points, self.degenerate, self.c) if deg and c != 0) / n

    @property
    def finite_part(self) -> float:
        """CIE with degenerate objects left out; all other terms in nats."""
        total = sum(c * h for c, h, deg in zip(self.c, self.per_object_H, self.degenerate) if not deg and c != 0)
        total += sum(d * h * LN2 for d, h in zip(self.d, self.affordance_H) if d != 0)
        return total

    def sort_key(self) -> tuple:
        """Order models by (more data explained exactly, then lower finite CIE)."""
        return (-self.exact_fraction, self.finite_part)

    def terms(self) -> CieTerms:
        return CieTerms(
            object_entropies=[(i, h) for i, h in enumerate(self.per_object_H)],
            coupling_entropies=[(p, h * LN2) for p, h in zip(self.affordance_pairs, self.affordance_H)],
            c=self.c,
            d=self.d,
            unit=NATS,
            differential=True,
        )

    def to_json(self) -> dict:
        def num(x):
            return None if math.isinf(x) else x

        return {
            "unit_objects": NATS,
            "unit_affordances": BITS,
            "unit_total": NATS,
            "objects": [
                {"id": i, "H": num(h), "degenerate": deg, "resolved_H": r, "n_points": n, "c": c}
                for i, (h, deg, r, n, c) in enumerate(
                    zip(self.per_object_H, self.degenerate, self.resolved_object_H, self.n_points, self.c)
                )
            ],
            "affordances": [
                {"pair": list(p), "H": h, "d": d} for p, h, d in zip(self.affordance_pairs, self.affordance_H, self.d)
            ],
            "total": num(self.total),
            "total_is_degenerate": math.isinf(self.total),
            "resolved_total": self.resolved_total,
            "bellman_trace": [s.to_json() for s in self.bellman_trace],
        }


def cie_from_parts(X, Y, t, assign, objects, ordered=True, c=None, d=None, sigma_floor=1e-9, bellman_trace=()):
    """CIE report for objects ``objects`` explaining rows ``X, Y`` under ``assign``."""
    k = len(objects)
    per, deg, res, npts = [], [], [], []
    for j, obj in enumerate(objects):
        rows = assign == j
        n = int(rows.sum())
        npts.append(n)
        if n < 2:
            per.append(-math.inf)
            deg.append(True)
            res.append(gaussian_entropy_from_sigma([sigma_floor, sigma_floor]))
            continue
        r = Y[rows] - obj.predict(X[rows])
        h = differential_entropy_gaussian_fit(r, min_sigma=sigma_floor)
        per.append(h)
        deg.append(math.isinf(h))
        sigma = np.maximum(r.std(axis=0, ddof=1), sigma_floor)
        res.append(gaussian_entropy_from_sigma(sigma))
    counts = transition_counts(t, assign, k, ordered)
    aff = affordance_entropies(counts)
    pairs = tuple(p for p, _ in aff)
    aff_h = tuple(h for _, h in aff)
    c = tuple(1.0 for _ in range(k)) if c is None else tuple(float(x) for x in c)
    if d is None:
        d = tuple(1.0 for _ in pairs)
    elif isinstance(d, dict):
        d = tuple(float(d.get(p, 1.0)) for p in pairs)
    else:
        d = tuple(float(x) for x in d)
    if len(c) != k:
        raise ValueError(f"need {k} object coefficients, got {len(c)}")
    if len(d) != len(pairs):
        raise ValueError(f"need {len(pairs)} affordance coefficients, got {len(d)}")
    report = CieReport(
        per_object_H=tuple(per),
        degenerate=tuple(deg),
        n_points=tuple(npts),
        affordance_pairs=pairs,
        affordance_H=aff_h,
        c=c,
        d=d,
        total=0.0,
        resolved_total=0.0,
        resolved_object_H=tuple(res),
        bellman_trace=tuple(bellman_trace),
    )
    total = cie_total(report.terms())
    resolved = cie_total(
        CieTerms(
            object_entropies=[(i, h) for i, h in enumerate(res)],
            coupling_entropies=[(p, h * LN2) for p, h in zip(pairs, aff_h)],
            c=c,
            d=d,
            unit=NATS,
            differential=True,
        )
    )
    return replace(report, total=total, resolved_total=resolved)


def cie_of_model(model, data, c=None, d=None, sigma_floor: float = 1e-9) -> CieReport:
    """CIE report of a fitted :class:`SystemModel` over the dataset it was fitted to.

    ``c`` gives one coefficient per object and ``d`` one per observed pair (or
    a ``{(i, j): d}`` mapping); both default to 1.
    """
    assign = model.assignment[data.index]
    trace = ()
    for entry in model.trace:
        if entry.get("bellman"):
            trace = entry["bellman"]
    return cie_from_parts(
        data.X, data.Y, data.t, assign, model.objects, data.ordered, c, d, sigma_floor, bellman_trace=trace
    )
