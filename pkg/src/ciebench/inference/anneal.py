"""Hard-EM annealing of sample-to-object assignments.

Each iteration reassigns every sample to the object whose law fits it best
(optionally accepting worse fits with Metropolis probability at a cooling
temperature) and then refits every object on its new points.
"""

from __future__ import annotations

import math

import numpy as np

from .cie import STAY, BellmanStep, bellman_update, cie_from_parts, transition_counts
from .data import Dataset
from .models import InferenceConfig, SystemModel, fit_object

REL_TOL = 1e-9


def residual_matrix(objects, X, Y) -> np.ndarray:
    """Squared residual norm of every row under every object, shape (m, k)."""
    W = np.stack([o.weights for o in objects])  # (k, 2, 3)
    pred = np.einsum("ij,krj->ikr", X, W)
    diff = Y[:, None, :] - pred
    return np.einsum("ikr,ikr->ik", diff, diff)


def _compact(assign: np.ndarray, k: int):
    """Drop empty labels; returns (new assign, kept old labels)."""
    counts = np.bincount(assign, minlength=k)
    keep = np.flatnonzero(counts > 0)
    remap = np.full(k, -1, dtype=np.int64)
    remap[keep] = np.arange(keep.size)
    return remap[assign], keep


class Annealer:
    """Runs the reassign/refit loop over one regression problem.

    ``X, Y`` are the usable rows and ``t`` their time indices (used only for
    the affordance part of the CIE bookkeeping).
    """

    def __init__(self, X, Y, t, cfg: InferenceConfig, rng: np.random.Generator | None = None, ordered=True):
        self.X = X
        self.Y = Y
        self.t = t
        self.cfg = cfg
        self.rng = rng if rng is not None else np.random.default_rng(cfg.seed)
        self.ordered = ordered

    # -- building blocks -------------------------------------------------
    def fit_all(self, assign: np.ndarray, k: int, previous=None):
        """Fit each label's points; labels with too few points keep ``previous`` weights."""
        assign, keep = _compact(assign, k)
        objects = []
        for new, old in enumerate(keep):
            rows = assign == new
            n = int(rows.sum())
            prev = None if previous is None else previous[old]
            if n < self.cfg.min_fit_size and prev is not None:
                objects.append(prev.restated(self.X[rows], self.Y[rows]))
            else:
                objects.append(fit_object(self.X[rows], self.Y[rows], self.cfg.ridge_lambda))
        return objects, assign

    def best_assign(self, objects, temperature: float = 0.0) -> np.ndarray:
        R = residual_matrix(objects, self.X, self.Y)
        best = np.argmin(R, axis=1)
        if temperature > 0 and len(objects) > 1:
            m = best.size
            prop = self.rng.integers(len(objects), size=m)
            delta = R[np.arange(m), prop] - R[np.arange(m), best]
            accept = self.rng.random(m) < np.exp(-delta / temperature)
            best = np.where(accept, prop, best)
        return best

    def resolved_cie(self, objects, assign) -> float:
        rep = cie_from_parts(self.X, self.Y, self.t, assign, objects, self.ordered, sigma_floor=self.cfg.sigma_floor)
        return rep.resolved_total

    def _sse(self, objects) -> float:
        return float(sum(o.sse for o in objects))

    def _converged(self, prev: float, cur: float) -> bool:
        scale = max(prev, self.cfg.loss_floor * self.X.shape[0])
        return abs(prev - cur) <= REL_TOL * scale

    # -- main loop ---------------------------------------------------------
    def run(self, assign: np.ndarray, k: int, driver: str | None = None):
        """Anneal from ``assign`` (labels ``0..k-1``).

        Returns ``(objects, assign, trace, bellman)`` where ``trace`` lists one
        dict per iteration or event and ``bellman`` the recorded value steps.
        """
        driver = driver or self.cfg.driver
        cfg = self.cfg
        assign = np.asarray(assign, dtype=np.int64).copy()
        objects, assign = self.fit_all(assign, k)
        trace = [{"iter": 0, "k": len(objects), "sse": self._sse(objects), "changed": int(assign.size)}]
        c0 = self.resolved_cie(objects, assign)
        bellman = [BellmanStep(0, c0, c0, "init")]
        it = 0
        while it < cfg.max_anneal_iters:
            it_before = it
            while it < cfg.max_anneal_iters:
                it += 1
                temp = cfg.temperature0 * cfg.cooling_alpha ** (it - 1)
                if driver == "bellman":
                    step = self._bellman_step(objects, assign, bellman, temp, it)
                    if step is None:
                        trace.append({"iter": it, "k": len(objects), "sse": self._sse(objects), "changed": 0, "move": STAY})
                        break
                    objects, assign, changed, move = step
                else:
                    new = self.best_assign(objects, temp)
                    changed = int(np.count_nonzero(new != assign))
                    if changed == 0:
                        trace.append({"iter": it, "k": len(objects), "sse": self._sse(objects), "changed": 0})
                        break
                    prev_objects = objects
                    objects, assign = self.fit_all(new, len(objects), previous=prev_objects)
                    move = "reassign_all"
                    c_new = self.resolved_cie(objects, assign)
                    last = bellman[-1]
                    bellman.append(
                        BellmanStep(it, (c_new - last.state_cie) + cfg.gamma * last.value, c_new, move)
                    )
                prev_sse = trace[-1]["sse"]
                sse = self._sse(objects)
                trace.append({"iter": it, "k": len(objects), "sse": sse, "changed": changed, "move": move})
                if temp == 0 and self._converged(prev_sse, sse):
                    break
            small = [j for j, o in enumerate(objects) if o.n_points < cfg.min_fit_size]
            if not small or len(objects) == 1:
                break
            objects, assign = self._drop(objects, small)
            trace.append({"event": "drop_small", "dropped": small, "k": len(objects), "sse": self._sse(objects)})
            if it == it_before:
                break
        return objects, assign, trace, bellman

    def _drop(self, objects, labels):
        survivors = [o for j, o in enumerate(objects) if j not in labels]
        assign = self.best_assign(survivors)
        return self.fit_all(assign, len(survivors), previous=survivors)

    def _bellman_step(self, objects, assign, bellman, temp, it):
        best = self.best_assign(objects, temp)
        candidates = {}
        if np.any(best != assign):
            candidates["reassign_all"] = best
        for j in range(len(objects)):
            moved = (best == j) & (assign != j)
            if np.any(moved) and np.any(moved != (best != assign)):
                candidates[f"absorb_{j}"] = np.where(moved, j, assign)
        if not candidates:
            return None
        fitted = {}
        scored = []
        for name, cand in candidates.items():
            objs, a = self.fit_all(cand, len(objects), previous=objects)
            fitted[name] = (objs, a, int(np.count_nonzero(cand != assign)))
            scored.append((name, self.resolved_cie(objs, a)))
        move, value, c_after = bellman_update(bellman, scored, self.cfg.gamma)
        if move == STAY:
            return None
        bellman.append(BellmanStep(it, value, c_after, move))
        objs, a, changed = fitted[move]
        return objs, a, changed, move


def system_from_parts(data: Dataset, objects, assign, trace=(), ledger=()) -> SystemModel:
    full = np.full(data.n_total, -1, dtype=np.int64)
    full[data.index] = assign
    k = len(objects)
    counts = transition_counts(data.t, assign, k, data.ordered)
    sse = float(sum(o.sse for o in objects))
    return SystemModel(
        objects=tuple(objects),
        assignment=full,
        transition_counts=counts,
        a_mag_hat=data.a_mag_hat,
        loss=sse / max(data.m, 1),
        trace=tuple(trace),
        ledger=tuple(ledger),
    )


def anneal_split(
    data: Dataset,
    k_models: int,
    cfg: InferenceConfig | None = None,
    init: np.ndarray | None = None,
    rng: np.random.Generator | None = None,
    driver: str | None = None,
) -> SystemModel:
    """Split ``data`` among ``k_models`` objects by annealed best-fit reassignment.

    Without ``init`` the first assignment is uniformly random (all zeros for
    ``k_models == 1``). ``init`` may cover either the usable rows or every
    original sample.
    """
    cfg = cfg or InferenceConfig()
    if k_models < 1:
        raise ValueError("k_models must be >= 1")
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    if init is None:
        assign = np.zeros(data.m, dtype=np.int64) if k_models == 1 else rng.integers(k_models, size=data.m)
    else:
        init = np.asarray(init, dtype=np.int64)
        assign = init[data.index] if init.size == data.n_total and init.size != data.m else init
    ann = Annealer(data.X, data.Y, data.t, cfg, rng, data.ordered)
    objects, assign, trace, bellman = ann.run(assign, k_models, driver)
    dropped = k_models - len(objects)
    record = {"stage": "anneal", "k_requested": k_models, "k": len(objects), "dropped": dropped,
              "iterations": trace, "bellman": tuple(bellman)}
    return system_from_parts(data, objects, assign, trace=(record,))


def per_sample_residuals(model: SystemModel, data: Dataset) -> np.ndarray:
    assign = model.assignment[data.index]
    R = residual_matrix(model.objects, data.X, data.Y)
    return R[np.arange(data.m), assign]


def _seed_count(data: Dataset, cfg: InferenceConfig) -> int:
    return min(data.m, max(cfg.min_fit_size, int(math.ceil(cfg.seed_fraction * data.m))))


def seed_hypotheses(model: SystemModel, data: Dataset, cfg: InferenceConfig | None = None) -> list:
    """Candidate seed sets (usable-row indices) for a new object, best guess first.

    In ``"spatial"`` mode the per-sample residual is averaged over each
    sample's map neighbourhood; the worst neighbourhood anchors the first seed,
    which is the ``seed_fraction`` of samples nearest that anchor. Further
    hypotheses repeat this away from earlier seeds. The plain worst-residual
    percentile is always appended as a last hypothesis.
    """
    cfg = cfg or InferenceConfig()
    res = per_sample_residuals(model, data)
    n_seed = _seed_count(data, cfg)
    by_residual = np.argsort(-res, kind="stable")[:n_seed]
    if cfg.seed_mode == "residual":
        return [by_residual]
    nb = data.spatial_neighbours(max(cfg.min_fit_size, int(cfg.smoothing_fraction * data.m)))
    smoothed = res[nb].mean(axis=1)
    free = np.ones(data.m, dtype=bool)
    seeds = []
    for _ in range(cfg.n_seed_hypotheses):
        if not free.any():
            break
        cand = np.flatnonzero(free)
        anchor = cand[np.argmax(smoothed[cand])]
        seed = data.nearest(data.pos[anchor], n_seed)
        free[seed] = False
        seeds.append(seed)
    seeds.append(by_residual)
    return seeds


def seeded_model(model: SystemModel, data: Dataset, seed_rows, cfg: InferenceConfig) -> SystemModel:
    assign = model.assignment[data.index].copy()
    assign[np.asarray(seed_rows)] = model.k
    ann = Annealer(data.X, data.Y, data.t, cfg, ordered=data.ordered)
    objects, assign = ann.fit_all(assign, model.k + 1, previous=list(model.objects) + [None])
    record = {"stage": "seed", "n_seed": int(np.size(seed_rows)), "k": len(objects)}
    return system_from_parts(data, objects, assign, trace=model.trace + (record,))


def seed_new_object(model: SystemModel, data: Dataset, cfg: InferenceConfig | None = None) -> SystemModel:
    """Hand the samples in the region of maximum error to a new object.

    Uses the first of :func:`seed_hypotheses`. The returned model has ``k + 1``
    labels, all refitted on the new assignment; annealing is left to the caller.
    """
    cfg = cfg or InferenceConfig()
    return seeded_model(model, data, seed_hypotheses(model, data, cfg)[0], cfg)
