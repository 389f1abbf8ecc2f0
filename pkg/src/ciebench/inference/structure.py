"""Growing, verifying, unifying and recursing over hidden-object models."""

from __future__ import annotations

import logging
from dataclasses import replace

import numpy as np

from .anneal import anneal_split, residual_matrix, seed_hypotheses, seeded_model
from .cie import CieReport, cie_of_model
from .data import Dataset
from .models import InferenceConfig, SystemModel, fit_object

log = logging.getLogger(__name__)

KEY_TOL = 1e-12
CIE_TOL = 1e-9


def relative_gain(loss_simple: float, loss_rich: float, cfg: InferenceConfig) -> float:
    """Fractional loss reduction of the richer model over the simpler one.

    Losses at or below ``cfg.loss_floor`` count as fully explained, so numerical
    noise on an exact fit never looks like progress.
    """
    return (loss_simple - loss_rich) / max(loss_simple, cfg.loss_floor)


def cie_improves(old: CieReport, new: CieReport) -> bool:
    """True if ``new`` has strictly lower CIE than ``old``.

    Exactly fitted objects carry the -inf entropy sentinel, so totals are
    compared by the share of data explained exactly first and by the finite
    remainder second.
    """
    (fo, co), (fn, cn) = old.sort_key(), new.sort_key()
    if fn < fo - KEY_TOL:
        return True
    if fn > fo + KEY_TOL:
        return False
    return cn < co - CIE_TOL


def _accept_growth(data, current: SystemModel, proposal: SystemModel, cfg: InferenceConfig):
    gain = relative_gain(current.loss, proposal.loss, cfg)
    scores = {"loss_before": current.loss, "loss_after": proposal.loss, "relative_gain": gain}
    if proposal.k > cfg.max_objects:
        return False, scores
    if cfg.criterion == "cie":
        old = cie_of_model(current, data, sigma_floor=cfg.sigma_floor)
        new = cie_of_model(proposal, data, sigma_floor=cfg.sigma_floor)
        scores.update({"cie_key_before": list(old.sort_key()), "cie_key_after": list(new.sort_key())})
        return cie_improves(old, new), scores
    return gain >= cfg.min_improvement, scores


def propose(data: Dataset, current: SystemModel, cfg: InferenceConfig, rng) -> SystemModel:
    """Candidate with one more object.

    Every seed hypothesis is annealed and the lowest-loss result wins (first
    on ties). From a single object a random two-way split is tried first.
    """
    best = anneal_split(data, 2, cfg, rng=rng) if current.k == 1 else None
    for seed in seed_hypotheses(current, data, cfg):
        seeded = seeded_model(current, data, seed, cfg)
        cand = anneal_split(data, seeded.k, cfg, init=seeded.assignment, rng=rng)
        if best is None or cand.loss < best.loss:
            best = cand
    return best


def grow_from(data: Dataset, model: SystemModel, cfg: InferenceConfig, rng, ledger: list, tag: str = "grow"):
    current = model
    while current.k < cfg.max_objects:
        proposal = propose(data, current, cfg, rng)
        ok, scores = _accept_growth(data, current, proposal, cfg)
        ledger.append({"stage": tag, "k_from": current.k, "k_proposed": current.k + 1,
                       "k_obtained": proposal.k, "accepted": ok, **scores})
        log.debug("%s: %d -> %d objects, gain %.4g, accepted=%s", tag, current.k, proposal.k,
                  scores["relative_gain"], ok)
        if not ok:
            break
        current = _with_history(proposal, current.trace + proposal.trace)
    return current


def _with_history(model: SystemModel, trace, ledger=None) -> SystemModel:
    return replace(model, trace=tuple(trace), ledger=model.ledger if ledger is None else tuple(ledger))


def grow(data: Dataset, cfg: InferenceConfig | None = None, rng=None) -> SystemModel:
    """Add objects one at a time until the model stops improving.

    Starts from a single-object baseline; each proposal adds one object and
    re-anneals, and is kept only if it passes the acceptance test. The
    returned model's ``ledger`` lists every proposal with its scores.
    """
    cfg = cfg or InferenceConfig()
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    ledger: list = []
    baseline = anneal_split(data, 1, cfg, rng=rng)
    ledger.append({"stage": "baseline", "k": 1, "loss": baseline.loss})
    model = grow_from(data, baseline, cfg, rng, ledger)
    return _with_history(model, model.trace, ledger)


def _model_from_assign(data: Dataset, assign, k, cfg, rng) -> SystemModel:
    """Re-anneal from usable-row labels ``assign``."""
    return anneal_split(data, k, cfg, init=assign, rng=rng)


def without_object(data: Dataset, model: SystemModel, j: int, cfg: InferenceConfig, rng) -> SystemModel:
    """Delete object ``j``, hand its points to the best remaining law, re-anneal."""
    others = [o for i, o in enumerate(model.objects) if i != j]
    R = residual_matrix(others, data.X, data.Y)
    assign = np.argmin(R, axis=1)
    return _model_from_assign(data, assign, len(others), cfg, rng)


def pareto_check(data: Dataset, model: SystemModel, cfg: InferenceConfig, rng, ledger: list) -> SystemModel:
    """Remove objects whose deletion costs less than ``min_improvement`` of the loss."""
    changed = True
    while changed and model.k > 1:
        changed = False
        for j in range(model.k):
            reduced = without_object(data, model, j, cfg, rng)
            worsening = relative_gain(reduced.loss, model.loss, cfg)
            keep = worsening >= cfg.min_improvement
            ledger.append({"stage": "pareto", "k": model.k, "object": j, "loss_without": reduced.loss,
                           "loss_with": model.loss, "relative_worsening": worsening, "kept": keep})
            if not keep:
                model = _with_history(reduced, model.trace + reduced.trace)
                changed = True
                break
    return model


def try_unify(data: Dataset, model: SystemModel, cfg: InferenceConfig | None = None, rng=None,
              ledger: list | None = None) -> SystemModel:
    """Merge object pairs that one shared law explains almost as well.

    For each pair a single law is fitted to the union of their points; the
    cheapest pair whose relative loss increase is within ``unify_tolerance``
    is merged and the model re-annealed. Repeats until no pair qualifies.
    """
    cfg = cfg or InferenceConfig()
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    ledger = ledger if ledger is not None else []
    while model.k >= 2:
        assign = model.assignment[data.index]
        best = None
        for i in range(model.k):
            for j in range(i + 1, model.k):
                rows = (assign == i) | (assign == j)
                union = fit_object(data.X[rows], data.Y[rows], cfg.ridge_lambda)
                sse = model.sse - model.objects[i].sse - model.objects[j].sse + union.sse
                loss = sse / data.m
                increase = (loss - model.loss) / max(model.loss, cfg.loss_floor)
                ledger.append({"stage": "unify", "pair": [i, j], "loss_merged": loss,
                               "loss": model.loss, "relative_increase": increase,
                               "merged": bool(increase <= cfg.unify_tolerance)})
                if increase <= cfg.unify_tolerance and (best is None or increase < best[0]):
                    best = (increase, i, j)
        if best is None:
            break
        _, i, j = best
        merged = np.where(assign == j, i, assign)
        merged = np.where(merged > j, merged - 1, merged)
        new = _model_from_assign(data, merged, model.k - 1, cfg, rng)
        model = _with_history(new, model.trace + new.trace)
    return model


def recurse(data: Dataset, model: SystemModel, cfg: InferenceConfig, rng, ledger: list) -> SystemModel:
    """Treat each object's points as a system of its own and try to split it."""
    if cfg.recursion_depth < 1:
        return model
    inner_cfg = replace(cfg, recursion_depth=cfg.recursion_depth - 1)
    assign = model.assignment[data.index]
    for j in range(model.k):
        rows = np.flatnonzero(assign == j)
        if rows.size < 2 * cfg.min_fit_size:
            continue
        sub = data.subset(rows)
        sub_ledger: list = []
        inner = grow_from(sub, anneal_split(sub, 1, inner_cfg, rng=rng), inner_cfg, rng, sub_ledger, tag="recurse")
        ledger.append({"stage": "recurse", "object": j, "sub_objects": inner.k, "proposals": sub_ledger})
        if inner.k <= 1:
            continue
        new_assign = assign.copy()
        sub_assign = inner.assignment[sub.index]
        offset = model.k
        new_assign[rows] = np.where(sub_assign == 0, j, sub_assign - 1 + offset)
        candidate = _model_from_assign(data, new_assign, model.k + inner.k - 1, cfg, rng)
        gain = relative_gain(model.loss, candidate.loss, cfg)
        ok = candidate.k > model.k and gain >= cfg.min_improvement
        ledger.append({"stage": "recurse_merge", "object": j, "k_after": candidate.k,
                       "relative_gain": gain, "accepted": ok})
        if ok:
            return _with_history(candidate, model.trace + candidate.trace)
    return model


def structure_learning_loop(data: Dataset, cfg: InferenceConfig | None = None, c=None, d=None):
    """Full discovery loop: grow, verify, record, unify, recurse, build the graph.

    Returns ``(model, report)``. ``model.ledger`` keeps every candidate that
    was scored along the way, accepted or not.
    """
    cfg = cfg or InferenceConfig()
    rng = np.random.default_rng(cfg.seed)
    ledger: list = []
    model = grow(data, cfg, rng)
    ledger.extend(model.ledger)
    for p in range(cfg.max_passes):
        before = _signature(model)
        if p > 0:
            model = grow_from(data, model, cfg, rng, ledger)
        model = pareto_check(data, model, cfg, rng, ledger)
        ledger.append({"stage": "accepted", "pass": p, "k": model.k, "loss": model.loss,
                       "objects": [o.to_json() for o in model.objects]})
        model = try_unify(data, model, cfg, rng, ledger)
        model = recurse(data, model, cfg, rng, ledger)
        pruned = [[i, j] for i in range(model.k) for j in range(model.k) if model.transition_counts[i, j] == 0]
        ledger.append({"stage": "graph", "pass": p, "k": model.k, "pruned_edges": pruned})
        if _signature(model) == before:
            break
    model = _with_history(model, model.trace, ledger)
    report = cie_of_model(model, data, c=c, d=d, sigma_floor=cfg.sigma_floor)
    return model, report


def _signature(model: SystemModel):
    return (model.k, model.assignment.tobytes())


def affordance_graph(model: SystemModel) -> dict:
    """Observed hand-off edges ``{(i, j): count}``; zero-count edges are pruned."""
    k = model.k
    return {(i, j): int(model.transition_counts[i, j]) for i in range(k) for j in range(k)
            if model.transition_counts[i, j] > 0}
