"""Scoring a learned model against simulator ground truth."""

from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment

from .data import Dataset
from .models import SystemModel


def matched_labels(model: SystemModel, data: Dataset) -> dict[int, int]:
    """Object-to-region relabelling that maximises agreement (Hungarian matching)."""
    if data.region_true is None:
        raise ValueError("dataset carries no ground-truth regions")
    assign = model.assignment[data.index]
    regions = np.unique(data.region_true)
    table = np.zeros((model.k, regions.size), dtype=np.int64)
    np.add.at(table, (assign, np.searchsorted(regions, data.region_true)), 1)
    rows, cols = linear_sum_assignment(-table)
    return {int(r): int(regions[c]) for r, c in zip(rows, cols)}


def region_agreement(model: SystemModel, data: Dataset) -> float:
    """Fraction of usable samples whose object maps to their true region."""
    mapping = matched_labels(model, data)
    assign = model.assignment[data.index]
    predicted = np.array([mapping.get(int(a), -1) for a in range(model.k)])[assign]
    return float(np.mean(predicted == data.region_true))


def direction_cosine(model: SystemModel, data: Dataset) -> float:
    """Mean cosine between each sample's predicted and observed acceleration."""
    assign = model.assignment[data.index]
    pred = np.empty_like(data.Y)
    for j, obj in enumerate(model.objects):
        rows = assign == j
        pred[rows] = obj.predict(data.X[rows])
    num = np.einsum("ij,ij->i", pred, data.Y)
    den = np.linalg.norm(pred, axis=1) * np.linalg.norm(data.Y, axis=1)
    return float(np.mean(num / np.maximum(den, np.finfo(float).tiny)))


def is_one_hot(model: SystemModel, data: Dataset) -> bool:
    """Exactly one active object at every usable sample."""
    act = model.activation()[data.index]
    return bool(np.all(act.sum(axis=1) == 1))


def recovery_summary(model: SystemModel, data: Dataset) -> dict:
    return {
        "k": model.k,
        "agreement": region_agreement(model, data),
        "mean_cosine": direction_cosine(model, data),
        "one_hot": is_one_hot(model, data),
        "object_to_region": matched_labels(model, data),
    }
