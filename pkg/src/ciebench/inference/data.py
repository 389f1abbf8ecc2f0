"""Turning trajectory samples into (features, target) regression pairs."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.spatial import cKDTree

from ..world import EPS_V, StateSample, Trajectory


class ZeroVelocitySample(ValueError):
    """The sample's heading is undefined, so it cannot be featurised."""


def featurize(sample: StateSample, a_mag_hat: float):
    """Features ``(1, v_x/|v|, v_y/|v|)`` and target ``acc / a_mag_hat`` for one sample.

    Every law in the ball world is exactly affine in these features.
    """
    vx, vy = sample.vel
    speed = float(np.hypot(vx, vy))
    if speed <= EPS_V:
        raise ZeroVelocitySample(f"sample t={sample.t} has |v| <= {EPS_V}")
    feats = np.array([1.0, vx / speed, vy / speed])
    target = np.asarray(sample.acc, dtype=float) / a_mag_hat
    return feats, target


@dataclass(frozen=True)
class Dataset:
    """Regression view of a trajectory.

    ``X`` and ``Y`` hold only the usable samples; ``index`` maps each usable
    row back to its position in the original sample order.
    """

    t: np.ndarray
    pos: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    index: np.ndarray
    n_total: int
    a_mag_hat: float
    region_true: np.ndarray | None = None
    ordered: bool = True

    @property
    def m(self) -> int:
        return int(self.X.shape[0])

    @property
    def excluded(self) -> np.ndarray:
        mask = np.ones(self.n_total, dtype=bool)
        mask[self.index] = False
        return np.flatnonzero(mask)

    @cached_property
    def tree(self) -> cKDTree:
        return cKDTree(self.pos)

    @cached_property
    def _neighbour_cache(self) -> dict:
        return {}

    def spatial_neighbours(self, k: int) -> np.ndarray:
        """Indices of the ``k`` nearest usable rows (by position) of every row."""
        k = max(1, min(k, self.m))
        if k not in self._neighbour_cache:
            _, nb = self.tree.query(self.pos, k=k)
            self._neighbour_cache[k] = np.asarray(nb).reshape(self.m, k)
        return self._neighbour_cache[k]

    def nearest(self, point, k: int) -> np.ndarray:
        k = max(1, min(k, self.m))
        _, nb = self.tree.query(point, k=k)
        return np.atleast_1d(nb)

    def subset(self, rows) -> Dataset:
        """Dataset restricted to usable rows ``rows`` (positions into ``X``)."""
        rows = np.asarray(rows)
        return Dataset(
            t=self.t[rows],
            pos=self.pos[rows],
            X=self.X[rows],
            Y=self.Y[rows],
            index=np.arange(rows.size),
            n_total=int(rows.size),
            a_mag_hat=self.a_mag_hat,
            region_true=None if self.region_true is None else self.region_true[rows],
            ordered=self.ordered,
        )


def dataset_from_arrays(t, pos, vel, acc, region_true=None) -> Dataset:
    t = np.asarray(t, dtype=np.int64)
    pos = np.asarray(pos, dtype=float)
    vel = np.asarray(vel, dtype=float)
    acc = np.asarray(acc, dtype=float)
    if t.size == 0:
        raise ValueError("dataset is empty")
    speed = np.hypot(vel[:, 0], vel[:, 1])
    ok = speed > EPS_V
    if not np.any(ok):
        raise ValueError("no sample has a usable velocity")
    a_mag_hat = float(np.mean(np.hypot(acc[:, 0], acc[:, 1])))
    if not a_mag_hat > 0:
        raise ValueError("mean acceleration magnitude is zero")
    idx = np.flatnonzero(ok)
    X = np.column_stack([np.ones(idx.size), vel[idx] / speed[idx, None]])
    Y = acc[idx] / a_mag_hat
    ordered = bool(np.all(np.diff(t) > 0))
    if not ordered:
        warnings.warn("samples are not in time order; the affordance graph will be empty", stacklevel=2)
    reg = None if region_true is None else np.asarray(region_true, dtype=np.int64)[idx]
    return Dataset(t[idx], pos[idx], X, Y, idx, int(t.size), a_mag_hat, reg, ordered)


def dataset_from_trajectory(traj: Trajectory) -> Dataset:
    return dataset_from_arrays(traj.t, traj.pos, traj.vel, traj.acc, traj.region_true)
