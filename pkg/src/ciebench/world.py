"""Seeded ball-world simulator with four hidden motion laws.

The map is the square ``[0, map_size]^2``. A central disk (region 1) turns the
velocity clockwise at constant acceleration magnitude; three 120-degree outer
sectors each push the ball back toward the middle along a fixed direction.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from collections.abc import Iterator
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from .jsonio import atomic_write

EPS_V = 1e-8
SQRT3_2 = math.sqrt(3.0) / 2.0
# fixed unit directions for the outer sectors
SECTOR_DIRECTIONS = {
    2: (0.0, 1.0),
    3: (SQRT3_2, -0.5),
    4: (-SQRT3_2, -0.5),
}
CSV_COLUMNS = ("t", "x", "y", "vx", "vy", "ax", "ay", "region_true")
MASK64 = (1 << 64) - 1


class WorldConfigError(ValueError):
    pass


class TrajectoryFormatError(ValueError):
    pass


class SplitMix64:
    """Counter-based 64-bit generator; identical streams on every platform."""

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def next_float(self) -> float:
        """Uniform double in [0, 1) from the top 53 bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))


@dataclass(frozen=True)
class WorldConfig:
    map_size: float = 1.0
    center: tuple | None = None
    r_center: float = 0.25
    a_mag: float = 1.0
    dt: float = 0.01
    n_steps: int = 20_000
    v0_mag: float = 0.01
    seed: int = 42

    def __post_init__(self):
        if self.center is None:
            object.__setattr__(self, "center", (self.map_size / 2.0, self.map_size / 2.0))
        else:
            c = tuple(float(x) for x in self.center)
            if len(c) != 2:
                raise WorldConfigError("center must be a 2-vector")
            object.__setattr__(self, "center", c)
        if not self.map_size > 0:
            raise WorldConfigError("map_size must be positive")
        if not self.a_mag > 0:
            raise WorldConfigError("a_mag must be positive")
        if not self.dt > 0:
            raise WorldConfigError("dt must be positive")
        if not 0 < self.r_center < self.map_size / 2.0:
            raise WorldConfigError("r_center must lie in (0, map_size/2)")
        if int(self.n_steps) != self.n_steps or self.n_steps < 0:
            raise WorldConfigError("n_steps must be a non-negative integer")
        if self.v0_mag < 0:
            raise WorldConfigError("v0_mag must be non-negative")
        if int(self.seed) != self.seed or self.seed < 0 or self.seed > MASK64:
            raise WorldConfigError("seed must be an unsigned 64-bit integer")

    def to_json(self) -> dict:
        d = asdict(self)
        d["center"] = list(self.center)
        return d

    @classmethod
    def from_json(cls, doc: dict) -> WorldConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise WorldConfigError(f"unknown config field(s): {', '.join(sorted(unknown))}")
        kwargs = dict(doc)
        for name in ("n_steps", "seed"):
            if name in kwargs and not isinstance(kwargs[name], int):
                raise WorldConfigError(f"field '{name}' must be an integer")
        for name in ("map_size", "r_center", "a_mag", "dt", "v0_mag"):
            if name in kwargs and (isinstance(kwargs[name], bool) or not isinstance(kwargs[name], (int, float))):
                raise WorldConfigError(f"field '{name}' must be a number")
        return cls(**kwargs)


@dataclass(frozen=True)
class StateSample:
    t: int
    pos: tuple
    vel: tuple
    acc: tuple
    region_true: int

    @property
    def activation_true(self) -> tuple:
        return tuple(int(r == self.region_true) for r in (1, 2, 3, 4))


def region_of(pos, cfg: WorldConfig) -> int:
    dx = pos[0] - cfg.center[0]
    dy = pos[1] - cfg.center[1]
    if math.hypot(dx, dy) <= cfg.r_center:
        return 1
    theta = math.degrees(math.atan2(dy, dx)) % 360.0
    if 210.0 <= theta < 330.0:
        return 2
    if 90.0 <= theta < 210.0:
        return 3
    return 4


def acceleration(vel, region: int, a_mag: float, prev_dir=(0.0, 1.0)) -> tuple:
    """Acceleration vector for a ball moving with ``vel`` inside ``region``.

    In region 1 the direction is ``(v_y, -v_x) / |v|``; below the velocity
    guard the previous direction ``prev_dir`` is reused.
    """
    if region == 1:
        speed = math.hypot(vel[0], vel[1])
        if speed > EPS_V:
            return (a_mag * vel[1] / speed, -a_mag * vel[0] / speed)
        return (a_mag * prev_dir[0], a_mag * prev_dir[1])
    try:
        ux, uy = SECTOR_DIRECTIONS[region]
    except KeyError:
        raise ValueError(f"unknown region {region!r}") from None
    return (a_mag * ux, a_mag * uy)


@dataclass(frozen=True)
class Trajectory:
    """Columnar trajectory record; arrays have one row per sample."""

    config: WorldConfig
    t: np.ndarray
    pos: np.ndarray
    vel: np.ndarray
    acc: np.ndarray
    region_true: np.ndarray

    def __len__(self) -> int:
        return int(self.t.shape[0])

    def __iter__(self) -> Iterator[StateSample]:
        for i in range(len(self)):
            yield self.sample(i)

    def sample(self, i: int) -> StateSample:
        return StateSample(
            int(self.t[i]),
            (float(self.pos[i, 0]), float(self.pos[i, 1])),
            (float(self.vel[i, 0]), float(self.vel[i, 1])),
            (float(self.acc[i, 0]), float(self.acc[i, 1])),
            int(self.region_true[i]),
        )

    @property
    def activation_true(self) -> np.ndarray:
        return (self.region_true[:, None] == np.arange(1, 5)[None, :]).astype(np.int8)


def simulate(cfg: WorldConfig) -> Trajectory:
    """Integrate the ball with semi-implicit Euler for ``cfg.n_steps`` samples.

    Sample ``t`` records the state before step ``t``'s update together with
    the acceleration applied in that step.
    """
    rng = SplitMix64(cfg.seed)
    x = rng.next_float() * cfg.map_size
    y = rng.next_float() * cfg.map_size
    ang = 2.0 * math.pi * rng.next_float()
    vx = cfg.v0_mag * math.cos(ang)
    vy = cfg.v0_mag * math.sin(ang)

    n = cfg.n_steps
    pos = np.empty((n, 2))
    vel = np.empty((n, 2))
    acc = np.empty((n, 2))
    reg = np.empty(n, dtype=np.int64)
    prev_dir = (0.0, 1.0)
    a_mag, dt = cfg.a_mag, cfg.dt
    for i in range(n):
        r = region_of((x, y), cfg)
        ax, ay = acceleration((vx, vy), r, a_mag, prev_dir)
        prev_dir = (ax / a_mag, ay / a_mag)
        pos[i] = (x, y)
        vel[i] = (vx, vy)
        acc[i] = (ax, ay)
        reg[i] = r
        vx += ax * dt
        vy += ay * dt
        x += vx * dt
        y += vy * dt
    return Trajectory(cfg, np.arange(n, dtype=np.int64), pos, vel, acc, reg)


def _rows(traj: Trajectory):
    for i in range(len(traj)):
        yield (
            int(traj.t[i]),
            float(traj.pos[i, 0]),
            float(traj.pos[i, 1]),
            float(traj.vel[i, 0]),
            float(traj.vel[i, 1]),
            float(traj.acc[i, 0]),
            float(traj.acc[i, 1]),
            int(traj.region_true[i]),
        )


def trajectory_csv(traj: Trajectory) -> str:
    buf = io.StringIO()
    buf.write(",".join(CSV_COLUMNS) + "\n")
    for row in _rows(traj):
        # repr() round-trips doubles exactly
        buf.write(",".join(repr(v) for v in row) + "\n")
    return buf.getvalue()


def trajectory_json(traj: Trajectory) -> dict:
    return {
        "config": traj.config.to_json(),
        "columns": list(CSV_COLUMNS),
        "samples": [dict(zip(CSV_COLUMNS, row)) for row in _rows(traj)],
    }


def atomic_write_text(path, text: str) -> None:
    atomic_write(path, text)


def export_trajectory(traj: Trajectory, path, format: str = "csv") -> None:
    if format == "csv":
        atomic_write_text(path, trajectory_csv(traj))
    elif format == "json":
        atomic_write_text(path, json.dumps(trajectory_json(traj)) + "\n")
    else:
        raise ValueError(f"unknown trajectory format {format!r}")


def _from_rows(rows, cfg: WorldConfig | None) -> Trajectory:
    n = len(rows)
    arr = np.array([r[1:7] for r in rows], dtype=float).reshape(n, 6)
    t = np.array([r[0] for r in rows], dtype=np.int64)
    reg = np.array([r[7] for r in rows], dtype=np.int64)
    if cfg is None:
        cfg = WorldConfig(n_steps=n)
    return Trajectory(cfg, t, arr[:, 0:2].copy(), arr[:, 2:4].copy(), arr[:, 4:6].copy(), reg)


def _parse_row(values, where: str):
    try:
        t = int(values[0])
        floats = [float(v) for v in values[1:7]]
        reg = int(values[7])
    except (ValueError, TypeError, IndexError):
        raise TrajectoryFormatError(f"{where}: malformed row {values!r}") from None
    return (t, *floats, reg)


def read_trajectory(path) -> Trajectory:
    """Load a trajectory written by :func:`export_trajectory` (CSV or JSON)."""
    path = os.fspath(path)
    with open(path, newline="") as fh:
        text = fh.read()
    if path.endswith(".json") or text.lstrip().startswith("{"):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise TrajectoryFormatError(f"{path}: invalid JSON ({exc})") from None
        if not isinstance(doc, dict) or "samples" not in doc:
            raise TrajectoryFormatError(f"{path}: JSON trajectory needs a 'samples' list")
        rows = []
        for i, s in enumerate(doc["samples"]):
            missing = [c for c in CSV_COLUMNS if c not in s]
            if missing:
                raise TrajectoryFormatError(f"{path}: sample {i} missing column(s) {missing}")
            rows.append(_parse_row([s[c] for c in CSV_COLUMNS], f"{path}: sample {i}"))
        cfg = None
        if isinstance(doc.get("config"), dict):
            try:
                cfg = WorldConfig.from_json(doc["config"])
            except (WorldConfigError, TypeError) as exc:
                raise TrajectoryFormatError(f"{path}: bad config ({exc})") from None
        return _from_rows(rows, cfg)
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != CSV_COLUMNS:
        raise TrajectoryFormatError(f"{path}: expected header {','.join(CSV_COLUMNS)}")
    rows = [_parse_row(r, f"{path}: line {i + 2}") for i, r in enumerate(reader) if r]
    return _from_rows(rows, None)


def with_overrides(cfg: WorldConfig, **kwargs) -> WorldConfig:
    return replace(cfg, **{k: v for k, v in kwargs.items() if v is not None})
