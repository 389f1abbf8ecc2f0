"""Conway's Game of Life on torus or bounded grids, with pattern I/O."""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

TOPOLOGIES = ("torus", "bounded")


class PatternError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class LifeGrid:
    """Immutable cell array indexed ``cells[y, x]``; y grows downward."""

    cells: np.ndarray
    topology: str = "torus"

    def __post_init__(self):
        cells = np.array(self.cells, dtype=np.uint8)
        if cells.ndim != 2 or cells.shape[0] < 1 or cells.shape[1] < 1:
            raise PatternError("grid must be 2-D with both dimensions >= 1")
        if np.any(cells > 1):
            raise PatternError("cell values must be 0 or 1")
        if self.topology not in TOPOLOGIES:
            raise PatternError(f"topology must be one of {TOPOLOGIES}")
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)

    @property
    def width(self) -> int:
        return int(self.cells.shape[1])

    @property
    def height(self) -> int:
        return int(self.cells.shape[0])

    @property
    def population(self) -> int:
        return int(self.cells.sum())

    @classmethod
    def empty(cls, width: int, height: int, topology: str = "torus") -> LifeGrid:
        return cls(np.zeros((height, width), dtype=np.uint8), topology)

    @classmethod
    def from_cells(cls, live, width: int, height: int, topology: str = "torus") -> LifeGrid:
        """Grid with the ``(x, y)`` cells in ``live`` set."""
        arr = np.zeros((height, width), dtype=np.uint8)
        for x, y in live:
            arr[y, x] = 1
        return cls(arr, topology)

    def live_cells(self) -> frozenset:
        ys, xs = np.nonzero(self.cells)
        return frozenset(zip(xs.tolist(), ys.tolist()))

    def translate(self, dx: int, dy: int) -> LifeGrid:
        """Cyclic shift by ``(dx, dy)``; on a bounded grid cells pushed off the edge are lost."""
        if self.topology == "torus":
            return LifeGrid(np.roll(self.cells, (dy, dx), axis=(0, 1)), self.topology)
        out = np.zeros_like(self.cells)
        h, w = self.cells.shape
        src = self.cells[max(0, -dy):h - max(0, dy), max(0, -dx):w - max(0, dx)]
        out[max(0, dy):max(0, dy) + src.shape[0], max(0, dx):max(0, dx) + src.shape[1]] = src
        return LifeGrid(out, self.topology)

    def to_plaintext(self) -> str:
        return "".join("".join("#" if c else "." for c in row) + "\n" for row in self.cells)

    def __eq__(self, other):
        if not isinstance(other, LifeGrid):
            return NotImplemented
        return self.topology == other.topology and np.array_equal(self.cells, other.cells)

    def __hash__(self):
        return hash((self.topology, self.cells.shape, self.cells.tobytes()))


def neighbour_counts(g: LifeGrid) -> np.ndarray:
    c = g.cells.astype(np.uint8)
    if g.topology == "torus":
        return sum(
            np.roll(c, (dy, dx), axis=(0, 1)) for dy in (-1, 0, 1) for dx in (-1, 0, 1) if (dy, dx) != (0, 0)
        )
    p = np.pad(c, 1)
    h, w = c.shape
    return sum(p[1 + dy:1 + dy + h, 1 + dx:1 + dx + w] for dy in (-1, 0, 1) for dx in (-1, 0, 1) if (dy, dx) != (0, 0))


def life_step(g: LifeGrid) -> LifeGrid:
    """One synchronous generation under B3/S23."""
    n = neighbour_counts(g)
    alive = g.cells.astype(bool)
    nxt = (n == 3) | (alive & (n == 2))
    return LifeGrid(nxt.astype(np.uint8), g.topology)


def run(g: LifeGrid, generations: int) -> list[LifeGrid]:
    """Frames ``0..generations`` inclusive."""
    frames = [g]
    for _ in range(generations):
        frames.append(life_step(frames[-1]))
    return frames


# -- pattern I/O -----------------------------------------------------------

def parse_plaintext(text: str) -> np.ndarray:
    """Rows of '.'/'#' (also 'O'/'*' for live); lines starting with '!' are comments."""
    rows = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.rstrip()
        if line.startswith("!"):
            continue
        bad = set(line) - set(".#O*")
        if bad:
            raise PatternError(f"line {lineno}: unexpected character(s) {''.join(sorted(bad))!r}")
        rows.append([0 if ch == "." else 1 for ch in line])
    while rows and not rows[-1]:
        rows.pop()
    if not rows:
        raise PatternError("pattern is empty")
    width = max(len(r) for r in rows)
    return np.array([r + [0] * (width - len(r)) for r in rows], dtype=np.uint8)


_RLE_HEADER = re.compile(r"^\s*x\s*=\s*(\d+)\s*,\s*y\s*=\s*(\d+)(?:\s*,\s*rule\s*=\s*(\S+))?\s*$", re.IGNORECASE)
_RLE_TOKEN = re.compile(r"(\d*)([bo$!]|[A-Za-z])")


def parse_rle(text: str) -> np.ndarray:
    """Decode a run-length-encoded pattern (``x = .., y = ..`` header, ``b``/``o``/``$``/``!`` body)."""
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise PatternError("RLE: no header line")
    m = _RLE_HEADER.match(lines[0])
    if not m:
        raise PatternError(f"RLE: malformed header {lines[0]!r}")
    width, height = int(m.group(1)), int(m.group(2))
    rule = m.group(3)
    if rule and rule.upper().replace("/", "") not in ("B3S23", "23S3", "S23B3"):
        raise PatternError(f"RLE: unsupported rule {rule!r}")
    body = "".join(lines[1:]).replace(" ", "")
    grid = np.zeros((height, width), dtype=np.uint8)
    x = y = 0
    pos = 0
    while pos < len(body):
        tok = _RLE_TOKEN.match(body, pos)
        if not tok:
            raise PatternError(f"RLE: unexpected {body[pos]!r} at offset {pos}")
        pos = tok.end()
        count = int(tok.group(1) or 1)
        sym = tok.group(2)
        if sym == "!":
            break
        if sym == "$":
            y += count
            x = 0
            continue
        if sym != "b":
            if y >= height or x + count > width:
                raise PatternError("RLE: live cells outside the declared bounds")
            grid[y, x:x + count] = 1
        x += count
    return grid


def load_pattern(path) -> np.ndarray:
    path = Path(path)
    try:
        text = path.read_text()
    except (OSError, UnicodeDecodeError) as exc:
        raise PatternError(f"cannot read pattern {path}: {exc}") from exc
    if path.suffix.lower() == ".rle" or _RLE_HEADER.match(next((ln for ln in text.splitlines()
                                                                 if ln.strip() and not ln.startswith("#")), "")):
        return parse_rle(text)
    return parse_plaintext(text)


BUILTIN_PATTERNS = {
    "glider": ".#.\n..#\n###\n",
    "block": "##\n##\n",
    "blinker": "#\n#\n#\n",
    "beehive": ".##.\n#..#\n.##.\n",
    "toad": ".###\n###.\n",
}


def builtin_pattern(name: str) -> np.ndarray:
    try:
        return parse_plaintext(BUILTIN_PATTERNS[name])
    except KeyError:
        raise PatternError(f"unknown builtin pattern {name!r}; choose from {sorted(BUILTIN_PATTERNS)}") from None


def place(pattern: np.ndarray, width: int, height: int, offset=(1, 1), topology: str = "torus") -> LifeGrid:
    """Embed ``pattern`` in an empty grid with its top-left corner at ``offset = (x, y)``."""
    ph, pw = pattern.shape
    ox, oy = offset
    if ox < 0 or oy < 0 or ox + pw > width or oy + ph > height:
        raise PatternError(f"pattern {pw}x{ph} at {offset} does not fit a {width}x{height} grid")
    arr = np.zeros((height, width), dtype=np.uint8)
    arr[oy:oy + ph, ox:ox + pw] = pattern
    return LifeGrid(arr, topology)
