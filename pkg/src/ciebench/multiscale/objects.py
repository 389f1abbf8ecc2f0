"""Macro-object extraction: label live-cell clusters, track them, classify each track."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .life import LifeGrid

KINDS = ("still-life", "oscillator", "mover", "unknown")
MOORE = tuple((dx, dy) for dy in (-1, 0, 1) for dx in (-1, 0, 1) if (dx, dy) != (0, 0))
MIN_OVERLAP = 0.5


@dataclass(frozen=True)
class Cluster:
    """8-connected live cells of one frame.

    ``cells`` are grid coordinates; ``local`` are the same cells unwrapped
    across torus edges so the shape is contiguous.
    """

    cells: frozenset
    local: frozenset

    @property
    def size(self) -> int:
        return len(self.cells)


@dataclass(frozen=True)
class MacroObject:
    """A tracked cluster and its regularity.

    ``cells`` is the footprint at frame ``start``; ``phases`` holds the
    footprints of frames ``start .. start + period - 1`` so the object can be
    rendered at any later time. ``displacement`` is ``(dx, dy)`` per period.
    ``end`` is the last frame the object was seen in, or ``None`` if it
    persisted to the end of the window.
    """

    kind: str
    cells: frozenset
    period: int
    displacement: tuple
    start: int = 0
    phases: tuple = field(default=(), repr=False)
    end: int | None = None  # last observed frame when the object vanished or merged

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        if self.kind == "still-life" and (self.period != 1 or self.displacement != (0, 0)):
            raise ValueError("a still life has period 1 and no displacement")
        if self.kind == "mover" and self.displacement == (0, 0):
            raise ValueError("a mover needs a non-zero displacement")

    def footprint_at(self, t: int, width: int, height: int, topology: str = "torus") -> frozenset:
        """Predicted live cells at frame ``t``; empty for unknowns and before ``start``."""
        if self.kind == "unknown" or t < self.start or not self.phases:
            return frozenset()
        if self.end is not None and t > self.end:
            return frozenset()
        laps, phase = divmod(t - self.start, self.period)
        dx, dy = (laps * self.displacement[0], laps * self.displacement[1])
        out = set()
        for x, y in self.phases[phase]:
            nx, ny = x + dx, y + dy
            if topology == "torus":
                out.add((nx % width, ny % height))
            elif 0 <= nx < width and 0 <= ny < height:
                out.add((nx, ny))
        return frozenset(out)

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "period": self.period,
            "displacement": list(self.displacement),
            "start": self.start,
            "end": self.end,
            "cells": sorted([list(c) for c in self.cells]),
        }


def label_clusters(g: LifeGrid) -> list[Cluster]:
    """8-connected components, ordered by their first cell in row-major order."""
    live = g.live_cells()
    torus = g.topology == "torus"
    seen: set = set()
    out = []
    for start in sorted(live, key=lambda c: (c[1], c[0])):
        if start in seen:
            continue
        seen.add(start)
        cells, local = {start}, {start}
        queue = deque([start])
        while queue:
            lx, ly = queue.popleft()
            for dx, dy in MOORE:
                nx, ny = lx + dx, ly + dy
                if torus:
                    key = (nx % g.width, ny % g.height)
                elif 0 <= nx < g.width and 0 <= ny < g.height:
                    key = (nx, ny)
                else:
                    continue
                if key in live and key not in seen:
                    seen.add(key)
                    cells.add(key)
                    local.add((nx, ny))
                    queue.append((nx, ny))
        out.append(Cluster(frozenset(cells), frozenset(local)))
    return out


def _dilate(cells, g: LifeGrid) -> set:
    out = set(cells)
    for x, y in cells:
        for dx, dy in MOORE:
            nx, ny = x + dx, y + dy
            if g.topology == "torus":
                out.add((nx % g.width, ny % g.height))
            elif 0 <= nx < g.width and 0 <= ny < g.height:
                out.add((nx, ny))
    return out


def _links(prev: list[Cluster], cur: list[Cluster], g: LifeGrid):
    """Pairs (i, j) where cluster j overlaps the one-cell dilation of cluster i by >= 50%."""
    links = []
    for i, a in enumerate(prev):
        grown = _dilate(a.cells, g)
        for j, b in enumerate(cur):
            overlap = len(grown & b.cells)
            if overlap >= MIN_OVERLAP * min(a.size, b.size):
                links.append((i, j))
    return links


@dataclass(eq=False)
class _Track:
    start: int
    clusters: list
    ended_by_event: bool = False

    @property
    def end(self) -> int:
        return self.start + len(self.clusters) - 1


def track_clusters(frames: list[LifeGrid]):
    """Follow clusters frame to frame.

    A one-to-one link continues a track. Any cluster involved in a merge or a
    split ends its track there and the clusters on the other side start new
    tracks, so a track never spans an ambiguous event. Returns
    ``(tracks, events)`` where ``events`` pairs the tracks joined by an
    ambiguous link.
    """
    tracks: list[_Track] = []
    events: list[tuple[_Track, _Track]] = []
    open_tracks: dict[int, _Track] = {}
    prev: list[Cluster] = []
    for t, g in enumerate(frames):
        cur = label_clusters(g)
        links = _links(prev, cur, g) if t else []
        out_deg = [0] * len(prev)
        in_deg = [0] * len(cur)
        for i, j in links:
            out_deg[i] += 1
            in_deg[j] += 1
        next_open: dict[int, _Track] = {}
        ambiguous = []
        for i, j in links:
            if out_deg[i] == 1 and in_deg[j] == 1:
                tr = open_tracks[i]
                tr.clusters.append(cur[j])
                next_open[j] = tr
            else:
                open_tracks[i].ended_by_event = True
                ambiguous.append((i, j))
        for j, c in enumerate(cur):
            if j not in next_open:
                tr = _Track(t, [c])
                tracks.append(tr)
                next_open[j] = tr
        events.extend((open_tracks[i], next_open[j]) for i, j in ambiguous)
        open_tracks = next_open
        prev = cur
    return tracks, events


def _shape(local: frozenset):
    mx = min(x for x, _ in local)
    my = min(y for _, y in local)
    return frozenset((x - mx, y - my) for x, y in local), (mx, my)


def _wrap(d: int, size: int | None) -> int:
    if size is None:
        return d
    d %= size
    return d - size if d > size // 2 else d


def classify_track(clusters: list[Cluster], max_period: int, width: int | None = None, height: int | None = None):
    """Smallest ``(period, displacement)`` with a consistent translation, or ``None``.

    ``width``/``height`` are given on a torus so displacements are read modulo
    the grid.
    """
    shapes = [_shape(c.local) for c in clusters]
    for p in range(1, max_period + 1):
        if p >= len(clusters):
            break
        disp = None
        ok = True
        for t in range(len(clusters) - p):
            (s0, o0), (s1, o1) = shapes[t], shapes[t + p]
            if s0 != s1:
                ok = False
                break
            d = (_wrap(o1[0] - o0[0], width), _wrap(o1[1] - o0[1], height))
            if disp is None:
                disp = d
            elif d != disp:
                ok = False
                break
        if ok:
            return p, disp
    return None


def _unknown_groups(tracks, events, unknown: set):
    """Union unknown tracks joined by ambiguous events so one messy region is one object."""
    parent = {id(tr): id(tr) for tr in tracks}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in events:
        if id(a) in unknown and id(b) in unknown:
            parent[find(id(a))] = find(id(b))
    groups: dict[int, list] = {}
    for tr in tracks:
        if id(tr) in unknown:
            groups.setdefault(find(id(tr)), []).append(tr)
    return list(groups.values())


def extract_objects(frames: list[LifeGrid], max_period: int = 8) -> list[MacroObject]:
    """Macro-objects observed over a window of consecutive frames.

    Objects are ordered by first frame, then by their top-left cell.
    """
    if max_period < 1:
        raise ValueError("max_period must be >= 1")
    if len(frames) < max_period + 1:
        raise ValueError(f"need at least max_period + 1 = {max_period + 1} frames, got {len(frames)}")
    g0 = frames[0]
    torus = g0.topology == "torus"
    w, h = (g0.width, g0.height) if torus else (None, None)
    last = len(frames) - 1
    tracks, events = track_clusters(frames)
    found = []
    unknown: set = set()
    for tr in tracks:
        res = classify_track(tr.clusters, max_period, w, h)
        if res is None:
            unknown.add(id(tr))
            continue
        p, d = res
        kind = "mover" if d != (0, 0) else ("still-life" if p == 1 else "oscillator")
        end = tr.end if tr.end < last else None
        phases = tuple(c.cells for c in tr.clusters[:p])
        found.append(MacroObject(kind, tr.clusters[0].cells, p, d, tr.start, phases, end=end))
    for group in _unknown_groups(tracks, events, unknown):
        first = min(group, key=lambda tr: tr.start)
        end = max(tr.end for tr in group)
        found.append(MacroObject("unknown", first.clusters[0].cells, 0, (0, 0), first.start,
                                 end=end if end < last else None))
    found.sort(key=lambda o: (o.start, min(((y, x) for x, y in o.cells), default=(0, 0)), o.kind))
    return found
