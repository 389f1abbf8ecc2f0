"""Plain-text SVG figures: adjacency matrices, trajectories, activation timelines."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf")


def _fmt(x: float) -> str:
    return f"{x:.3f}".rstrip("0").rstrip(".")


class Canvas:
    def __init__(self, width: float, height: float, title: str, version: str):
        self.width = width
        self.height = height
        self.parts = [
            (
                f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(width)}" height="{_fmt(height)}" '
                f'viewBox="0 0 {_fmt(width)} {_fmt(height)}">'
            ),
            f"<!-- ciebench {escape(version)} -->",
            f"<title>{escape(title)}</title>",
            f'<rect width="{_fmt(width)}" height="{_fmt(height)}" fill="white"/>',
        ]

    def add(self, element: str) -> None:
        self.parts.append(element)

    def rect(self, x, y, w, h, fill, opacity=1.0, stroke="none"):
        self.add(f'<rect x="{_fmt(x)}" y="{_fmt(y)}" width="{_fmt(w)}" height="{_fmt(h)}" fill="{fill}" '
                 f'fill-opacity="{_fmt(opacity)}" stroke="{stroke}"/>')

    def text(self, x, y, s, size=11, anchor="start"):
        self.add(f'<text x="{_fmt(x)}" y="{_fmt(y)}" font-family="sans-serif" font-size="{size}" '
                 f'text-anchor="{anchor}">{escape(str(s))}</text>')

    def polyline(self, pts, stroke, width=0.6):
        if len(pts) < 2:
            x, y = pts[0]
            self.add(f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="{_fmt(width)}" fill="{stroke}"/>')
            return
        coords = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in pts)
        self.add(f'<polyline points="{coords}" fill="none" stroke="{stroke}" stroke-width="{_fmt(width)}"/>')

    def render(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def adjacency_svg(p: np.ndarray, blocks, version: str, cell: float = 24.0) -> str:
    """Edge-probability heat map (darker = closer to 1) with the partition's blocks outlined."""
    n = p.shape[0]
    margin = 30.0
    cv = Canvas(2 * margin + n * cell, 2 * margin + n * cell, "edge probabilities", version)
    for i in range(n):
        cv.text(margin + (i + 0.5) * cell, margin - 8, i + 1, anchor="middle")
        cv.text(margin - 8, margin + (i + 0.65) * cell, i + 1, anchor="end")
        for j in range(n):
            level = int(round(255 * (1 - float(p[i, j]))))
            cv.rect(margin + j * cell, margin + i * cell, cell, cell, f"rgb({level},{level},{level})", stroke="#ccc")
    order = [node for blk in blocks for node in blk]
    if order != sorted(order):
        cv.add("<!-- blocks are not contiguous; outlines show each block's bounding range -->")
    for b, blk in enumerate(blocks):
        lo, hi = min(blk), max(blk) + 1
        cv.rect(margin + lo * cell, margin + lo * cell, (hi - lo) * cell, (hi - lo) * cell,
                PALETTE[b % len(PALETTE)], opacity=0.25, stroke=PALETTE[b % len(PALETTE)])
    return cv.render()


def _runs(labels: np.ndarray):
    """(start, stop, label) for maximal constant runs."""
    if labels.size == 0:
        return []
    cuts = np.flatnonzero(np.diff(labels)) + 1
    starts = np.concatenate([[0], cuts])
    stops = np.concatenate([cuts, [labels.size]])
    return [(int(a), int(b), int(labels[a])) for a, b in zip(starts, stops)]


def _map_canvas(map_size: float, title: str, version: str, scale: float = 400.0):
    margin = 20.0
    cv = Canvas(2 * margin + scale, 2 * margin + scale + 20, title, version)
    cv.rect(margin, margin, scale, scale, "none", stroke="#444")

    def to_px(x, y):
        # y axis points up on the map
        return margin + x / map_size * scale, margin + (1 - y / map_size) * scale

    return cv, to_px


def _path_by_label(cv, to_px, pos, labels, stride: int, names):
    for a, b, lab in _runs(labels):
        idx = list(range(a, b, stride))
        if idx[-1] != b - 1:
            idx.append(b - 1)
        # join to the next run so the path stays continuous
        if b < labels.size:
            idx.append(b)
        pts = [to_px(*pos[i]) for i in idx]
        cv.polyline(pts, PALETTE[lab % len(PALETTE)] if lab >= 0 else "#999")
    y = cv.height - 8
    x = 20.0
    for lab, name in names:
        cv.rect(x, y - 9, 10, 10, PALETTE[lab % len(PALETTE)])
        cv.text(x + 14, y, name)
        x += 90


def trajectory_svg(traj, version: str, stride: int = 4) -> str:
    """Map with region boundaries and the path coloured by true region."""
    cfg = traj.config
    cv, to_px = _map_canvas(cfg.map_size, "trajectory by region", version)
    cx, cy = to_px(*cfg.center)
    r_px = cfg.r_center / cfg.map_size * 400.0
    cv.add(f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{_fmt(r_px)}" fill="none" stroke="#444" '
           'stroke-dasharray="4 3"/>')
    for deg in (90, 210, 330):
        a = math.radians(deg)
        ex, ey = to_px(cfg.center[0] + 2 * cfg.map_size * math.cos(a), cfg.center[1] + 2 * cfg.map_size * math.sin(a))
        cv.add(f'<line x1="{_fmt(cx)}" y1="{_fmt(cy)}" x2="{_fmt(ex)}" y2="{_fmt(ey)}" stroke="#444" '
               'stroke-dasharray="4 3"/>')
    if len(traj.t):
        labels = traj.region_true.astype(np.int64) - 1
        _path_by_label(cv, to_px, traj.pos, labels, stride, [(r - 1, f"region {r}") for r in range(1, 5)])
    return cv.render()


def assignment_map_svg(pos, assign, k: int, map_size: float, version: str, stride: int = 4) -> str:
    """Map with the path coloured by inferred object."""
    cv, to_px = _map_canvas(map_size, "path by inferred object", version)
    if len(assign):
        _path_by_label(cv, to_px, pos, np.asarray(assign), stride, [(j, f"object {j}") for j in range(k)])
    return cv.render()


def activation_svg(assign, k: int, version: str, width: float = 800.0, row: float = 22.0) -> str:
    """One row per object; a bar wherever the object is the active one."""
    assign = np.asarray(assign)
    n = max(int(assign.size), 1)
    left, top = 70.0, 20.0
    cv = Canvas(left + width + 20, top + k * row + 40, "object activation over time", version)
    for j in range(k):
        y = top + j * row
        cv.text(left - 8, y + row * 0.65, f"object {j}", anchor="end")
        cv.rect(left, y + 2, width, row - 4, "#f2f2f2")
    for a, b, lab in _runs(assign):
        if lab < 0:
            continue
        cv.rect(left + a / n * width, top + lab * row + 2, (b - a) / n * width, row - 4, PALETTE[lab % len(PALETTE)])
    cv.text(left, top + k * row + 20, "sample 0")
    cv.text(left + width, top + k * row + 20, f"sample {n - 1}", anchor="end")
    return cv.render()


def life_frames_svg(frames, version: str, cell: float = 8.0, per_row: int = 8) -> str:
    """Small multiples of Life frames."""
    if not frames:
        return Canvas(10, 10, "no frames", version).render()
    h, w = frames[0].height, frames[0].width
    gap = 14.0
    cols = min(per_row, len(frames))
    rows = math.ceil(len(frames) / cols)
    cv = Canvas(cols * (w * cell + gap) + gap, rows * (h * cell + gap + 12) + gap, "life frames", version)
    for t, g in enumerate(frames):
        ox = gap + (t % cols) * (w * cell + gap)
        oy = gap + 12 + (t // cols) * (h * cell + gap + 12)
        cv.text(ox, oy - 3, f"t={t}", size=9)
        cv.rect(ox, oy, w * cell, h * cell, "none", stroke="#bbb")
        ys, xs = np.nonzero(g.cells)
        for x, y in zip(xs.tolist(), ys.tolist()):
            cv.rect(ox + x * cell, oy + y * cell, cell, cell, "#222")
    return cv.render()
