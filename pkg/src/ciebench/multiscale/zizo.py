"""Zoom-in/zoom-out fixed-point iteration between a macro model and a micro encoding."""

from __future__ import annotations

import operator
from collections.abc import Callable
from dataclasses import dataclass, replace
from typing import Any

from .life import LifeGrid
from .objects import MacroObject, extract_objects


@dataclass(frozen=True)
class ZizoState:
    macro_model: Any
    micro_encoding: Any
    converged: bool
    iterations: int

    def to_json(self) -> dict:
        macro = self.macro_model
        return {
            "converged": self.converged,
            "iterations": self.iterations,
            "macro_model": [m.to_json() for m in macro] if isinstance(macro, (list, tuple)) else macro,
        }


def zizo(
    zoom_out: Callable,
    zoom_in: Callable,
    y0,
    max_iters: int = 20,
    equal: Callable[[Any, Any], bool] = operator.eq,
) -> ZizoState:
    """Alternate ``X = zoom_out(Y)`` and ``Y = zoom_in(X)`` until ``X`` stops changing.

    After each round the re-abstracted ``zoom_out(Y)`` is compared with ``X``
    using ``equal``; agreement means ``X`` is a fixed point and the run stops
    as converged. ``max_iters=0`` returns the initial encoding unconverged.
    """
    if max_iters < 0:
        raise ValueError("max_iters must be >= 0")
    y = y0
    x = None
    if max_iters == 0:
        return ZizoState(None, y0, False, 0)
    x = zoom_out(y)
    for it in range(1, max_iters + 1):
        y = zoom_in(x)
        x_next = zoom_out(y)
        if equal(x_next, x):
            return ZizoState(x, y, True, it)
        x = x_next
    return ZizoState(x, y, False, max_iters)


# -- Game of Life binding ----------------------------------------------------

def render(objects, template: LifeGrid, n_frames: int) -> list[LifeGrid]:
    """Frames predicted by ``objects`` alone; unknown objects predict nothing."""
    frames = []
    for t in range(n_frames):
        live = set()
        for obj in objects:
            live |= obj.footprint_at(t, template.width, template.height, template.topology)
        frames.append(LifeGrid.from_cells(live, template.width, template.height, template.topology))
    return frames


def _footprints_equal(a, b) -> bool:
    """Exact equality of the footprint sets and regularity of two macro models."""
    def key(objs):
        return sorted((o.kind, o.period, o.displacement, o.start, o.end, tuple(sorted(o.cells)),
                       tuple(tuple(sorted(p)) for p in o.phases)) for o in objs)
    return key(a) == key(b)


@dataclass(frozen=True)
class LifeZizoResult:
    state: ZizoState
    fixed_point: bool
    explains_all: bool  # predicted frames equal the observed frames

    def to_json(self) -> dict:
        return {**self.state.to_json(), "fixed_point": self.fixed_point, "explains_all": self.explains_all}


def life_zizo(frames: list[LifeGrid], max_period: int = 8, max_iters: int = 10) -> LifeZizoResult:
    """ZIZO over a Life frame window: extract macro-objects, re-render them, re-extract.

    Unknown objects render as nothing, so a model can reach a fixed point
    without accounting for every cluster; ``state.converged`` is therefore
    only set when the fixed point also reproduces the observed frames.
    """
    frames = list(frames)
    template = frames[0]

    def zoom_out(window) -> tuple[MacroObject, ...]:
        return tuple(extract_objects(window, max_period))

    def zoom_in(objects) -> list[LifeGrid]:
        return render(objects, template, len(frames))

    state = zizo(zoom_out, zoom_in, frames, max_iters, equal=_footprints_equal)
    fixed = state.converged
    explains = fixed and all(a == b for a, b in zip(render(state.macro_model, template, len(frames)), frames))
    return LifeZizoResult(replace(state, converged=explains), fixed, explains)
