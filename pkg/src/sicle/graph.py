"""Image digraph topology: pixels are vertices, arcs join pixels within radius r."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = ["Topology", "neighbors", "window_offsets"]

_EPS = 1e-9


def window_offsets(radius: float) -> np.ndarray:
    """(dy, dx) offsets with 0 < ||(dy, dx)|| <= radius, row-major scan order."""
    if not radius > 0:
        raise ValueError("radius must be positive")
    reach = int(math.floor(radius + _EPS))
    r2 = radius * radius + _EPS
    offs = [
        (dy, dx)
        for dy in range(-reach, reach + 1)
        for dx in range(-reach, reach + 1)
        if (dy or dx) and dy * dy + dx * dx <= r2
    ]
    return np.array(offs, dtype=np.int64).reshape(-1, 2)


@dataclass(frozen=True)
class Topology:
    """Arc set A^r on a width x height lattice (8-neighborhood for r = sqrt(2))."""

    width: int
    height: int
    radius: float = math.sqrt(2.0)

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("topology dimensions must be >= 1")
        if not self.radius > 0:
            raise ValueError("radius must be positive")

    @property
    def n_vertices(self) -> int:
        return self.width * self.height

    @cached_property
    def offsets(self) -> np.ndarray:
        return window_offsets(self.radius)

    def neighbors(self, x: int) -> list[int]:
        return neighbors(self, x)


def neighbors(t: Topology, x: int) -> list[int]:
    """Vertices adjacent to ``x`` in the fixed offset-window order."""
    if not 0 <= x < t.n_vertices:
        raise IndexError(f"vertex {x} out of range for {t.width}x{t.height}")
    y0, x0 = divmod(x, t.width)
    out = []
    for dy, dx in t.offsets:
        y, xx = y0 + dy, x0 + dx
        if 0 <= y < t.height and 0 <= xx < t.width:
            out.append(int(y * t.width + xx))
    return out
