"""Initial seed oversampling: an aspect-aware regular grid or a uniform random draw.

Random draws use numpy's PCG64 bit generator seeded through ``SeedSequence``,
which is portable across platforms and can be split into independent streams.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

__all__ = ["Sampling", "SamplingSpec", "grid_shape", "sample_grid", "sample_random", "sample"]


class Sampling(enum.Enum):
    GRID = "grid"
    RND = "rnd"


@dataclass(frozen=True)
class SamplingSpec:
    strategy: Sampling = Sampling.RND
    n0: int = 3000
    rng_seed: int = 0

    def __post_init__(self):
        if self.n0 < 1:
            raise ValueError("n0 must be >= 1")


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def grid_shape(width: int, height: int, n0: int) -> tuple[int, int]:
    """Seeds per axis (k_x, k_y) so that k_x * k_y approximates ``n0``.

    Each axis gets a share of c = sqrt(n0 / (lx * ly)) proportional to its
    length, where lx = w / (w + h) and ly = h / (w + h).
    """
    if width < 1 or height < 1:
        raise ValueError(f"degenerate image dimensions {width}x{height}")
    if n0 < 1:
        raise ValueError("n0 must be >= 1")
    lx = width / (width + height)
    ly = height / (width + height)
    c = math.sqrt(n0 / (lx * ly))
    kx = min(width, max(1, _round_half_up(lx * c)))
    ky = min(height, max(1, _round_half_up(ly * c)))
    return kx, ky


def sample_grid(width: int, height: int, n0: int) -> np.ndarray:
    """Seeds at the centers of a k_x by k_y grid of cells, in raster order."""
    kx, ky = grid_shape(width, height, n0)
    sx = width / kx
    sy = height / ky
    xs = np.floor((np.arange(kx) + 0.5) * sx).astype(np.int64)
    ys = np.floor((np.arange(ky) + 0.5) * sy).astype(np.int64)
    return (ys[:, None] * width + xs[None, :]).ravel()


def sample_random(width: int, height: int, n0: int, rng_seed: int | np.random.SeedSequence = 0) -> np.ndarray:
    """``n0`` distinct pixels drawn uniformly without replacement, in draw order."""
    n = width * height
    if width < 1 or height < 1:
        raise ValueError(f"degenerate image dimensions {width}x{height}")
    if not 1 <= n0 <= n:
        raise ValueError(f"cannot draw {n0} seeds from {n} pixels")
    rng = np.random.Generator(np.random.PCG64(rng_seed))
    return rng.choice(n, size=n0, replace=False).astype(np.int64)


def sample(spec: SamplingSpec, width: int, height: int,
           rng_seed: int | np.random.SeedSequence | None = None) -> np.ndarray:
    if spec.n0 > width * height:
        raise ValueError(f"n0={spec.n0} exceeds the {width * height} pixels of the image")
    if Sampling(spec.strategy) is Sampling.GRID:
        return sample_grid(width, height, spec.n0)
    return sample_random(width, height, spec.n0, spec.rng_seed if rng_seed is None else rng_seed)
