"""Seed relevance scoring and the per-iteration seed-count schedule."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .ift import ForestStats

__all__ = [
    "Criterion",
    "RelevanceCriterion",
    "Schedule",
    "seeds_to_keep",
    "relevance",
    "relevance_all",
    "select_survivors",
    "object_factor",
    "top_k",
]


class Criterion(enum.Enum):
    SIZE = "size"
    MINCONTR = "minc"
    MAXCONTR = "maxc"
    MINSC = "minsc"
    MAXSC = "maxsc"
    RANDOM = "rnd"


@dataclass(frozen=True)
class RelevanceCriterion:
    base: Criterion = Criterion.MINSC
    object_modulated: bool = True


@dataclass(frozen=True)
class Schedule:
    """How many seeds survive each iteration.

    Three modes, in order of precedence:

    * explicit: ``explicit_scales`` lists the counts kept after iterations
      1, 2, ... and must be strictly decreasing, ending at ``nf``;
    * DISF: decay = 1 / ln(n0), i.e. n0 * e**-i seeds after iteration i;
    * curve (default): decay = 1 / (omega_cap - 1), which reaches ``nf`` by
      iteration ``omega_cap - 1`` at the latest.
    """

    n0: int
    nf: int
    omega_cap: int = 5
    disf: bool = False
    explicit_scales: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.nf < 1:
            raise ValueError("nf must be >= 1")
        if self.nf > self.n0:
            raise ValueError(f"nf={self.nf} exceeds n0={self.n0}")
        if self.omega_cap < 2:
            raise ValueError("omega_cap must be >= 2")
        if self.explicit_scales is not None:
            scales = tuple(int(s) for s in self.explicit_scales)
            object.__setattr__(self, "explicit_scales", scales)
            if not scales or scales[-1] != self.nf:
                raise ValueError("explicit scales must end at nf")
            if any(a <= b for a, b in zip(scales, scales[1:])) or scales[0] > self.n0:
                raise ValueError("explicit scales must be strictly decreasing and <= n0")

    @property
    def decay(self) -> float:
        if self.disf:
            # n0 == 1 forces nf == 1: nothing is ever removed
            return math.inf if self.n0 == 1 else 1.0 / math.log(self.n0)
        return 1.0 / (self.omega_cap - 1)


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def seeds_to_keep(schedule: Schedule, iteration: int) -> int:
    """Number of seeds kept after ``iteration`` (1-based) for the next IFT."""
    if iteration < 1:
        raise ValueError("iteration must be >= 1")
    if schedule.explicit_scales is not None:
        scales = schedule.explicit_scales
        return scales[min(iteration, len(scales)) - 1]
    exponent = 1.0 - schedule.decay * iteration
    if exponent <= 0.0:
        return schedule.nf
    return max(_round_half_up(schedule.n0**exponent), schedule.nf)


def _contrast_terms(means: np.ndarray, adjacency: np.ndarray, k: int):
    """Per-tree (min, max) over neighbors of ||means[s] - means[t]||; 0 if isolated."""
    lo = np.full(k, np.inf)
    hi = np.zeros(k)
    if adjacency.size:
        s, t = adjacency[:, 0], adjacency[:, 1]
        diff = means[s] - means[t]
        g = np.sqrt(np.sum(diff * diff, axis=-1)) if diff.ndim > 1 else np.abs(diff)
        for a in (s, t):
            np.minimum.at(lo, a, g)
            np.maximum.at(hi, a, g)
    lo[np.isinf(lo)] = 0.0
    return lo, hi


def relevance_all(
    stats: ForestStats,
    criterion: RelevanceCriterion,
    total_pixels: int | None = None,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Relevance of every tree in ``stats`` (vectorized)."""
    k = len(stats)
    base = Criterion(criterion.base)
    total = stats.total_pixels if total_pixels is None else total_pixels

    if base is Criterion.RANDOM:
        if rng is None:
            raise ValueError("the random criterion needs an rng")
        rel = rng.random(k)
    else:
        size_term = stats.size / total
        if base is Criterion.SIZE:
            rel = size_term
        else:
            lo, hi = _contrast_terms(stats.mean_features(), stats.adjacency, k)
            rel = {
                Criterion.MINCONTR: lo,
                Criterion.MAXCONTR: hi,
                Criterion.MINSC: size_term * lo,
                Criterion.MAXSC: size_term * hi,
            }[base]

    if criterion.object_modulated:
        rel = rel * object_factor(stats)
    return np.asarray(rel, dtype=np.float64)


def object_factor(stats: ForestStats) -> np.ndarray:
    """max(mean saliency of s, largest saliency contrast to a neighbor of s).

    Exactly 1.0 for every tree when the saliency is uniformly one.
    """
    mu = stats.mean_saliency()
    _, sal_hi = _contrast_terms(mu, stats.adjacency, len(stats))
    return np.maximum(mu, sal_hi)


def relevance(
    seed: int,
    stats: ForestStats,
    criterion: RelevanceCriterion,
    total_pixels: int | None = None,
    rng: np.random.Generator | None = None,
) -> float:
    """Relevance of a single tree; see :func:`relevance_all`."""
    if not 0 <= seed < len(stats):
        raise IndexError(f"seed id {seed} out of range")
    if Criterion(criterion.base) is Criterion.RANDOM:
        if rng is None:
            raise ValueError("the random criterion needs an rng")
        draw = float(rng.random())
        if criterion.object_modulated:
            draw *= float(object_factor(stats)[seed])
        return draw
    return float(relevance_all(stats, criterion, total_pixels)[seed])


def top_k(scores: Sequence[float], keep: int) -> np.ndarray:
    """Ids of the ``keep`` highest scores (ties go to the lower id), ascending."""
    scores = np.asarray(scores, dtype=np.float64)
    if keep < 1:
        raise ValueError("must keep at least one seed")
    if keep > scores.size:
        raise ValueError(f"cannot keep {keep} of {scores.size} seeds")
    ids = np.arange(scores.size)
    order = np.lexsort((ids, -scores))
    return np.sort(order[:keep])


def select_survivors(
    stats: ForestStats,
    criterion: RelevanceCriterion,
    keep: int,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Ids (positions in the current seed sequence) of the ``keep`` most relevant seeds."""
    return top_k(relevance_all(stats, criterion, rng=rng), keep)
