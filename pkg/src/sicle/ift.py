"""Seed-restricted Image Foresting Transform under the f_max path cost.

The queue is a binary heap keyed on (path cost, insertion order), so equal
costs leave the queue first-in-first-out. Vertices are finalized on their
first dequeue. Arc costs are computed on the fly:

* ``ArcCost.ROOT``: ||F(R(x)) - F(y)||, the conquering seed's features.
* ``ArcCost.DYN``: ||mean F(T(R(x))) - F(y)||, the conquering tree's running
  mean at the moment ``y`` is evaluated (before ``y`` joins).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numba
import numpy as np

from .graph import Topology
from .imgio import DimensionMismatchError, Image, SaliencyMap

__all__ = [
    "ArcCost",
    "ForestState",
    "TreeStats",
    "ForestStats",
    "run_ift",
    "path_cost_fmax",
    "tree_mean_features",
    "tree_adjacency",
]


class ArcCost(enum.Enum):
    ROOT = "root"
    DYN = "dyn"


@dataclass(frozen=True, eq=False)
class ForestState:
    """Per-vertex maps of one IFT run, all flattened in raster order.

    ``pred`` holds -1 for roots. ``label`` is the index of the owning seed in
    the seed sequence passed to :func:`run_ift`.
    """

    cost: np.ndarray
    root: np.ndarray
    pred: np.ndarray
    label: np.ndarray
    seeds: np.ndarray
    width: int
    height: int

    def label_image(self) -> np.ndarray:
        """Labels 1..K as an (H, W) array."""
        return (self.label + 1).reshape(self.height, self.width)


@dataclass(frozen=True, eq=False)
class TreeStats:
    """Aggregates of a single optimum-path tree."""

    size: int
    feat_sum: np.ndarray
    sal_sum: float
    neighbor_ids: frozenset


@dataclass(frozen=True, eq=False)
class ForestStats:
    """Struct-of-arrays view of the :class:`TreeStats` of every tree.

    ``adjacency`` lists each unordered pair of touching trees once as
    (s, t) with s < t, sorted lexicographically.
    """

    size: np.ndarray
    feat_sum: np.ndarray
    sal_sum: np.ndarray
    adjacency: np.ndarray

    def __len__(self) -> int:
        return self.size.shape[0]

    def __getitem__(self, s: int) -> TreeStats:
        adj = self.adjacency
        nbrs = np.concatenate([adj[adj[:, 0] == s, 1], adj[adj[:, 1] == s, 0]])
        return TreeStats(
            size=int(self.size[s]),
            feat_sum=self.feat_sum[s].copy(),
            sal_sum=float(self.sal_sum[s]),
            neighbor_ids=frozenset(int(t) for t in nbrs),
        )

    @property
    def total_pixels(self) -> int:
        return int(self.size.sum())

    def mean_features(self) -> np.ndarray:
        return self.feat_sum / self.size[:, None]

    def mean_saliency(self) -> np.ndarray:
        return self.sal_sum / self.size


def path_cost_fmax(prefix_cost: float, arc_cost: float) -> float:
    """Extend a path of cost ``prefix_cost`` by an arc of cost ``arc_cost``."""
    return max(prefix_cost, arc_cost)


def tree_mean_features(stats: TreeStats) -> np.ndarray:
    if stats.size < 1:
        raise ValueError("mean of an empty tree is undefined")
    return np.asarray(stats.feat_sum, dtype=np.float64) / stats.size


# ---------------------------------------------------------------------------
# Heap on parallel arrays; key = (cost, order)
# ---------------------------------------------------------------------------


@numba.njit(cache=True, inline="always")
def _less(hc, ho, i, j):
    return hc[i] < hc[j] or (hc[i] == hc[j] and ho[i] < ho[j])


@numba.njit(cache=True)
def _swap(hc, ho, hv, i, j):
    hc[i], hc[j] = hc[j], hc[i]
    ho[i], ho[j] = ho[j], ho[i]
    hv[i], hv[j] = hv[j], hv[i]


@numba.njit(cache=True)
def _push(hc, ho, hv, n, c, o, v):
    hc[n] = c
    ho[n] = o
    hv[n] = v
    i = n
    while i > 0:
        p = (i - 1) >> 1
        if _less(hc, ho, i, p):
            _swap(hc, ho, hv, i, p)
            i = p
        else:
            break
    return n + 1


@numba.njit(cache=True)
def _pop(hc, ho, hv, n):
    c = hc[0]
    v = hv[0]
    n -= 1
    if n > 0:
        hc[0] = hc[n]
        ho[0] = ho[n]
        hv[0] = hv[n]
        i = 0
        while True:
            l = 2 * i + 1
            if l >= n:
                break
            m = l
            r = l + 1
            if r < n and _less(hc, ho, r, l):
                m = r
            if _less(hc, ho, m, i):
                _swap(hc, ho, hv, i, m)
                i = m
            else:
                break
    return c, v, n


@numba.njit(cache=True)
def _ift_core(feats, width, height, offsets, seeds, dyn):
    n = width * height
    m = feats.shape[1]
    k = seeds.shape[0]
    n_off = offsets.shape[0]

    cost = np.full(n, np.inf)
    root = np.full(n, -1, np.int64)
    pred = np.full(n, -1, np.int64)
    label = np.full(n, -1, np.int64)
    done = np.zeros(n, np.bool_)
    size = np.zeros(k, np.int64)
    fsum = np.zeros((k, m))
    ref = np.empty(m)

    cap = n * n_off + k
    hc = np.empty(cap)
    ho = np.empty(cap, np.int64)
    hv = np.empty(cap, np.int64)
    hn = 0
    order = 0

    for j in range(k):
        s = seeds[j]
        cost[s] = 0.0
        root[s] = s
        label[s] = j
        hn = _push(hc, ho, hv, hn, 0.0, order, s)
        order += 1

    while hn > 0:
        c, x, hn = _pop(hc, ho, hv, hn)
        if done[x]:
            continue
        done[x] = True
        j = label[x]
        size[j] += 1
        for d in range(m):
            fsum[j, d] += feats[x, d]
        if dyn:
            for d in range(m):
                ref[d] = fsum[j, d] / size[j]
        else:
            for d in range(m):
                ref[d] = feats[root[x], d]

        yx0 = x // width
        xx0 = x - yx0 * width
        for o in range(n_off):
            yy = yx0 + offsets[o, 0]
            xx = xx0 + offsets[o, 1]
            if yy < 0 or yy >= height or xx < 0 or xx >= width:
                continue
            y = yy * width + xx
            if done[y]:
                continue
            acc = 0.0
            for d in range(m):
                diff = ref[d] - feats[y, d]
                acc += diff * diff
            arc = math.sqrt(acc)
            tmp = c if c > arc else arc
            if tmp < cost[y]:
                cost[y] = tmp
                root[y] = root[x]
                pred[y] = x
                label[y] = j
                hn = _push(hc, ho, hv, hn, tmp, order, y)
                order += 1

    return cost, root, pred, label, size, fsum


def tree_adjacency(label_image: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    """Unordered pairs (s, t), s < t, of labels joined by at least one arc.

    ``offsets`` must be symmetric (every arc has its reverse), so only half of
    it is scanned.
    """
    h, w = label_image.shape
    k = int(label_image.max()) + 1
    keys = []
    for dy, dx in offsets:
        if (dy, dx) <= (0, 0):
            continue
        a = label_image[max(0, -dy) : h - max(0, dy), max(0, -dx) : w - max(0, dx)]
        b = label_image[max(0, dy) : h - max(0, -dy), max(0, dx) : w - max(0, -dx)]
        cross = a != b
        if cross.any():
            pa = a[cross].astype(np.int64)
            pb = b[cross].astype(np.int64)
            keys.append(np.minimum(pa, pb) * k + np.maximum(pa, pb))
    if not keys:
        return np.empty((0, 2), dtype=np.int64)
    uniq = np.unique(np.concatenate(keys))
    return np.stack([uniq // k, uniq % k], axis=1)


def run_ift(
    image: Image,
    topology: Topology,
    seeds: Sequence[int],
    mode: ArcCost = ArcCost.ROOT,
    saliency: SaliencyMap | None = None,
) -> tuple[ForestState, ForestStats]:
    """Grow one optimum-path tree per seed and aggregate per-tree statistics.

    Parameters
    ----------
    image : Image
    topology : Topology
        Must match the image dimensions.
    seeds : sequence of int
        Distinct raster indices. Tree ``j`` is rooted at ``seeds[j]``.
    mode : ArcCost
    saliency : SaliencyMap, optional
        Only feeds ``ForestStats.sal_sum``; it never affects delineation.
        Defaults to all ones.

    Returns
    -------
    forest : ForestState
    stats : ForestStats
    """
    if (topology.height, topology.width) != image.shape:
        raise DimensionMismatchError("topology and image dimensions differ")
    if saliency is not None and saliency.shape != image.shape:
        raise DimensionMismatchError("saliency and image dimensions differ")
    seeds = np.asarray(seeds, dtype=np.int64).ravel()
    n = topology.n_vertices
    if seeds.size == 0:
        raise ValueError("seed set is empty")
    if seeds.min() < 0 or seeds.max() >= n:
        raise ValueError("seed index out of range")
    if np.unique(seeds).size != seeds.size:
        raise ValueError("seeds must be distinct")
    mode = ArcCost(mode)

    feats = np.ascontiguousarray(image.flat_features(), dtype=np.float64)
    offsets = np.ascontiguousarray(topology.offsets)
    cost, root, pred, label, size, fsum = _ift_core(
        feats, topology.width, topology.height, offsets, seeds, mode is ArcCost.DYN
    )
    if (label < 0).any():
        raise ValueError("topology is disconnected: some vertices were not reached")

    sal = np.ones(n) if saliency is None else saliency.values.ravel()
    sal_sum = np.bincount(label, weights=sal, minlength=seeds.size)

    forest = ForestState(cost, root, pred, label, seeds.copy(), topology.width, topology.height)
    for arr in (cost, root, pred, label, forest.seeds):
        arr.setflags(write=False)
    adjacency = tree_adjacency(label.reshape(topology.height, topology.width), offsets)
    stats = ForestStats(size=size, feat_sum=fsum, sal_sum=sal_sum, adjacency=adjacency)
    return forest, stats
