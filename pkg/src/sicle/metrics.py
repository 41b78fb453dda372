"""Boundary Recall and Under-segmentation Error against a region ground truth."""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .imgio import DimensionMismatchError, LabelMap, border_mask, read_pnm

__all__ = [
    "GroundTruth",
    "MetricsReport",
    "load_ground_truth",
    "boundary_recall",
    "under_segmentation_error",
    "evaluate",
]

DEFAULT_TOLERANCE = 2


@dataclass(frozen=True, eq=False)
class GroundTruth:
    """Per-pixel region ids, shape (height, width). Any integer ids are allowed."""

    regions: np.ndarray

    def __post_init__(self):
        if np.asarray(self.regions).ndim != 2:
            raise ValueError("ground truth must be 2D")

    @property
    def shape(self) -> tuple[int, int]:
        return self.regions.shape


@dataclass(frozen=True)
class MetricsReport:
    br: float
    ue: float
    superpixel_count: int


def load_ground_truth(path: str | os.PathLike) -> GroundTruth:
    samples, _ = read_pnm(path)
    if samples.ndim != 2:
        raise ValueError(f"{path}: ground truth must be a PGM")
    return GroundTruth(samples)


def _as_labels(x) -> np.ndarray:
    if isinstance(x, LabelMap):
        return x.labels
    if isinstance(x, GroundTruth):
        return np.asarray(x.regions)
    return np.asarray(x)


def _check_dims(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionMismatchError(f"label map {a.shape} and ground truth {b.shape} differ")


def _dilate_chebyshev(mask: np.ndarray, radius: int) -> np.ndarray:
    """Binary dilation by a (2r+1) x (2r+1) square, done separably."""
    out = mask.copy()
    for axis in (0, 1):
        src = out.copy()
        n = src.shape[axis]
        for d in range(1, min(radius, n - 1) + 1):
            lo = [slice(None)] * 2
            hi = [slice(None)] * 2
            lo[axis] = slice(0, n - d)
            hi[axis] = slice(d, n)
            out[tuple(lo)] |= src[tuple(hi)]
            out[tuple(hi)] |= src[tuple(lo)]
    return out


def boundary_recall(label_map, gt, tolerance: int = DEFAULT_TOLERANCE) -> float:
    """Fraction of ground-truth boundary pixels with a superpixel border pixel
    within Chebyshev distance ``tolerance``.

    Boundary pixels on both sides are those having a differently labeled
    8-neighbor. A ground truth without any boundary scores 1.0.
    """
    labels, regions = _as_labels(label_map), _as_labels(gt)
    _check_dims(labels, regions)
    if tolerance < 0:
        raise ValueError("tolerance must be >= 0")
    gt_border = border_mask(regions)
    n_gt = int(gt_border.sum())
    if n_gt == 0:
        return 1.0
    near = _dilate_chebyshev(border_mask(labels), int(tolerance))
    return float(np.count_nonzero(near & gt_border)) / n_gt


def under_segmentation_error(label_map, gt) -> float:
    """(1/|V|) * sum over regions G and superpixels S touching G of min(|S & G|, |S - G|)."""
    labels, regions = _as_labels(label_map), _as_labels(gt)
    _check_dims(labels, regions)
    _, sp = np.unique(labels.ravel(), return_inverse=True)
    _, gr = np.unique(regions.ravel(), return_inverse=True)
    n_sp = sp.max() + 1
    # contingency table: superpixel x region pixel counts
    table = np.bincount(sp * (gr.max() + 1) + gr, minlength=n_sp * (gr.max() + 1))
    table = table.reshape(n_sp, -1)
    sp_size = table.sum(axis=1, keepdims=True)
    inside = table
    outside = sp_size - table
    err = np.where(inside > 0, np.minimum(inside, outside), 0).sum()
    return float(err) / labels.size


def evaluate(label_map: LabelMap, gt: GroundTruth, tolerance: int = DEFAULT_TOLERANCE) -> MetricsReport:
    return MetricsReport(
        br=boundary_recall(label_map, gt, tolerance),
        ue=under_segmentation_error(label_map, gt),
        superpixel_count=int(np.unique(_as_labels(label_map)).size),
    )
