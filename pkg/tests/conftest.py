"""Shared fixtures and independent reference implementations (oracles).

Nothing here imports the code paths it is used to check: the oracles work on
plain Python lists and sets.
"""

import math
from collections import deque
from itertools import product

import numpy as np
import pytest

from sicle.imgio import image_from_array

KING = [(dy, dx) for dy in (-1, 0, 1) for dx in (-1, 0, 1) if (dy, dx) != (0, 0)]


def lattice_neighbors(y, x, h, w):
    for dy, dx in KING:
        yy, xx = y + dy, x + dx
        if 0 <= yy < h and 0 <= xx < w:
            yield yy, xx


def euclid(a, b):
    acc = 0.0
    for u, v in zip(a, b):
        d = u - v
        acc += d * d
    return math.sqrt(acc)


def bottleneck_costs(feats, h, w, seeds, arc_ref):
    """Minimum over all paths from any seed of the maximum arc cost.

    ``arc_ref(x)`` gives the reference feature vector used for every arc
    leaving vertex ``x``; the cost of arc (x, y) is ||arc_ref(x) - F(y)||.
    For each candidate threshold (every arc cost, plus zero) we flood from
    the seeds over arcs no more expensive than it; the cost of a vertex is
    the smallest threshold that reaches it. No priority queue is involved.
    """
    n = h * w
    arcs = []
    for x in range(n):
        y0, x0 = divmod(x, w)
        for yy, xx in lattice_neighbors(y0, x0, h, w):
            y = yy * w + xx
            arcs.append((x, y, euclid(arc_ref(x), feats[y])))
    thresholds = sorted({0.0} | {c for _, _, c in arcs})
    best = [math.inf] * n
    for s in seeds:
        best[s] = 0.0
    for theta in thresholds:
        adj = [[] for _ in range(n)]
        for x, y, c in arcs:
            if c <= theta:
                adj[x].append(y)
        seen = set(seeds)
        q = deque(seeds)
        while q:
            x = q.popleft()
            for y in adj[x]:
                if y not in seen:
                    seen.add(y)
                    q.append(y)
        for v in seen:
            if best[v] == math.inf:
                best[v] = theta
        if all(b < math.inf for b in best):
            break
    return best


def components_8(labels):
    """Number of 8-connected components of each label (dict label -> count)."""
    labels = np.asarray(labels)
    h, w = labels.shape
    seen = np.zeros((h, w), bool)
    counts = {}
    for y, x in product(range(h), range(w)):
        if seen[y, x]:
            continue
        lab = labels[y, x]
        counts[lab] = counts.get(lab, 0) + 1
        seen[y, x] = True
        q = deque([(y, x)])
        while q:
            cy, cx = q.popleft()
            for yy, xx in lattice_neighbors(cy, cx, h, w):
                if not seen[yy, xx] and labels[yy, xx] == lab:
                    seen[yy, xx] = True
                    q.append((yy, xx))
    return counts


def assert_valid_partition(labels, k):
    labels = np.asarray(labels)
    assert labels.min() == 1
    assert sorted(set(labels.ravel().tolist())) == list(range(1, k + 1))
    comps = components_8(labels)
    assert all(c == 1 for c in comps.values()), comps


def ref_boundary_pixels(lab):
    h, w = len(lab), len(lab[0])
    return {
        (y, x)
        for y in range(h)
        for x in range(w)
        if any(lab[yy][xx] != lab[y][x] for yy, xx in lattice_neighbors(y, x, h, w))
    }


def ref_boundary_recall(labels, gt, tol):
    labels, gt = np.asarray(labels).tolist(), np.asarray(gt).tolist()
    g = ref_boundary_pixels(gt)
    if not g:
        return 1.0
    b = ref_boundary_pixels(labels)
    hit = sum(any(max(abs(y - v), abs(x - u)) <= tol for v, u in b) for y, x in g)
    return hit / len(g)


def ref_under_segmentation(labels, gt):
    labels, gt = np.asarray(labels), np.asarray(gt)
    n = labels.size
    sps = {}
    regs = {}
    for i, (s, g) in enumerate(zip(labels.ravel().tolist(), gt.ravel().tolist())):
        sps.setdefault(s, set()).add(i)
        regs.setdefault(g, set()).add(i)
    total = 0
    for G in regs.values():
        for S in sps.values():
            if S & G:
                total += min(len(S & G), len(S - G))
    return total / n


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def two_halves():
    """64x64 grayscale image: left half 0.25, right half 0.75."""
    px = np.full((64, 64), 0.25)
    px[:, 32:] = 0.75
    return image_from_array(px)


@pytest.fixture
def disk_image():
    """64x64 grayscale: disk of radius 16 (0.75) on a 0.25 background."""
    yy, xx = np.mgrid[0:64, 0:64]
    inside = (yy - 31.5) ** 2 + (xx - 31.5) ** 2 <= 16**2
    return image_from_array(np.where(inside, 0.75, 0.25))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
