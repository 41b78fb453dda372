from functools import reduce

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import assert_valid_partition, bottleneck_costs
from sicle.graph import Topology
from sicle.ift import (
    ArcCost,
    TreeStats,
    path_cost_fmax,
    run_ift,
    tree_mean_features,
)
from sicle.imgio import DimensionMismatchError, SaliencyMap, image_from_array


def gray(rows):
    return image_from_array(np.asarray(rows, dtype=float))


def run(img, seeds, mode=ArcCost.ROOT, saliency=None):
    return run_ift(img, Topology(img.width, img.height), seeds, mode, saliency)


class TestExamples:
    def test_flat_pair_one_seed(self):
        forest, stats = run(gray([[0.0, 0.0]]), [0])
        assert forest.label.tolist() == [0, 0]
        assert forest.cost.tolist() == [0.0, 0.0]

    def test_row_of_three(self):
        forest, _ = run(gray([[0.0, 0.0, 1.0]]), [0, 2])
        assert forest.label.tolist() == [0, 0, 1]
        assert forest.cost[1] == 0.0

    def test_two_flat_halves(self):
        px = np.zeros((4, 4))
        px[:, 2:] = 1.0
        img = gray(px)
        forest, _ = run(img, [5, 10])
        expected = np.where(np.arange(16).reshape(4, 4) % 4 < 2, 0, 1).ravel()
        assert forest.label.tolist() == expected.tolist()
        assert np.all(forest.cost == 0.0)
        # brute-force optimum path check over all 16 vertices
        ref = bottleneck_costs(img.flat_features().tolist(), 4, 4, [5, 10],
                               lambda x: img.flat_features()[forest.root[x]].tolist())
        assert forest.cost.tolist() == ref


class TestPathCost:
    @pytest.mark.parametrize("prefix,arc,expected", [(0, 5, 5), (7, 3, 7), (2.5, 2.5, 2.5)])
    def test_max(self, prefix, arc, expected):
        assert path_cost_fmax(prefix, arc) == expected

    def test_chain_fold(self):
        assert reduce(path_cost_fmax, [2, 9, 4], 0) == 9


class TestMeanFeatures:
    def test_single(self):
        assert tree_mean_features(TreeStats(1, np.array([0.4]), 1.0, frozenset())).tolist() == [0.4]

    def test_pair(self):
        stats = TreeStats(2, np.array([0.0, 0.0]) + np.array([1.0, 1.0]), 2.0, frozenset())
        assert tree_mean_features(stats).tolist() == [0.5, 0.5]

    def test_four_from_forest(self):
        _, stats = run(gray([[0.0, 0.0, 1.0, 1.0]]), [0])
        assert tree_mean_features(stats[0]).tolist() == [0.5]

    def test_empty(self):
        with pytest.raises(ValueError):
            tree_mean_features(TreeStats(0, np.zeros(1), 0.0, frozenset()))


class TestErrors:
    def test_empty_seeds(self):
        with pytest.raises(ValueError):
            run(gray([[0.0, 1.0]]), [])

    def test_duplicate_or_out_of_range(self):
        with pytest.raises(ValueError):
            run(gray([[0.0, 1.0]]), [0, 0])
        with pytest.raises(ValueError):
            run(gray([[0.0, 1.0]]), [2])

    def test_dimension_mismatch(self):
        img = gray([[0.0, 1.0]])
        with pytest.raises(DimensionMismatchError):
            run_ift(img, Topology(1, 2), [0])
        with pytest.raises(DimensionMismatchError):
            run(img, [0], saliency=SaliencyMap(np.ones((2, 1))))


def random_case(rng, max_side=8, channels=1):
    h, w = rng.integers(1, max_side + 1, size=2)
    shape = (h, w) if channels == 1 else (h, w, 3)
    img = image_from_array(rng.random(shape))
    k = int(rng.integers(1, min(6, h * w) + 1))
    seeds = rng.choice(h * w, size=k, replace=False)
    sal = SaliencyMap(rng.random((h, w)))
    return img, seeds, sal


def check_forest(img, seeds, forest, stats, sal):
    n = img.width * img.height
    seed_set = set(seeds.tolist())
    # seeds: cost 0, no predecessor
    for s in seeds:
        assert forest.cost[s] == 0.0 and forest.pred[s] == -1
    for x in range(n):
        # the predecessor chain ends at a seed equal to root(x); costs are monotone
        chain, v = [x], x
        while forest.pred[v] != -1:
            v = forest.pred[v]
            chain.append(v)
            assert len(chain) <= n
        assert v in seed_set and forest.root[x] == v
        costs = [forest.cost[c] for c in reversed(chain)]
        assert all(a <= b for a, b in zip(costs, costs[1:]))
        assert np.isfinite(forest.cost[x])
    assert_valid_partition(forest.label_image(), len(seeds))
    for j, s in enumerate(seeds):
        assert forest.label[s] == j
    # stats conservation and consistency
    assert stats.size.sum() == n
    assert abs(stats.sal_sum.sum() - sal.values.sum()) <= 1e-9 * n
    feats = img.flat_features()
    for j in range(len(seeds)):
        members = feats[forest.label == j]
        assert stats.size[j] == len(members)
        mean = tree_mean_features(stats[j])
        assert np.all(mean >= members.min(axis=0) - 1e-12)
        assert np.all(mean <= members.max(axis=0) + 1e-12)
        for t in stats[j].neighbor_ids:
            assert j in stats[t].neighbor_ids


@pytest.mark.parametrize("mode", list(ArcCost))
@pytest.mark.parametrize("channels", [1, 3])
def test_forest_invariants(mode, channels):
    rng = np.random.default_rng(7 + channels)
    for _ in range(30):
        img, seeds, sal = random_case(rng, channels=channels)
        forest, stats = run(img, seeds, mode, sal)
        check_forest(img, seeds, forest, stats, sal)


def test_adjacency_matches_brute_force():
    rng = np.random.default_rng(99)
    for _ in range(20):
        img, seeds, _ = random_case(rng, max_side=10)
        forest, stats = run(img, seeds)
        lab = forest.label_image()
        h, w = lab.shape
        pairs = set()
        for y in range(h):
            for x in range(w):
                for dy in (-1, 0, 1):
                    for dx in (-1, 0, 1):
                        yy, xx = y + dy, x + dx
                        if 0 <= yy < h and 0 <= xx < w and lab[y, x] != lab[yy, xx]:
                            a, b = lab[y, x] - 1, lab[yy, xx] - 1
                            pairs.add((min(a, b), max(a, b)))
        assert set(map(tuple, stats.adjacency.tolist())) == pairs


@pytest.mark.parametrize("mode", list(ArcCost))
def test_deterministic(mode):
    rng = np.random.default_rng(5)
    img = image_from_array(rng.random((20, 30, 3)))
    seeds = rng.choice(600, 25, replace=False)
    a, sa = run(img, seeds, mode)
    b, sb = run(img, seeds, mode)
    for f in ("cost", "root", "pred", "label"):
        assert getattr(a, f).tobytes() == getattr(b, f).tobytes()
    assert sa.feat_sum.tobytes() == sb.feat_sum.tobytes()


def test_single_seed_root_costs_are_globally_optimal():
    # with one seed the ROOT arc costs do not depend on the forest at all
    rng = np.random.default_rng(21)
    for _ in range(40):
        h, w = rng.integers(1, 6, size=2)
        img = image_from_array(rng.random((h, w)))
        s = int(rng.integers(h * w))
        forest, _ = run(img, [s])
        feats = img.flat_features().tolist()
        ref = bottleneck_costs(feats, h, w, [s], lambda x: feats[s])
        assert forest.cost.tolist() == ref


def test_fifo_tie_break_on_flat_image():
    # flat image: all costs 0; the earlier seed wins every tie it reaches first
    forest, _ = run(gray(np.zeros((1, 5))), [0, 4])
    assert forest.label.tolist() == [0, 0, 0, 1, 1]
    forest, _ = run(gray(np.zeros((1, 5))), [4, 0])
    assert forest.label.tolist() == [1, 1, 0, 0, 0]


def test_dyn_uses_running_tree_mean():
    # seed 0 (0.0); pixel 1 (0.4) joins at cost 0.4; the tree mean becomes 0.2,
    # so pixel 2 (0.6) costs |0.2-0.6| = 0.4 under DYN but 0.6 under ROOT.
    img = gray([[0.0, 0.4, 0.6]])
    dyn, _ = run(img, [0], ArcCost.DYN)
    root, _ = run(img, [0], ArcCost.ROOT)
    assert dyn.cost[2] == pytest.approx(0.4)
    assert root.cost[2] == pytest.approx(0.6)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_saliency_never_changes_delineation(seed):
    rng = np.random.default_rng(seed)
    img, seeds, sal = random_case(rng)
    a, _ = run(img, seeds, ArcCost.DYN, sal)
    b, _ = run(img, seeds, ArcCost.DYN, None)
    assert a.label.tobytes() == b.label.tobytes()
    assert a.cost.tobytes() == b.cost.tobytes()
