import numpy as np
import pytest

from sicle.seeding import Sampling, SamplingSpec, grid_shape, sample, sample_grid, sample_random


class TestGrid:
    def test_200x100_n50(self):
        assert grid_shape(200, 100, 50) == (10, 5)
        seeds = sample_grid(200, 100, 50)
        assert len(seeds) == 50
        ys, xs = np.divmod(seeds, 200)
        assert np.unique(np.diff(np.unique(xs))).tolist() == [20]
        assert np.unique(np.diff(np.unique(ys))).tolist() == [20]
        assert xs.min() == 10 and ys.min() == 10

    @pytest.mark.parametrize("k", [1, 3, 8])
    def test_square(self, k):
        seeds = sample_grid(24, 24, k * k)
        assert len(seeds) == k * k
        ys, xs = np.divmod(seeds, 24)
        assert np.unique(xs).tolist() == np.unique(ys).tolist()

    def test_3x1_single_seed_request(self):
        # lx*c = 3*sqrt(1/3) = 1.73 rounds to 2 cells across, 1 down
        assert grid_shape(3, 1, 1) == (2, 1)
        assert sample_grid(3, 1, 1).tolist() == [0, 2]

    def test_1x1(self):
        assert sample_grid(1, 1, 1).tolist() == [0]

    @pytest.mark.parametrize("w,h", [(100, 100), (481, 321), (512, 512), (7, 90)])
    @pytest.mark.parametrize("n0", [1, 10, 100, 1000])
    def test_distinct_in_range_and_close_to_n0(self, w, h, n0):
        if n0 > w * h:
            return
        seeds = sample_grid(w, h, n0)
        kx, ky = grid_shape(w, h, n0)
        assert len(set(seeds.tolist())) == len(seeds) == kx * ky
        assert seeds.min() >= 0 and seeds.max() < w * h
        if min(kx, ky) > 1:
            assert abs(len(seeds) - n0) <= n0 / min(kx, ky) + 1

    def test_degenerate(self):
        with pytest.raises(ValueError):
            sample_grid(0, 5, 1)
        with pytest.raises(ValueError):
            sample_grid(5, 5, 0)


class TestRandom:
    def test_exhaustive(self):
        assert sorted(sample_random(4, 3, 12, 1).tolist()) == list(range(12))

    def test_deterministic(self):
        a = sample_random(100, 100, 10, 42)
        assert a.tolist() == sample_random(100, 100, 10, 42).tolist()
        assert len(set(a.tolist())) == 10

    def test_uniform_over_two_pixels(self):
        rng = np.random.default_rng(2024)
        draws = [sample_random(2, 1, 1, int(s))[0] for s in rng.integers(0, 2**63, 10_000)]
        assert abs(np.mean(draws) - 0.5) <= 0.02

    def test_too_many(self):
        with pytest.raises(ValueError):
            sample_random(2, 2, 5, 0)


def test_dispatch():
    assert sample(SamplingSpec(Sampling.GRID, 4, 0), 4, 4).tolist() == sample_grid(4, 4, 4).tolist()
    assert sample(SamplingSpec(Sampling.RND, 4, 9), 4, 4).tolist() == sample_random(4, 4, 4, 9).tolist()
    with pytest.raises(ValueError):
        sample(SamplingSpec(Sampling.GRID, 17, 0), 4, 4)
