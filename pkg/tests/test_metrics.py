import numpy as np
import pytest

from hypershape import metrics
from hypershape.errors import ContractViolationError
from hypershape.shape_codec import TsdfGrid, default_tau


def grid_from_occupancy(occ):
    r = occ.shape[0]
    tau = default_tau(r)
    values = np.where(occ, -1.0, 1.0).astype(np.float32)
    return TsdfGrid(np.clip(values, -tau, tau), tau)


def cube_grid(r=16, lo=4, hi=8):
    occ = np.zeros((r, r, r), dtype=bool)
    occ[lo:hi, lo:hi, lo:hi] = True
    return grid_from_occupancy(occ)


class TestIou:
    def test_identical(self):
        g = cube_grid()
        assert metrics.iou(g, g) == 100.0

    def test_disjoint(self):
        a = cube_grid(lo=0, hi=4)
        b = cube_grid(lo=8, hi=12)
        assert metrics.iou(a, b) == 0.0

    def test_partial_overlap(self):
        # |A| = |B| = 8, overlap 4 -> 4/12
        occ_a = np.zeros((8, 8, 8), dtype=bool)
        occ_a[0:2, 0:2, 0:2] = True
        occ_b = np.zeros((8, 8, 8), dtype=bool)
        occ_b[0:2, 0:2, 1:3] = True
        v = metrics.iou(grid_from_occupancy(occ_a), grid_from_occupancy(occ_b))
        assert abs(v - 100.0 * 4 / 12) < 1e-9

    def test_both_empty(self):
        empty = grid_from_occupancy(np.zeros((8, 8, 8), dtype=bool))
        assert metrics.iou(empty, empty) == 100.0

    def test_symmetric_and_bounded(self):
        rng = np.random.default_rng(0)
        a = grid_from_occupancy(rng.uniform(size=(8, 8, 8)) < 0.3)
        b = grid_from_occupancy(rng.uniform(size=(8, 8, 8)) < 0.3)
        assert metrics.iou(a, b) == metrics.iou(b, a)
        assert 0 <= metrics.iou(a, b) <= 100

    def test_resolution_mismatch(self):
        with pytest.raises(ContractViolationError):
            metrics.iou(cube_grid(16), cube_grid(8, 2, 4))


class TestFps:
    def test_full_sample_is_permutation(self):
        pts = np.random.default_rng(1).uniform(size=(10, 3))
        out = metrics.fps(pts, 10)
        assert sorted(map(tuple, out)) == sorted(map(tuple, pts))

    def test_collinear_hand_trace(self):
        pts = np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0], [10, 0, 0]], dtype=float)
        out = metrics.fps(pts, 2)
        np.testing.assert_array_equal(out, [[0, 0, 0], [10, 0, 0]])

    def test_deterministic(self):
        pts = np.random.default_rng(2).uniform(size=(50, 3))
        np.testing.assert_array_equal(metrics.fps(pts, 10), metrics.fps(pts, 10))

    def test_subset_of_input(self):
        pts = np.random.default_rng(3).uniform(size=(30, 3))
        out = metrics.fps(pts, 7)
        pts_set = set(map(tuple, pts))
        assert all(tuple(p) in pts_set for p in out)

    def test_matches_bruteforce_greedy(self):
        rng = np.random.default_rng(4)
        pts = rng.uniform(size=(40, 3))
        n = 8
        # brute-force greedy oracle, seed index 0
        chosen = [0]
        while len(chosen) < n:
            best, best_d = -1, -1.0
            for i in range(len(pts)):
                d = min(np.sum((pts[i] - pts[j]) ** 2) for j in chosen)
                if d > best_d:
                    best, best_d = i, d
            chosen.append(best)
        np.testing.assert_array_equal(metrics.fps(pts, n), pts[chosen])

    def test_too_many_requested(self):
        with pytest.raises(ContractViolationError):
            metrics.fps(np.zeros((3, 3)), 4)


class TestChamfer:
    def test_identical_zero(self):
        pts = np.random.default_rng(5).uniform(size=(20, 3))
        assert metrics.chamfer(pts, pts) < 1e-12

    def test_single_points(self):
        assert metrics.chamfer([[0, 0, 0]], [[1, 0, 0]]) == pytest.approx(2.0)

    def test_asymmetric_sets(self):
        a = [[0, 0, 0], [2, 0, 0]]
        b = [[1, 0, 0]]
        assert metrics.chamfer(a, b) == pytest.approx(2.0)  # (1+1)/2 + 1

    def test_symmetric_order_invariant(self):
        rng = np.random.default_rng(6)
        a, b = rng.uniform(size=(15, 3)), rng.uniform(size=(12, 3))
        assert metrics.chamfer(a, b) == pytest.approx(metrics.chamfer(b, a))
        perm = rng.permutation(15)
        assert metrics.chamfer(a[perm], b) == pytest.approx(metrics.chamfer(a, b))

    def test_empty_rejected(self):
        with pytest.raises(ContractViolationError):
            metrics.chamfer(np.zeros((0, 3)), [[0, 0, 0]])


class TestFscore:
    def test_identical(self):
        pts = np.random.default_rng(7).uniform(size=(20, 3))
        assert metrics.fscore(pts, pts, threshold=0.01) == 100.0

    def test_harmonic_mean(self):
        # P = 0.5 (1 of 2 within range), R = 1.0
        a = np.array([[0.0, 0, 0], [5.0, 0, 0]])
        b = np.array([[0.0, 0, 0]])
        assert metrics.fscore(a, b, threshold=0.5) == pytest.approx(200 * 0.5 / 1.5)

    def test_all_far(self):
        a = np.array([[0.0, 0, 0]])
        b = np.array([[9.0, 0, 0]])
        assert metrics.fscore(a, b, threshold=0.5) == 0.0

    def test_monotone_in_threshold(self):
        rng = np.random.default_rng(8)
        a, b = rng.uniform(size=(30, 3)), rng.uniform(size=(30, 3))
        scores = [metrics.fscore(a, b, threshold=t) for t in (0.05, 0.1, 0.2, 0.5)]
        assert all(s2 >= s1 for s1, s2 in zip(scores, scores[1:]))


class TestHierarchyMetrics:
    def test_hmd_identical_lists(self):
        g = [cube_grid(), cube_grid()]
        assert metrics.hmd(g, g) < 1e-12

    def test_hmd_single_pair_equals_chamfer(self):
        a, b = cube_grid(lo=2, hi=6), cube_grid(lo=6, hi=10)
        expect = metrics.chamfer(metrics.shape_cloud(a), metrics.shape_cloud(b))
        assert metrics.hmd([a], [b]) == pytest.approx(expect)

    def test_hmd_length_mismatch(self):
        with pytest.raises(ContractViolationError):
            metrics.hmd([cube_grid()], [])

    def test_hd_origin(self):
        assert metrics.hd(np.zeros((5, 3))) == (0.0, 0.0, 0.0)

    def test_hd_single_generation(self):
        row = np.array([[1.0, 2.0, 3.0]])
        assert metrics.hd(row) == (1.0, 2.0, 3.0)

    def test_hd_empty_rejected(self):
        with pytest.raises(ContractViolationError):
            metrics.hd(np.zeros((0, 3)))

    def test_surface_points_touching_edge(self):
        occ = np.zeros((8, 8, 8), dtype=bool)
        occ[0:3, 0:3, 0:3] = True
        pts = metrics.surface_points(grid_from_occupancy(occ))
        assert (pts == 0.5).any()  # corner voxel at the grid edge is surface
