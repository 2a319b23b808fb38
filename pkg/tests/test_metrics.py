"""Distance-matrix container, hyperbolicity, and cost checks."""

import itertools

import numpy as np
import pytest

from hyptree.metrics import (
    DistanceMatrix,
    delta_exact,
    delta_sampled,
    four_point_check,
    gromov_product,
    lp_cost,
    ultrametric_check,
)

QUARTET = DistanceMatrix(
    ["a", "b", "c", "d"],
    [[0, 2, 3, 3], [2, 0, 3, 3], [3, 3, 0, 2], [3, 3, 2, 0]],
)

FOUR_CYCLE = DistanceMatrix(
    ["w", "x", "y", "z"],
    [[0, 1, 2, 1], [1, 0, 1, 2], [2, 1, 0, 1], [1, 2, 1, 0]],
)


def delta_definition_oracle(values: np.ndarray) -> float:
    """Direct four-point statement: max over all labelings of distinct quadruples."""
    n = values.shape[0]
    worst = 0.0
    for quad in itertools.combinations(range(n), 4):
        for r, x, y, z in itertools.permutations(quad):
            gp_xy = 0.5 * (values[r, x] + values[r, y] - values[x, y])
            gp_xz = 0.5 * (values[r, x] + values[r, z] - values[x, z])
            gp_yz = 0.5 * (values[r, y] + values[r, z] - values[y, z])
            worst = max(worst, min(gp_xz, gp_yz) - gp_xy)
    return worst


def dyadic_matrix(rng, n):
    """Random symmetric matrix with entries k/16: both delta routes are exact."""
    raw = rng.integers(1, 64, size=(n, n)) / 16.0
    vals = np.triu(raw, 1)
    return DistanceMatrix([str(i) for i in range(n)], vals + vals.T)


class TestDistanceMatrix:
    def test_asymmetric_rejected(self):
        with pytest.raises(ValueError, match="asymmetry"):
            DistanceMatrix(["a", "b"], [[0, 1], [0.5, 0]])

    def test_tiny_asymmetry_averaged(self):
        dm = DistanceMatrix(["a", "b"], [[0, 1 + 1e-9], [1, 0]])
        assert dm.values[0, 1] == dm.values[1, 0]

    def test_negative_rejected(self):
        with pytest.raises(ValueError, match="negative"):
            DistanceMatrix(["a", "b"], [[0, -1], [-1, 0]])

    def test_diagonal_forced_zero(self):
        dm = DistanceMatrix(["a", "b"], [[1e-10, 1], [1, 1e-10]])
        assert dm.values[0, 0] == 0.0

    def test_duplicate_labels_rejected(self):
        with pytest.raises(ValueError, match="unique"):
            DistanceMatrix(["a", "a"], [[0, 1], [1, 0]])

    def test_reordered(self):
        out = QUARTET.reordered(["d", "c", "b", "a"])
        assert out.values[0, 1] == 2.0
        assert out.values[0, 3] == 3.0


class TestGromovProduct:
    def test_self_product_is_distance(self):
        assert gromov_product(QUARTET, 1, 1, 2) == QUARTET.values[2, 1]

    def test_base_at_endpoint_is_zero(self):
        assert gromov_product(QUARTET, 0, 1, 0) == 0.0

    def test_quartet_hand_value(self):
        # (a, b)_c = (3 + 3 - 2) / 2 = 2
        assert gromov_product(QUARTET, 0, 1, 2) == 2.0

    def test_index_error(self):
        with pytest.raises(IndexError):
            gromov_product(QUARTET, 0, 1, 9)


class TestDeltaExact:
    def test_tree_metric_is_zero(self):
        assert delta_exact(QUARTET).delta <= 1e-12

    def test_four_cycle_is_one(self):
        rep = delta_exact(FOUR_CYCLE)
        assert rep.delta == 1.0
        assert rep.quadruples_evaluated == 1

    def test_homogeneity(self):
        rng = np.random.default_rng(11)
        dm = dyadic_matrix(rng, 7)
        base = delta_exact(dm).delta
        for s in (0.5, 2.0, 8.0):
            assert delta_exact(dm.scaled(s)).delta == pytest.approx(
                s * base, abs=1e-12
            )

    def test_small_n_is_zero(self):
        dm = DistanceMatrix(["a", "b", "c"], [[0, 1, 2], [1, 0, 3], [2, 3, 0]])
        assert delta_exact(dm).delta == 0.0

    def test_matches_definition_oracle(self):
        rng = np.random.default_rng(12)
        for _ in range(10):
            dm = dyadic_matrix(rng, int(rng.integers(4, 9)))
            assert delta_exact(dm).delta == delta_definition_oracle(dm.values)


class TestDeltaSampled:
    def test_tree_metric_zero(self):
        assert delta_sampled(QUARTET, 500, seed=3).delta == 0.0

    def test_deterministic(self):
        rng = np.random.default_rng(13)
        dm = dyadic_matrix(rng, 8)
        a = delta_sampled(dm, 2000, seed=42)
        b = delta_sampled(dm, 2000, seed=42)
        assert a.delta == b.delta

    def test_lower_bounds_exact(self):
        rng = np.random.default_rng(14)
        for seed in range(5):
            dm = dyadic_matrix(rng, 8)
            assert delta_sampled(dm, 300, seed=seed).delta <= delta_exact(dm).delta

    def test_exhaustive_coincidence_small(self):
        # n = 5 has only five quadruples; 5000 samples cover them all
        rng = np.random.default_rng(15)
        dm = dyadic_matrix(rng, 5)
        assert delta_sampled(dm, 5000, seed=0).delta == delta_exact(dm).delta

    def test_sample_count_validated(self):
        with pytest.raises(ValueError):
            delta_sampled(QUARTET, 0, seed=0)


class TestFourPointCheck:
    def test_tree_metric_true(self):
        assert four_point_check(QUARTET, 1e-9)

    def test_four_cycle_false_at_half(self):
        assert not four_point_check(FOUR_CYCLE, 0.5)

    def test_matches_delta_by_factor_two(self):
        # sum-form slack tol corresponds to delta <= tol / 2
        rng = np.random.default_rng(16)
        for _ in range(10):
            dm = dyadic_matrix(rng, 7)
            delta = delta_exact(dm).delta
            assert four_point_check(dm, 2.0 * delta)
            if delta > 0:
                assert not four_point_check(dm, 2.0 * delta - 1e-9)


class TestUltrametricCheck:
    def test_path_tree_fails(self):
        # path a - b - c with weights 1, 3: d(a, c) = 4 > max(1, 3)
        dm = DistanceMatrix(["a", "b", "c"], [[0, 1, 4], [1, 0, 3], [4, 3, 0]])
        assert not ultrametric_check(dm, 0.5)

    def test_cophenetic_passes(self):
        dm = DistanceMatrix(
            ["a", "b", "c"], [[0, 1, 2], [1, 0, 2], [2, 2, 0]]
        )
        assert ultrametric_check(dm, 1e-12)

    def test_ultrametric_implies_four_point(self):
        rng = np.random.default_rng(17)
        for _ in range(10):
            # random ultrametric via random merge heights
            heights = np.sort(rng.random(3))
            dm = DistanceMatrix(
                ["a", "b", "c", "d"],
                [
                    [0, heights[0], heights[2], heights[2]],
                    [heights[0], 0, heights[2], heights[2]],
                    [heights[2], heights[2], 0, heights[1]],
                    [heights[2], heights[2], heights[1], 0],
                ],
            )
            assert ultrametric_check(dm, 1e-12)
            assert four_point_check(dm, 1e-12)


class TestLpCost:
    def test_zero_when_equal(self):
        assert lp_cost(QUARTET, QUARTET, 2.0) == 0.0

    def test_single_pair(self):
        a = DistanceMatrix(["x", "y"], [[0, 5], [5, 0]])
        b = DistanceMatrix(["x", "y"], [[0, 2], [2, 0]])
        assert lp_cost(a, b, 2.0) == 3.0

    def test_pythagorean(self):
        a = DistanceMatrix(["x", "y", "z"], [[0, 3, 4], [3, 0, 0], [4, 0, 0]])
        b = DistanceMatrix(["x", "y", "z"], [[0, 0, 0], [0, 0, 0], [0, 0, 0]])
        assert lp_cost(a, b, 2.0) == 5.0

    def test_p_below_one_rejected(self):
        with pytest.raises(ValueError):
            lp_cost(QUARTET, QUARTET, 0.5)

    def test_label_mismatch_rejected(self):
        other = DistanceMatrix(["a", "b", "c", "e"], QUARTET.values)
        with pytest.raises(ValueError):
            lp_cost(QUARTET, other, 2.0)


class TestDeltaFourPointEquivalence:
    def test_zero_delta_iff_four_point(self):
        rng = np.random.default_rng(18)
        from hyptree.data import random_binary_tree
        from hyptree.trees import leaf_distance_matrix

        for seed in range(5):
            tree_dm = leaf_distance_matrix(random_binary_tree(8, seed))
            assert delta_exact(tree_dm).delta <= 1e-12
            assert four_point_check(tree_dm, 1e-12)
        for _ in range(5):
            dm = dyadic_matrix(rng, 8)
            zero = delta_exact(dm).delta <= 1e-12
            assert four_point_check(dm, 1e-12) == zero
