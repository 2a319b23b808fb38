"""Synthetic generation and file-format checks."""

import numpy as np
import pytest

from hyptree.data import (
    FeatureTable,
    MatrixFormatError,
    add_noise_edges,
    cosine_dissimilarity,
    dasgupta_measurements,
    graph_leaf_shortest_paths,
    load_features,
    load_matrix,
    random_binary_tree,
    save_edge_list,
    save_features,
    save_matrix,
)
from hyptree.metrics import DistanceMatrix
from hyptree.trees import TreeStructureError, WeightedTree, leaf_distance_matrix, midpoint_root


class TestRandomBinaryTree:
    def test_two_leaves(self):
        t = random_binary_tree(2, 0)
        assert len(t.edges) == 1
        assert 0.0 <= t.edges[0][2] <= 1.0

    def test_deterministic(self):
        a = random_binary_tree(5, 123)
        b = random_binary_tree(5, 123)
        assert a.edges == b.edges

    def test_shape(self):
        t = random_binary_tree(10, 7)
        assert t.n_leaves == 10
        assert len(t.edges) == 2 * 10 - 3
        assert all(0.0 <= w <= 1.0 for _, _, w in t.edges)

    def test_rejects_tiny(self):
        with pytest.raises(ValueError):
            random_binary_tree(1, 0)

    def test_quartet_topology_frequencies(self):
        # at n = 4 the attachment process yields each of the three quartet
        # splits with probability 1/3
        counts = {"ab|cd": 0, "ac|bd": 0, "ad|bc": 0}
        for seed in range(3000):
            t = random_binary_tree(4, seed)
            dm = leaf_distance_matrix(t, unit=True)
            sums = {
                "ab|cd": dm.values[0, 1] + dm.values[2, 3],
                "ac|bd": dm.values[0, 2] + dm.values[1, 3],
                "ad|bc": dm.values[0, 3] + dm.values[1, 2],
            }
            counts[min(sums, key=sums.get)] += 1
        expected = 1000.0
        chi2 = sum((c - expected) ** 2 / expected for c in counts.values())
        # df = 2; 18.4 is far beyond the 0.9999 quantile
        assert chi2 < 18.4, counts


class TestAddNoiseEdges:
    def test_zero_rate_identity(self):
        t = random_binary_tree(8, 0)
        g = add_noise_edges(t, 0.0, 1)
        assert g.noise_edges == ()
        assert g.tree_edges == t.edges

    def test_count_formula(self):
        t = random_binary_tree(64, 0)
        g = add_noise_edges(t, 0.1, 1)
        assert len(g.noise_edges) == 13  # round(0.1 * 126)

    def test_half_up_rounding(self):
        t = random_binary_tree(6, 0)  # 2n - 2 = 10
        g = add_noise_edges(t, 0.25, 1)
        assert len(g.noise_edges) == 3  # floor(2.5 + 0.5)

    def test_deterministic(self):
        t = random_binary_tree(10, 0)
        a = add_noise_edges(t, 0.3, 5)
        b = add_noise_edges(t, 0.3, 5)
        assert a.noise_edges == b.noise_edges

    def test_no_duplicates_or_loops(self):
        t = random_binary_tree(12, 3)
        g = add_noise_edges(t, 0.5, 4)
        seen = {frozenset((u, v)) for u, v, _ in t.edges}
        for u, v, _ in g.noise_edges:
            assert u != v
            key = frozenset((u, v))
            assert key not in seen or seen.remove(key)
            seen.add(key)

    def test_too_many_requested(self):
        t = random_binary_tree(3, 0)  # 4 vertices, 3 edges, 3 free slots
        with pytest.raises(TreeStructureError):
            add_noise_edges(t, 2.0, 0)


class TestShortestPaths:
    def test_no_noise_equals_tree_metric(self):
        t = random_binary_tree(9, 2)
        g = add_noise_edges(t, 0.0, 0)
        dm = graph_leaf_shortest_paths(g)
        assert np.allclose(dm.values, leaf_distance_matrix(t).values, atol=1e-12)

    def test_triangle_shortcut(self):
        # path a - b - c with weights 1, 3 plus a shortcut (a, c) of weight 1
        from hyptree.data import NoisyGraph

        tree = WeightedTree(
            (0, 1, 2, 3),
            ((0, 1, 1.0), (1, 2, 3.0), (1, 3, 0.0)),
            {0: "a", 2: "c", 3: "b"},
        )
        g = NoisyGraph(tree.vertices, tree.edges, ((0, 2, 1.0),), dict(tree.leaf_labels))
        dm = graph_leaf_shortest_paths(g)
        ia, ib, ic = dm.labels.index("a"), dm.labels.index("b"), dm.labels.index("c")
        assert dm.values[ia, ic] == 1.0
        assert dm.values[ib, ic] == 2.0  # through a

    def test_metric_properties(self):
        t = random_binary_tree(16, 5)
        g = add_noise_edges(t, 0.4, 6)
        dm = graph_leaf_shortest_paths(g)
        v = dm.values
        assert np.array_equal(v, v.T)
        assert np.all(np.diag(v) == 0.0)
        n = dm.n
        for x in range(n):
            for y in range(n):
                for z in range(n):
                    assert v[x, y] <= v[x, z] + v[z, y] + 1e-9

    def test_shortcuts_never_increase(self):
        t = random_binary_tree(12, 8)
        base = leaf_distance_matrix(t)
        g = add_noise_edges(t, 0.5, 9)
        noisy = graph_leaf_shortest_paths(g)
        assert np.all(noisy.values <= base.values + 1e-12)


class TestDasguptaMeasurements:
    def test_triplet(self):
        t = WeightedTree(
            (0, 1, 2, 3, 4),
            ((0, 3, 0.5), (1, 3, 0.5), (3, 4, 0.5), (2, 4, 1.0)),
            {0: "a", 1: "b", 2: "c"},
            root=4,
        )
        dm = dasgupta_measurements(t)
        assert dm.values[0, 1] == 2.0
        assert dm.values[0, 2] == 3.0

    def test_root_pairs_get_n(self):
        t = midpoint_root(random_binary_tree(10, 4))
        dm = dasgupta_measurements(t)
        assert dm.pair_vector().max() == 10.0

    def test_unrooted_rejected(self):
        with pytest.raises(ValueError):
            dasgupta_measurements(random_binary_tree(5, 0))


class TestCosine:
    def test_identical_rows(self):
        ft = FeatureTable(["u", "v"], [[1.0, 2.0], [2.0, 4.0]])
        dm = cosine_dissimilarity(ft)
        assert dm.values[0, 1] == pytest.approx(0.0, abs=1e-15)

    def test_orthogonal_rows(self):
        ft = FeatureTable(["u", "v"], [[1.0, 0.0], [0.0, 1.0]])
        assert cosine_dissimilarity(ft).values[0, 1] == 1.0

    def test_antipodal_rows(self):
        ft = FeatureTable(["u", "v"], [[1.0, 0.0], [-1.0, 0.0]])
        assert cosine_dissimilarity(ft).values[0, 1] == 2.0

    def test_zero_row_named(self):
        with pytest.raises(MatrixFormatError, match="bad_row"):
            FeatureTable(["ok", "bad_row"], [[1.0, 0.0], [0.0, 0.0]])


class TestMatrixFiles:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(40)
        raw = rng.random((5, 5))
        vals = np.triu(raw, 1)
        dm = DistanceMatrix([f"s{i}" for i in range(5)], vals + vals.T)
        path = tmp_path / "m.txt"
        save_matrix(dm, path)
        back = load_matrix(path)
        assert back.labels == dm.labels
        assert np.array_equal(back.values, dm.values)

    def test_asymmetric_rejected(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("a\tb\n0\t1.0\n0.5\t0\n")
        with pytest.raises(MatrixFormatError, match="asymmetry"):
            load_matrix(path)

    def test_negative_located(self, tmp_path):
        path = tmp_path / "neg.txt"
        path.write_text("a\tb\n0\t-1.0\n-1.0\t0\n")
        with pytest.raises(MatrixFormatError, match="row 1"):
            load_matrix(path)

    def test_nan_located(self, tmp_path):
        path = tmp_path / "nan.txt"
        path.write_text("a\tb\n0\tnan\nnan\t0\n")
        with pytest.raises(MatrixFormatError, match="non-finite"):
            load_matrix(path)

    def test_comma_separated(self, tmp_path):
        path = tmp_path / "csv.txt"
        path.write_text("a,b,c\n0,1,2\n1,0,3\n2,3,0\n")
        dm = load_matrix(path)
        assert dm.labels == ["a", "b", "c"]
        assert dm.values[1, 2] == 3.0

    def test_row_count_mismatch(self, tmp_path):
        path = tmp_path / "short.txt"
        path.write_text("a\tb\n0\t1\n")
        with pytest.raises(MatrixFormatError, match="rows"):
            load_matrix(path)


class TestFeatureFiles:
    def test_round_trip(self, tmp_path):
        ft = FeatureTable(["u", "v"], [[0.5, 1.5, -2.0], [3.0, 0.25, 1.0]])
        path = tmp_path / "f.txt"
        save_features(ft, path)
        back = load_features(path)
        assert back.labels == ft.labels
        assert np.array_equal(back.features, ft.features)

    def test_bad_field_count(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("label\tf0\tf1\nu\t1.0\n")
        with pytest.raises(MatrixFormatError, match="row 1"):
            load_features(path)

    def test_edge_list(self, tmp_path):
        t = random_binary_tree(5, 0)
        g = add_noise_edges(t, 0.5, 1)
        path = tmp_path / "g.tsv"
        save_edge_list(g, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "u\tv\tweight\tkind"
        kinds = {ln.split("\t")[3] for ln in lines[1:]}
        assert kinds == {"tree", "noise"}


class TestNoiseDeltaInvariant:
    def test_zero_rate_zero_delta_positive_rate_positive(self):
        from hyptree.metrics import delta_exact

        positive = 0
        for seed in range(20):
            t = random_binary_tree(64, seed)
            clean = graph_leaf_shortest_paths(add_noise_edges(t, 0.0, seed))
            assert delta_exact(clean).delta <= 1e-12
            noisy = graph_leaf_shortest_paths(add_noise_edges(t, 0.3, seed))
            if delta_exact(noisy).delta > 1e-9:
                positive += 1
        assert positive >= 19
