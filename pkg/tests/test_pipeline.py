"""Pipeline orchestration and objective-study checks."""

import numpy as np
import pytest
import scipy.optimize

import hyptree.pipeline as pipeline_mod
from hyptree.data import add_noise_edges, graph_leaf_shortest_paths, random_binary_tree
from hyptree.decoders import dendrogram_to_ultrametric, linkage, neighbor_joining
from hyptree.embedding import EncoderConfig
from hyptree.metrics import delta_exact, lp_cost
from hyptree.pipeline import (
    compare_objectives,
    decode_and_score,
    measure_delta,
    run_pipeline,
)
from hyptree.report import parse_report
from hyptree.trees import (
    design_matrix,
    leaf_distance_matrix,
    midpoint_root,
    tree_distance,
)


def noisy_input(n=16, rate=0.3, seed=0):
    t = random_binary_tree(n, seed)
    g = add_noise_edges(t, rate, seed + 1)
    return graph_leaf_shortest_paths(g)


SMALL_CFG = EncoderConfig(seed=0, total_epochs=120, burnin_epochs=12)


class TestMeasureDelta:
    def test_auto_small_is_exact(self):
        dm = noisy_input()
        rep = measure_delta(dm, "auto")
        assert rep.method == "exact"
        assert rep.delta == delta_exact(dm).delta

    def test_sampled_mode(self):
        dm = noisy_input()
        rep = measure_delta(dm, "sampled", samples=500, seed=3)
        assert rep.method == "sampled"
        assert rep.delta <= delta_exact(dm).delta

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            measure_delta(noisy_input(), "guess")


class TestDecodeAndScore:
    def test_nj_matches_manual(self):
        dm = noisy_input()
        out = decode_and_score(dm, dm, "nj")
        tree = neighbor_joining(dm)
        rooted = midpoint_root(tree)
        expected = lp_cost(
            leaf_distance_matrix(rooted).reordered(dm.labels), dm, 2.0
        )
        assert out.loss == expected
        assert out.tree.root is not None
        assert out.dendrogram is None

    def test_linkage_matches_manual(self):
        dm = noisy_input()
        out = decode_and_score(dm, dm, "average")
        coph = dendrogram_to_ultrametric(linkage(dm, "average"))
        assert out.loss == lp_cost(coph.reordered(dm.labels), dm, 2.0)
        assert out.dendrogram is not None


class TestRunPipeline:
    def test_report_structure_and_gains(self):
        dm = noisy_input()
        report, artifacts = run_pipeline(dm, SMALL_CFG, ("nj", "single"), dataset="toy")
        assert report.dataset == "toy"
        assert report.n == dm.n
        assert report.delta_method == "exact"
        assert {r.name for r in report.rows} == {"nj", "single"}
        for row in report.rows:
            assert row.error is None
            assert row.gain == row.loss_direct / row.loss_denoised - 1.0
        assert "nj_direct" in artifacts and "single_denoised" in artifacts
        assert artifacts["nj_direct"].clamps is not None

    def test_report_text_round_trip(self):
        dm = noisy_input()
        report, _ = run_pipeline(dm, SMALL_CFG, ("nj",), dataset="toy")
        parsed = parse_report(report.to_text())
        gain = float(parsed["nj.gain"])
        direct = float(parsed["nj.loss_direct"])
        denoised = float(parsed["nj.loss_denoised"])
        assert abs(gain - (direct / denoised - 1.0)) <= 1e-12
        assert "wall" not in report.to_text()

    def test_decoder_failure_isolated(self, monkeypatch):
        dm = noisy_input()

        def explode(*args, **kwargs):
            raise RuntimeError("decoder blew up")

        monkeypatch.setattr(pipeline_mod, "neighbor_joining", explode)
        report, artifacts = run_pipeline(dm, SMALL_CFG, ("nj", "single"))
        by_name = {r.name: r for r in report.rows}
        assert by_name["nj"].error is not None
        assert "decoder blew up" in by_name["nj"].error
        assert by_name["single"].error is None
        assert "single_direct" in artifacts

    def test_unknown_decoder_rejected(self):
        with pytest.raises(ValueError):
            run_pipeline(noisy_input(), SMALL_CFG, ("nj", "mystery"))

    def test_no_decoders_rejected(self):
        with pytest.raises(ValueError):
            run_pipeline(noisy_input(), SMALL_CFG, ())

    def test_deterministic(self):
        dm = noisy_input()
        a, _ = run_pipeline(dm, SMALL_CFG, ("nj", "average"))
        b, _ = run_pipeline(dm, SMALL_CFG, ("nj", "average"))
        assert a.to_text() == b.to_text()


class TestCompareObjectives:
    def test_shapes_and_determinism(self):
        a = compare_objectives(6, trials=3, pool_size=25, seed=4)
        b = compare_objectives(6, trials=3, pool_size=25, seed=4)
        assert a.scatter.shape == (3, 4)
        assert np.array_equal(a.scatter, b.scatter)
        assert set(a.means) == {
            "l2_fit_on_distances",
            "dasgupta_fit_on_distances",
            "l2_fit_on_clan_sizes",
            "dasgupta_fit_on_clan_sizes",
        }
        text = a.to_text()
        assert "mean.l2_fit_on_distances" in text
        assert len(text.splitlines()) == 3 + 4 + 1 + 3

    def test_truth_in_pool_is_selected_by_l2(self):
        # the zero-residual weight fit makes the generating topology the
        # unique l2 minimizer when it is present in the pool
        rng = np.random.default_rng(70)
        truth = random_binary_tree(7, 99)
        pool = [truth] + [random_binary_tree(7, int(s)) for s in rng.integers(0, 50, 8)]
        target = leaf_distance_matrix(truth).pair_vector()
        resid = [
            scipy.optimize.nnls(design_matrix(t).matrix, target)[1] for t in pool
        ]
        best = pool[int(np.argmin(resid))]
        assert tree_distance(truth, best) == 0.0
        assert resid[0] <= 1e-9

    def test_validation(self):
        with pytest.raises(ValueError):
            compare_objectives(6, trials=0, pool_size=5, seed=0)


class TestPerfectInput:
    def test_clean_tree_metric_gains_nothing(self):
        from hyptree.trees import leaf_distance_matrix

        dm = leaf_distance_matrix(random_binary_tree(8, 2))
        report, _ = run_pipeline(
            dm, EncoderConfig(seed=0, total_epochs=300, burnin_epochs=30), ("nj",)
        )
        row = report.rows[0]
        assert row.loss_direct < 1e-6
        assert row.gain <= 1e-6  # denoising cannot help a perfect input
