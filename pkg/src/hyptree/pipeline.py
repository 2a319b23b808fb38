"""End-to-end runs: measure, denoise, decode on both matrices, score, compare.

Also hosts the objective comparison study: over a fixed pool of random
topologies, pick the best tree under the l2 distance fit and under the
clan-size (Dasgupta) objective for measurements generated by each, and score
every pick by its unit-edge distance to the ground-truth tree.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.optimize

from .data import random_binary_tree
from .decoders import (
    LINKAGE_METHODS,
    Dendrogram,
    dendrogram_to_tree,
    dendrogram_to_ultrametric,
    linkage,
    neighbor_joining,
)
from .embedding import EncoderConfig, denoised_metric, train_embedding
from .metrics import DistanceMatrix, HyperbolicityReport, delta_exact, delta_sampled, lp_cost
from .report import DecoderRow, ObjectiveStudyResult, RunReport
from .trees import (
    WeightedTree,
    design_matrix,
    lca_clan_sizes,
    leaf_distance_matrix,
    midpoint_root,
    tree_distance,
)

TREE_DECODERS = ("nj",)
ALL_DECODERS = TREE_DECODERS + LINKAGE_METHODS

#: Beyond this many entities, delta is estimated from sampled quadruples.
DELTA_EXACT_MAX_N = 300
DELTA_DEFAULT_SAMPLES = 10**6


def measure_delta(
    dm: DistanceMatrix,
    mode: str = "auto",
    samples: int = DELTA_DEFAULT_SAMPLES,
    seed: int = 0,
) -> HyperbolicityReport:
    """Exact delta for small inputs, sampled lower bound for large ones."""
    if mode == "auto":
        mode = "exact" if dm.n <= DELTA_EXACT_MAX_N else "sampled"
    if mode == "exact":
        return delta_exact(dm)
    if mode == "sampled":
        return delta_sampled(dm, samples, seed)
    raise ValueError(f"unknown delta mode {mode!r}")


@dataclass
class DecodeOutcome:
    loss: float
    clamps: int | None
    tree: WeightedTree
    dendrogram: Dendrogram | None


def decode_and_score(decode_dm: DistanceMatrix, eval_dm: DistanceMatrix, method: str,
                     p: float = 2.0) -> DecodeOutcome:
    """Run one decoder on ``decode_dm`` and score its metric against ``eval_dm``.

    Tree decoders are midpoint-rooted and scored on their leaf metric;
    linkage decoders are scored on their cophenetic (ultrametric) matrix.
    """
    if method == "nj":
        tree, clamps = neighbor_joining(decode_dm, full_output=True)
        rooted = midpoint_root(tree) if tree.n_leaves >= 2 else tree
        fitted = leaf_distance_matrix(rooted)
        loss = lp_cost(fitted.reordered(eval_dm.labels), eval_dm, p)
        return DecodeOutcome(loss, clamps, rooted, None)
    dend = linkage(decode_dm, method)
    coph = dendrogram_to_ultrametric(dend)
    loss = lp_cost(coph.reordered(eval_dm.labels), eval_dm, p)
    return DecodeOutcome(loss, None, dendrogram_to_tree(dend), dend)


def run_pipeline(
    dm: DistanceMatrix,
    cfg: EncoderConfig,
    decoders: tuple[str, ...] = ALL_DECODERS,
    dataset: str = "input",
    delta_mode: str = "auto",
    delta_samples: int = DELTA_DEFAULT_SAMPLES,
    delta_seed: int = 0,
):
    """Denoise a matrix and decode both versions with every requested decoder.

    Returns ``(report, artifacts)`` where ``artifacts`` maps names like
    ``"nj_direct"`` to DecodeOutcome objects plus ``"denoised"`` to the
    denoised DistanceMatrix and ``"embedding"`` to the EmbeddingResult.
    A decoder failure is recorded in its row and does not stop the run.
    """
    if not decoders:
        raise ValueError("need at least one decoder")
    for name in decoders:
        if name not in ALL_DECODERS:
            raise ValueError(f"unknown decoder {name!r}; pick from {ALL_DECODERS}")
    wall: dict[str, float] = {}

    t0 = time.perf_counter()
    rep_in = measure_delta(dm, delta_mode, delta_samples, delta_seed)
    wall["delta_input"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    result = train_embedding(dm, cfg)
    wall["encoder"] = time.perf_counter() - t0

    denoised = denoised_metric(result)
    t0 = time.perf_counter()
    rep_out = measure_delta(denoised, delta_mode, delta_samples, delta_seed)
    wall["delta_denoised"] = time.perf_counter() - t0

    artifacts = {"denoised": denoised, "embedding": result}
    rows = []
    for name in decoders:
        t0 = time.perf_counter()
        try:
            direct = decode_and_score(dm, dm, name, cfg.p)
            hyper = decode_and_score(denoised, dm, name, cfg.p)
        except Exception as exc:  # isolate the failing decoder's row
            rows.append(DecoderRow(name, 0.0, 0.0, error=f"{type(exc).__name__}: {exc}"))
            continue
        finally:
            wall[f"decode_{name}"] = time.perf_counter() - t0
        artifacts[f"{name}_direct"] = direct
        artifacts[f"{name}_denoised"] = hyper
        rows.append(
            DecoderRow(name, direct.loss, hyper.loss, direct.clamps, hyper.clamps)
        )

    report = RunReport(
        dataset=dataset,
        n=dm.n,
        seed=cfg.seed,
        delta_method=rep_in.method,
        delta_samples=rep_in.quadruples_evaluated if rep_in.method == "sampled" else 0,
        delta_seed=rep_in.seed,
        delta_input=rep_in.delta,
        delta_denoised=rep_out.delta,
        encoder_loss=result.final_loss,
        rows=rows,
        wall_times=wall,
    )
    return report, artifacts


def _unit_weights(tree: WeightedTree) -> WeightedTree:
    edges = tuple((u, v, 1.0) for u, v, _ in tree.edges)
    return WeightedTree(tree.vertices, edges, dict(tree.leaf_labels), root=tree.root)


def compare_objectives(n: int, trials: int, pool_size: int, seed: int) -> ObjectiveStudyResult:
    """Score l2-optimal vs Dasgupta-optimal topology picks from a fixed pool.

    Per trial, a ground-truth weighted tree produces two measurement sets:
    its leaf path distances and its lca clan sizes.  For each measurement
    matrix the pool minimizer of the l2 fit (edge weights refit per topology)
    and the pool maximizer of the clan-size objective (higher is better for
    dissimilarities) are picked and compared to the ground truth by unit-edge
    tree distance.
    """
    if pool_size < 1 or trials < 1:
        raise ValueError("trials and pool_size must be positive")
    rng = np.random.default_rng(seed)
    pool_seeds = rng.integers(0, 2**31, size=pool_size)
    trial_seeds = rng.integers(0, 2**31, size=trials)

    pool = [random_binary_tree(n, int(s)) for s in pool_seeds]
    designs = [design_matrix(t).matrix for t in pool]
    # Clan sizes need a root; topologies are rooted at their unit-weight midpoint.
    clan_vecs = [
        lca_clan_sizes(midpoint_root(_unit_weights(t))).pair_vector() for t in pool
    ]

    scatter = np.zeros((trials, 4))
    for t in range(trials):
        truth = random_binary_tree(n, int(trial_seeds[t]))
        d_dist = leaf_distance_matrix(truth)
        d_clan = lca_clan_sizes(midpoint_root(truth))
        for col, dm in ((0, d_dist), (2, d_clan)):
            b = dm.pair_vector()
            resid = np.array([scipy.optimize.nnls(A, b)[1] for A in designs])
            scores = np.array([cv @ b for cv in clan_vecs])
            best_l2 = pool[int(np.argmin(resid))]
            best_dasg = pool[int(np.argmax(scores))]
            scatter[t, col] = tree_distance(truth, best_l2)
            scatter[t, col + 1] = tree_distance(truth, best_dasg)
    return ObjectiveStudyResult(n, trials, pool_size, scatter)
