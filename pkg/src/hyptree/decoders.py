"""Tree-metric and ultrametric decoders for arbitrary dissimilarity matrices.

``neighbor_joining`` produces an unrooted tree with internal degree 3 and
clamps any negative branch length to zero (the clamp count is available via
``full_output``).  ``linkage`` runs agglomerative clustering under the
single / complete / average / weighted rules and returns the merge sequence;
its cophenetic matrix is an ultrametric by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .metrics import DistanceMatrix
from .trees import WeightedTree

LINKAGE_METHODS = ("single", "complete", "average", "weighted")


@dataclass
class Dendrogram:
    """Ordered merge sequence (cluster_a, cluster_b, height, merged size).

    Cluster ids 0..n-1 are leaves in label order; merge k creates id n+k.
    Heights are non-decreasing along the merge order.
    """

    n: int
    merges: tuple[tuple[int, int, float, int], ...]
    labels: list[str]

    def __post_init__(self):
        if len(self.merges) != max(self.n - 1, 0):
            raise ValueError(f"{len(self.merges)} merges for {self.n} leaves")
        prev = 0.0
        for k, (a, b, h, size) in enumerate(self.merges):
            limit = self.n + k
            if not (0 <= a < limit and 0 <= b < limit and a != b):
                raise ValueError(f"merge {k} references invalid clusters ({a}, {b})")
            if h < prev:
                raise ValueError(f"merge {k} decreases height: {h} < {prev}")
            prev = h


def neighbor_joining(dm: DistanceMatrix, full_output: bool = False):
    """Neighbor Joining tree for a dissimilarity matrix.

    Iteratively joins the pair minimizing
    ``Q(i, j) = (m - 2) d(i, j) - sum_k d(i, k) - sum_k d(j, k)``,
    assigning pendant lengths ``d(i, j)/2 +- (r_i - r_j)/(2(m - 2))`` and
    reducing via ``d(u, k) = (d(i, k) + d(j, k) - d(i, j))/2``.  Ties pick the
    lexicographically smallest index pair of the working matrix.  Exact on
    additive inputs.

    Parameters
    ----------
    dm : DistanceMatrix
    full_output : bool
        When true, also return the number of negative branch lengths that
        were clamped to zero.
    """
    n = dm.n
    if n < 1:
        raise ValueError("neighbor joining needs at least one entity")
    leaf_labels = {i: lbl for i, lbl in enumerate(dm.labels)}
    if n == 1:
        tree = WeightedTree((0,), (), leaf_labels, root=None)
        return (tree, 0) if full_output else tree

    work = dm.values.copy()
    active = list(range(n))
    next_id = n
    edges: list[tuple[int, int, float]] = []
    clamps = 0

    def clamped(w: float) -> float:
        nonlocal clamps
        if w < 0.0:
            clamps += 1
            return 0.0
        return w

    while len(active) > 3:
        m = len(active)
        r = work.sum(axis=1)
        q = (m - 2) * work - r[:, None] - r[None, :]
        np.fill_diagonal(q, np.inf)
        # Row-major argmin visits (i, j) with i < j before (j, i), so ties
        # resolve to the lexicographically smallest pair.
        i, j = np.unravel_index(int(np.argmin(q)), q.shape)
        if i > j:
            i, j = j, i
        li = 0.5 * work[i, j] + (r[i] - r[j]) / (2.0 * (m - 2))
        lj = 0.5 * work[i, j] + (r[j] - r[i]) / (2.0 * (m - 2))
        edges.append((active[i], next_id, clamped(li)))
        edges.append((active[j], next_id, clamped(lj)))
        merged = 0.5 * (work[i, :] + work[j, :] - work[i, j])
        merged[i] = 0.0
        work[i, :] = merged
        work[:, i] = merged
        active[i] = next_id
        next_id += 1
        keep = [k for k in range(m) if k != j]
        work = work[np.ix_(keep, keep)]
        del active[j]

    if len(active) == 3:
        d01, d02, d12 = work[0, 1], work[0, 2], work[1, 2]
        hub = next_id
        next_id += 1
        edges.append((active[0], hub, clamped(0.5 * (d01 + d02 - d12))))
        edges.append((active[1], hub, clamped(0.5 * (d01 + d12 - d02))))
        edges.append((active[2], hub, clamped(0.5 * (d02 + d12 - d01))))
    else:
        edges.append((active[0], active[1], clamped(work[0, 1])))

    vertices = tuple(range(next_id))
    tree = WeightedTree(vertices, tuple(edges), leaf_labels, root=None)
    return (tree, clamps) if full_output else tree


def linkage(dm: DistanceMatrix, method: str) -> Dendrogram:
    """Agglomerative clustering; merge height is the inter-cluster distance.

    Update rules after merging clusters u, v into uv:

    * single:   d(uv, k) = min(d(u, k), d(v, k))
    * complete: d(uv, k) = max(d(u, k), d(v, k))
    * average:  d(uv, k) = (|u| d(u, k) + |v| d(v, k)) / (|u| + |v|)
    * weighted: d(uv, k) = (d(u, k) + d(v, k)) / 2

    Ties pick the lexicographically smallest index pair of the working matrix.
    """
    if method not in LINKAGE_METHODS:
        raise ValueError(f"unknown linkage method {method!r}; pick one of {LINKAGE_METHODS}")
    n = dm.n
    if n < 1:
        raise ValueError("linkage needs at least one entity")
    work = dm.values.astype(np.float64).copy()
    ids = list(range(n))
    sizes = {i: 1 for i in range(n)}
    merges: list[tuple[int, int, float, int]] = []
    while len(ids) > 1:
        m = len(ids)
        masked = work.copy()
        masked[np.tril_indices(m)] = np.inf
        i, j = np.unravel_index(int(np.argmin(masked)), masked.shape)
        h = work[i, j]
        a, b = ids[i], ids[j]
        new_id = n + len(merges)
        si, sj = sizes[a], sizes[b]
        if method == "single":
            row = np.minimum(work[i, :], work[j, :])
        elif method == "complete":
            row = np.maximum(work[i, :], work[j, :])
        elif method == "average":
            row = (si * work[i, :] + sj * work[j, :]) / (si + sj)
        else:
            row = 0.5 * (work[i, :] + work[j, :])
        row[i] = 0.0
        work[i, :] = row
        work[:, i] = row
        ids[i] = new_id
        sizes[new_id] = si + sj
        keep = [k for k in range(m) if k != j]
        work = work[np.ix_(keep, keep)]
        del ids[j]
        merges.append((min(a, b), max(a, b), float(h), si + sj))
    return Dendrogram(n, tuple(merges), list(dm.labels))


def write_dendrogram(dend: Dendrogram, path) -> None:
    """Write merges as ``index  cluster_a  cluster_b  height  size`` rows."""
    with open(path, "w", encoding="utf-8") as fh:
        for k, (a, b, h, size) in enumerate(dend.merges):
            fh.write(f"{k}\t{a}\t{b}\t{h!r}\t{size}\n")


def dendrogram_to_ultrametric(dend: Dendrogram) -> DistanceMatrix:
    """Cophenetic matrix: entry (i, j) is the height of the merge uniting them."""
    n = dend.n
    vals = np.zeros((n, n))
    members: dict[int, list[int]] = {i: [i] for i in range(n)}
    for k, (a, b, h, _) in enumerate(dend.merges):
        for x in members[a]:
            for y in members[b]:
                vals[x, y] = h
                vals[y, x] = h
        members[n + k] = members[a] + members[b]
    return DistanceMatrix(list(dend.labels), vals)


def dendrogram_to_tree(dend: Dendrogram) -> WeightedTree:
    """Rooted tree whose leaf metric equals the cophenetic matrix.

    The merge at height h becomes an internal vertex at distance h/2 from
    every leaf below it, so all leaves end up equidistant from the root.
    """
    n = dend.n
    leaf_labels = {i: lbl for i, lbl in enumerate(dend.labels)}
    if n == 1:
        return WeightedTree((0,), (), leaf_labels, root=0)
    half = {i: 0.0 for i in range(n)}
    edges = []
    for k, (a, b, h, _) in enumerate(dend.merges):
        vid = n + k
        edges.append((a, vid, h / 2.0 - half[a]))
        edges.append((b, vid, h / 2.0 - half[b]))
        half[vid] = h / 2.0
    vertices = tuple(range(2 * n - 1))
    return WeightedTree(vertices, tuple(edges), leaf_labels, root=2 * n - 2)
