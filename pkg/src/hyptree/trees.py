"""Weighted trees over labeled leaves and the operations the pipeline needs.

Covers leaf-to-leaf metrics, LCA and clan sizes, the Dasgupta cost, the
pair-by-edge path-incidence matrix with nonnegative least-squares weight
fitting, midpoint rooting, root trimming, and a unit-edge tree-to-tree
distance for topology comparisons.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, replace

import numpy as np
import scipy.optimize

from .metrics import DistanceMatrix


class TreeStructureError(ValueError):
    """Raised when an edge list does not describe the required tree shape."""


@dataclass
class WeightedTree:
    """Tree with nonnegative edge weights and externally labeled leaves.

    ``leaf_labels`` maps leaf vertex ids to entity names; internal vertices
    carry no labels.  Instances are treated as immutable: operations return
    new trees.  Zero edge weights are permitted.
    """

    vertices: tuple[int, ...]
    edges: tuple[tuple[int, int, float], ...]
    leaf_labels: dict[int, str]
    root: int | None = None

    def __post_init__(self):
        self.vertices = tuple(int(v) for v in self.vertices)
        self.edges = tuple((int(u), int(v), float(w)) for u, v, w in self.edges)
        vs = set(self.vertices)
        if len(vs) != len(self.vertices):
            raise TreeStructureError("duplicate vertex ids")
        if len(self.edges) != len(self.vertices) - 1:
            raise TreeStructureError(
                f"{len(self.edges)} edges for {len(self.vertices)} vertices; "
                "a tree needs exactly |V| - 1"
            )
        deg: dict[int, int] = {v: 0 for v in self.vertices}
        for u, v, w in self.edges:
            if u not in vs or v not in vs:
                raise TreeStructureError(f"edge ({u}, {v}) references unknown vertex")
            if u == v:
                raise TreeStructureError(f"self-loop at vertex {u}")
            if not np.isfinite(w) or w < 0.0:
                raise TreeStructureError(f"edge ({u}, {v}) has invalid weight {w}")
            deg[u] += 1
            deg[v] += 1
        if self.vertices and not self._connected():
            raise TreeStructureError("edge list is disconnected")
        labels = list(self.leaf_labels.values())
        if len(set(labels)) != len(labels):
            raise TreeStructureError("duplicate leaf labels")
        for v in self.leaf_labels:
            if v not in vs:
                raise TreeStructureError(f"labeled vertex {v} does not exist")
            if len(self.vertices) > 1 and deg[v] != 1:
                raise TreeStructureError(f"labeled vertex {v} is not a leaf")
        if self.root is not None and self.root not in vs:
            raise TreeStructureError(f"root {self.root} does not exist")

    def _connected(self) -> bool:
        adj = self.adjacency()
        seen = {self.vertices[0]}
        queue = deque(seen)
        while queue:
            u = queue.popleft()
            for v, _ in adj[u]:
                if v not in seen:
                    seen.add(v)
                    queue.append(v)
        return len(seen) == len(self.vertices)

    def adjacency(self) -> dict[int, list[tuple[int, float]]]:
        adj: dict[int, list[tuple[int, float]]] = {v: [] for v in self.vertices}
        for u, v, w in self.edges:
            adj[u].append((v, w))
            adj[v].append((u, w))
        return adj

    def degree(self, v: int) -> int:
        return sum(1 for a, b, _ in self.edges if v in (a, b))

    @property
    def n_leaves(self) -> int:
        return len(self.leaf_labels)

    def sorted_leaves(self) -> list[tuple[str, int]]:
        """(label, vertex) pairs in label order."""
        return sorted((lbl, v) for v, lbl in self.leaf_labels.items())


@dataclass(frozen=True)
class DesignMatrix:
    """Path-incidence matrix: one row per unordered leaf pair, one column per edge."""

    pairs: tuple[tuple[str, str], ...]
    edge_ends: tuple[tuple[int, int], ...]
    matrix: np.ndarray


def _single_source_distances(tree: WeightedTree, source: int, unit: bool = False) -> dict[int, float]:
    adj = tree.adjacency()
    dist = {source: 0.0}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v, w in adj[u]:
            if v not in dist:
                dist[v] = dist[u] + (1.0 if unit else w)
                queue.append(v)
    return dist


def leaf_distance_matrix(tree: WeightedTree, unit: bool = False) -> DistanceMatrix:
    """Pairwise path distances between labeled leaves, labels in sorted order.

    With ``unit=True`` every edge counts 1 regardless of its weight.
    """
    leaves = tree.sorted_leaves()
    labels = [lbl for lbl, _ in leaves]
    n = len(leaves)
    vals = np.zeros((n, n))
    for i, (_, v) in enumerate(leaves):
        dist = _single_source_distances(tree, v, unit=unit)
        for j, (_, u) in enumerate(leaves):
            vals[i, j] = dist[u]
    np.fill_diagonal(vals, 0.0)
    return DistanceMatrix(labels, (vals + vals.T) / 2.0)


def _orient(tree: WeightedTree, root: int):
    """Parent pointers, parent edge index, and depth for every vertex."""
    adj: dict[int, list[tuple[int, int]]] = {v: [] for v in tree.vertices}
    for k, (u, v, _) in enumerate(tree.edges):
        adj[u].append((v, k))
        adj[v].append((u, k))
    parent = {root: None}
    parent_edge = {root: None}
    depth = {root: 0}
    order = [root]
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for v, k in adj[u]:
            if v not in parent:
                parent[v] = u
                parent_edge[v] = k
                depth[v] = depth[u] + 1
                order.append(v)
                queue.append(v)
    return parent, parent_edge, depth, order


def lca(tree: WeightedTree, i: int, j: int) -> int:
    """Lowest common ancestor of two vertices in a rooted tree."""
    if tree.root is None:
        raise ValueError("tree has no root; use midpoint_root first")
    if i not in set(tree.vertices) or j not in set(tree.vertices):
        raise ValueError(f"unknown vertex in lca query ({i}, {j})")
    parent, _, depth, _ = _orient(tree, tree.root)
    a, b = i, j
    while depth[a] > depth[b]:
        a = parent[a]
    while depth[b] > depth[a]:
        b = parent[b]
    while a != b:
        a = parent[a]
        b = parent[b]
    return a


def lca_clan_sizes(tree: WeightedTree) -> DistanceMatrix:
    """Matrix of |{leaves under lca(i, j)}| for all labeled leaf pairs.

    Diagonal is 0.  Off-diagonal entries are integers in [2, n].
    """
    if tree.root is None:
        raise ValueError("clan sizes need a rooted tree")
    leaves = tree.sorted_leaves()
    labels = [lbl for lbl, _ in leaves]
    leaf_pos = {v: i for i, (_, v) in enumerate(leaves)}
    n = len(leaves)
    vals = np.zeros((n, n))
    parent, _, _, order = _orient(tree, tree.root)
    # Post-order accumulation of the leaf set below each vertex; pairs split
    # across two child subtrees meet exactly at that vertex.
    below: dict[int, list[int]] = {v: [] for v in tree.vertices}
    children: dict[int, list[int]] = {v: [] for v in tree.vertices}
    for v in order:
        if parent[v] is not None:
            children[parent[v]].append(v)
    for v in reversed(order):
        groups = [below[c] for c in children[v]]
        if v in leaf_pos:
            groups.append([leaf_pos[v]])
        merged: list[int] = []
        for g in groups:
            merged.extend(g)
        clan = len(merged)
        for a in range(len(groups)):
            for b in range(a + 1, len(groups)):
                for x in groups[a]:
                    for y in groups[b]:
                        vals[x, y] = clan
                        vals[y, x] = clan
        below[v] = merged
    return DistanceMatrix(labels, vals)


def dasgupta_cost(tree: WeightedTree, dm: DistanceMatrix) -> float:
    """Sum over unordered leaf pairs of (clan size at the lca) * dissimilarity.

    Purely topological: edge weights of the tree are ignored.  For
    dissimilarity inputs, better hierarchies score higher.
    """
    if tree.root is None:
        raise ValueError("the Dasgupta cost needs a rooted tree")
    clans = lca_clan_sizes(tree)
    if clans.labels != sorted(dm.labels):
        raise ValueError("tree leaves do not match matrix labels")
    target = dm.reordered(clans.labels) if dm.labels != clans.labels else dm
    return float(np.sum(clans.pair_vector() * target.pair_vector()))


def design_matrix(tree: WeightedTree) -> DesignMatrix:
    """0/1 incidence of edges on leaf-to-leaf paths, so that A @ w = d_T."""
    leaves = tree.sorted_leaves()
    n = len(leaves)
    anchor = tree.vertices[0]
    parent, parent_edge, depth, _ = _orient(tree, anchor)
    n_edges = len(tree.edges)

    def path_edges(a: int, b: int) -> list[int]:
        out = []
        while depth[a] > depth[b]:
            out.append(parent_edge[a])
            a = parent[a]
        tail = []
        while depth[b] > depth[a]:
            tail.append(parent_edge[b])
            b = parent[b]
        while a != b:
            out.append(parent_edge[a])
            tail.append(parent_edge[b])
            a = parent[a]
            b = parent[b]
        return out + tail[::-1]

    pairs = []
    rows = np.zeros((n * (n - 1) // 2, n_edges))
    r = 0
    for i in range(n):
        for j in range(i + 1, n):
            pairs.append((leaves[i][0], leaves[j][0]))
            rows[r, path_edges(leaves[i][1], leaves[j][1])] = 1.0
            r += 1
    return DesignMatrix(tuple(pairs), tuple((u, v) for u, v, _ in tree.edges), rows)


def _projected_gradient_nnls(A: np.ndarray, b: np.ndarray, iters: int = 20000) -> np.ndarray:
    """Slow but dependable fallback: projected gradient on ||Aw - b||^2, w >= 0."""
    step = 1.0 / max(float(np.linalg.norm(A, 2)) ** 2, 1e-30)
    w = np.zeros(A.shape[1])
    for _ in range(iters):
        g = A.T @ (A @ w - b)
        w_new = np.clip(w - step * g, 0.0, None)
        if np.max(np.abs(w_new - w)) < 1e-14:
            return w_new
        w = w_new
    return w


def fit_edge_weights(tree: WeightedTree, dm: DistanceMatrix, p: float = 2.0) -> WeightedTree:
    """Refit edge weights to minimize ||A_T w - d||_p over w >= 0, keeping topology.

    Only p = 2 is implemented (nonnegative least squares); the objective is
    convex in w, so the solver's optimum never exceeds the input weights' cost.
    """
    if p != 2.0:
        raise NotImplementedError("edge-weight fitting is implemented for p = 2 only")
    design = design_matrix(tree)
    tree_labels = [lbl for lbl, _ in tree.sorted_leaves()]
    if sorted(dm.labels) != tree_labels:
        raise ValueError("matrix labels do not match the topology's leaves")
    target = dm.reordered(tree_labels) if dm.labels != tree_labels else dm
    b = target.pair_vector()
    try:
        w, _ = scipy.optimize.nnls(design.matrix, b)
    except RuntimeError:
        w = _projected_gradient_nnls(design.matrix, b)
    w = np.clip(w, 0.0, None)
    new_edges = tuple((u, v, float(wk)) for (u, v, _), wk in zip(tree.edges, w))
    return replace(tree, edges=new_edges, leaf_labels=dict(tree.leaf_labels))


def trim_root(tree: WeightedTree) -> WeightedTree:
    """Remove a degree-2 root, bridging its two edges into one of summed weight.

    Leaf-to-leaf distances are unchanged.
    """
    if tree.root is None:
        raise ValueError("tree has no root to trim")
    incident = [(u, v, w) for u, v, w in tree.edges if tree.root in (u, v)]
    if len(incident) != 2:
        raise ValueError(f"root has degree {len(incident)}, expected 2")
    (u1, v1, w1), (u2, v2, w2) = incident
    a = v1 if u1 == tree.root else u1
    b = v2 if u2 == tree.root else u2
    edges = tuple(e for e in tree.edges if tree.root not in e[:2]) + ((a, b, w1 + w2),)
    vertices = tuple(v for v in tree.vertices if v != tree.root)
    return WeightedTree(vertices, edges, dict(tree.leaf_labels), root=None)


def midpoint_root(tree: WeightedTree) -> WeightedTree:
    """Root at the midpoint of the longest leaf-to-leaf path.

    Among diameter-achieving pairs the lexicographically smallest label pair
    wins.  If the midpoint falls exactly on a vertex that vertex becomes the
    root; otherwise the straddling edge is split in two.
    """
    if tree.root is not None:
        raise ValueError("tree is already rooted; trim_root it first")
    if tree.n_leaves < 2:
        raise ValueError("midpoint rooting needs at least two labeled leaves")
    leaves = tree.sorted_leaves()
    best = None  # (distance, label_a, label_b, va, vb)
    for i, (la, va) in enumerate(leaves):
        dist = _single_source_distances(tree, va)
        for lb, vb in leaves[i + 1 :]:
            d = dist[vb]
            # Leaves are scanned in label order, so the first maximum seen is
            # already the lexicographically smallest diameter pair.
            if best is None or d > best[0]:
                best = (d, la, lb, va, vb)
    total, _, _, va, vb = best

    # Path from va to vb as alternating vertices/edges.
    anchor = va
    parent, parent_edge, depth, _ = _orient(tree, anchor)
    path_vertices = [vb]
    v = vb
    while v != va:
        v = parent[v]
        path_vertices.append(v)
    path_vertices.reverse()  # va ... vb

    target = total / 2.0
    acc = 0.0
    new_root = max(tree.vertices) + 1
    adj = {u: {w: wt for w, wt in nbrs} for u, nbrs in tree.adjacency().items()}
    for a, b in zip(path_vertices, path_vertices[1:]):
        w = adj[a][b]
        if acc == target:
            return replace(tree, leaf_labels=dict(tree.leaf_labels), root=a)
        if acc + w > target or (acc + w == target and b == vb):
            off = target - acc
            edges = tuple(
                e for e in tree.edges if {e[0], e[1]} != {a, b}
            ) + ((a, new_root, off), (new_root, b, w - off))
            return WeightedTree(
                tree.vertices + (new_root,), edges, dict(tree.leaf_labels), root=new_root
            )
        acc += w
    # Midpoint coincides with the far endpoint only if total == 0.
    return replace(tree, leaf_labels=dict(tree.leaf_labels), root=path_vertices[-1])


def tree_distance(t1: WeightedTree, t2: WeightedTree) -> float:
    """Topology distance (2/(n(n-1))) * ||d_T1 - d_T2||_2 with unit edge lengths."""
    labels1 = [lbl for lbl, _ in t1.sorted_leaves()]
    labels2 = [lbl for lbl, _ in t2.sorted_leaves()]
    if labels1 != labels2:
        raise ValueError("trees are labeled over different leaf sets")
    n = len(labels1)
    d1 = leaf_distance_matrix(t1, unit=True).pair_vector()
    d2 = leaf_distance_matrix(t2, unit=True).pair_vector()
    return float(2.0 / (n * (n - 1)) * np.linalg.norm(d1 - d2))
