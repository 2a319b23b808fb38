"""Hyperbolic metric denoising: fit Poincare-ball points to a dissimilarity matrix.

The encoder places one ball point per entity and minimizes the l_p distortion
between pairwise hyperbolic distances and (rescaled) input dissimilarities
with Riemannian Adam.  Because the ball's own four-point slack shrinks like
1/sqrt(curvature), the optimized metric is closer to a tree-metric than the
input, which is the denoising effect exploited by the downstream decoders.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import ball
from .ball import PoincarePoint, TangentVector
from .metrics import DistanceMatrix

#: Default spread of the rescaled input: scaling_factor is chosen so that the
#: largest target distance equals this value.  Must stay well below the
#: ball diameter reachable under the boundary margin,
#: 2 * atanh(1 - margin) / sqrt(c)  (~2.44 for c = 100, margin = 1e-5).
TARGET_SPREAD = 2.0

_ADAM_BETA1 = 0.9
_ADAM_BETA2 = 0.999
_ADAM_EPS = 1e-15

#: Fraction of the run over which the learning rate decays linearly to zero.
#: Adam steps have roughly constant hyperbolic length, so without a cooldown
#: the loss keeps oscillating at the step-size floor instead of settling.
_COOLDOWN_FRACTION = 0.2


class EncodingError(RuntimeError):
    """Raised when the optimization produces a non-finite loss."""


INIT_SCHEMES = ("auto", "tree", "mds", "seriation", "uniform")


@dataclass(frozen=True)
class EncoderConfig:
    """Hyperparameters of one denoising run.

    ``scaling_factor=None`` rescales the input so its largest entry maps to
    ``TARGET_SPREAD``.  ``pairs_per_step=0`` uses all pairs every step;
    ``k > 0`` samples k partners per entity per step (O(nk) work).  The
    learning rate is multiplied by ``burnin_factor`` once ``burnin_epochs``
    have passed.

    ``init_scheme`` picks the starting configuration: ``tree`` draws the
    Neighbor Joining tree of the target exactly in the ball, ``mds`` lifts a
    classical metric-MDS layout through the origin exponential map,
    ``seriation`` spreads points on a tiny circle in dendrogram leaf order,
    ``uniform`` samples a tiny uniform ball.  The spread-out schemes avoid
    the ring-shaped local minima a collapsed start falls into in two
    dimensions; ``auto`` (the default) optimizes from both the tree and the
    mds starts and keeps the run with the smaller final loss.
    """

    dimension: int = 2
    curvature: float = 100.0
    p: float = 2.0
    learning_rate: float = 1e-3
    burnin_epochs: int = 200
    burnin_factor: float = 10.0
    total_epochs: int = 2000
    scaling_factor: float | None = None
    init_radius: float = 1e-6
    seed: int = 0
    pairs_per_step: int = 0
    boundary_margin: float = ball.DEFAULT_MARGIN
    init_scheme: str = "auto"

    def __post_init__(self):
        if self.dimension < 2:
            raise ValueError("embedding dimension must be at least 2")
        if self.curvature <= 0.0:
            raise ValueError("curvature must be positive")
        if self.p < 1.0:
            raise ValueError("norm exponent p must be >= 1")
        if self.total_epochs < 1:
            raise ValueError("total_epochs must be at least 1")
        if not 0 <= self.burnin_epochs <= self.total_epochs:
            raise ValueError("need total_epochs >= burnin_epochs >= 0")
        for name in ("learning_rate", "burnin_factor", "init_radius", "boundary_margin"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        if self.scaling_factor is not None and self.scaling_factor <= 0.0:
            raise ValueError("scaling_factor must be positive")
        if self.pairs_per_step < 0:
            raise ValueError("pairs_per_step must be >= 0")
        if self.init_scheme not in INIT_SCHEMES:
            raise ValueError(f"init_scheme must be one of {INIT_SCHEMES}")


@dataclass
class PoincareEmbedding:
    """n labeled points sharing one curvature."""

    labels: list[str]
    points: np.ndarray
    curvature: float

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[0] != len(self.labels):
            raise ValueError(f"point block shape {pts.shape} does not match labels")
        norms = np.sqrt(self.curvature) * np.linalg.norm(pts, axis=1)
        if np.any(norms >= 1.0):
            raise ValueError("some points lie on or outside the ball boundary")
        self.points = pts

    def __iter__(self):
        for row in self.points:
            yield PoincarePoint(row, self.curvature)


@dataclass
class EmbeddingResult:
    embedding: PoincareEmbedding
    final_loss: float
    loss_trace: np.ndarray
    config: EncoderConfig
    scaling_factor: float


def embedding_loss(emb: PoincareEmbedding, dm: DistanceMatrix, p: float = 2.0) -> float:
    """l_p distortion between embedded distances and the matrix entries."""
    if p < 1.0:
        raise ValueError(f"p must be >= 1, got {p}")
    if len(emb.labels) != dm.n:
        raise ValueError(f"{len(emb.labels)} points vs {dm.n} matrix entities")
    dist = ball.pairwise_distance_matrix(emb.points, emb.curvature)
    iu = np.triu_indices(dm.n, 1)
    diff = np.abs(dist[iu] - dm.values[iu])
    if diff.size == 0:
        return 0.0
    return float(np.sum(diff**p) ** (1.0 / p))


def _ambient_power_gradient(points: np.ndarray, target: np.ndarray, c: float, p: float,
                            pair_weights: np.ndarray | None = None):
    """Gradient of sum_{i<j} w_ij |d(x_i,x_j) - t_ij|^p in ambient coordinates.

    Returns (grad, power_sum, dist).  ``pair_weights`` multiplies each pair's
    term (used for subsampled steps); None means all-ones.
    """
    n = points.shape[0]
    dist = ball.pairwise_distance_matrix(points, c)
    resid = dist - target
    np.fill_diagonal(resid, 0.0)
    coef = p * np.abs(resid) ** (p - 1.0) * np.sign(resid)
    if pair_weights is not None:
        coef = coef * pair_weights
    # d/dx_i of the distance: (1/sqrt(c)) * du/dx_i / sqrt(u^2 - 1).
    diff = points[:, None, :] - points[None, :, :]
    nsq = np.einsum("ijk,ijk->ij", diff, diff)
    conf = 1.0 - c * np.einsum("ij,ij->i", points, points)
    cc = np.outer(conf, conf)
    u = 1.0 + 2.0 * c * nsq / cc
    s = np.sqrt(np.maximum(u * u - 1.0, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        inv_s = np.where(s > 0.0, 1.0 / s, 0.0)
    scale = coef * inv_s / np.sqrt(c)
    term_diff = (4.0 * c / cc) * scale
    term_self = (4.0 * c * c * nsq / (conf[:, None] ** 2 * conf[None, :])) * scale
    grad = np.einsum("ij,ijk->ik", term_diff, diff) + term_self.sum(axis=1)[:, None] * points
    if pair_weights is None:
        iu = np.triu_indices(n, 1)
        power_sum = float(np.sum(np.abs(resid[iu]) ** p))
    else:
        iu = np.triu_indices(n, 1)
        power_sum = float(np.sum(pair_weights[iu] * np.abs(resid[iu]) ** p))
    return grad, power_sum, dist


def loss_gradient(emb: PoincareEmbedding, dm: DistanceMatrix, p: float = 2.0) -> list[TangentVector]:
    """Riemannian gradient of the rooted l_p loss, one tangent vector per point.

    The ambient partial derivatives are rescaled by the inverse ball metric,
    (1 - c||x||^2)^2 / 4.  A perfect fit returns zero vectors (subgradient
    convention at the non-smooth point).
    """
    if len(emb.labels) != dm.n:
        raise ValueError(f"{len(emb.labels)} points vs {dm.n} matrix entities")
    c = emb.curvature
    grad_pow, power_sum, _ = _ambient_power_gradient(emb.points, dm.values, c, p)
    if power_sum == 0.0:
        ambient = np.zeros_like(emb.points)
    else:
        # chain rule through the outer 1/p root
        ambient = grad_pow * (power_sum ** (1.0 / p - 1.0) / p)
    riem = ball.conformal_to_riemannian(emb.points, c, ambient)
    return [
        TangentVector(PoincarePoint(x, c), g) for x, g in zip(emb.points, riem)
    ]


def _uniform_init(rng: np.random.Generator, n: int, d: int, radius: float) -> np.ndarray:
    g = rng.standard_normal((n, d))
    g /= np.maximum(np.linalg.norm(g, axis=1, keepdims=True), 1e-300)
    r = rng.random(n) ** (1.0 / d)
    return radius * r[:, None] * g


def _seriation_init(values: np.ndarray, n: int, d: int, radius: float,
                    rng: np.random.Generator) -> np.ndarray:
    """Tiny circle with points in average-linkage dendrogram leaf order."""
    from .decoders import linkage
    from .metrics import DistanceMatrix

    dend = linkage(DistanceMatrix([str(i) for i in range(n)], values), "average")
    order: list[int] = []
    stack = [2 * n - 2] if n > 1 else [0]
    while stack:
        cid = stack.pop()
        if cid < n:
            order.append(cid)
        else:
            a, b, _, _ = dend.merges[cid - n]
            stack.extend((b, a))
    angles = np.empty(n)
    for k, leaf in enumerate(order):
        angles[leaf] = 2.0 * np.pi * k / n
    pts = np.zeros((n, d))
    pts[:, 0] = np.cos(angles)
    pts[:, 1] = np.sin(angles)
    if d > 2:
        pts[:, 2:] = 0.25 * rng.standard_normal((n, d - 2))
        pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    return radius * pts


def _tree_init(values: np.ndarray, d: int, c: float,
               rng: np.random.Generator) -> np.ndarray:
    """Exact hyperbolic drawing of a guide tree fitted to the target matrix.

    The guide is the midpoint-rooted Neighbor Joining tree of the target.
    Vertices are placed recursively: the frame is Mobius-translated so the
    current vertex sits at the origin, children go at hyperbolic distance
    equal to their edge weight in evenly spread directions away from the
    parent, and the frame is translated back.  Left Mobius translation is an
    isometry, so every edge length is realized exactly; only the angular
    layout is heuristic.  For d > 2 a small out-of-plane jitter keeps the
    refinement from being trapped in a 2-plane.
    """
    from .decoders import neighbor_joining
    from .metrics import DistanceMatrix
    from .trees import midpoint_root

    n = values.shape[0]
    labels = [f"{i:06d}" for i in range(n)]
    guide = neighbor_joining(DistanceMatrix(labels, values))
    guide = midpoint_root(guide) if n >= 2 else guide
    adj = guide.adjacency()
    sqrt_c = np.sqrt(c)

    pos: dict[int, np.ndarray] = {guide.root: np.zeros(2)}
    stack = [(guide.root, None)]
    while stack:
        v, parent = stack.pop()
        kids = [(u, w) for u, w in adj[v] if u != parent]
        if not kids:
            continue
        here = pos[v]
        if parent is None:
            base = 0.0
            sector = 2.0 * np.pi / len(kids)
        else:
            rel_parent = _mobius_add_raw_2d(-here, pos[parent], c)
            base = np.arctan2(rel_parent[1], rel_parent[0])
            sector = 2.0 * np.pi / (len(kids) + 1)
        for k, (child, w) in enumerate(kids):
            theta = base + (k + 1) * sector
            radius = np.tanh(sqrt_c * w / 2.0) / sqrt_c
            local = radius * np.array([np.cos(theta), np.sin(theta)])
            pos[child] = _mobius_add_raw_2d(here, local, c)
            stack.append((child, v))

    leaf_for_label = {lbl: vid for vid, lbl in guide.leaf_labels.items()}
    pts = np.zeros((n, d))
    for i, lbl in enumerate(labels):
        pts[i, :2] = pos[leaf_for_label[lbl]]
    if d > 2:
        pts[:, 2:] = 1e-4 * rng.standard_normal((n, d - 2)) / np.sqrt(c)
    return pts


def _mobius_add_raw_2d(x: np.ndarray, y: np.ndarray, c: float) -> np.ndarray:
    x2 = float(x @ x)
    y2 = float(y @ y)
    xy = float(x @ y)
    num = (1.0 + 2.0 * c * xy + c * y2) * x + (1.0 - c * x2) * y
    return num / (1.0 + 2.0 * c * xy + c * c * x2 * y2)


def _mds_init(values: np.ndarray, d: int, c: float) -> np.ndarray:
    """Classical MDS layout lifted through the origin exponential map.

    Each point lands at hyperbolic distance equal to its Euclidean MDS radius
    from the origin, preserving MDS directions.
    """
    n = values.shape[0]
    centering = np.eye(n) - np.ones((n, n)) / n
    gram = -0.5 * centering @ (values**2) @ centering
    eigvals, eigvecs = np.linalg.eigh(gram)
    top = np.argsort(eigvals)[::-1][:d]
    coords = eigvecs[:, top] * np.sqrt(np.maximum(eigvals[top], 0.0))
    radii = np.linalg.norm(coords, axis=1, keepdims=True)
    unit = coords / np.maximum(radii, 1e-300)
    return unit * np.tanh(np.sqrt(c) * radii / 2.0) / np.sqrt(c)


def _init_points(cfg: EncoderConfig, target: np.ndarray,
                 rng: np.random.Generator) -> np.ndarray:
    """Starting configuration against the already-rescaled target matrix."""
    n = target.shape[0]
    if cfg.init_scheme == "uniform" or n < 3:
        pts = _uniform_init(rng, n, cfg.dimension, cfg.init_radius)
    elif cfg.init_scheme == "seriation":
        pts = _seriation_init(target, n, cfg.dimension, cfg.init_radius, rng)
    elif cfg.init_scheme == "tree":
        pts = _tree_init(target, cfg.dimension, cfg.curvature, rng)
    else:
        pts = _mds_init(target, cfg.dimension, cfg.curvature)
    if cfg.init_scheme in ("tree", "mds"):
        # These layouts are seed-independent; a small tangent jitter makes
        # different seeds explore genuinely different optimization paths.
        jitter = 1e-3 / np.sqrt(cfg.curvature) * rng.standard_normal(pts.shape)
        pts = ball.exp_map_points(pts, jitter, cfg.curvature)
    return ball.clip_to_ball(pts, cfg.curvature, cfg.boundary_margin)


def _sample_pair_weights(rng: np.random.Generator, n: int, k: int) -> np.ndarray:
    """Symmetric pair multiplicities: k distinct partners drawn per entity."""
    w = np.zeros((n, n))
    k = min(k, n - 1)
    for i in range(n):
        picks = rng.choice(n - 1, size=k, replace=False)
        for pk in picks:
            j = pk if pk < i else pk + 1
            w[i, j] += 1.0
            w[j, i] += 1.0
    return w


def train_embedding(dm: DistanceMatrix, cfg: EncoderConfig) -> EmbeddingResult:
    """Optimize ball points against a dissimilarity matrix.

    The input is rescaled by the (possibly automatic) scaling factor for
    optimization; reported losses are always in original units, i.e. embedded
    distances divided by the scaling factor versus the raw input.  Each epoch
    performs one Riemannian Adam step (moments kept in ambient tangent
    coordinates, no transport) followed by a projection step that keeps every
    point inside the boundary margin.  Fully deterministic for a given seed.

    With ``init_scheme="auto"`` the optimization runs once from the tree
    start and once from the mds start, and the result with the smaller final
    loss is returned (tree starts dominate on near-additive inputs, mds
    starts on heavily perturbed ones).
    """
    if cfg.init_scheme == "auto":
        candidates = [
            _train_single(dm, replace(cfg, init_scheme=scheme))
            for scheme in ("tree", "mds")
        ]
        return min(candidates, key=lambda r: r.final_loss)
    return _train_single(dm, cfg)


def _train_single(dm: DistanceMatrix, cfg: EncoderConfig) -> EmbeddingResult:
    n = dm.n
    c = cfg.curvature
    rng = np.random.default_rng(cfg.seed)

    max_d = float(dm.values.max()) if n > 1 else 0.0
    if cfg.scaling_factor is not None:
        s = cfg.scaling_factor
    elif max_d > 0.0:
        s = TARGET_SPREAD / max_d
    else:
        s = 1.0
    target = dm.values * s
    points = _init_points(cfg, target, rng)

    m = np.zeros_like(points)
    v = np.zeros(n)
    trace = np.empty(cfg.total_epochs)
    iu = np.triu_indices(n, 1)
    cooldown_start = cfg.total_epochs - max(int(_COOLDOWN_FRACTION * cfg.total_epochs), 1)
    precond = None

    for epoch in range(cfg.total_epochs):
        lr = cfg.learning_rate * (cfg.burnin_factor if epoch >= cfg.burnin_epochs else 1.0)
        if epoch >= cooldown_start:
            lr *= (cfg.total_epochs - epoch) / (cfg.total_epochs - cooldown_start)
        weights = None
        if cfg.pairs_per_step > 0 and epoch < cooldown_start:
            # Sampled steps only before the cooldown; the settling phase
            # always sees the full objective.
            weights = _sample_pair_weights(rng, n, cfg.pairs_per_step)
        grad, _, _ = _ambient_power_gradient(points, target, c, cfg.p, weights)
        grad = ball.conformal_to_riemannian(points, c, grad)

        # Second moment tracks the squared Riemannian norm per point, so the
        # normalized step has roughly unit hyperbolic speed everywhere and
        # boundary-hugging points are not over-driven.
        lam = 2.0 / (1.0 - c * np.einsum("ij,ij->i", points, points))
        gnorm_sq = lam**2 * np.einsum("ij,ij->i", grad, grad)

        t = epoch + 1
        m = _ADAM_BETA1 * m + (1.0 - _ADAM_BETA1) * grad
        v = _ADAM_BETA2 * v + (1.0 - _ADAM_BETA2) * gnorm_sq
        m_hat = m / (1.0 - _ADAM_BETA1**t)
        if epoch < cooldown_start or precond is None:
            precond = np.sqrt(v / (1.0 - _ADAM_BETA2**t)) + _ADAM_EPS
        # During the cooldown the preconditioner is frozen, so steps shrink
        # in proportion to the gradient and the iterate can settle instead of
        # hovering at a constant-step floor.
        step = -lr * m_hat / precond[:, None]
        points = ball.exp_map_points(points, step, c)
        points = ball.clip_to_ball(points, c, cfg.boundary_margin)

        dist = ball.pairwise_distance_matrix(points, c)
        resid = np.abs(dist[iu] - target[iu])
        power_sum = float(np.sum(resid**cfg.p))
        loss = power_sum ** (1.0 / cfg.p) / s if resid.size else 0.0
        if not np.isfinite(loss):
            bad = np.argwhere(~np.isfinite(dist + target))
            i, j = (int(bad[0][0]), int(bad[0][1])) if bad.size else (0, 0)
            raise EncodingError(
                f"non-finite loss at epoch {epoch} "
                f"(pair {dm.labels[i]!r}, {dm.labels[j]!r}); "
                "reduce the learning rate or the scaling factor"
            )
        trace[epoch] = loss

    emb = PoincareEmbedding(list(dm.labels), points, c)
    final = float(trace[-1]) if cfg.total_epochs else embedding_loss(emb, dm, cfg.p)
    return EmbeddingResult(emb, final, trace, replace(cfg), s)


def denoised_metric(result: EmbeddingResult) -> DistanceMatrix:
    """Pairwise embedded distances mapped back to original input units."""
    emb = result.embedding
    dist = ball.pairwise_distance_matrix(emb.points, emb.curvature) / result.scaling_factor
    return DistanceMatrix(list(emb.labels), (dist + dist.T) / 2.0)


def write_embedding(result: EmbeddingResult, path) -> None:
    """Dump coordinates as delimited text with a metadata header line."""
    emb = result.embedding
    d = emb.points.shape[1]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(
            f"curvature={emb.curvature!r}\tdim={d}\t"
            f"scaling_factor={result.scaling_factor!r}\n"
        )
        for lbl, row in zip(emb.labels, emb.points):
            fh.write(lbl + "\t" + "\t".join(repr(float(x)) for x in row) + "\n")


def write_loss_trace(result: EmbeddingResult, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for epoch, loss in enumerate(result.loss_trace):
            fh.write(f"{epoch}\t{float(loss)!r}\n")
