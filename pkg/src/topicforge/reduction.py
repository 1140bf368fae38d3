"""Nonlinear dimension reduction of the document vectors.

The reduction builds an exact k-nearest-neighbor graph under cosine
distance, calibrates per-point kernel widths so every point sees
``log2(k)`` effective neighbors, symmetrizes the resulting directed
membership weights into a fuzzy graph, and lays the points out in a low
dimensional space by stochastic gradient descent over the graph's edges
with negative sampling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse
from scipy.optimize import curve_fit

from .errors import ValidationError

_SMOOTH_TOLERANCE = 1e-5
_SMOOTH_ITERATIONS = 64
_GRAD_CLIP = 4.0

_METRICS = ("cosine", "euclidean")


@dataclass(frozen=True)
class ReductionConfig:
    """Knobs for the reduction stage.

    ``min_dist`` and ``spread`` shape the low-dimensional membership
    curve; ``layout_epochs`` edges-proportional-to-weight passes of SGD
    run with a learning rate decaying linearly from ``learning_rate`` to
    zero.
    """

    n_neighbors: int = 15
    n_components: int = 5
    metric: str = "cosine"
    min_dist: float = 0.1
    spread: float = 1.0
    layout_epochs: int = 200
    negative_sample_rate: int = 5
    learning_rate: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_neighbors < 2:
            raise ValidationError(f"n_neighbors must be >= 2, got {self.n_neighbors}")
        if self.n_components < 1:
            raise ValidationError(
                f"n_components must be >= 1, got {self.n_components}"
            )
        if self.metric not in _METRICS:
            raise ValidationError(f"metric must be one of {_METRICS}")
        if self.min_dist < 0:
            raise ValidationError(f"min_dist must be >= 0, got {self.min_dist}")
        if self.spread <= 0:
            raise ValidationError(f"spread must be > 0, got {self.spread}")
        if self.layout_epochs < 1:
            raise ValidationError(
                f"layout_epochs must be >= 1, got {self.layout_epochs}"
            )
        if self.negative_sample_rate < 0:
            raise ValidationError("negative_sample_rate must be >= 0")
        if self.learning_rate <= 0:
            raise ValidationError("learning_rate must be > 0")


@dataclass(frozen=True)
class FuzzyGraph:
    """Symmetric weighted neighborhood graph.

    Edges are stored once with ``heads < tails`` and weights in (0, 1].
    ``rho`` and ``sigma`` are the per-point calibration results.
    """

    n_points: int
    heads: np.ndarray
    tails: np.ndarray
    weights: np.ndarray
    rho: np.ndarray
    sigma: np.ndarray


def pairwise_distances(points: np.ndarray, metric: str = "cosine") -> np.ndarray:
    """Dense pairwise distance matrix; cosine distance is 1 - cosine."""
    if metric == "euclidean":
        sq = np.sum(points**2, axis=1)
        d2 = sq[:, None] + sq[None, :] - 2.0 * (points @ points.T)
        return np.sqrt(np.maximum(d2, 0.0))
    norms = np.linalg.norm(points, axis=1)
    if np.any(norms == 0.0):
        bad = int(np.argmax(norms == 0.0))
        raise ValidationError(
            f"cosine distance is undefined for zero vectors (row {bad})"
        )
    unit = points / norms[:, None]
    return np.maximum(1.0 - unit @ unit.T, 0.0)


def knn_graph(
    points: np.ndarray, n_neighbors: int, metric: str = "cosine"
) -> tuple[np.ndarray, np.ndarray]:
    """Exact k nearest neighbors of every point, self excluded.

    Returns ``(indices, distances)`` of shape ``(n, k)`` with each row
    sorted by ascending distance, ties broken by the lower index.
    """
    n = len(points)
    if n_neighbors < 1 or n_neighbors >= n:
        raise ValidationError(
            f"n_neighbors must be in [1, {n - 1}] for {n} points, got {n_neighbors}"
        )
    dist = pairwise_distances(points, metric)
    np.fill_diagonal(dist, np.inf)
    order = np.argsort(dist, axis=1, kind="stable")[:, :n_neighbors]
    return order, np.take_along_axis(dist, order, axis=1)


def smooth_knn_calibrate(distances: np.ndarray) -> tuple[float, float]:
    """Calibrate one point's neighborhood kernel.

    ``rho`` is the smallest positive neighbor distance (0 if none) and
    ``sigma`` solves ``sum_j exp(-max(0, d_j - rho) / sigma) = log2(k)``
    by binary search, stopping after 64 iterations or when the residual
    drops below 1e-5.  When every distance is at most rho the target is
    unreachable and sigma falls back to the sentinel ``1000 * max(d)``
    (1.0 for an all-zero list).
    """
    d = np.asarray(distances, dtype=np.float64)
    if d.ndim != 1 or d.size == 0:
        raise ValidationError("distances must be a non-empty 1-d array")
    if np.any(d < 0):
        raise ValidationError("distances must be non-negative")
    positive = d[d > 0]
    rho = float(positive.min()) if positive.size else 0.0
    d_max = float(d.max())
    if d_max <= rho:
        return rho, (1000.0 * d_max if d_max > 0 else 1.0)
    target = math.log2(d.size)
    shifted = np.maximum(d - rho, 0.0)
    lo, hi, mid = 0.0, np.inf, 1.0
    for _ in range(_SMOOTH_ITERATIONS):
        psum = float(np.exp(-shifted / mid).sum())
        if abs(psum - target) < _SMOOTH_TOLERANCE:
            break
        if psum > target:
            hi = mid
            mid = (lo + hi) / 2.0
        else:
            lo = mid
            mid = mid * 2.0 if hi == np.inf else (lo + hi) / 2.0
    return rho, mid


def fuzzy_simplicial_set(points: np.ndarray, config: ReductionConfig) -> FuzzyGraph:
    """Build the symmetrized fuzzy neighborhood graph of the points.

    Directed membership of neighbor j in i's neighborhood is
    ``exp(-max(0, d_ij - rho_i) / sigma_i)``; directed weights a and b
    for a pair combine into ``a + b - a * b``.
    """
    n = len(points)
    idx, dist = knn_graph(points, config.n_neighbors, config.metric)
    rho = np.empty(n)
    sigma = np.empty(n)
    for i in range(n):
        rho[i], sigma[i] = smooth_knn_calibrate(dist[i])
    memb = np.exp(-np.maximum(dist - rho[:, None], 0.0) / sigma[:, None])
    rows = np.repeat(np.arange(n), config.n_neighbors)
    directed = scipy.sparse.coo_matrix(
        (memb.ravel(), (rows, idx.ravel())), shape=(n, n)
    ).tocsr()
    sym = (directed + directed.T - directed.multiply(directed.T)).tocoo()
    upper = sym.row < sym.col
    heads = sym.row[upper]
    tails = sym.col[upper]
    weights = sym.data[upper]
    keep = weights > 0
    return FuzzyGraph(
        n_points=n,
        heads=heads[keep].astype(np.int64),
        tails=tails[keep].astype(np.int64),
        weights=weights[keep],
        rho=rho,
        sigma=sigma,
    )


def find_ab_params(min_dist: float, spread: float = 1.0) -> tuple[float, float]:
    """Fit the low-dimensional membership curve ``1 / (1 + a x^(2b))``.

    Least-squares fit against the target curve that is 1 up to min_dist
    and decays as ``exp(-(x - min_dist) / spread)`` beyond it.
    """

    def curve(x, a, b):
        return 1.0 / (1.0 + a * x ** (2.0 * b))

    xv = np.linspace(0.0, spread * 3.0, 300)
    yv = np.where(xv < min_dist, 1.0, np.exp(-(xv - min_dist) / spread))
    params, _ = curve_fit(curve, xv, yv, p0=[1.0, 1.0])
    return float(params[0]), float(params[1])


def _negative_forces(
    coords: np.ndarray,
    anchors: np.ndarray,
    samples: np.ndarray,
    a: float,
    b: float,
) -> np.ndarray:
    """Summed repulsive updates for each anchor against its sampled points."""
    diff = coords[anchors][:, None, :] - coords[samples]
    r2 = np.sum(diff * diff, axis=2)
    coeff = (2.0 * b) / ((0.001 + r2) * (1.0 + a * r2**b))
    coeff[samples == anchors[:, None]] = 0.0
    grad = np.clip(coeff[:, :, None] * diff, -_GRAD_CLIP, _GRAD_CLIP)
    return grad.sum(axis=1)


def optimize_layout(
    graph: FuzzyGraph, config: ReductionConfig, rng: np.random.Generator
) -> np.ndarray:
    """Lay the graph out in ``n_components`` dimensions.

    Coordinates start uniform in [-10, 10].  Each edge is scheduled
    proportionally to its weight (the heaviest edge once per epoch);
    scheduled edges pull their endpoints together along the fitted
    membership-curve gradient, and each endpoint is pushed away from
    ``negative_sample_rate`` uniformly sampled points.  Updates within an
    epoch are computed from the epoch-start positions and applied
    together, with every component clipped to +-4 before the learning
    rate is applied.
    """
    n = graph.n_points
    dim = config.n_components
    coords = rng.uniform(-10.0, 10.0, (n, dim))
    if len(graph.weights) == 0:
        return coords
    a, b = find_ab_params(config.min_dist, config.spread)
    epochs = config.layout_epochs
    eps_per_sample = graph.weights.max() / graph.weights
    next_sample = eps_per_sample.copy()
    nsr = config.negative_sample_rate
    for epoch in range(epochs):
        due = next_sample <= epoch
        if not np.any(due):
            continue
        lr = config.learning_rate * (1.0 - epoch / epochs)
        heads = graph.heads[due]
        tails = graph.tails[due]
        diff = coords[heads] - coords[tails]
        r2 = np.sum(diff * diff, axis=1)
        coeff = np.where(
            r2 > 0.0, (-2.0 * a * b * r2 ** (b - 1.0)) / (1.0 + a * r2**b), 0.0
        )
        grad = np.clip(coeff[:, None] * diff, -_GRAD_CLIP, _GRAD_CLIP)
        delta = np.zeros_like(coords)
        np.add.at(delta, heads, grad)
        np.add.at(delta, tails, -grad)
        if nsr > 0:
            for anchors in (heads, tails):
                samples = rng.integers(0, n, size=(len(anchors), nsr))
                np.add.at(
                    delta, anchors, _negative_forces(coords, anchors, samples, a, b)
                )
        coords += lr * delta
        next_sample[due] += eps_per_sample[due]
    return coords


def reduce(points: np.ndarray, config: ReductionConfig) -> np.ndarray:
    """Reduce points to ``config.n_components`` dimensions.

    Deterministic for a fixed seed: the same points and config always
    produce the same coordinates.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2:
        raise ValidationError("points must be a 2-d array")
    if len(points) <= config.n_neighbors:
        raise ValidationError(
            f"need more than n_neighbors={config.n_neighbors} points, "
            f"got {len(points)}"
        )
    graph = fuzzy_simplicial_set(points, config)
    rng = np.random.default_rng(config.seed)
    return optimize_layout(graph, config, rng)
