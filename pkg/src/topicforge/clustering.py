"""Density-based clustering of the reduced document coordinates.

Points are clustered by building a minimum spanning tree over mutual
reachability distances, condensing the resulting single-linkage hierarchy
so that only splits into components of at least ``min_cluster_size``
points count as new clusters, and selecting the most stable clusters by
excess of mass.  Points that fall out of the hierarchy above every
selected cluster are noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class ClusterConfig:
    """Knobs for the clustering stage.

    ``min_samples`` controls how conservative the density estimate is and
    defaults to ``min_cluster_size`` when unset.
    """

    min_cluster_size: int = 15
    min_samples: int | None = None

    def __post_init__(self) -> None:
        if self.min_cluster_size < 2:
            raise ValidationError(
                f"min_cluster_size must be >= 2, got {self.min_cluster_size}"
            )
        if self.min_samples is not None and self.min_samples < 1:
            raise ValidationError(
                f"min_samples must be >= 1, got {self.min_samples}"
            )

    @property
    def effective_min_samples(self) -> int:
        return self.min_samples if self.min_samples is not None else self.min_cluster_size


@dataclass
class CondensedTree:
    """Cluster hierarchy after small-side splits are folded away.

    Cluster 0 is the root (all points, birth lambda 0).  ``fallout_points``
    and ``fallout_lambdas`` record when individual points left each
    cluster; ``children`` holds the two sub-clusters of a genuine split.
    Lambda is 1/distance, so larger means denser.
    """

    n_points: int
    parent: list[int]
    birth_lambda: list[float]
    death_lambda: list[float]
    children: list[list[int]]
    size_at_birth: list[int]
    fallout_points: list[list[int]]
    fallout_lambdas: list[list[float]]
    stability: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        stab = np.zeros(len(self.parent))
        for c in range(len(self.parent)):
            birth = self.birth_lambda[c]
            total = sum(lam - birth for lam in self.fallout_lambdas[c])
            for ch in self.children[c]:
                total += self.size_at_birth[ch] * (self.birth_lambda[ch] - birth)
            stab[c] = total
        self.stability = stab


@dataclass(frozen=True)
class ClusterLabeling:
    """Result of clustering: label per point, -1 for noise."""

    labels: np.ndarray
    n_clusters: int
    cluster_stability: np.ndarray

    @property
    def noise_count(self) -> int:
        return int(np.sum(self.labels == -1))


def core_distances(points: np.ndarray, min_samples: int) -> np.ndarray:
    """Distance from each point to its min_samples-th nearest neighbor.

    The point itself is excluded, so ``min_samples`` must be at most
    ``n - 1``.
    """
    n = len(points)
    if not 1 <= min_samples <= n - 1:
        raise ValidationError(
            f"min_samples must be in [1, {n - 1}] for {n} points, got {min_samples}"
        )
    sq = np.sum(points**2, axis=1)
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * (points @ points.T), 0.0)
    dist = np.sqrt(d2)
    np.fill_diagonal(dist, np.inf)
    return np.partition(dist, min_samples - 1, axis=1)[:, min_samples - 1]


def mutual_reachability(points: np.ndarray, core: np.ndarray) -> np.ndarray:
    """Pairwise ``max(core_i, core_j, euclidean(i, j))`` matrix."""
    sq = np.sum(points**2, axis=1)
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * (points @ points.T), 0.0)
    dist = np.sqrt(d2)
    mr = np.maximum(dist, np.maximum(core[:, None], core[None, :]))
    np.fill_diagonal(mr, 0.0)
    return mr


def build_mst(distance_matrix: np.ndarray) -> np.ndarray:
    """Minimum spanning tree by Prim's algorithm over a dense matrix.

    Returns ``(n - 1, 3)`` rows of (point a, point b, weight).  Ties pick
    the lowest-index point, so the tree is deterministic.
    """
    n = len(distance_matrix)
    if n < 2:
        raise ValidationError("need at least 2 points for a spanning tree")
    visited = np.zeros(n, dtype=bool)
    best_weight = distance_matrix[0].copy()
    best_source = np.zeros(n, dtype=np.int64)
    visited[0] = True
    best_weight[0] = np.inf
    edges = np.empty((n - 1, 3))
    for e in range(n - 1):
        j = int(np.argmin(np.where(visited, np.inf, best_weight)))
        edges[e] = (best_source[j], j, best_weight[j])
        visited[j] = True
        closer = ~visited & (distance_matrix[j] < best_weight)
        best_source[closer] = j
        best_weight[closer] = distance_matrix[j][closer]
    return edges


def _single_linkage(n: int, mst_edges: np.ndarray):
    """Merge MST edges in ascending weight order into a binary dendrogram.

    Returns (children, dist, size) arrays indexed by node id; points are
    nodes 0..n-1 and merge k creates node n+k, so node 2n-2 is the root.
    """
    order = np.argsort(mst_edges[:, 2], kind="stable")
    parent = np.arange(2 * n - 1, dtype=np.int64)

    def find(x: int) -> int:
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    children = np.empty((n - 1, 2), dtype=np.int64)
    dist = np.empty(n - 1)
    size = np.ones(2 * n - 1, dtype=np.int64)
    for k, e in enumerate(order):
        i, j, w = mst_edges[e]
        ra, rb = find(int(i)), find(int(j))
        node = n + k
        children[k] = (ra, rb)
        dist[k] = w
        size[node] = size[ra] + size[rb]
        parent[ra] = node
        parent[rb] = node
    return children, dist, size


def _leaves_below(node: int, n: int, children: np.ndarray) -> list[int]:
    out: list[int] = []
    stack = [node]
    while stack:
        x = stack.pop()
        if x < n:
            out.append(x)
        else:
            stack.extend(children[x - n])
    return out


def condense_tree(
    n_points: int, mst_edges: np.ndarray, min_cluster_size: int
) -> CondensedTree:
    """Fold the single-linkage dendrogram into the condensed hierarchy.

    Walking down from the root at increasing lambda, a split where both
    sides have at least ``min_cluster_size`` points creates two child
    clusters; otherwise the small side's points fall out and the cluster
    continues.  When both sides are small the cluster dies and sheds all
    remaining points.
    """
    if min_cluster_size < 2:
        raise ValidationError(
            f"min_cluster_size must be >= 2, got {min_cluster_size}"
        )
    children, dist, size = _single_linkage(n_points, mst_edges)
    parent: list[int] = [-1]
    birth: list[float] = [0.0]
    death: list[float] = [np.inf]
    kids: list[list[int]] = [[]]
    size_at_birth: list[int] = [n_points]
    fallout_points: list[list[int]] = [[]]
    fallout_lambdas: list[list[float]] = [[]]
    root_node = 2 * n_points - 2
    stack: list[tuple[int, int]] = [(root_node, 0)]
    while stack:
        node, cluster = stack.pop()
        k = node - n_points
        left, right = children[k]
        lam = 1.0 / dist[k] if dist[k] > 0 else np.inf
        big_left = size[left] >= min_cluster_size
        big_right = size[right] >= min_cluster_size
        if big_left and big_right:
            death[cluster] = lam
            for side in (left, right):
                cid = len(parent)
                parent.append(cluster)
                birth.append(lam)
                death.append(np.inf)
                kids.append([])
                size_at_birth.append(int(size[side]))
                fallout_points.append([])
                fallout_lambdas.append([])
                kids[cluster].append(cid)
                stack.append((int(side), cid))
        elif big_left or big_right:
            keep, shed = (left, right) if big_left else (right, left)
            for p in _leaves_below(int(shed), n_points, children):
                fallout_points[cluster].append(p)
                fallout_lambdas[cluster].append(lam)
            stack.append((int(keep), cluster))
        else:
            death[cluster] = lam
            for side in (left, right):
                for p in _leaves_below(int(side), n_points, children):
                    fallout_points[cluster].append(p)
                    fallout_lambdas[cluster].append(lam)
    return CondensedTree(
        n_points=n_points,
        parent=parent,
        birth_lambda=birth,
        death_lambda=death,
        children=kids,
        size_at_birth=size_at_birth,
        fallout_points=fallout_points,
        fallout_lambdas=fallout_lambdas,
    )


def extract_clusters(tree: CondensedTree) -> ClusterLabeling:
    """Select the most stable clusters and label the points.

    A cluster beats its descendants when its stability is at least the
    sum of its children's winning stabilities; the root never competes.
    If no split ever qualified, all points form a single cluster.  Points
    are labeled with the selected cluster whose subtree they fell out of;
    everything that fell out above the selected level is noise.
    """
    m = len(tree.parent)
    if m == 1:
        return ClusterLabeling(
            labels=np.zeros(tree.n_points, dtype=np.int64),
            n_clusters=1,
            cluster_stability=np.array([tree.stability[0]]),
        )
    selected = [False] + [True] * (m - 1)
    winning = tree.stability.copy()
    for c in range(m - 1, 0, -1):
        if not tree.children[c]:
            continue
        child_sum = sum(winning[ch] for ch in tree.children[c])
        if child_sum > tree.stability[c]:
            selected[c] = False
            winning[c] = child_sum
        else:
            stack = list(tree.children[c])
            while stack:
                d = stack.pop()
                selected[d] = False
                stack.extend(tree.children[d])
    chosen = [c for c in range(1, m) if selected[c]]
    if not chosen:
        return ClusterLabeling(
            labels=np.zeros(tree.n_points, dtype=np.int64),
            n_clusters=1,
            cluster_stability=np.array([tree.stability[0]]),
        )
    # Union points with their cluster and unselected clusters with their
    # parent; selected clusters cut the tree into labeled components.
    n = tree.n_points
    parent_uf = np.arange(n + m, dtype=np.int64)

    def find(x: int) -> int:
        root = x
        while parent_uf[root] != root:
            root = parent_uf[root]
        while parent_uf[x] != root:
            parent_uf[x], x = root, parent_uf[x]
        return root

    def union(x: int, y: int) -> None:
        parent_uf[find(x)] = find(y)

    for c in range(1, m):
        if not selected[c]:
            union(n + c, n + tree.parent[c])
    for c in range(m):
        for p in tree.fallout_points[c]:
            union(p, n + c)
    label_of_root: dict[int, int] = {}
    for rank, c in enumerate(chosen):
        label_of_root[find(n + c)] = rank
    labels = np.full(n, -1, dtype=np.int64)
    for p in range(n):
        labels[p] = label_of_root.get(find(p), -1)
    return ClusterLabeling(
        labels=labels,
        n_clusters=len(chosen),
        cluster_stability=tree.stability[chosen],
    )


def cluster(points: np.ndarray, config: ClusterConfig) -> ClusterLabeling:
    """Cluster points in the reduced space.

    Deterministic: no randomness anywhere in the stage.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2:
        raise ValidationError("points must be a 2-d array")
    ms = config.effective_min_samples
    if len(points) <= max(ms, config.min_cluster_size):
        raise ValidationError(
            f"need more than {max(ms, config.min_cluster_size)} points, "
            f"got {len(points)}"
        )
    core = core_distances(points, ms)
    mr = mutual_reachability(points, core)
    mst = build_mst(mr)
    tree = condense_tree(len(points), mst, config.min_cluster_size)
    return extract_clusters(tree)
