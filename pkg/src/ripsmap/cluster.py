"""Flat clusterers: Lloyd k-means, single-linkage with cut heuristics, DBSCAN."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple, Union

import numpy as np

from .dataset import DistanceMatrix, PointCloud, make_rng, split_seed
from .errors import AlgorithmError, ParameterError

NOISE = -1


@dataclass
class ClusterAssignment:
    labels: np.ndarray

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        used = np.unique(self.labels[self.labels != NOISE])
        if np.any(self.labels < NOISE):
            raise ParameterError("labels must be >= 0 or NOISE", "labels")
        if used.size and not np.array_equal(used, np.arange(used.size)):
            raise ParameterError("cluster labels must be contiguous from 0", "labels")

    @property
    def k(self) -> int:
        return int(self.labels.max() + 1) if np.any(self.labels != NOISE) else 0

    @property
    def n_noise(self) -> int:
        return int(np.count_nonzero(self.labels == NOISE))

    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels[self.labels != NOISE], minlength=self.k)

    def clusters(self) -> List[np.ndarray]:
        return [np.flatnonzero(self.labels == c) for c in range(self.k)]

    def to_csv(self) -> str:
        lines = ["point_index,label"]
        lines += [f"{i},{int(lab)}" for i, lab in enumerate(self.labels)]
        return "\n".join(lines) + "\n"


def relabel_by_first_appearance(raw) -> ClusterAssignment:
    """Renumber arbitrary group ids to 0..k-1 in order of first occurrence; negatives stay NOISE."""
    raw = np.asarray(raw)
    out = np.full(raw.shape, NOISE, dtype=np.int64)
    seen = {}
    for i, r in enumerate(raw.tolist()):
        if r < 0:
            continue
        if r not in seen:
            seen[r] = len(seen)
        out[i] = seen[r]
    return ClusterAssignment(out)


# --------------------------------------------------------------------------
# k-means

@dataclass
class KMeansResult:
    assignment: ClusterAssignment
    centers: np.ndarray
    inertia: float
    iterations: int
    converged: bool
    history: List[float] = field(default_factory=list)


def inertia(cloud: PointCloud, assignment: ClusterAssignment) -> float:
    """Sum of squared distances of points to the barycenter of their cluster."""
    labels = assignment.labels
    if labels.shape != (cloud.n,):
        raise ParameterError("assignment does not cover the cloud", "assignment")
    if np.any(labels == NOISE):
        raise ParameterError("inertia is undefined with NOISE labels", "assignment")
    total = 0.0
    for c in range(assignment.k):
        members = cloud.points[labels == c]
        if members.shape[0] == 0:
            raise AlgorithmError(f"empty cluster {c}")
        total += float(np.sum((members - members.mean(axis=0)) ** 2))
    return total


def _sq_dists(x, centers):
    return np.sum((x[:, None, :] - centers[None, :, :]) ** 2, axis=2)


def _objective(x, labels, centers):
    return float(np.sum((x - centers[labels]) ** 2))


def kmeans_pp_init(cloud: PointCloud, k: int, seed=0) -> np.ndarray:
    """k-means++ seeding: each new center drawn with probability proportional to D^2."""
    x = cloud.points
    n = x.shape[0]
    if not 1 <= k <= n:
        raise ParameterError(f"k={k} exceeds n={n} (or is < 1)", "k")
    rng = make_rng(seed)
    chosen = [int(rng.integers(n))]
    d2 = np.sum((x - x[chosen[0]]) ** 2, axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total > 0:
            nxt = int(rng.choice(n, p=d2 / total))
        else:
            # every point coincides with a chosen center; keep indices distinct
            rest = np.setdiff1d(np.arange(n), chosen)
            nxt = int(rest[rng.integers(rest.size)])
        chosen.append(nxt)
        d2 = np.minimum(d2, np.sum((x - x[nxt]) ** 2, axis=1))
    return x[chosen].copy()


def kmeans(
    cloud: PointCloud,
    k: int,
    init: Union[str, np.ndarray] = "kmeans++",
    seed=0,
    max_iter: int = 300,
    tol: float = 1e-6,
    n_init: int = 10,
) -> KMeansResult:
    """Lloyd iteration: assign to nearest center, move centers to barycenters, repeat.

    Stops when no center moves more than ``tol`` or after ``max_iter`` rounds.
    Ties go to the lowest center index. A center left without members is
    reseeded at the point farthest from its nearest center. With a seeding
    strategy (not explicit centers) the whole run is repeated ``n_init`` times
    from independent seeds and the lowest-inertia run is returned.
    """
    x = cloud.points
    n = x.shape[0]
    if not 1 <= k <= n:
        raise ParameterError(f"k={k} exceeds n={n} (or is < 1)", "k")
    if max_iter < 1:
        raise ParameterError("max_iter must be >= 1", "max_iter")
    if tol < 0:
        raise ParameterError("tol must be >= 0", "tol")
    if n_init < 1:
        raise ParameterError("n_init must be >= 1", "n_init")

    if not isinstance(init, str):
        centers = np.array(init, dtype=np.float64)
        if centers.shape != (k, x.shape[1]):
            raise ParameterError(f"explicit centers must have shape {(k, x.shape[1])}", "init")
        return _lloyd(x, centers, max_iter, tol)
    if init not in ("kmeans++", "random"):
        raise ParameterError(f"unknown init {init!r}", "init")

    best = None
    for child in split_seed(seed, n_init):
        if init == "kmeans++":
            centers = kmeans_pp_init(cloud, k, child)
        else:
            centers = x[make_rng(child).choice(n, size=k, replace=False)].copy()
        run = _lloyd(x, centers, max_iter, tol)
        if best is None or run.inertia < best.inertia:
            best = run
    return best


def _lloyd(x, centers, max_iter, tol) -> KMeansResult:
    n, k = x.shape[0], centers.shape[0]
    history = []
    converged = False
    it = 0
    labels = np.zeros(n, dtype=np.int64)
    for it in range(1, max_iter + 1):
        d2 = _sq_dists(x, centers)
        labels = np.argmin(d2, axis=1)
        _repair_empty(labels, d2, k)
        new_centers = np.vstack([x[labels == c].mean(axis=0) for c in range(k)])
        shift = np.max(np.linalg.norm(new_centers - centers, axis=1))
        centers = new_centers
        history.append(_objective(x, labels, centers))
        if shift <= tol:
            converged = True
            break

    assignment = relabel_by_first_appearance(labels)
    # keep center rows aligned with the renumbered labels
    order = [int(labels[np.flatnonzero(assignment.labels == c)[0]]) for c in range(k)]
    return KMeansResult(assignment, centers[order], history[-1], it, converged, history)


def _repair_empty(labels, d2, k):
    n = labels.shape[0]
    nearest = d2[np.arange(n), labels]
    for c in range(k):
        counts = np.bincount(labels, minlength=k)
        if counts[c] > 0:
            continue
        movable = counts[labels] > 1
        cand = np.where(movable, nearest, -1.0)
        p = int(np.argmax(cand))
        labels[p] = c
        nearest[p] = 0.0


# --------------------------------------------------------------------------
# single linkage

@dataclass
class Dendrogram:
    """Merges as (cluster_a, cluster_b, height); leaves are 0..n-1 and merge i creates n+i."""

    merges: List[Tuple[int, int, float]]
    n_leaves: int

    @property
    def heights(self) -> np.ndarray:
        return np.array([m[2] for m in self.merges], dtype=np.float64)


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, a):
        parent = self.parent
        root = a
        while parent[root] != root:
            root = parent[root]
        while parent[a] != root:
            parent[a], a = root, parent[a]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if rb < ra:
            ra, rb = rb, ra
        self.parent[rb] = ra
        return True


def _mst_edges(d: np.ndarray):
    """Prim's algorithm on a dense distance matrix; returns (u, v, w) arrays."""
    n = d.shape[0]
    in_tree = np.zeros(n, dtype=bool)
    in_tree[0] = True
    best = d[0].copy()
    parent = np.zeros(n, dtype=np.intp)
    us, vs, ws = [], [], []
    for _ in range(n - 1):
        cand = np.where(in_tree, np.inf, best)
        v = int(np.argmin(cand))
        us.append(int(parent[v]))
        vs.append(v)
        ws.append(float(best[v]))
        in_tree[v] = True
        closer = d[v] < best
        best = np.where(closer, d[v], best)
        parent = np.where(closer, v, parent)
    return np.array(us, dtype=np.intp), np.array(vs, dtype=np.intp), np.array(ws)


def single_linkage(dist: DistanceMatrix) -> Dendrogram:
    """Agglomerative merges at minimum inter-cluster distance (MST edges in increasing order)."""
    n = dist.n
    if n < 1:
        raise ParameterError("single linkage needs at least one point", "n")
    if n == 1:
        return Dendrogram([], 1)
    us, vs, ws = _mst_edges(dist.entries)
    order = np.argsort(ws, kind="stable")
    uf = _UnionFind(n)
    cluster_id = list(range(n))  # root leaf -> current cluster id
    merges = []
    for e in order:
        a, b = uf.find(int(us[e])), uf.find(int(vs[e]))
        ca, cb = cluster_id[a], cluster_id[b]
        uf.union(a, b)
        cluster_id[uf.find(a)] = n + len(merges)
        merges.append((min(ca, cb), max(ca, cb), float(ws[e])))
    return Dendrogram(merges, n)


@dataclass(frozen=True)
class FixedCount:
    k: int


@dataclass(frozen=True)
class HeightCut:
    h: float


@dataclass(frozen=True)
class HistogramGap:
    """Cut at the lower edge of the first empty bin above the lowest occupied one.

    The histogram spans ``[0, upper]``; ``upper`` defaults to the largest merge height.
    """

    bins: int = 10
    upper: Optional[float] = None


def histogram_gap_threshold(heights: np.ndarray, bins: int, upper: Optional[float] = None) -> float:
    """Height threshold chosen by the first-gap heuristic (``inf`` keeps every merge)."""
    if bins < 1:
        raise ParameterError("bins must be >= 1", "bins")
    if heights.size == 0:
        return np.inf
    top = float(heights.max()) if upper is None else max(float(upper), float(heights.max()))
    if top <= 0:
        return np.inf
    counts, edges = np.histogram(heights, bins=bins, range=(0.0, top))
    occupied = np.flatnonzero(counts)
    empty = np.flatnonzero(counts == 0)
    empty = empty[empty > occupied[0]]
    if empty.size == 0:
        return np.inf
    return float(edges[empty[0]])


def cut_dendrogram(dendrogram: Dendrogram, strategy) -> ClusterAssignment:
    n = dendrogram.n_leaves
    heights = dendrogram.heights
    if isinstance(strategy, FixedCount):
        if not 1 <= strategy.k <= n:
            raise ParameterError(f"invalid k={strategy.k} for {n} leaves", "k")
        keep = n - strategy.k
    elif isinstance(strategy, HeightCut):
        if strategy.h < 0:
            raise ParameterError("cut height must be >= 0", "h")
        keep = int(np.count_nonzero(heights <= strategy.h))
    elif isinstance(strategy, HistogramGap):
        thr = histogram_gap_threshold(heights, strategy.bins, strategy.upper)
        keep = int(np.count_nonzero(heights <= thr)) if np.isfinite(thr) else len(heights)
    else:
        raise ParameterError(f"unknown cut strategy {strategy!r}", "strategy")

    uf = _UnionFind(2 * n)
    for i, (a, b, _h) in enumerate(dendrogram.merges[:keep]):
        uf.union(a, n + i)
        uf.union(b, n + i)
    return relabel_by_first_appearance([uf.find(i) for i in range(n)])


# --------------------------------------------------------------------------
# DBSCAN

def dbscan(dist: DistanceMatrix, eps: float, min_pts: int) -> ClusterAssignment:
    """Density clustering over a precomputed distance matrix.

    Core points have at least ``min_pts`` points (themselves included) within
    ``eps``. Clusters are numbered in index order of their first core point; a
    border point reachable from several clusters joins the first one found.
    """
    if not eps > 0:
        raise ParameterError("eps must be > 0", "eps")
    if min_pts < 1:
        raise ParameterError("min_pts must be >= 1", "min_pts")
    n = dist.n
    near = dist.entries <= eps
    core = near.sum(axis=1) >= min_pts
    labels = np.full(n, NOISE, dtype=np.int64)
    k = 0
    for i in range(n):
        if not core[i] or labels[i] != NOISE:
            continue
        labels[i] = k
        stack = [i]
        while stack:
            p = stack.pop()
            for q in np.flatnonzero(near[p]):
                if labels[q] != NOISE:
                    continue
                labels[q] = k
                if core[q]:
                    stack.append(int(q))
        k += 1
    return ClusterAssignment(labels)
