"""Mapper: lens, overlapping interval cover, per-preimage clustering, nerve."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .cluster import (
    ClusterAssignment,
    HistogramGap,
    cut_dendrogram,
    dbscan,
    kmeans,
    single_linkage,
)
from .dataset import PointCloud, distance_matrix, pca_project
from .errors import AlgorithmError, ParameterError, RipsmapError


# --------------------------------------------------------------------------
# lens

@dataclass(frozen=True, eq=False)
class Lens:
    kind: str  # coordinate | pca | external
    axis: int = 0
    components: int = 1
    values: Optional[np.ndarray] = None
    standardize: bool = False

    @classmethod
    def coordinate(cls, axis: int) -> "Lens":
        return cls("coordinate", axis=axis)

    @classmethod
    def pca(cls, components: int, standardize: bool = False) -> "Lens":
        return cls("pca", components=components, standardize=standardize)

    @classmethod
    def external(cls, values) -> "Lens":
        return cls("external", values=np.asarray(values, dtype=np.float64))

    @classmethod
    def parse(cls, text: str) -> "Lens":
        """``coord:0``, ``pca:2`` or ``pca-std:2`` (z-scored columns first)."""
        kind, _, arg = text.partition(":")
        try:
            num = int(arg) if arg else None
        except ValueError:
            raise ParameterError(f"bad lens {text!r}", "lens") from None
        if kind in ("coord", "coordinate"):
            return cls.coordinate(0 if num is None else num)
        if kind in ("pca", "pca-std"):
            return cls.pca(2 if num is None else num, standardize=kind == "pca-std")
        raise ParameterError(f"unknown lens {text!r}; use coord:<axis> or pca:<k>", "lens")

    @property
    def output_dim(self) -> int:
        if self.kind == "coordinate":
            return 1
        if self.kind == "pca":
            return self.components
        return 1 if self.values.ndim == 1 else self.values.shape[1]

    def describe(self) -> str:
        if self.kind == "coordinate":
            return f"coord:{self.axis}"
        if self.kind == "pca":
            return f"{'pca-std' if self.standardize else 'pca'}:{self.components}"
        return "external"


def evaluate_lens(cloud: PointCloud, lens: Lens) -> np.ndarray:
    """Lens values as an ``n x output_dim`` table."""
    if lens.kind == "coordinate":
        if not 0 <= lens.axis < cloud.d:
            raise ParameterError(f"axis {lens.axis} out of range for d={cloud.d}", "lens")
        return cloud.points[:, [lens.axis]].copy()
    if lens.kind == "pca":
        if lens.components > cloud.d:
            raise ParameterError(f"pca({lens.components}) needs d >= {lens.components}", "lens")
        return pca_project(cloud, lens.components, lens.standardize).points
    if lens.kind == "external":
        vals = lens.values.reshape(lens.values.shape[0], -1)
        if vals.shape[0] != cloud.n:
            raise ParameterError(
                f"external lens has {vals.shape[0]} rows for {cloud.n} points", "lens"
            )
        if not np.all(np.isfinite(vals)):
            raise ParameterError("external lens values must be finite", "lens")
        return vals.copy()
    raise ParameterError(f"unknown lens kind {lens.kind!r}", "lens")


# --------------------------------------------------------------------------
# cover

@dataclass
class Cover:
    """Product of per-dimension lists of closed intervals ``(lo, hi)``."""

    intervals: List[np.ndarray]
    n_intervals: int
    overlap_frac: float

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(iv.shape[0] for iv in self.intervals)

    def memberships(self, values: np.ndarray) -> Dict[Tuple[int, ...], np.ndarray]:
        """Nonempty preimages keyed by cell (one interval index per dimension)."""
        values = values.reshape(values.shape[0], -1)
        per_dim = []
        for c, iv in enumerate(self.intervals):
            v = values[:, c]
            inside = (v[:, None] >= iv[None, :, 0]) & (v[:, None] <= iv[None, :, 1])
            per_dim.append([np.flatnonzero(row).tolist() for row in inside])
        cells: Dict[Tuple[int, ...], List[int]] = {}
        for p in range(values.shape[0]):
            for cell in itertools.product(*(lists[p] for lists in per_dim)):
                cells.setdefault(cell, []).append(p)
        return {cell: np.array(cells[cell], dtype=np.int64) for cell in sorted(cells)}

    def flat_index(self, cell) -> int:
        return int(np.ravel_multi_index(cell, self.shape))


def _intervals_1d(v: np.ndarray, n_intervals: int, overlap: float) -> np.ndarray:
    lo, hi = float(v.min()), float(v.max())
    if hi == lo:
        return np.array([[lo, hi]])
    step = (hi - lo) / n_intervals
    starts = lo + step * np.arange(n_intervals)
    ends = starts + step * (1.0 + overlap)
    # rounding must never open a gap between neighbours
    ends[:-1] = np.maximum(ends[:-1], starts[1:])
    ends = np.minimum(ends, hi)
    ends[-1] = hi
    return np.column_stack([starts, ends])


def build_cover(values, n_intervals: int = 10, overlap_frac: float = 0.3) -> Cover:
    """Equal-length intervals of length ``L * (1 + overlap_frac)`` stepped by ``L = range / n``."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 1:
        values = values[:, None]
    if values.shape[0] == 0:
        raise ParameterError("cannot cover an empty set of lens values", "values")
    if n_intervals < 1:
        raise ParameterError("n_intervals must be >= 1", "n_intervals")
    if not 0 <= overlap_frac < 1:
        raise ParameterError("overlap_frac must lie in [0, 1)", "overlap_frac")
    ivs = [_intervals_1d(values[:, c], n_intervals, overlap_frac) for c in range(values.shape[1])]
    return Cover(ivs, n_intervals, overlap_frac)


# --------------------------------------------------------------------------
# clusterers used on each preimage

@dataclass(frozen=True)
class SingleLinkageClusterer:
    """Single linkage cut by the first-gap histogram heuristic.

    With ``span="diameter"`` the histogram covers ``[0, diameter of the
    preimage]``; ``span="height"`` uses ``[0, largest merge height]``, which
    splits small preimages far more often.
    """

    bins: int = 10
    span: str = "diameter"

    def __call__(self, cloud: PointCloud, metric: str, seed) -> ClusterAssignment:
        dist = distance_matrix(cloud, metric)
        upper = float(dist.entries.max()) if self.span == "diameter" and dist.n > 1 else None
        return cut_dendrogram(single_linkage(dist), HistogramGap(self.bins, upper))

    def describe(self) -> dict:
        return {"name": "single-linkage", "bins": self.bins, "span": self.span}


@dataclass(frozen=True)
class DBSCANClusterer:
    eps: float = 0.5
    min_pts: int = 5

    def __call__(self, cloud, metric, seed) -> ClusterAssignment:
        return dbscan(distance_matrix(cloud, metric), self.eps, self.min_pts)

    def describe(self) -> dict:
        return {"name": "dbscan", "eps": self.eps, "min_pts": self.min_pts}


@dataclass(frozen=True)
class KMeansClusterer:
    """k-means with ``k`` clamped to the preimage size."""

    k: int = 2

    def __call__(self, cloud, metric, seed) -> ClusterAssignment:
        return kmeans(cloud, min(self.k, cloud.n), seed=seed).assignment

    def describe(self) -> dict:
        return {"name": "kmeans", "k": self.k}


# --------------------------------------------------------------------------
# nerve

@dataclass
class MapperNode:
    id: int
    cover_index: int
    cell: Tuple[int, ...]
    cluster_index: int
    members: np.ndarray


@dataclass
class MapperNerve:
    nodes: List[MapperNode]
    simplices: Dict[int, List[Tuple[int, ...]]]
    cover: Optional[Cover] = None
    lens_values: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def edges(self) -> List[Tuple[int, int]]:
        return self.simplices.get(1, [])

    def components(self) -> List[List[int]]:
        parent = list(range(len(self.nodes)))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for a, b in self.edges:
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
        groups: Dict[int, List[int]] = {}
        for v in range(len(self.nodes)):
            groups.setdefault(find(v), []).append(v)
        return [groups[r] for r in sorted(groups)]

    @property
    def n_components(self) -> int:
        return len(self.components())


def run_mapper(
    cloud: PointCloud,
    lens: Lens,
    n_intervals: int = 10,
    overlap: float = 0.3,
    clusterer=None,
    nerve_dim: int = 1,
    metric: str = "euclidean",
    seed=0,
) -> MapperNerve:
    """Cluster each nonempty preimage in the ambient space and build the nerve.

    DBSCAN noise points belong to no node. A tuple of nodes is a simplex
    exactly when some point lies in all of them.
    """
    if nerve_dim < 1:
        raise ParameterError("nerve_dim must be >= 1", "nerve_dim")
    if clusterer is None:
        clusterer = SingleLinkageClusterer()
    values = evaluate_lens(cloud, lens)
    cover = build_cover(values, n_intervals, overlap)

    nodes: List[MapperNode] = []
    for cell, idx in cover.memberships(values).items():
        alpha = cover.flat_index(cell)
        sub = cloud.subset(idx)
        try:
            assignment = clusterer(sub, metric, np.random.SeedSequence([int(seed), alpha]))
        except RipsmapError as exc:
            raise AlgorithmError(f"cover element {alpha}: {exc}", cover_index=alpha) from exc
        for j, members in enumerate(assignment.clusters()):
            nodes.append(MapperNode(len(nodes), alpha, tuple(int(c) for c in cell), j, idx[members]))

    point_nodes: List[List[int]] = [[] for _ in range(cloud.n)]
    for node in nodes:
        for p in node.members.tolist():
            point_nodes[p].append(node.id)
    simplices: Dict[int, List[Tuple[int, ...]]] = {0: [(node.id,) for node in nodes]}
    for k in range(1, nerve_dim + 1):
        found = set()
        for ids in point_nodes:
            if len(ids) > k:
                found.update(itertools.combinations(ids, k + 1))
        simplices[k] = sorted(found)
    return MapperNerve(nodes, simplices, cover, values)


# --------------------------------------------------------------------------
# node statistics and export

@dataclass
class NodeStats:
    size: int
    mean: np.ndarray
    label_counts: Dict[str, int] = field(default_factory=dict)

    @property
    def majority_label(self) -> Optional[str]:
        if not self.label_counts:
            return None
        return max(sorted(self.label_counts), key=lambda k: self.label_counts[k])

    @property
    def majority_ratio(self) -> Optional[float]:
        lab = self.majority_label
        return None if lab is None else self.label_counts[lab] / self.size

    def ratio(self, label) -> float:
        return self.label_counts.get(str(label), 0) / self.size

    def to_dict(self) -> dict:
        out = {"size": self.size, "mean": [float(x) for x in self.mean]}
        if self.label_counts:
            out["label_counts"] = dict(sorted(self.label_counts.items()))
            out["majority_label"] = self.majority_label
            out["majority_ratio"] = self.majority_ratio
        return out


def node_stats(nerve: MapperNerve, cloud: PointCloud) -> List[NodeStats]:
    stats = []
    for node in nerve.nodes:
        pts = cloud.points[node.members]
        counts = {}
        if cloud.labels is not None:
            labs, cnt = np.unique(cloud.labels[node.members].astype(str), return_counts=True)
            counts = {str(a): int(b) for a, b in zip(labs, cnt)}
        stats.append(NodeStats(int(node.members.size), pts.mean(axis=0), counts))
    return stats


def nerve_to_dict(nerve: MapperNerve, stats: List[NodeStats]) -> dict:
    return {
        "nodes": [
            {
                "id": node.id,
                "cover_index": node.cover_index,
                "cluster_index": node.cluster_index,
                "size": int(node.members.size),
                "members": [int(m) for m in node.members],
                "stats": st.to_dict(),
            }
            for node, st in zip(nerve.nodes, stats)
        ],
        "simplices": {str(k): [list(s) for s in v] for k, v in sorted(nerve.simplices.items())},
    }


def nerve_to_json(nerve: MapperNerve, stats: List[NodeStats]) -> str:
    return json.dumps(nerve_to_dict(nerve, stats), indent=2, sort_keys=True) + "\n"


_YELLOW = np.array([255.0, 255.0, 0.0])
_BLUE = np.array([0.0, 0.0, 255.0])


def ramp_color(t: float) -> str:
    """Yellow at 0, blue at 1."""
    t = min(max(float(t), 0.0), 1.0)
    r, g, b = np.rint(_YELLOW + t * (_BLUE - _YELLOW)).astype(int)
    return f"#{r:02x}{g:02x}{b:02x}"


def color_values(stats: List[NodeStats], color_by: Optional[str] = None) -> np.ndarray:
    """Per-node value in [0, 1] for the fill colour.

    ``label:<name>`` uses the fraction of members carrying that label;
    ``mean:<j>`` uses feature ``j``'s node mean, min-max scaled over nodes.
    By default the first label (sorted) is used when labels exist.
    """
    if not stats:
        return np.zeros(0)
    if color_by is None:
        labels = sorted({lab for st in stats for lab in st.label_counts})
        color_by = f"label:{labels[0]}" if labels else "mean:0"
    kind, _, arg = color_by.partition(":")
    if kind == "label":
        return np.array([st.ratio(arg) for st in stats])
    if kind == "mean":
        vals = np.array([st.mean[int(arg)] for st in stats])
        span = vals.max() - vals.min()
        return (vals - vals.min()) / span if span > 0 else np.zeros_like(vals)
    raise ParameterError(f"bad colour spec {color_by!r}", "color_by")


def nerve_to_dot(nerve: MapperNerve, stats: List[NodeStats], color_by: Optional[str] = None) -> str:
    """1-skeleton as an undirected DOT graph; ``size`` is the member count."""
    colors = color_values(stats, color_by)
    lines = ["graph mapper {", "  node [shape=circle, style=filled];"]
    for node, st, t in zip(nerve.nodes, stats, colors):
        lines.append(f'  {node.id} [size={st.size}, label="{node.id}", fillcolor="{ramp_color(t)}"];')
    for a, b in nerve.edges:
        lines.append(f"  {a} -- {b};")
    lines.append("}")
    return "\n".join(lines) + "\n"
