"""Point clouds: synthetic generators, table ingestion, PCA and distances."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import yaml
from scipy.spatial.distance import pdist, squareform

from .errors import ParameterError, TableError

METRICS = ("euclidean", "manhattan")
_SCIPY_METRIC = {"euclidean": "euclidean", "manhattan": "cityblock"}


@dataclass
class PointCloud:
    points: np.ndarray
    labels: Optional[np.ndarray] = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim == 1 and pts.size == 0:
            pts = pts.reshape(0, 2)
        if pts.ndim != 2:
            raise ParameterError(f"points must be a 2-d array, got shape {pts.shape}", "points")
        if pts.shape[0] > 0 and pts.shape[1] < 1:
            raise ParameterError("points need at least one coordinate", "points")
        if not np.all(np.isfinite(pts)):
            raise ParameterError("points contain NaN or Inf", "points")
        self.points = pts
        if self.labels is not None:
            labels = np.asarray(self.labels, dtype=object)
            if labels.shape != (pts.shape[0],):
                raise ParameterError("one label per point required", "labels")
            self.labels = labels

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.n

    def subset(self, idx) -> "PointCloud":
        idx = np.asarray(idx, dtype=np.intp)
        labels = None if self.labels is None else self.labels[idx]
        return PointCloud(self.points[idx], labels)

    @staticmethod
    def concat(clouds: Sequence["PointCloud"]) -> "PointCloud":
        pts = np.vstack([c.points for c in clouds])
        if all(c.labels is not None for c in clouds):
            labels = np.concatenate([c.labels for c in clouds])
        else:
            labels = None
        return PointCloud(pts, labels)


@dataclass
class DistanceMatrix:
    entries: np.ndarray
    metric_id: str = "euclidean"

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def submatrix(self, idx) -> "DistanceMatrix":
        idx = np.asarray(idx, dtype=np.intp)
        return DistanceMatrix(self.entries[np.ix_(idx, idx)], self.metric_id)


def make_rng(seed) -> np.random.Generator:
    """PCG64 generator; ``seed`` may be an int or a SeedSequence."""
    return np.random.Generator(np.random.PCG64(seed))


def split_seed(seed, n: int) -> list:
    """``n`` independent child seeds."""
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return seed.spawn(n)


# --------------------------------------------------------------------------
# generators

def generate_annulus(n: int, r_inner: float, r_outer: float, seed=0, label=None) -> PointCloud:
    """Area-uniform sample of the annulus ``r_inner <= |p| <= r_outer``."""
    if r_inner < 0 or r_outer < 0 or r_inner >= r_outer:
        raise ParameterError(
            f"invalid radii: need 0 <= r_inner < r_outer, got {r_inner}, {r_outer}", "radii"
        )
    if n < 0:
        raise ParameterError("n must be >= 0", "n")
    rng = make_rng(seed)
    pts = _annulus_draw(rng, n, r_inner, r_outer)
    # rounding in r*(cos, sin) can leave |p| one ulp outside; redraw those
    while True:
        norms = np.linalg.norm(pts, axis=1)
        bad = np.flatnonzero((norms < r_inner) | (norms > r_outer))
        if bad.size == 0:
            break
        pts[bad] = _annulus_draw(rng, bad.size, r_inner, r_outer)
    labels = None if label is None else np.full(n, label, dtype=object)
    return PointCloud(pts.reshape(n, 2), labels)


def _annulus_draw(rng, n, r_inner, r_outer):
    u = rng.random(n)
    theta = rng.random(n) * (2.0 * np.pi)
    r = np.sqrt(u * (r_outer**2 - r_inner**2) + r_inner**2)
    return np.column_stack([r * np.cos(theta), r * np.sin(theta)])


def generate_square(n: int, corner=(0.0, 0.0), side: float = 1.0, seed=0, label=None) -> PointCloud:
    """Uniform sample of the axis-aligned square ``corner + [0, side]^2``."""
    if not side > 0:
        raise ParameterError(f"invalid side {side}: must be > 0", "side")
    if n < 0:
        raise ParameterError("n must be >= 0", "n")
    corner = np.asarray(corner, dtype=np.float64)
    if corner.shape != (2,):
        raise ParameterError("corner must be a 2-d point", "corner")
    rng = make_rng(seed)
    pts = corner + side * rng.random((n, 2))
    labels = None if label is None else np.full(n, label, dtype=object)
    return PointCloud(pts, labels)


def two_squares(seed=0, n_per_square: int = 100) -> PointCloud:
    """Unit squares at (0,0) and (5,5), labels ``square_a`` / ``square_b``."""
    sa, sb = split_seed(seed, 2)
    return PointCloud.concat([
        generate_square(n_per_square, (0.0, 0.0), 1.0, sa, label="square_a"),
        generate_square(n_per_square, (5.0, 5.0), 1.0, sb, label="square_b"),
    ])


def two_circles(seed=0, n_inner: int = 500, n_outer: int = 1000) -> PointCloud:
    """Annuli [1, 2] and [5, 10] centred at the origin, labels ``inner`` / ``outer``."""
    si, so = split_seed(seed, 2)
    return PointCloud.concat([
        generate_annulus(n_inner, 1.0, 2.0, si, label="inner"),
        generate_annulus(n_outer, 5.0, 10.0, so, label="outer"),
    ])


IRIS_LIKE_CLASSES = ("setosa", "versicolor", "virginica")
# per-class means and standard deviations, roughly those of the real Iris measurements
_IRIS_MEANS = np.array([
    [5.0, 3.4, 1.5, 0.25],
    [5.9, 2.8, 4.3, 1.3],
    [6.6, 3.0, 5.6, 2.0],
])
_IRIS_SDS = np.array([
    [0.35, 0.38, 0.17, 0.1],
    [0.5, 0.3, 0.47, 0.2],
    [0.6, 0.3, 0.55, 0.27],
])


def iris_like(seed=0, n_per_class: int = 50) -> PointCloud:
    """Synthetic 4-d, 3-class cloud. Class ``setosa`` is linearly separated from the others."""
    rng = make_rng(seed)
    pts, labels = [], []
    for name, mean, sd in zip(IRIS_LIKE_CLASSES, _IRIS_MEANS, _IRIS_SDS):
        pts.append(mean + sd * rng.standard_normal((n_per_class, 4)))
        labels += [name] * n_per_class
    return PointCloud(np.vstack(pts), np.array(labels, dtype=object))


def sample_rows(cloud: PointCloud, m: int, seed=0) -> PointCloud:
    """Uniform sample without replacement; surviving rows keep their original order."""
    if m >= cloud.n:
        return cloud
    if m < 0:
        raise ParameterError("sample size must be >= 0", "m")
    idx = np.sort(make_rng(seed).choice(cloud.n, size=m, replace=False))
    return cloud.subset(idx)


# --------------------------------------------------------------------------
# tables

@dataclass
class ColumnEncoding:
    name: str
    kind: str  # numeric | ordinal | onehot | binary
    levels: tuple = ()
    positive: Optional[str] = None
    negative: Optional[str] = None

    def width(self) -> int:
        return len(self.levels) if self.kind == "onehot" else 1

    def output_names(self) -> list:
        if self.kind == "onehot":
            return [f"{self.name}={lv}" for lv in self.levels]
        return [self.name]


@dataclass
class EncodingSpec:
    columns: list
    delimiter: str = ","
    null_values: tuple = ("", "NA", "null")
    label_column: Optional[str] = None

    def __post_init__(self):
        for col in self.columns:
            if col.kind not in ("numeric", "ordinal", "onehot", "binary"):
                raise ParameterError(f"column {col.name}: unknown encoding {col.kind!r}", col.name)
            if col.kind in ("ordinal", "onehot"):
                if not col.levels:
                    raise ParameterError(f"column {col.name}: {col.kind} needs levels", col.name)
                if len(set(col.levels)) != len(col.levels):
                    raise ParameterError(f"column {col.name}: duplicate levels", col.name)
            if col.kind == "binary" and col.positive is None:
                raise ParameterError(f"column {col.name}: binary needs a positive level", col.name)

    @classmethod
    def from_dict(cls, tree: dict) -> "EncodingSpec":
        cols = []
        for entry in tree.get("columns", []):
            name = _as_level(entry["name"], "name")
            kind = entry.get("encode", "numeric")
            levels = tuple(_as_level(v, name) for v in entry.get("levels", ()))
            pos = entry.get("positive")
            neg = entry.get("negative")
            cols.append(ColumnEncoding(
                name, kind, levels,
                None if pos is None else _as_level(pos, name),
                None if neg is None else _as_level(neg, name),
            ))
        kwargs = {}
        if "delimiter" in tree:
            kwargs["delimiter"] = tree["delimiter"]
        if "null_values" in tree:
            kwargs["null_values"] = tuple(_as_level(v, "null_values") for v in tree["null_values"])
        if "label_column" in tree:
            kwargs["label_column"] = tree["label_column"]
        return cls(cols, **kwargs)


def _as_level(value, where) -> str:
    # YAML 1.1 turns bare yes/no/on/off into booleans; refuse rather than guess
    if isinstance(value, bool):
        raise ParameterError(
            f"{where}: level {value!r} parsed as a boolean; quote it in the config", where
        )
    return str(value)


def load_encoding_spec(path) -> EncodingSpec:
    with open(path, encoding="utf-8") as fh:
        tree = yaml.safe_load(fh) or {}
    return EncodingSpec.from_dict(tree)


def load_table(path, spec: EncodingSpec) -> PointCloud:
    """Read a delimited text file with a header row and encode it per ``spec``.

    Rows with a null in any encoded column (or the label column) are dropped.
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=spec.delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise TableError(f"{path}: missing header row") from None
        header = [h.strip() for h in header]
        needed = [c.name for c in spec.columns]
        if spec.label_column is not None:
            needed.append(spec.label_column)
        for name in needed:
            if name not in header:
                raise TableError(f"{path}: missing column {name!r}", column=name)
        pos = {h: i for i, h in enumerate(header)}
        nulls = set(spec.null_values)
        width = sum(c.width() for c in spec.columns)
        rows, labels = [], []
        for rowno, raw in enumerate(reader, start=2):
            if not raw:
                continue
            if len(raw) != len(header):
                raise TableError(
                    f"{path}: row {rowno} has {len(raw)} fields, expected {len(header)}", row=rowno
                )
            values = {name: raw[pos[name]].strip() for name in needed}
            if any(v in nulls for v in values.values()):
                continue
            out = np.empty(width)
            k = 0
            for col in spec.columns:
                k = _encode_cell(col, values[col.name], out, k, path, rowno)
            rows.append(out)
            if spec.label_column is not None:
                labels.append(values[spec.label_column])
    pts = np.vstack(rows) if rows else np.empty((0, width))
    lab = np.array(labels, dtype=object) if spec.label_column is not None else None
    return PointCloud(pts, lab)


def _encode_cell(col, value, out, k, path, rowno):
    if col.kind == "numeric":
        try:
            x = float(value)
        except ValueError:
            raise TableError(
                f"{path}: row {rowno}, column {col.name!r}: cannot parse {value!r} as a number",
                row=rowno, column=col.name,
            ) from None
        if not np.isfinite(x):
            raise TableError(f"{path}: row {rowno}, column {col.name!r}: non-finite value",
                             row=rowno, column=col.name)
        out[k] = x
        return k + 1
    if col.kind == "binary":
        if value == col.positive:
            out[k] = 1.0
        elif col.negative is None or value == col.negative:
            out[k] = 0.0
        else:
            raise TableError(f"{path}: row {rowno}, column {col.name!r}: unknown level {value!r}",
                             row=rowno, column=col.name)
        return k + 1
    try:
        idx = col.levels.index(value)
    except ValueError:
        raise TableError(f"{path}: row {rowno}, column {col.name!r}: unknown level {value!r}",
                         row=rowno, column=col.name) from None
    if col.kind == "ordinal":
        out[k] = float(idx)
        return k + 1
    out[k:k + len(col.levels)] = 0.0
    out[k + idx] = 1.0
    return k + len(col.levels)


def read_points_csv(path, delimiter=",") -> np.ndarray:
    """Read a headerless numeric CSV."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for rowno, raw in enumerate(csv.reader(fh, delimiter=delimiter), start=1):
            if not raw:
                continue
            try:
                rows.append([float(v) for v in raw])
            except ValueError:
                raise TableError(f"{path}: row {rowno}: cannot parse numbers", row=rowno) from None
    if not rows:
        return np.empty((0, 2))
    if len({len(r) for r in rows}) != 1:
        raise TableError(f"{path}: rows have differing lengths")
    return np.array(rows, dtype=np.float64)


def format_float(x) -> str:
    """Shortest round-trip decimal; ``inf`` for +infinity."""
    x = float(x)
    if x == np.inf:
        return "inf"
    return repr(x)


def points_to_csv(cloud: PointCloud) -> str:
    return "".join(",".join(format_float(v) for v in row) + "\n" for row in cloud.points)


# --------------------------------------------------------------------------
# projections and distances

def pca_project(cloud: PointCloud, k: int, standardize: bool = False) -> PointCloud:
    """Scores against the top-``k`` principal axes of the mean-centred cloud.

    Axes are ordered by decreasing variance; each axis is signed so that its
    largest-magnitude loading is positive.
    """
    n, d = cloud.points.shape
    if not 1 <= k <= d:
        raise ParameterError(f"invalid k={k}: need 1 <= k <= d={d}", "k")
    if n < 2:
        raise ParameterError("pca needs at least 2 points", "n")
    x = cloud.points - cloud.points.mean(axis=0)
    if standardize:
        sd = x.std(axis=0)
        x = x / np.where(sd > 0, sd, 1.0)
    cov = x.T @ x / (n - 1)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(-evals, kind="stable")
    axes = evecs[:, order[:k]]
    flip = np.sign(axes[np.argmax(np.abs(axes), axis=0), np.arange(k)])
    axes = axes * np.where(flip == 0, 1.0, flip)
    return PointCloud(x @ axes, cloud.labels)


def distance_matrix(cloud: PointCloud, metric: str = "euclidean") -> DistanceMatrix:
    if metric not in METRICS:
        raise ParameterError(f"unknown metric {metric!r}; choose from {METRICS}", "metric")
    if cloud.n <= 1:
        return DistanceMatrix(np.zeros((cloud.n, cloud.n)), metric)
    return DistanceMatrix(squareform(pdist(cloud.points, _SCIPY_METRIC[metric])), metric)
