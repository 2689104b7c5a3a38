"""Command-line front end: ``ripsmap {generate,persist,mapper,cluster}``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .cluster import (
    FixedCount,
    HeightCut,
    HistogramGap,
    cut_dendrogram,
    dbscan,
    kmeans,
    single_linkage,
)
from .dataset import (
    PointCloud,
    distance_matrix,
    format_float,
    generate_annulus,
    generate_square,
    iris_like,
    load_encoding_spec,
    load_table,
    points_to_csv,
    read_points_csv,
    sample_rows,
    two_circles,
    two_squares,
)
from .errors import ParameterError, RipsmapError, TableError
from .mapper import (
    DBSCANClusterer,
    KMeansClusterer,
    Lens,
    SingleLinkageClusterer,
    node_stats,
    nerve_to_dot,
    nerve_to_json,
    run_mapper,
)
from .persistence import barcode, barcode_csv, betti_curve, boundary_matrix, persistence_diagram, reduce
from .rips import DEFAULT_BUDGET, build_rips

log = logging.getLogger("ripsmap")

PRESETS = ("two-squares", "two-circles", "annulus", "square", "iris-like")
BUDGET_ENV = "RIPSMAP_SIMPLEX_BUDGET"


# --------------------------------------------------------------------------
# helpers

def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def labels_to_csv(labels) -> str:
    lines = ["point_index,label"]
    lines += [f"{i},{lab}" for i, lab in enumerate(labels)]
    return "\n".join(lines) + "\n"


def read_labels_csv(path) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    try:
        rows.sort(key=lambda r: int(r["point_index"]))
        return np.array([r["label"] for r in rows], dtype=object)
    except (KeyError, ValueError):
        raise TableError(f"{path}: expected columns point_index,label") from None


def generate_preset(args) -> PointCloud:
    preset, seed = args.preset, args.seed
    if preset == "two-squares":
        return two_squares(seed)
    if preset == "two-circles":
        return two_circles(seed)
    if preset == "iris-like":
        return iris_like(seed, args.n if args.n is not None else 50)
    n = 500 if args.n is None else args.n
    if preset == "annulus":
        return generate_annulus(n, args.r_inner, args.r_outer, seed)
    if preset == "square":
        return generate_square(n, tuple(args.corner), args.side, seed)
    raise ParameterError(f"unknown preset {preset!r}", "preset")


def load_input(args) -> PointCloud:
    if args.preset is not None:
        return generate_preset(args)
    if args.encoding is not None:
        cloud = load_table(args.input, load_encoding_spec(args.encoding))
    else:
        cloud = PointCloud(read_points_csv(args.input))
    if args.labels is not None:
        cloud = PointCloud(cloud.points, read_labels_csv(args.labels))
    return cloud


def metadata(args, extra=None) -> str:
    params = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out_dir", "verbose")}
    meta = {"command": args.command, "params": params, "seed": args.seed, "version": __version__}
    if extra:
        meta.update(extra)
    return json.dumps(meta, indent=2, sort_keys=True, default=str) + "\n"


def simplex_budget() -> int:
    raw = os.environ.get(BUDGET_ENV)
    if raw is None:
        return DEFAULT_BUDGET
    try:
        return int(raw)
    except ValueError:
        raise ParameterError(f"{BUDGET_ENV} must be an integer, got {raw!r}", BUDGET_ENV) from None


def make_clusterer(args):
    # checked here so a bad flag is reported as such, not as a per-element failure
    if args.eps <= 0:
        raise ParameterError("--eps must be > 0", "eps")
    for flag in ("min_pts", "k", "bins"):
        if getattr(args, flag) < 1:
            raise ParameterError(f"--{flag.replace('_', '-')} must be >= 1", flag)
    name = args.clusterer
    if name == "single-linkage":
        return SingleLinkageClusterer(args.bins)
    if name == "dbscan":
        return DBSCANClusterer(args.eps, args.min_pts)
    if name == "kmeans":
        return KMeansClusterer(args.k)
    raise ParameterError(f"unknown clusterer {name!r}", "clusterer")


# --------------------------------------------------------------------------
# commands

def cmd_generate(args) -> None:
    if args.preset is None:
        raise ParameterError("generate needs --preset", "preset")
    cloud = generate_preset(args)
    out = Path(args.out_dir)
    log.info("generated %d points (%s)", cloud.n, args.preset)
    write_atomic(out / "points.csv", points_to_csv(cloud))
    labels = cloud.labels if cloud.labels is not None else []
    write_atomic(out / "labels.csv", labels_to_csv(labels))
    write_atomic(out / "metadata.json", metadata(args, {"n_points": cloud.n}))


def cmd_persist(args) -> None:
    cloud = load_input(args)
    if args.subsample is not None:
        cloud = sample_rows(cloud, args.subsample, args.seed)
    out = Path(args.out_dir)
    log.info("persistence on %d points, max_dim=%d, max_eps=%s", cloud.n, args.max_dim, args.max_eps)
    dist = distance_matrix(cloud, args.metric)
    filt = build_rips(dist, args.max_dim, args.max_eps, simplex_budget())
    log.info("filtration has %d simplices", len(filt))
    red = reduce(boundary_matrix(filt))
    diagram = persistence_diagram(red, filt)
    write_atomic(out / "diagram.csv", diagram.to_csv(all_dims=args.all_dims))
    write_atomic(out / "barcode.csv", barcode_csv(barcode(diagram, all_dims=args.all_dims)))
    top = diagram.max_dim if args.all_dims else max(diagram.max_dim - 1, 0)
    lines = ["eps," + ",".join(f"beta_{k}" for k in range(top + 1))]
    if cloud.n:
        grid = np.linspace(0.0, filt.max_eps, 100)
        for e, row in zip(grid, betti_curve(diagram, grid)):
            lines.append(format_float(e) + "," + ",".join(str(int(b)) for b in row[: top + 1]))
    write_atomic(out / "betti.csv", "\n".join(lines) + "\n")
    write_atomic(out / "metadata.json", metadata(args, {"n_points": cloud.n, "n_simplices": len(filt)}))


def cmd_mapper(args) -> None:
    cloud = load_input(args)
    lens = Lens.parse(args.lens)
    nerve = run_mapper(cloud, lens, args.intervals, args.overlap, make_clusterer(args),
                       args.nerve_dim, args.metric, args.seed)
    stats = node_stats(nerve, cloud)
    log.info("nerve: %d nodes, %d edges, %d components",
             len(nerve.nodes), len(nerve.edges), nerve.n_components)
    out = Path(args.out_dir)
    formats = ("json", "dot") if args.format is None else (args.format,)
    if "csv" in formats:
        raise ParameterError("mapper writes json or dot", "format")
    if "json" in formats:
        write_atomic(out / "nerve.json", nerve_to_json(nerve, stats))
    if "dot" in formats:
        write_atomic(out / "nerve.dot", nerve_to_dot(nerve, stats, args.color_by))
    write_atomic(out / "metadata.json", metadata(args, {
        "n_points": cloud.n, "n_nodes": len(nerve.nodes), "n_components": nerve.n_components,
    }))


def cmd_cluster(args) -> None:
    cloud = load_input(args)
    summary = {"algorithm": args.clusterer, "n_points": cloud.n}
    if args.clusterer == "kmeans":
        res = kmeans(cloud, args.k, init=args.init, seed=args.seed, max_iter=args.max_iter,
                     tol=args.tol, n_init=args.n_init)
        assignment = res.assignment
        summary.update(inertia=res.inertia, iterations=res.iterations, converged=res.converged)
    elif args.clusterer == "dbscan":
        assignment = dbscan(distance_matrix(cloud, args.metric), args.eps, args.min_pts)
    else:
        dendro = single_linkage(distance_matrix(cloud, args.metric))
        if args.k is not None and args.height is None:
            strategy = FixedCount(args.k)
        elif args.height is not None:
            strategy = HeightCut(args.height)
        else:
            strategy = HistogramGap(args.bins)
        assignment = cut_dendrogram(dendro, strategy)
    summary.update(n_clusters=assignment.k, sizes=[int(s) for s in assignment.sizes()],
                   n_noise=assignment.n_noise)
    if cloud.labels is not None and assignment.k:
        summary["purity"] = purity(assignment.labels, cloud.labels)
    out = Path(args.out_dir)
    write_atomic(out / "assignment.csv", assignment.to_csv())
    write_atomic(out / "summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    write_atomic(out / "metadata.json", metadata(args, {"n_points": cloud.n}))


def purity(labels, truth) -> float:
    """Fraction of non-noise points carrying their cluster's majority ground-truth label."""
    keep = labels >= 0
    total = 0
    for c in np.unique(labels[keep]):
        _, counts = np.unique(truth[labels == c].astype(str), return_counts=True)
        total += counts.max()
    return total / max(int(keep.sum()), 1)


# --------------------------------------------------------------------------
# argument parsing

def _add_input(p, required=True):
    src = p.add_mutually_exclusive_group(required=required)
    src.add_argument("--input", help="headerless numeric CSV, or a table with --encoding")
    src.add_argument("--preset", choices=PRESETS)
    p.add_argument("--encoding", help="YAML/JSON encoding spec for a table with a header row")
    p.add_argument("--labels", help="CSV point_index,label for coloring and purity")
    p.add_argument("--n", type=int, help="point count for annulus/square/iris-like presets")
    p.add_argument("--r-inner", type=float, default=1.0)
    p.add_argument("--r-outer", type=float, default=2.0)
    p.add_argument("--corner", type=float, nargs=2, default=(0.0, 0.0))
    p.add_argument("--side", type=float, default=1.0)


def _add_common(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--metric", choices=("euclidean", "manhattan"), default="euclidean")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ripsmap", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic dataset")
    _add_input(p)
    _add_common(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("persist", help="Rips persistent homology")
    _add_input(p)
    _add_common(p)
    p.add_argument("--max-dim", type=int, default=2)
    p.add_argument("--max-eps", type=float)
    p.add_argument("--all-dims", action="store_true", help="also report top-dimension pairs")
    p.add_argument("--subsample", type=int, help="uniform row sample before the Rips step")
    p.add_argument("--format", choices=("csv",), default="csv")
    p.set_defaults(func=cmd_persist)

    p = sub.add_parser("mapper", help="Mapper nerve")
    _add_input(p)
    _add_common(p)
    p.add_argument("--lens", default="coord:0", help="coord:<axis>, pca:<k> or pca-std:<k>")
    p.add_argument("--intervals", type=int, default=10)
    p.add_argument("--overlap", type=float, default=0.3)
    p.add_argument("--clusterer", choices=("single-linkage", "dbscan", "kmeans"), default="single-linkage")
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--min-pts", type=int, default=5)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--bins", type=int, default=10)
    p.add_argument("--nerve-dim", type=int, default=1)
    p.add_argument("--format", choices=("csv", "json", "dot"))
    p.add_argument("--color-by", help="label:<name> or mean:<feature>")
    p.set_defaults(func=cmd_mapper)

    p = sub.add_parser("cluster", help="flat clustering")
    _add_input(p)
    _add_common(p)
    p.add_argument("--clusterer", choices=("kmeans", "dbscan", "single-linkage"), default="kmeans")
    p.add_argument("--k", type=int)
    p.add_argument("--init", choices=("kmeans++", "random"), default="kmeans++")
    p.add_argument("--max-iter", type=int, default=300)
    p.add_argument("--n-init", type=int, default=10, help="k-means restarts; the lowest inertia wins")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--min-pts", type=int, default=5)
    p.add_argument("--height", type=float, help="single-linkage cut height")
    p.add_argument("--bins", type=int, default=10)
    p.add_argument("--format", choices=("csv",), default="csv")
    p.set_defaults(func=cmd_cluster)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="ripsmap: %(message)s", stream=sys.stderr)
    if args.command == "cluster" and args.clusterer == "kmeans" and args.k is None:
        parser.error("cluster --clusterer kmeans needs --k")
    try:
        args.func(args)
    except RipsmapError as exc:
        print(f"ripsmap: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"ripsmap: error: {exc}", file=sys.stderr)
        return TableError.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
