"""Mapper on a real Iris CSV supplied by the user (not fetched, not part of CI).

Expected layout: a header row, four numeric measurement columns and a species
column. The walkthrough writes the encoding spec next to the output, runs the
pca:2 lens with 10 intervals and overlap 0.3, and prints the component count
and the species mix of each component.
"""

import argparse
import csv
from collections import Counter
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from ripsmap.dataset import EncodingSpec, load_table
from ripsmap.mapper import DBSCANClusterer, KMeansClusterer, Lens, SingleLinkageClusterer, run_mapper


@dataclass
class Config:
    path: str
    label_column: str = "species"
    intervals: int = 10
    overlap: float = 0.3
    clusterer: str = "single-linkage"
    eps: float = 0.5
    min_pts: int = 5
    k: int = 2


def run(cfg: Config) -> int:
    print(asdict(cfg))
    with open(cfg.path, newline="") as fh:
        header = next(csv.reader(fh))
    numeric = [h for h in header if h != cfg.label_column]
    spec = EncodingSpec.from_dict({"columns": [{"name": h} for h in numeric], "label_column": cfg.label_column})
    cloud = load_table(Path(cfg.path), spec)
    clusterer = {
        "single-linkage": SingleLinkageClusterer(),
        "dbscan": DBSCANClusterer(cfg.eps, cfg.min_pts),
        "kmeans": KMeansClusterer(cfg.k),
    }[cfg.clusterer]
    nerve = run_mapper(cloud, Lens.pca(2), cfg.intervals, cfg.overlap, clusterer)
    print(f"{cloud.n} rows, {len(nerve.nodes)} nodes, {nerve.n_components} components")
    for comp in nerve.components():
        members = np.unique(np.concatenate([nerve.nodes[i].members for i in comp]))
        print(f"  {len(comp)} nodes: {dict(Counter(cloud.labels[members].tolist()))}")
    return nerve.n_components


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("path")
    ap.add_argument("--label-column", default="species")
    ap.add_argument("--clusterer", choices=("single-linkage", "dbscan", "kmeans"), default="single-linkage")
    ap.add_argument("--eps", type=float, default=0.5)
    ap.add_argument("--min-pts", type=int, default=5)
    ap.add_argument("--k", type=int, default=2)
    a = ap.parse_args()
    run(Config(a.path, a.label_column, clusterer=a.clusterer, eps=a.eps, min_pts=a.min_pts, k=a.k))
