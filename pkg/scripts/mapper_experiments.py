"""Mapper on the synthetic datasets: two squares, the Iris-like cloud, and two circles.

Two circles is exploratory: no setting here is expected to recover both cycles.
"""

import argparse
from dataclasses import asdict, dataclass

import numpy as np

from ripsmap.dataset import iris_like, two_circles, two_squares
from ripsmap.mapper import (
    DBSCANClusterer,
    KMeansClusterer,
    Lens,
    SingleLinkageClusterer,
    node_stats,
    run_mapper,
)


@dataclass
class Config:
    seeds: int = 10
    intervals: int = 4
    overlap: float = 0.3
    iris_per_class: int = 200
    iris_intervals: int = 10


def cycle_rank(nerve) -> int:
    return len(nerve.edges) - len(nerve.nodes) + nerve.n_components


def describe(nerve, cloud) -> str:
    stats = node_stats(nerve, cloud)
    purity = min((s.majority_ratio for s in stats), default=float("nan"))
    return (f"{len(nerve.nodes)} nodes, {len(nerve.edges)} edges, {nerve.n_components} components, "
            f"{cycle_rank(nerve)} independent cycles, min node purity {purity:.2f}")


def run(cfg: Config) -> None:
    print(asdict(cfg))
    print("two squares, coord:0, single linkage")
    for seed in range(cfg.seeds):
        cloud = two_squares(seed)
        nerve = run_mapper(cloud, Lens.coordinate(0), cfg.intervals, cfg.overlap, SingleLinkageClusterer(), seed=seed)
        print(f"  seed {seed}: {describe(nerve, cloud)}")

    print("iris-like, pca:2, dbscan(1.0, 10)")
    for seed in range(cfg.seeds):
        cloud = iris_like(seed, cfg.iris_per_class)
        nerve = run_mapper(cloud, Lens.pca(2), cfg.iris_intervals, cfg.overlap, DBSCANClusterer(1.0, 10), seed=seed)
        shares = []
        for comp in nerve.components():
            members = np.unique(np.concatenate([nerve.nodes[i].members for i in comp]))
            shares.append(round(float(np.mean(cloud.labels[members] == "setosa")), 3))
        print(f"  seed {seed}: {describe(nerve, cloud)}, setosa share per component {shares}")

    print("two circles (exploratory)")
    cloud = two_circles(0)
    for label, lens, clusterer in [
        ("coord:0 single linkage", Lens.coordinate(0), SingleLinkageClusterer()),
        ("coord:0 dbscan(1.0, 5)", Lens.coordinate(0), DBSCANClusterer(1.0, 5)),
        ("coord:0 kmeans(2)", Lens.coordinate(0), KMeansClusterer(2)),
        ("pca:1 single linkage", Lens.pca(1), SingleLinkageClusterer()),
    ]:
        for n in (5, 10, 20):
            nerve = run_mapper(cloud, lens, n, cfg.overlap, clusterer)
            print(f"  {label}, {n} intervals: {describe(nerve, cloud)}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=Config.seeds)
    a = ap.parse_args()
    run(Config(seeds=a.seeds))
