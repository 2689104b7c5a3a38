"""Rips persistence of two unit squares 4*sqrt(2) apart, over a seed sweep."""

import argparse
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from ripsmap.dataset import two_squares
from ripsmap.persistence import barcode, barcode_csv, persistent_homology


@dataclass
class Config:
    seeds: int = 10
    max_dim: int = 2
    max_eps: float = 6.1
    out_dir: str = ""


def run(cfg: Config) -> None:
    print(asdict(cfg))
    for seed in range(cfg.seeds):
        dgm = persistent_homology(two_squares(seed), cfg.max_dim, cfg.max_eps)
        deaths = sorted(p.death for p in dgm.in_dim(0) if np.isfinite(p.death))
        h1 = dgm.persistence(1)
        print(f"seed {seed}: merge {deaths[-1]:.3f}, next H0 death {deaths[-2]:.3f}, "
              f"max H1 persistence {h1.max(initial=0):.3f}")
        if cfg.out_dir:
            out = Path(cfg.out_dir) / f"seed{seed}"
            out.mkdir(parents=True, exist_ok=True)
            (out / "diagram.csv").write_text(dgm.to_csv())
            (out / "barcode.csv").write_text(barcode_csv(barcode(dgm)))


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=Config.seeds)
    ap.add_argument("--max-eps", type=float, default=Config.max_eps)
    ap.add_argument("--out-dir", default="")
    a = ap.parse_args()
    run(Config(seeds=a.seeds, max_eps=a.max_eps, out_dir=a.out_dir))
