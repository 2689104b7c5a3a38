"""Vietoris-Rips filtration up to a dimension cap and a distance threshold."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, List, Optional, Tuple

import numpy as np

from .dataset import DistanceMatrix, format_float
from .errors import BudgetExceeded, ParameterError

DEFAULT_BUDGET = 50_000_000
# without an explicit threshold the full 2^n complex is at risk
AUTO_EPS_MAX_POINTS = 64
# rows per expansion chunk are sized so the boolean mask stays near 16 MB
_MASK_CELLS = 1 << 24


@dataclass(frozen=True)
class Simplex:
    vertices: Tuple[int, ...]
    birth: float

    @property
    def dimension(self) -> int:
        return len(self.vertices) - 1


@dataclass
class Filtration:
    """Simplices ordered by (birth, dimension, vertices).

    Stored column-wise: ``verts`` is padded with -1 past each simplex's dimension.
    """

    verts: np.ndarray
    dims: np.ndarray
    births: np.ndarray
    max_dim: int
    max_eps: float
    n_points: int

    def __len__(self):
        return self.dims.shape[0]

    def simplex(self, i: int) -> Simplex:
        k = int(self.dims[i])
        return Simplex(tuple(int(v) for v in self.verts[i, : k + 1]), float(self.births[i]))

    def __iter__(self) -> Iterator[Simplex]:
        for i in range(len(self)):
            yield self.simplex(i)

    @property
    def simplices(self) -> List[Simplex]:
        return list(self)

    def positions_of_dim(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.dims == k)

    def to_text(self) -> str:
        lines = []
        for i in range(len(self)):
            k = int(self.dims[i])
            vs = " ".join(str(int(v)) for v in self.verts[i, : k + 1])
            lines.append(f"{format_float(self.births[i])} {k} {vs}")
        return "\n".join(lines) + ("\n" if lines else "")


def build_rips(
    dist: DistanceMatrix,
    max_dim: int,
    max_eps: Optional[float] = None,
    budget: Optional[int] = None,
) -> Filtration:
    """All simplices of dimension <= ``max_dim`` with diameter <= ``max_eps``.

    A simplex is born at its diameter. Higher simplices come from expanding
    each simplex by the common upper neighbours of its vertices.
    """
    d = np.asarray(dist.entries, dtype=np.float64)
    n = d.shape[0]
    if max_dim < 0:
        raise ParameterError("max_dim must be >= 0", "max_dim")
    if max_eps is None:
        if n > AUTO_EPS_MAX_POINTS:
            raise ParameterError(
                f"max_eps is required for more than {AUTO_EPS_MAX_POINTS} points", "max_eps"
            )
        max_eps = float(d.max()) if n > 1 else 0.0
    elif not max_eps > 0:
        raise ParameterError("max_eps must be > 0", "max_eps")
    if budget is None:
        budget = DEFAULT_BUDGET

    count = n
    if count > budget:
        raise BudgetExceeded(count, budget)
    levels = [np.arange(n, dtype=np.int64).reshape(n, 1)]
    level_births = [np.zeros(n)]
    upper = np.triu(d <= max_eps, k=1)

    for k in range(1, max_dim + 1):
        prev, prev_b = levels[-1], level_births[-1]
        if prev.shape[0] == 0:
            break
        parts, part_b = [], []
        chunk = max(256, _MASK_CELLS // max(n, 1))
        for start in range(0, prev.shape[0], chunk):
            sl = prev[start:start + chunk]
            mask = upper[sl[:, 0]].copy()
            for c in range(1, sl.shape[1]):
                mask &= upper[sl[:, c]]
            rows, ws = np.nonzero(mask)
            if rows.size == 0:
                continue
            count += rows.size
            if count > budget:
                raise BudgetExceeded(count, budget)
            base = sl[rows]
            b = prev_b[start:start + chunk][rows]
            for c in range(base.shape[1]):
                b = np.maximum(b, d[base[:, c], ws])
            parts.append(np.column_stack([base, ws]))
            part_b.append(b)
        if not parts:
            break
        levels.append(np.vstack(parts))
        level_births.append(np.concatenate(part_b))

    return _assemble(levels, level_births, max_dim, float(max_eps), n)


def _assemble(levels, level_births, max_dim, max_eps, n) -> Filtration:
    width = max_dim + 1
    m = sum(lv.shape[0] for lv in levels)
    verts = np.full((m, width), -1, dtype=np.int64)
    dims = np.empty(m, dtype=np.int64)
    births = np.empty(m)
    at = 0
    for k, (lv, b) in enumerate(zip(levels, level_births)):
        r = lv.shape[0]
        verts[at:at + r, : k + 1] = lv
        dims[at:at + r] = k
        births[at:at + r] = b
        at += r
    keys = [verts[:, c] for c in range(width - 1, -1, -1)] + [dims, births]
    order = np.lexsort(keys)
    return Filtration(verts[order], dims[order], births[order], max_dim, max_eps, n)
