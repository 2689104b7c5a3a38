"""Persistent homology over Z/2 by boundary-matrix column reduction."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .dataset import PointCloud, distance_matrix, format_float
from .errors import AlgorithmError, ParameterError
from .rips import Filtration, build_rips


@dataclass
class BoundaryMatrix:
    """Sparse Z/2 boundary matrix in filtration order.

    ``facets[j]`` holds the sorted filtration positions of the facets of
    simplex ``j``, padded with -1 (vertex columns are all padding).
    """

    facets: np.ndarray
    dims: np.ndarray

    def __len__(self):
        return self.dims.shape[0]

    def column(self, j: int) -> List[int]:
        row = self.facets[j]
        return [int(r) for r in row[row >= 0]]

    @property
    def columns(self) -> List[List[int]]:
        return [self.column(j) for j in range(len(self))]


def _row_keys(rows: np.ndarray, n: int):
    """Injective key per row of vertex indices (int64 when it fits, else tuples)."""
    width = rows.shape[1]
    if width == 0:
        return np.zeros(rows.shape[0], dtype=np.int64)
    if float(max(n, 1)) ** width < 2.0**62:
        key = np.zeros(rows.shape[0], dtype=np.int64)
        for c in range(width):
            key = key * n + rows[:, c]
        return key
    return [tuple(r) for r in rows.tolist()]


def boundary_matrix(filtration: Filtration) -> BoundaryMatrix:
    m = len(filtration)
    width = filtration.max_dim + 1
    facets = np.full((m, max(width, 1)), -1, dtype=np.int64)
    dims = filtration.dims
    n = filtration.n_points
    prev_pos = filtration.positions_of_dim(0)
    prev_keys = _row_keys(filtration.verts[prev_pos, :1], n)
    for k in range(1, filtration.max_dim + 1):
        pos = filtration.positions_of_dim(k)
        if pos.size == 0:
            break
        verts = filtration.verts[pos, : k + 1]
        cols = np.empty((pos.size, k + 1), dtype=np.int64)
        lookup = _make_lookup(prev_keys, prev_pos)
        for c in range(k + 1):
            face = np.delete(verts, c, axis=1)
            cols[:, c] = lookup(_row_keys(face, n))
        cols.sort(axis=1)
        facets[pos, : k + 1] = cols
        prev_pos = pos
        prev_keys = _row_keys(verts, n)
    return BoundaryMatrix(facets, dims.copy())


def _make_lookup(keys, positions):
    if isinstance(keys, np.ndarray):
        order = np.argsort(keys, kind="stable")
        sorted_keys = keys[order]

        def lookup(query):
            idx = np.searchsorted(sorted_keys, query)
            idx = np.minimum(idx, max(sorted_keys.size - 1, 0))
            if sorted_keys.size == 0 or np.any(sorted_keys[idx] != query):
                raise AlgorithmError("missing face: filtration is not closed under faces")
            return positions[order[idx]]

        return lookup

    table = {key: int(p) for key, p in zip(keys, positions)}

    def lookup(query):
        try:
            return np.array([table[q] for q in query], dtype=np.int64)
        except KeyError:
            raise AlgorithmError("missing face: filtration is not closed under faces") from None

    return lookup


@dataclass
class Reduction:
    """Outcome of column reduction.

    ``low[j]`` is the pivot row of reduced column ``j`` or -1 for a zero column.
    ``pairs`` lists (birth position, death position) ordered by death position;
    ``essential`` lists the positions that are never paired.
    """

    low: np.ndarray
    pairs: List[Tuple[int, int]]
    essential: List[int]
    column_additions: int
    _bits: Dict[int, int] = field(default_factory=dict, repr=False)
    _row_positions: Dict[int, np.ndarray] = field(default_factory=dict, repr=False)
    _dims: Optional[np.ndarray] = field(default=None, repr=False)

    def pairing(self) -> Dict[int, int]:
        return {i: j for i, j in self.pairs}

    def reduced_column(self, j: int) -> List[int]:
        """Filtration positions of the nonzero rows of reduced column ``j``."""
        bits = self._bits.get(j, 0)
        if not bits:
            return []
        rows = self._row_positions[int(self._dims[j]) - 1]
        nbytes = (bits.bit_length() + 7) // 8
        flags = np.unpackbits(np.frombuffer(bits.to_bytes(nbytes, "little"), dtype=np.uint8),
                              bitorder="little")
        return [int(p) for p in rows[np.flatnonzero(flags)]]


def reduce(matrix: BoundaryMatrix, method: str = "twist") -> Reduction:
    """Left-to-right Z/2 column reduction.

    ``method="standard"`` reduces every column in filtration order;
    ``method="twist"`` walks dimensions from the top down and skips columns
    already known to be zero (their simplex is the pivot of a higher column).
    Both give the same pairing.

    Columns are Python ints used as bitsets over the rows of one dimension,
    so a column addition is one XOR and the pivot is ``bit_length() - 1``.
    """
    if method not in ("standard", "twist"):
        raise ParameterError(f"unknown reduction method {method!r}", "method")
    m = len(matrix)
    dims = matrix.dims
    max_dim = int(dims.max()) if m else 0
    row_positions = {k: np.flatnonzero(dims == k) for k in range(max_dim + 1)}
    rank = np.empty(m, dtype=np.int64)
    for k, pos in row_positions.items():
        rank[pos] = np.arange(pos.size)

    low = np.full(m, -1, dtype=np.int64)
    kept: Dict[int, int] = {}
    # per dimension: pivot row -> reduced column bits of the column owning it
    pivots: Dict[int, Dict[int, int]] = {k: {} for k in range(1, max_dim + 1)}
    adds = 0

    def reduce_column(j: int) -> int:
        nonlocal adds
        k = int(dims[j])
        col = 0
        for r in rank[matrix.facets[j, : k + 1]].tolist():
            col |= 1 << r
        owner = pivots[k]
        while col:
            r = col.bit_length() - 1
            other = owner.get(r)
            if other is None:
                owner[r] = col
                kept[j] = col
                return int(row_positions[k - 1][r])
            col ^= other
            adds += 1
        return -1

    if method == "standard":
        for j in range(m):
            if dims[j] > 0:
                low[j] = reduce_column(j)
    else:
        cleared = np.zeros(m, dtype=bool)
        for k in range(max_dim, 0, -1):
            for j in row_positions[k].tolist():
                if cleared[j]:
                    continue
                p = reduce_column(j)
                low[j] = p
                if p >= 0:
                    cleared[p] = True

    paired = np.zeros(m, dtype=bool)
    deaths = np.flatnonzero(low >= 0)
    paired[deaths] = True
    paired[low[deaths]] = True
    pairs = [(int(low[j]), int(j)) for j in deaths]
    essential = [int(i) for i in np.flatnonzero(~paired)]
    return Reduction(low, pairs, essential, adds, kept, row_positions, dims)


# --------------------------------------------------------------------------
# diagrams

@dataclass(frozen=True)
class PersistencePair:
    dimension: int
    birth: float
    death: float
    ephemeral: bool = False
    reliable: bool = True
    birth_index: int = -1
    death_index: int = -1

    @property
    def persistence(self) -> float:
        return self.death - self.birth

    @property
    def is_essential(self) -> bool:
        return self.death == np.inf


class PersistenceDiagram:
    """Multiset of (dimension, birth, death) pairs, kept as parallel arrays.

    Pairs of dimension ``max_dim`` are unreliable (their deaths would need
    higher simplices) and zero-persistence pairs are ephemeral; both are kept
    but hidden by :meth:`visible` unless asked for.
    """

    def __init__(self, dims, births, deaths, max_dim, n_points, max_eps=np.inf,
                 birth_index=None, death_index=None):
        dims = np.asarray(dims, dtype=np.int64)
        births = np.asarray(births, dtype=np.float64)
        deaths = np.asarray(deaths, dtype=np.float64)
        m = dims.shape[0]
        bi = np.full(m, -1, dtype=np.int64) if birth_index is None else np.asarray(birth_index)
        di = np.full(m, -1, dtype=np.int64) if death_index is None else np.asarray(death_index)
        order = np.lexsort((bi, deaths, births, dims))
        self.dims = dims[order]
        self.births = births[order]
        self.deaths = deaths[order]
        self.birth_index = bi[order]
        self.death_index = di[order]
        self.max_dim = int(max_dim)
        self.n_points = int(n_points)
        self.max_eps = float(max_eps)
        self._pairs = None

    def __len__(self):
        return self.dims.shape[0]

    @property
    def ephemeral(self) -> np.ndarray:
        return self.births == self.deaths

    @property
    def reliable(self) -> np.ndarray:
        return self.dims < self.max_dim

    def _pair(self, i) -> PersistencePair:
        return PersistencePair(
            int(self.dims[i]), float(self.births[i]), float(self.deaths[i]),
            bool(self.births[i] == self.deaths[i]), bool(self.dims[i] < self.max_dim),
            int(self.birth_index[i]), int(self.death_index[i]),
        )

    @property
    def pairs(self) -> List[PersistencePair]:
        if self._pairs is None:
            self._pairs = [self._pair(i) for i in range(len(self))]
        return self._pairs

    def mask(self, all_dims: bool = False, include_ephemeral: bool = False, dim=None) -> np.ndarray:
        keep = np.ones(len(self), dtype=bool)
        if not include_ephemeral:
            keep &= ~self.ephemeral
        if not all_dims:
            keep &= self.reliable
        if dim is not None:
            keep &= self.dims == dim
        return keep

    def visible(self, all_dims: bool = False, include_ephemeral: bool = False) -> List[PersistencePair]:
        """Pairs shown by default: no zero-persistence pairs, no top-dimension pairs."""
        return [self._pair(i) for i in np.flatnonzero(self.mask(all_dims, include_ephemeral))]

    def in_dim(self, k: int, all_dims: bool = False, include_ephemeral: bool = False) -> List[PersistencePair]:
        return [self._pair(i) for i in np.flatnonzero(self.mask(all_dims, include_ephemeral, k))]

    def persistence(self, k: int, **kw) -> np.ndarray:
        """Death minus birth of the visible pairs of dimension ``k``."""
        keep = self.mask(dim=k, **kw)
        return self.deaths[keep] - self.births[keep]

    def to_csv(self, all_dims: bool = False, include_ephemeral: bool = False) -> str:
        lines = ["dimension,birth,death"]
        for i in np.flatnonzero(self.mask(all_dims, include_ephemeral)):
            lines.append(f"{self.dims[i]},{format_float(self.births[i])},{format_float(self.deaths[i])}")
        return "\n".join(lines) + "\n"


def persistence_diagram(reduction: Reduction, filtration: Filtration) -> PersistenceDiagram:
    births = filtration.births
    pairs = np.array(reduction.pairs, dtype=np.int64).reshape(-1, 2)
    ess = np.array(reduction.essential, dtype=np.int64)
    bi = np.concatenate([pairs[:, 0], ess])
    di = np.concatenate([pairs[:, 1], np.full(ess.size, -1, dtype=np.int64)])
    deaths = np.concatenate([births[pairs[:, 1]], np.full(ess.size, np.inf)])
    return PersistenceDiagram(filtration.dims[bi], births[bi], deaths, filtration.max_dim,
                              filtration.n_points, filtration.max_eps, bi, di)


def persistent_homology(
    cloud: PointCloud,
    max_dim: int = 2,
    max_eps: Optional[float] = None,
    metric: str = "euclidean",
    method: str = "twist",
    budget: Optional[int] = None,
) -> PersistenceDiagram:
    """Distances, Rips filtration, reduction and diagram in one call."""
    filt = build_rips(distance_matrix(cloud, metric), max_dim, max_eps, budget)
    return persistence_diagram(reduce(boundary_matrix(filt), method), filt)


def betti_numbers(diagram: PersistenceDiagram, eps: float) -> np.ndarray:
    """Betti numbers at ``eps``: pairs with ``birth <= eps < death``, per dimension."""
    if eps < 0:
        raise ParameterError("eps must be >= 0", "eps")
    alive = (diagram.births <= eps) & (eps < diagram.deaths)
    return np.bincount(diagram.dims[alive], minlength=diagram.max_dim + 1).astype(np.int64)


def betti_curve(diagram: PersistenceDiagram, eps_values) -> np.ndarray:
    return np.vstack([betti_numbers(diagram, e) for e in eps_values])


@dataclass(frozen=True)
class Bar:
    dimension: int
    order: int
    birth: float
    death: float
    render_death: float


def barcode(diagram: PersistenceDiagram, all_dims: bool = False, include_ephemeral: bool = False) -> List[Bar]:
    """Bars per dimension, sorted by birth ascending then death descending.

    Infinite bars get a drawing length of 1.05 times the largest finite death;
    their ``death`` stays infinite.
    """
    pairs = diagram.visible(all_dims, include_ephemeral)
    finite = diagram.deaths[np.isfinite(diagram.deaths)]
    if finite.size and finite.max() > 0:
        cap = 1.05 * float(finite.max())
    else:
        cap = 1.05 * max(float(diagram.births.max(initial=0.0)), 1.0)
    bars = []
    for k in sorted({p.dimension for p in pairs}):
        ps = sorted((p for p in pairs if p.dimension == k), key=lambda p: (p.birth, -p.death))
        for order, p in enumerate(ps):
            bars.append(Bar(k, order, p.birth, p.death, p.death if np.isfinite(p.death) else cap))
    return bars


def barcode_csv(bars: List[Bar]) -> str:
    lines = ["dimension,order,birth,death"]
    for b in bars:
        lines.append(f"{b.dimension},{b.order},{format_float(b.birth)},{format_float(b.death)}")
    return "\n".join(lines) + "\n"
