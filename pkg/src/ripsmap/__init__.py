"""Rips persistent homology, classical clustering, and Mapper for point clouds."""

__version__ = "0.1.0"

from .cluster import (
    ClusterAssignment,
    Dendrogram,
    FixedCount,
    HeightCut,
    HistogramGap,
    cut_dendrogram,
    dbscan,
    kmeans,
    single_linkage,
)
from .dataset import DistanceMatrix, PointCloud, distance_matrix, pca_project
from .errors import AlgorithmError, BudgetExceeded, ParameterError, RipsmapError, TableError
from .mapper import Lens, MapperNerve, build_cover, node_stats, run_mapper
from .persistence import (
    PersistenceDiagram,
    barcode,
    betti_numbers,
    boundary_matrix,
    persistence_diagram,
    persistent_homology,
    reduce,
)
from .rips import Filtration, build_rips

__all__ = [
    "AlgorithmError", "BudgetExceeded", "ClusterAssignment", "Dendrogram", "DistanceMatrix",
    "Filtration", "FixedCount", "HeightCut", "HistogramGap", "Lens", "MapperNerve",
    "ParameterError", "PersistenceDiagram", "PointCloud", "RipsmapError", "TableError",
    "barcode", "betti_numbers", "boundary_matrix", "build_cover", "build_rips", "cut_dendrogram",
    "dbscan", "distance_matrix", "kmeans", "node_stats", "pca_project", "persistence_diagram",
    "persistent_homology", "reduce", "run_mapper", "single_linkage",
]
