import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from oracles import components
from ripsmap.dataset import PointCloud, iris_like, two_circles, two_squares
from ripsmap.errors import AlgorithmError, ParameterError
from ripsmap.mapper import (
    DBSCANClusterer,
    KMeansClusterer,
    Lens,
    NodeStats,
    SingleLinkageClusterer,
    build_cover,
    evaluate_lens,
    nerve_to_dot,
    nerve_to_json,
    node_stats,
    ramp_color,
    run_mapper,
)

CORNERS = PointCloud([[0, 0], [1, 0], [1, 1], [0, 1]])

lens_values = hnp.arrays(np.float64, st.integers(1, 60), elements=st.floats(-50, 50, allow_nan=False, width=64))
small_clouds = hnp.arrays(
    np.float64, st.tuples(st.integers(2, 25), st.just(2)),
    elements=st.integers(0, 8).map(float),
)


def check_nerve_exhaustively(nerve):
    """Every tuple of nodes up to the nerve dimension is a simplex iff its members intersect."""
    members = [set(node.members.tolist()) for node in nerve.nodes]
    for k, simplices in nerve.simplices.items():
        if k == 0:
            continue
        expected = {
            combo for combo in itertools.combinations(range(len(members)), k + 1)
            if set.intersection(*(members[i] for i in combo))
        }
        assert set(simplices) == expected


# -- lens ------------------------------------------------------------------

def test_coordinate_lens():
    assert evaluate_lens(CORNERS, Lens.coordinate(0))[:, 0].tolist() == [0, 1, 1, 0]


def test_pca_lens_on_iris_like():
    vals = evaluate_lens(iris_like(0), Lens.pca(2))
    assert vals.shape == (150, 2)
    assert vals[:, 0].var() >= vals[:, 1].var()


def test_external_lens_length_mismatch():
    with pytest.raises(ParameterError):
        evaluate_lens(CORNERS, Lens.external([1.0, 2.0]))


def test_lens_parse():
    assert Lens.parse("coord:1").axis == 1
    assert Lens.parse("pca-std:3").standardize
    with pytest.raises(ParameterError):
        Lens.parse("tsne:2")


# -- cover -----------------------------------------------------------------

def test_cover_without_overlap():
    cover = build_cover(np.array([0.0, 10.0]), 5, 0.0)
    assert cover.intervals[0].tolist() == [[0, 2], [2, 4], [4, 6], [6, 8], [8, 10]]


def test_cover_half_overlap():
    values = np.linspace(0, 10, 101)
    cover = build_cover(values, 5, 0.5)
    assert np.allclose(cover.intervals[0], [[0, 3], [2, 5], [4, 7], [6, 9], [8, 10]])
    iv = cover.intervals[0]
    hits = ((values[:, None] >= iv[:, 0]) & (values[:, None] <= iv[:, 1])).sum(axis=1)
    assert hits.min() >= 1 and hits.max() <= 2


def test_constant_values_one_interval():
    cover = build_cover(np.full(7, 3.0), 10, 0.3)
    assert cover.shape == (1,)
    assert list(cover.memberships(np.full(7, 3.0))) == [(0,)]


@settings(max_examples=80, deadline=None)
@given(lens_values, st.integers(1, 12), st.floats(0, 0.9))
def test_cover_is_total(values, n_intervals, overlap):
    cover = build_cover(values, n_intervals, overlap)
    hit = np.zeros(values.size, dtype=int)
    for idx in cover.memberships(values).values():
        hit[idx] += 1
    assert hit.min() >= 1


def test_overlap_produces_shared_points():
    values = two_squares(0).points[:, 0]
    cover = build_cover(values, 6, 0.3)
    hit = np.zeros(values.size, dtype=int)
    for idx in cover.memberships(values).values():
        hit[idx] += 1
    assert (hit >= 2).mean() > 0


def test_product_cover_for_two_lens_columns():
    values = np.array([[0.0, 0.0], [1.0, 1.0], [0.5, 0.5]])
    cover = build_cover(values, 2, 0.2)
    assert cover.shape == (2, 2)
    cells = cover.memberships(values)
    assert cells[(0, 0)].tolist() == [0, 2]


# -- run_mapper ------------------------------------------------------------

@pytest.mark.parametrize("seed", range(5))
def test_two_squares_nerve(seed):
    cloud = two_squares(seed)
    nerve = run_mapper(cloud, Lens.coordinate(0), 4, 0.3, SingleLinkageClusterer(), seed=seed)
    assert nerve.n_components == 2
    stats = node_stats(nerve, cloud)
    for st_ in stats:
        assert st_.majority_ratio == 1.0
        x, y = st_.mean
        assert (0 <= x <= 1 and 0 <= y <= 1) or (5 <= x <= 6 and 5 <= y <= 6)
    check_nerve_exhaustively(nerve)


def test_iris_like_nerve():
    cloud = iris_like(0, n_per_class=200)
    nerve = run_mapper(cloud, Lens.pca(2), 10, 0.3, DBSCANClusterer(1.0, 10))
    assert nerve.n_components == 2
    best = 0.0
    for comp in nerve.components():
        members = np.unique(np.concatenate([nerve.nodes[i].members for i in comp]))
        best = max(best, float(np.mean(cloud.labels[members] == "setosa")))
    assert best >= 0.95


def test_single_interval_kmeans_one():
    cloud = two_circles(0)
    nerve = run_mapper(cloud, Lens.coordinate(0), 1, 0.0, KMeansClusterer(1))
    assert len(nerve.nodes) == 1
    assert nerve.nodes[0].members.tolist() == list(range(cloud.n))
    assert nerve.edges == []


@settings(max_examples=40, deadline=None)
@given(small_clouds, st.integers(1, 5), st.sampled_from([0.1, 0.3, 0.5]), st.integers(1, 3))
def test_nerve_sound_and_complete(pts, n_intervals, overlap, nerve_dim):
    nerve = run_mapper(PointCloud(pts), Lens.coordinate(0), n_intervals, overlap,
                       SingleLinkageClusterer(), nerve_dim=nerve_dim)
    check_nerve_exhaustively(nerve)
    # the graph's components agree with an independent traversal
    assert len(components(len(nerve.nodes), nerve.edges)) == nerve.n_components


@settings(max_examples=40, deadline=None)
@given(small_clouds, st.integers(1, 5), st.sampled_from(["sl", "db", "km"]))
def test_nodes_partition_each_preimage(pts, n_intervals, which):
    cloud = PointCloud(pts)
    clusterer = {"sl": SingleLinkageClusterer(), "db": DBSCANClusterer(1.5, 3), "km": KMeansClusterer(2)}[which]
    nerve = run_mapper(cloud, Lens.coordinate(1), n_intervals, 0.3, clusterer)
    pre = nerve.cover.memberships(nerve.lens_values)
    by_cell = {}
    for node in nerve.nodes:
        by_cell.setdefault(node.cell, []).append(set(node.members.tolist()))
    for cell, groups in by_cell.items():
        union = set().union(*groups)
        assert sum(map(len, groups)) == len(union)
        assert union <= set(pre[cell].tolist())
        if which != "db":
            assert union == set(pre[cell].tolist())


@pytest.mark.parametrize("seed", range(3))
def test_refinement_never_loses_nodes(seed):
    cloud = two_squares(seed)
    counts = [len(run_mapper(cloud, Lens.coordinate(0), n, 0.3, seed=seed).nodes) for n in (2, 4, 8, 16)]
    assert counts == sorted(counts)


def test_deterministic():
    cloud = iris_like(1)
    a = run_mapper(cloud, Lens.pca(2), 6, 0.3, KMeansClusterer(2), seed=9)
    b = run_mapper(cloud, Lens.pca(2), 6, 0.3, KMeansClusterer(2), seed=9)
    assert [n.members.tolist() for n in a.nodes] == [n.members.tolist() for n in b.nodes]
    assert a.simplices == b.simplices


def test_clusterer_error_names_cover_element():
    cloud = PointCloud(np.arange(10.0)[:, None])

    def broken(sub, metric, seed):
        raise ParameterError("boom")

    with pytest.raises(AlgorithmError) as err:
        run_mapper(cloud, Lens.coordinate(0), 2, 0.1, broken)
    assert err.value.cover_index == 0
    assert "cover element 0" in str(err.value)


def test_bad_nerve_dim():
    with pytest.raises(ParameterError):
        run_mapper(CORNERS, Lens.coordinate(0), nerve_dim=0)


# -- stats and export ------------------------------------------------------

def test_ratio_counts():
    assert NodeStats(3, np.zeros(2), {"outer": 3}).ratio("outer") == 1.0
    st_ = NodeStats(4, np.zeros(2), {"outer": 3, "inner": 1})
    assert st_.ratio("outer") == 0.75 and st_.majority_label == "outer"


def test_ramp_ends():
    assert ramp_color(0) == "#ffff00"
    assert ramp_color(1) == "#0000ff"


def test_json_and_dot_export():
    cloud = two_squares(0)
    nerve = run_mapper(cloud, Lens.coordinate(0), 6, 0.3)
    stats = node_stats(nerve, cloud)
    tree = json.loads(nerve_to_json(nerve, stats))
    assert {"id", "cover_index", "cluster_index", "size", "members", "stats"} <= set(tree["nodes"][0])
    assert tree["simplices"]["1"] == [list(e) for e in nerve.edges]
    dot = nerve_to_dot(nerve, stats, "label:square_a")
    assert dot.startswith("graph mapper {")
    assert dot.count(" -- ") == len(nerve.edges)
    assert f"size={stats[0].size}" in dot
