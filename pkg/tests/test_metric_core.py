import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from conftest import brute_distances
from magkit.errors import InputError
from magkit.metric_core import (DistanceMatrix, Metric, PointCloud, SimilarityMatrix, Standardizer,
                                pairwise_distances, similarity_matrix, standardize)

coords = st.floats(-100, 100, allow_nan=False, allow_infinity=False)


def test_345_triangle():
    d = pairwise_distances(np.array([[0.0, 0.0], [3.0, 4.0]]), "l2")
    assert d.dist[0, 1] == 5.0 and d.dist[1, 0] == 5.0
    assert d.eps_min == 5.0


def test_single_point():
    d = pairwise_distances([[1.0, 2.0]])
    assert d.dist.shape == (1, 1) and d.dist[0, 0] == 0.0
    assert math.isnan(d.eps_min)


@pytest.mark.parametrize("metric,p", [("l1", 1), ("l2", 2), ("linf", math.inf)])
def test_matches_brute_loop(rng, metric, p):
    pts = rng.normal(size=(10, 3))
    d = pairwise_distances(pts, metric)
    oracle = brute_distances(pts.tolist(), p)
    np.testing.assert_allclose(d.dist, oracle, rtol=1e-15, atol=0)
    off = oracle[~np.eye(10, dtype=bool)]
    assert d.eps_min == pytest.approx(off.min(), rel=1e-15)


def test_duplicates_are_flagged_not_rejected():
    d = pairwise_distances([[0.0], [1.0], [0.0]])
    assert d.eps_min == 0.0 and d.has_duplicates


def test_arrays_are_read_only():
    d = pairwise_distances([[0.0], [1.0]])
    with pytest.raises(ValueError):
        d.dist[0, 1] = 3.0


@pytest.mark.parametrize("bad", [[[np.nan, 1.0]], [[np.inf]], np.zeros((0, 2)), np.zeros((2, 2, 2))])
def test_invalid_clouds(bad):
    with pytest.raises(InputError):
        PointCloud(bad)


@pytest.mark.parametrize("bad", [[[0, 1], [2, 0]], [[1, 1], [1, 0]], [[0, -1], [-1, 0]]])
def test_distance_matrix_validation(bad):
    with pytest.raises(InputError):
        DistanceMatrix.from_array(bad)


def test_metric_aliases():
    assert Metric.parse("Euclidean") is Metric.L2
    assert Metric.parse("chebyshev") is Metric.LINF
    with pytest.raises(InputError):
        Metric.parse("cosine")


def test_similarity_trivial():
    z = similarity_matrix(pairwise_distances([[0.0], [1.0]]), 1.0).zeta
    assert z[0, 0] == 1.0
    assert z[0, 1] == pytest.approx(0.367879, abs=1e-6)


def test_similarity_scalar_loop(rng):
    a = rng.random((5, 5))
    dist = np.triu(a, 1) + np.triu(a, 1).T
    z = similarity_matrix(DistanceMatrix.from_array(dist), 2.0)
    oracle = [[math.exp(-2.0 * dist[i, j]) for j in range(5)] for i in range(5)]
    np.testing.assert_allclose(z.zeta, oracle, rtol=1e-15)
    assert z.t == 2.0 and z.source == "raw"


def test_similarity_source_and_scale():
    d = pairwise_distances(np.eye(3))
    assert similarity_matrix(d, 1).source == "euclidean"
    assert similarity_matrix(d, 1, source="graph").source == "graph"
    for t in (0, -1, math.inf, math.nan):
        with pytest.raises(InputError):
            similarity_matrix(d, t)
    with pytest.raises(InputError):
        SimilarityMatrix.from_array(np.ones((2, 3)))


def test_standardize_hand_values():
    z, s = standardize([[1.0], [3.0]])
    np.testing.assert_array_equal(z.ravel(), [-1.0, 1.0])
    assert s.stdev[0] == 1.0


def test_constant_column_floored():
    z, s = standardize([[5.0, 0.0], [5.0, 1.0], [5.0, 2.0]])
    np.testing.assert_array_equal(z[:, 0], [0.0, 0.0, 0.0])
    assert s.stdev[0] == 1.0


def test_standardized_data_is_fixed_point(rng):
    z, _ = standardize(rng.normal(size=(40, 3)))
    z2, s2 = standardize(z)
    np.testing.assert_allclose(z2, z, atol=1e-10)
    np.testing.assert_allclose(s2.mean, 0, atol=1e-12)


def test_standardizer_feature_mismatch():
    s = Standardizer.fit([[0.0, 1.0], [1.0, 0.0]])
    with pytest.raises(InputError):
        s.apply([[1.0, 2.0, 3.0]])


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(2, 12), st.integers(1, 3)), elements=coords),
       st.sampled_from(["l1", "l2", "linf"]))
def test_metric_axioms(pts, metric):
    d = pairwise_distances(pts, metric).dist
    assert np.array_equal(d, d.T)
    assert np.all(d >= 0) and np.all(np.diag(d) == 0)
    # all n^3 triples
    lhs = d[:, None, :]
    rhs = d[:, :, None] + d[None, :, :]
    assert np.all(lhs <= rhs + 1e-9 * (1 + rhs))


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(2, 10), st.integers(1, 3)),
              elements=st.floats(-10, 10, allow_nan=False)),  # keeps t*d far from exp underflow
       st.floats(0.01, 5), st.floats(1.01, 3))
def test_similarity_range_and_monotone(pts, t, factor):
    d = pairwise_distances(pts)
    z1 = similarity_matrix(d, t).zeta
    z2 = similarity_matrix(d, t * factor).zeta
    assert np.all(z1 > 0) and np.all(z1 <= 1) and np.all(np.diag(z1) == 1)
    assert np.all(z2 <= z1)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(2, 15), st.integers(1, 4)),
              elements=st.floats(-1e3, 1e3, allow_nan=False)))
def test_standardize_roundtrip(pts):
    z, s = standardize(pts)
    back = s.invert(z)
    scale = np.maximum(1.0, np.abs(pts).max(axis=0))
    assert np.all(np.abs(back - pts) <= 1e-12 * scale * 10)
