import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from factorcausal.graph import (EdgeKey, edge_counts, edge_set, is_dag, jaccard, out_degree,
                                rolling_mean, topological_sort)
from factorcausal.netinfer import Edge, FactorNetwork

keys = st.sets(st.tuples(st.sampled_from("abcd"), st.sampled_from("abcd"), st.integers(0, 2)),
               max_size=12)


def _net(kind, edges, names=("M", "a", "b")):
    return FactorNetwork(kind, names, 1, 0.05,
                         tuple(Edge(s, d, l, 0.5, sig) for s, d, l, sig in edges))


def test_jaccard_oracle():
    assert jaccard({"a", "b", "c"}, {"b", "c", "d"}) == 0.5
    assert jaccard(set(), set()) == 1.0
    assert jaccard({"a"}, set()) == 0.0


@given(keys, keys)
def test_jaccard_properties(a, b):
    j = jaccard(a, b)
    assert 0.0 <= j <= 1.0
    assert j == jaccard(b, a)
    assert jaccard(a, a) == 1.0


def test_rolling_mean_oracle():
    np.testing.assert_allclose(rolling_mean([1, 2, 3, 4, 5], 4), [2.5, 3.5])
    assert rolling_mean([1, 2], 4).size == 0
    with pytest.raises(ValueError):
        rolling_mean([1.0], 0)


@given(st.lists(st.floats(-100, 100), min_size=1, max_size=30), st.integers(1, 6))
def test_rolling_mean_matches_loop(x, k):
    got = rolling_mean(x, k)
    expect = [np.mean(x[i - k + 1:i + 1]) for i in range(k - 1, len(x))]
    np.testing.assert_allclose(got, expect, atol=1e-9)


def test_edge_counts_and_out_degree():
    net = _net("causal", [("M", "a", 0, True), ("M", "b", 1, True), ("M", "a", 1, True),
                          ("M", "M", 1, True), ("a", "b", 0, True), ("b", "M", 0, False)])
    assert edge_counts(net) == (5, 2, 3)
    assert out_degree(net, "M") == 3
    assert out_degree(net, "M", distinct=True) == 2
    assert out_degree(net, "b") == 0
    with pytest.raises(KeyError):
        out_degree(net, "zzz")


def test_correlation_edges_are_undirected_at_lag_zero():
    a = _net("correlation", [("a", "M", 0, True), ("M", "b", 1, True)])
    b = _net("correlation", [("M", "a", 0, True), ("M", "b", 1, True)])
    assert edge_set(a) == edge_set(b)
    assert out_degree(a, "M") == 2
    assert EdgeKey("b", "a", 0).canonical() == EdgeKey("a", "b", 0)
    assert EdgeKey("b", "a", 1).canonical() == EdgeKey("b", "a", 1)
    A = a.adjacency(0)
    assert A[0, 1] == A[1, 0] == 0.5


def test_topological_sort_and_dag():
    adj = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0]])
    assert topological_sort(adj) == [0, 1, 2]
    adj[0, 2] = 1
    assert topological_sort(adj) is None
    cyc = _net("causal", [("M", "a", 0, True), ("a", "M", 0, True)])
    assert not is_dag(cyc)
    assert is_dag(_net("causal", [("M", "a", 0, True), ("a", "M", 1, True)]))
