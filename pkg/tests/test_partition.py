import numpy as np
import pytest

from pcsparse import (
    ConformanceError,
    Graph,
    Partition,
    components_partition,
    expand,
    pq_norm,
    reduce_field,
    reduce_graph,
    split_binary,
    split_by_cut,
)
from helpers import random_connected_graph


def path4():
    return Graph(4, [0, 1, 2], [1, 2, 3], [1.0, 1.0, 1.0])


def test_partition_validation():
    with pytest.raises(ConformanceError):
        Partition(np.array([0, 2]))  # subset 1 empty


def test_split_by_cut_example():
    part = Partition(np.zeros(4, dtype=np.int64))
    out = split_by_cut(path4(), part, {0, 1, 3})
    assert [sorted(s.tolist()) for s in out.subsets] == [[0, 1], [2], [3]]


def test_split_by_cut_trivial_sets():
    part = Partition(np.array([0, 0, 1, 1]))
    assert split_by_cut(path4(), part, set()) == part
    assert split_by_cut(path4(), part, {0, 1, 2, 3}) == part


def _random_partition(n, m_max, rng):
    labels = rng.integers(0, m_max, n)
    _, dense = np.unique(labels, return_inverse=True)
    return Partition(dense.astype(np.int64))


def test_split_refinement_property():
    rng = np.random.default_rng(0)
    for _ in range(20):
        n = int(rng.integers(4, 15))
        g = random_connected_graph(n, rng)
        part = _random_partition(n, 3, rng)
        B = rng.random(n) < 0.5
        out = split_by_cut(g, part, B)
        assert out.refines(part)
        # components variant never yields fewer subsets than the binary one
        binary = split_binary(g, part, B)
        assert out.n_subsets >= binary.n_subsets
        assert out.refines(binary)


def test_component_vs_binary_strict_case():
    # B = {0, 2} on a path: binary keeps {0,2} together, components split it
    part = Partition(np.zeros(4, dtype=np.int64))
    B = {0, 2}
    comp = split_by_cut(path4(), part, B)
    binary = split_binary(path4(), part, B)
    assert binary.n_subsets == 2
    assert comp.n_subsets == 4


def test_reduce_graph_example():
    part = Partition(np.array([0, 0, 1, 1]))
    rg = reduce_graph(path4(), part)
    assert rg.graph.n_vertices == 2
    assert rg.graph.n_pairs == 1
    assert rg.graph.weights[0] == 1.0
    assert rg.cut_coeffs[0] == 1.0


def test_reduce_graph_trivial_partitions():
    g = path4()
    single = Partition(np.zeros(4, dtype=np.int64))
    assert reduce_graph(g, single).graph.n_edges == 0
    discrete = Partition(np.arange(4))
    rg = reduce_graph(g, discrete)
    assert np.array_equal(rg.graph.edges, g.edges)
    assert np.allclose(rg.graph.weights, g.weights)


def test_reduce_graph_weight_sums():
    rng = np.random.default_rng(5)
    for _ in range(20):
        n = int(rng.integers(4, 16))
        g = random_connected_graph(n, rng)
        part = _random_partition(n, max(2, n // 2), rng)
        rg = reduce_graph(g, part)
        a = part.assignment[g.edges[:, 0]]
        b = part.assignment[g.edges[:, 1]]
        cross = a != b
        # total reduced weight equals total crossing weight
        assert np.isclose(rg.graph.weights.sum(), g.weights[cross].sum(), rtol=1e-12)
        # per-edge sums are exact
        for e in range(rg.graph.n_edges):
            A, Bb = rg.graph.edges[e]
            sel = cross & (a == A) & (b == Bb)
            assert np.isclose(rg.graph.weights[e], g.weights[sel].sum(), rtol=0, atol=0)
            assert np.isclose(
                rg.cut_coeffs[e], g.sqrt_weights[sel].sum(), rtol=0, atol=0
            )


def test_expand_reduce_identities():
    rng = np.random.default_rng(6)
    part = Partition(np.array([0, 0, 1]))
    v = np.array([[1.0, 0.0], [3.0, 0.0], [5.0, 0.0]])
    assert np.array_equal(reduce_field(part, v), [[4.0, 0.0], [5.0, 0.0]])
    single = Partition(np.arange(4))
    c = rng.normal(size=(4, 2))
    assert np.array_equal(expand(single, c), c)
    # P* P = diag(|A_i|)
    for _ in range(20):
        n = int(rng.integers(3, 20))
        m = int(rng.integers(1, n + 1))
        assign = np.concatenate([np.arange(m), rng.integers(0, m, n - m)])
        part = Partition(np.sort(assign))
        c = rng.normal(size=(part.n_subsets, 3))
        lhs = reduce_field(part, expand(part, c))
        rhs = part.sizes[:, None] * c
        assert np.max(np.abs(lhs - rhs)) <= 1e-12 * max(1.0, np.max(np.abs(rhs)))


def test_norm_equality_proposition():
    # piecewise-constant TV on the original graph equals reduced TV exactly
    rng = np.random.default_rng(7)
    for _ in range(100):
        n = int(rng.integers(4, 25))
        g = random_connected_graph(n, rng)
        m = int(rng.integers(1, n + 1))
        assign = np.concatenate([np.arange(m), rng.integers(0, m, n - m)])
        part = Partition(np.sort(assign))
        c = rng.normal(size=(part.n_subsets, 2))
        rg = reduce_graph(g, part)
        full = pq_norm(g, expand(part, c), 1, 1)
        cd = c[rg.graph.edges[:, 1]] - c[rg.graph.edges[:, 0]]
        reduced = float(np.sum(rg.cut_coeffs[:, None] * np.abs(cd)))
        assert abs(full - reduced) <= 1e-10 * (1.0 + abs(full))


def test_components_partition():
    g = Graph(5, [0, 1, 3], [1, 2, 4], [1.0, 1.0, 1.0])
    part = components_partition(g)
    assert part.n_subsets == 2
    assert [sorted(s.tolist()) for s in part.subsets] == [[0, 1, 2], [3, 4]]
