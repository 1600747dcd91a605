"""Vertex partitions, refinement by cuts, and the reduced graph.

A partition stores a subset id per vertex.  Subset ids are assigned
deterministically: existing subsets keep their relative order and new
pieces inside a subset are numbered by breadth-first discovery from the
lowest vertex id.

The reduced graph aggregates two quantities per reduced edge: the sum
of crossing weights (its weight function) and the sum of square roots
of crossing weights (the coefficient that makes piecewise-constant
total variation on the original graph equal to total variation on the
reduced graph, exactly).
"""

from __future__ import annotations

import numpy as np

from .errors import ConformanceError
from .graphs import Graph

__all__ = [
    "Partition",
    "ReducedGraph",
    "single_subset_partition",
    "components_partition",
    "split_by_cut",
    "split_binary",
    "reduce_graph",
    "expand",
    "reduce_field",
]


class Partition:
    """Disjoint cover of the vertex set by non-empty subsets."""

    def __init__(self, assignment, n_subsets=None):
        assignment = np.asarray(assignment, dtype=np.int64)
        if n_subsets is None:
            n_subsets = int(assignment.max()) + 1 if assignment.size else 0
        counts = np.bincount(assignment, minlength=n_subsets)
        if np.any(counts == 0):
            raise ConformanceError("every subset must be non-empty")
        self.assignment = assignment
        self.n_subsets = int(n_subsets)
        self.sizes = counts
        self._subsets = None

    @property
    def n_vertices(self):
        return self.assignment.size

    @property
    def subsets(self):
        """List of vertex-id arrays, one per subset (ascending ids)."""
        if self._subsets is None:
            order = np.argsort(self.assignment, kind="stable")
            bounds = np.cumsum(self.sizes)
            self._subsets = np.split(order, bounds[:-1])
        return self._subsets

    def refines(self, other):
        """True when every subset of self lies inside one subset of other."""
        for sub in self.subsets:
            if np.unique(other.assignment[sub]).size != 1:
                return False
        return True

    def __eq__(self, other):
        return (
            isinstance(other, Partition)
            and self.n_subsets == other.n_subsets
            and np.array_equal(self.assignment, other.assignment)
        )

    def __repr__(self):
        return f"Partition(n_vertices={self.n_vertices}, n_subsets={self.n_subsets})"

    def as_frozensets(self):
        return {frozenset(sub.tolist()) for sub in self.subsets}


class ReducedGraph:
    """Graph over partition subsets with aggregated crossing weights.

    ``graph.weights`` holds the summed original weights per reduced
    directed edge; ``cut_coeffs`` holds the summed square roots of the
    crossing weights, used as the linear edge coefficient of the reduced
    total-variation operator.
    """

    def __init__(self, graph, cut_coeffs, part):
        self.graph = graph
        self.cut_coeffs = cut_coeffs
        self.part = part

    @property
    def n_subsets(self):
        return self.graph.n_vertices

    def tv_coefficient(self, p):
        """Per-directed-edge coefficient of the reduced gradient operator.

        For p = 1 the exact coefficient is the sum of sqrt(w) over
        crossing edges; for p = 2 it is sqrt of the summed weights (the
        quadratic form decomposes over crossing sums).
        """
        if p == 1:
            return self.cut_coeffs
        return self.graph.sqrt_weights


def single_subset_partition(n_vertices):
    return Partition(np.zeros(n_vertices, dtype=np.int64), 1)


def components_partition(graph):
    """Connected components of the graph as the initial partition."""
    return Partition(graph.connected_components())


def _component_refine(graph, part, labels):
    """Split every subset into connected components of equal-label pieces.

    ``labels`` is an integer (or boolean) array per vertex; only edges
    joining same-subset, same-label endpoints survive.  New subset ids
    keep the old subset order and are numbered by the smallest vertex id
    of each component within it.
    """
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import connected_components as _cc

    n = graph.n_vertices
    labels = np.asarray(labels)
    u, v = graph.edges[:, 0], graph.edges[:, 1]
    keep = (part.assignment[u] == part.assignment[v]) & (labels[u] == labels[v])
    if keep.any():
        mat = csr_matrix(
            (np.ones(int(keep.sum())), (u[keep], v[keep])), shape=(n, n)
        )
        ncomp, comp = _cc(mat, directed=False)
    else:
        ncomp, comp = n, np.arange(n, dtype=np.int64)
    minv = np.full(ncomp, n, dtype=np.int64)
    np.minimum.at(minv, comp, np.arange(n))
    key = part.assignment * np.int64(n + 1) + minv[comp]
    _, new_assign = np.unique(key, return_inverse=True)
    return Partition(new_assign.astype(np.int64))


def _as_mask(n, B):
    idx = np.asarray(list(B) if isinstance(B, (set, frozenset)) else B)
    if idx.dtype == bool:
        return idx.copy()
    mask = np.zeros(n, dtype=bool)
    if idx.size:
        mask[idx.astype(np.int64)] = True
    return mask


def split_by_cut(graph, part, B):
    """Refine a partition along a vertex set, keeping connected components.

    Every subset A is replaced by the connected components of its
    intersections with B and with its complement.  The result refines
    ``part`` and equals it when the cut splits nothing.
    """
    return _component_refine(graph, part, _as_mask(graph.n_vertices, B))


def split_binary(graph, part, B):
    """Reference binary refinement: subsets split in two, components ignored.

    Test-only counterpart of :func:`split_by_cut`; produces at most
    twice as many subsets as the input partition.
    """
    mask = _as_mask(graph.n_vertices, B)
    key = part.assignment * np.int64(2) + mask
    _, new_assign = np.unique(key, return_inverse=True)
    return Partition(new_assign.astype(np.int64))


def reduce_graph(graph, part):
    """Reduced graph over subsets; weights are exact sums of crossing weights."""
    a = part.assignment[graph.edges[:, 0]]
    b = part.assignment[graph.edges[:, 1]]
    cross = a != b
    a, b = a[cross], b[cross]
    w = graph.weights[cross]
    sw = graph.sqrt_weights[cross]
    m = part.n_subsets
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    fwd = a < b
    # each unordered reduced pair appears once per crossing directed edge
    key = lo * m + hi
    uniq, inv = np.unique(key[fwd], return_inverse=True)
    w_r = np.bincount(inv, weights=w[fwd])
    sw_r = np.bincount(inv, weights=sw[fwd])
    rg = Graph(m, uniq // m, uniq % m, w_r)
    # Graph sorts pairs by (lo, hi); np.unique returned keys sorted the same way
    coeffs = np.repeat(sw_r, 2)
    return ReducedGraph(rg, coeffs, part)


def expand(part, c):
    """Piecewise-constant vertex field from per-subset constants."""
    c = np.asarray(c, dtype=np.float64)
    if c.ndim == 1:
        c = c[:, None]
    if c.shape[0] != part.n_subsets:
        raise ConformanceError("constants do not conform to the partition")
    return c[part.assignment]


def reduce_field(part, v):
    """Per-subset coordinate sums (the adjoint of :func:`expand`)."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim == 1:
        v = v[:, None]
    if v.shape[0] != part.n_vertices:
        raise ConformanceError("field does not conform to the partition")
    out = np.zeros((part.n_subsets, v.shape[1]))
    for j in range(v.shape[1]):
        out[:, j] = np.bincount(part.assignment, weights=v[:, j], minlength=part.n_subsets)
    return out
