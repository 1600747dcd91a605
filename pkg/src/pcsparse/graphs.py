"""Finite weighted graphs and their first-order difference calculus.

A graph stores every edge twice, once per orientation, so that edge
functions (graph gradients, dual variables, capacities) can carry a value
per directed edge.  The two copies of a pair sit at adjacent indices
``2k`` and ``2k + 1``, which keeps the reversed edge reachable as
``index ^ 1``.

Vertex functions are plain ``(n, d)`` float arrays, edge functions are
``(m, d)`` arrays indexed by directed edge.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConformanceError, DomainError, SingularEdgeError

__all__ = [
    "Graph",
    "RegularizerSpec",
    "gradient",
    "adjoint",
    "divergence",
    "pq_norm",
    "p_laplacian",
    "regularizer_gradient",
    "energy",
    "operator_norm_estimate",
    "equality_tolerance",
]

#: |a - b| <= EQ_REL * (bounding box diagonal) counts as "equal value".
#: Piecewise-constant iterates are equal by construction, so this only
#: guards against round-off.
EQ_REL = 1e-12


def equality_tolerance(*fields):
    """Absolute tolerance used to decide f(u) = f(v), scaled to the data.

    Takes one or more vertex fields and returns ``1e-12`` times the
    diagonal of their joint bounding box.
    """
    lo = min(float(np.min(f)) for f in fields if f.size)
    hi = max(float(np.max(f)) for f in fields if f.size)
    return EQ_REL * abs(hi - lo)


class Graph:
    """Immutable weighted undirected graph with directed edge storage.

    Parameters
    ----------
    n_vertices : int
        Number of vertices; ids run from 0 to ``n_vertices - 1``.
    pair_u, pair_v : array of int
        Endpoints of each undirected pair, ``pair_u[i] < pair_v[i]``.
    pair_w : array of float
        Positive weight per pair.  Pairs with ``w <= 0`` are dropped.
    """

    def __init__(self, n_vertices, pair_u, pair_v, pair_w):
        pair_u = np.asarray(pair_u, dtype=np.int64)
        pair_v = np.asarray(pair_v, dtype=np.int64)
        pair_w = np.asarray(pair_w, dtype=np.float64)
        if not (pair_u.shape == pair_v.shape == pair_w.shape):
            raise ConformanceError("pair arrays must have identical shapes")
        if pair_u.size:
            if pair_u.min() < 0 or max(pair_u.max(), pair_v.max()) >= n_vertices:
                raise ConformanceError("edge endpoint out of range")
            if np.any(pair_u == pair_v):
                raise ConformanceError("self-loops are not allowed")
        keep = pair_w > 0.0
        pair_u, pair_v, pair_w = pair_u[keep], pair_v[keep], pair_w[keep]
        lo = np.minimum(pair_u, pair_v)
        hi = np.maximum(pair_u, pair_v)
        order = np.lexsort((hi, lo))
        lo, hi, pair_w = lo[order], hi[order], pair_w[order]
        if lo.size > 1 and np.any((lo[1:] == lo[:-1]) & (hi[1:] == hi[:-1])):
            raise ConformanceError("duplicate edges are not allowed")

        self.n_vertices = int(n_vertices)
        m = 2 * lo.size
        self.edges = np.empty((m, 2), dtype=np.int64)
        self.edges[0::2, 0] = lo
        self.edges[0::2, 1] = hi
        self.edges[1::2, 0] = hi
        self.edges[1::2, 1] = lo
        self.weights = np.repeat(pair_w, 2)
        self.sqrt_weights = np.sqrt(self.weights)
        self._adjacency = None

    # -- construction helpers -------------------------------------------------

    @classmethod
    def from_directed(cls, n_vertices, u, v, w):
        """Build from a symmetric directed edge list (both copies present)."""
        u = np.asarray(u, dtype=np.int64)
        v = np.asarray(v, dtype=np.int64)
        w = np.asarray(w, dtype=np.float64)
        lo = np.minimum(u, v)
        hi = np.maximum(u, v)
        order = np.lexsort((v, u, hi, lo))
        u, v, w, lo, hi = u[order], v[order], w[order], lo[order], hi[order]
        fwd = u < v
        rev = ~fwd
        if fwd.sum() != rev.sum():
            raise ConformanceError("directed edge list is not symmetric")
        if not (
            np.array_equal(u[fwd], v[rev])
            and np.array_equal(v[fwd], u[rev])
            and np.allclose(w[fwd], w[rev], rtol=0, atol=0)
        ):
            raise ConformanceError("directed edge list is not symmetric in (u, v, w)")
        return cls(n_vertices, u[fwd], v[fwd], w[fwd])

    # -- basic queries ---------------------------------------------------------

    @property
    def n_edges(self):
        """Number of stored directed edges (twice the pair count)."""
        return self.edges.shape[0]

    @property
    def n_pairs(self):
        return self.edges.shape[0] // 2

    def reverse_index(self, e=None):
        """Index of the opposite orientation of directed edge ``e``."""
        if e is None:
            e = np.arange(self.n_edges)
        return np.asarray(e) ^ 1

    def adjacency(self):
        """CSR-style adjacency: (indptr, directed edge ids sorted by tail)."""
        if self._adjacency is None:
            tails = self.edges[:, 0]
            order = np.argsort(tails, kind="stable")
            indptr = np.zeros(self.n_vertices + 1, dtype=np.int64)
            np.add.at(indptr, tails + 1, 1)
            np.cumsum(indptr, out=indptr)
            self._adjacency = (indptr, order)
        return self._adjacency

    def degrees(self):
        return np.bincount(self.edges[:, 0], minlength=self.n_vertices)

    def connected_components(self):
        """Component label per vertex, labels in order of smallest member."""
        from scipy.sparse import csr_matrix
        from scipy.sparse.csgraph import connected_components as _cc

        if self.n_edges == 0:
            return np.arange(self.n_vertices, dtype=np.int64)
        mat = csr_matrix(
            (np.ones(self.n_edges), (self.edges[:, 0], self.edges[:, 1])),
            shape=(self.n_vertices, self.n_vertices),
        )
        _, labels = _cc(mat, directed=False)
        # relabel so component ids follow their smallest vertex
        first = np.full(labels.max() + 1, self.n_vertices, dtype=np.int64)
        np.minimum.at(first, labels, np.arange(self.n_vertices))
        rank = np.argsort(np.argsort(first))
        return rank[labels]

    def check_vertex_field(self, f):
        f = np.asarray(f, dtype=np.float64)
        if f.ndim == 1:
            f = f[:, None]
        if f.ndim != 2 or f.shape[0] != self.n_vertices:
            raise ConformanceError(
                f"vertex field has shape {f.shape}, expected ({self.n_vertices}, d)"
            )
        return f

    def check_edge_field(self, G):
        G = np.asarray(G, dtype=np.float64)
        if G.ndim == 1:
            G = G[:, None]
        if G.ndim != 2 or G.shape[0] != self.n_edges:
            raise ConformanceError(
                f"edge field has shape {G.shape}, expected ({self.n_edges}, d)"
            )
        return G

    def __repr__(self):
        return f"Graph(n_vertices={self.n_vertices}, n_pairs={self.n_pairs})"


@dataclass(frozen=True)
class RegularizerSpec:
    """Regularization functional and its two coupling weights.

    ``alpha`` scales the cut (partition) step, ``beta`` the smoothing
    step of the reduced solve; the two are deliberately independent.

    Normalization: for ``kind="pq"`` the energy functional evaluated by
    :func:`energy` is ``0.5 * ||f - g||^2 + beta / (2 p) * ||grad f||_{p;q}^p``
    over directed edges, while the primal-dual solvers minimize the
    power-one form ``0.5 * ||f - g||^2 + beta * ||grad f||_{p;q}`` (same
    minimizers up to a rescaling of ``beta``).
    """

    kind: str = "pq"
    p: float = 1.0
    q: float = 1.0
    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        if self.kind not in ("pq", "l0"):
            raise DomainError(f"unknown regularizer kind {self.kind!r}")
        if self.kind == "pq" and (self.p < 1 or self.q < 1):
            raise DomainError("p and q must be >= 1")
        for name in ("alpha", "beta"):
            val = getattr(self, name)
            if not np.isfinite(val) or val < 0:
                raise DomainError(f"{name} must be finite and nonnegative")


# -- first-order operators ----------------------------------------------------


def gradient(graph, f):
    """Weighted graph gradient, ``sqrt(w(u,v)) * (f(v) - f(u))`` per edge."""
    f = graph.check_vertex_field(f)
    u = graph.edges[:, 0]
    v = graph.edges[:, 1]
    return graph.sqrt_weights[:, None] * (f[v] - f[u])


def adjoint(graph, G):
    """Adjoint of the gradient: ``sum_v sqrt(w) (G(v,u) - G(u,v))`` per vertex."""
    G = graph.check_edge_field(G)
    u = graph.edges[:, 0]
    diff = graph.sqrt_weights[:, None] * (G[graph.reverse_index()] - G)
    out = np.zeros((graph.n_vertices, G.shape[1]))
    for j in range(G.shape[1]):
        out[:, j] = np.bincount(u, weights=diff[:, j], minlength=graph.n_vertices)
    return out


def divergence(graph, G):
    """Graph divergence, the negated adjoint."""
    return -adjoint(graph, G)


def pq_norm(graph, f, p, q):
    """Double norm of the weighted gradient: q over coordinates, p over edges.

    Every directed edge contributes, so each pair is counted twice.
    """
    if p < 1 or q < 1:
        raise DomainError("p and q must be >= 1")
    grad = gradient(graph, f)
    if grad.size == 0:
        return 0.0
    inner = np.sum(np.abs(grad) ** q, axis=1) ** (1.0 / q)
    return float(np.sum(inner**p) ** (1.0 / p))


def p_laplacian(graph, f, p, q):
    """Graph p-q-Laplacian.

    ``out(u) = sum_v w^{p/2} ||f(v)-f(u)||_q^{p-q} (f(v)-f(u)) |f(v)-f(u)|^{q-2}``

    Raises :class:`SingularEdgeError` when a zero difference meets a
    negative exponent; callers that need the differentiable part only
    should use :func:`regularizer_gradient`.
    """
    if p < 1 or q < 1:
        raise DomainError("p and q must be >= 1")
    f = graph.check_vertex_field(f)
    u = graph.edges[:, 0]
    v = graph.edges[:, 1]
    diff = f[v] - f[u]
    absdiff = np.abs(diff)
    qnorm = np.sum(absdiff**q, axis=1) ** (1.0 / q)
    if p < q and np.any(qnorm == 0.0):
        raise SingularEdgeError("zero q-norm difference with p < q")
    if q < 2 and np.any(absdiff == 0.0):
        raise SingularEdgeError("zero coordinate difference with q < 2")
    with np.errstate(divide="ignore", invalid="ignore"):
        outer = np.where(qnorm > 0, qnorm, 1.0) ** (p - q)
        comp = np.where(absdiff > 0, absdiff, 1.0) ** (q - 2.0)
    terms = (graph.weights ** (p / 2.0))[:, None] * outer[:, None] * diff * comp
    out = np.zeros_like(f)
    for j in range(f.shape[1]):
        out[:, j] = np.bincount(u, weights=terms[:, j], minlength=graph.n_vertices)
    return out


def regularizer_gradient(graph, f, spec, tol=None):
    """Gradient of the p-q regularizer restricted to its differentiable set.

    Edges (for q > 1) or edge-coordinate slots (for q = 1) whose
    difference vanishes within ``tol`` (:func:`equality_tolerance` by
    default) contribute exactly zero.  Equals the negated p-q-Laplacian
    on the smooth set.
    """
    if spec.kind != "pq":
        raise DomainError("regularizer_gradient is defined for the pq kind")
    f = graph.check_vertex_field(f)
    u = graph.edges[:, 0]
    v = graph.edges[:, 1]
    diff = f[u] - f[v]
    absdiff = np.abs(diff)
    if tol is None:
        tol = equality_tolerance(f)
    p, q = spec.p, spec.q
    wp = graph.weights ** (p / 2.0)

    if q == 1:
        active = absdiff > tol
        terms = wp[:, None] * np.sign(diff) * active
        if p != 1:
            qn = np.where(active, absdiff, 0.0).sum(axis=1)
            terms = terms * np.where(qn > 0, qn, 1.0)[:, None] ** (p - 1.0)
    else:
        qn = np.sum(absdiff**q, axis=1) ** (1.0 / q)
        active = qn > tol
        safe = np.where(active, qn, 1.0)
        terms = (
            wp[:, None]
            * safe[:, None] ** (p - q)
            * diff
            * np.where(absdiff > 0, absdiff, 1.0) ** (q - 2.0)
        )
        terms[~active] = 0.0
        if q < 2:
            terms[absdiff <= tol] = 0.0

    out = np.zeros_like(f)
    for j in range(f.shape[1]):
        out[:, j] = np.bincount(u, weights=terms[:, j], minlength=graph.n_vertices)
    return out


def energy(graph, f, g, spec):
    """Variational energy of ``f`` against data ``g``.

    pq kind:  ``0.5 ||f - g||^2 + beta/(2p) ||grad f||_{p;q}^p``.
    l0 kind:  ``0.5 ||f - g||^2 + alpha * sum_{S0} sqrt(w)`` where ``S0``
    holds the directed edges whose endpoint values differ beyond the
    equality tolerance.
    """
    f = graph.check_vertex_field(f)
    g = graph.check_vertex_field(g)
    data = 0.5 * float(np.sum((f - g) ** 2))
    if spec.kind == "pq":
        reg = pq_norm(graph, f, spec.p, spec.q) ** spec.p
        return data + spec.beta / (2.0 * spec.p) * reg
    diff = np.abs(f[graph.edges[:, 1]] - f[graph.edges[:, 0]])
    tol = equality_tolerance(f)
    jumps = np.any(diff > tol, axis=1)
    return data + spec.alpha * float(np.sum(graph.sqrt_weights[jumps]))


def operator_norm_estimate(graph, iters=50, seed=0):
    """Spectral norm of the weighted gradient operator by power iteration."""
    if iters < 1:
        raise DomainError("iters must be >= 1")
    if graph.n_edges == 0:
        return 0.0
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((graph.n_vertices, 1))
    x /= np.linalg.norm(x)
    est = 0.0
    for _ in range(iters):
        y = adjoint(graph, gradient(graph, x))
        norm = np.linalg.norm(y)
        if norm == 0.0:
            return 0.0
        est = norm
        x = y / norm
    return float(np.sqrt(est))
