"""Primal-dual solvers for the variational denoising step.

The full-graph and reduced solvers share one saddle-point engine for

    min_c  0.5 ||P c - g||^2 + beta ||K c||_{p;q}

where P is the expansion onto subsets (the identity in the full case)
and K is a graph difference operator with one row per directed edge.
The dual update projects onto the polar-norm ball of radius beta; the
primal update is the closed-form proximal step

    c_A <- (c_A - tau (K* y)_A + tau (P* g)_A) / (1 + tau |A|).

Step sizes obey ||Sigma^1/2 K T^1/2|| <= 0.99, enforced by a power
iteration on the scaled operator.  This matters because edges are
stored in both orientations (which doubles the effective dual step of
the textbook preconditioners) and because the reduced primal steps are
boosted by the subset sizes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix

from .errors import CapabilityError, DomainError, StepSizeError
from .partition import reduce_field

__all__ = [
    "PDConfig",
    "Preconditioner",
    "project_ball",
    "build_preconditioner",
    "primal_dual_full",
    "primal_dual_reduced",
    "solve_l0_reduced",
]


@dataclass
class PDConfig:
    """Primal-dual iteration parameters.

    ``tau``/``sigma`` default to 0.99 / ||K|| each; ``rel_tol`` stops the
    iteration once the relative energy change between consecutive
    iterates falls below it.
    """

    tau: float | None = None
    sigma: float | None = None
    theta: float = 1.0
    max_iters: int = 10000
    rel_tol: float = 1e-5
    accelerate: bool = False

    def __post_init__(self):
        if not 0.0 <= self.theta <= 1.0:
            raise DomainError("theta must lie in [0, 1]")
        if self.rel_tol <= 0:
            raise DomainError("rel_tol must be positive")
        if self.max_iters < 1:
            raise DomainError("max_iters must be >= 1")
        for name in ("tau", "sigma"):
            val = getattr(self, name)
            if val is not None and val <= 0:
                raise DomainError(f"{name} must be positive")


@dataclass
class Preconditioner:
    """Diagonal step sizes: one primal step per (reduced) vertex, one dual
    step per directed edge."""

    T: np.ndarray
    Sigma: np.ndarray
    exponent: float = 1.0

    def __post_init__(self):
        if np.any(self.T <= 0) or np.any(self.Sigma <= 0):
            raise DomainError("preconditioner entries must be strictly positive")


def build_preconditioner(graph_or_reduced, exponent=1.0, part=None):
    """Diagonal preconditioner for the (reduced) difference operator.

    Full graph:    tau_u = 1 / sum_v w(u,v)^((2-a)/2),  sigma_e = 1 / (2 w_e^(a/2)).
    Reduced graph: tau_A = |A| / sum_B w_r(A,B)^(2-a), and sigma per
    reduced edge from its operator coefficient (the summed square roots
    of crossing weights).  Vertices without edges get step 1.
    """
    from .partition import ReducedGraph

    a = float(exponent)
    if not 0.0 <= a <= 2.0:
        raise DomainError("preconditioner exponent must lie in [0, 2]")

    if isinstance(graph_or_reduced, ReducedGraph):
        rg = graph_or_reduced
        if part is None:
            part = rg.part
        g = rg.graph
        denom = np.zeros(g.n_vertices)
        np.add.at(denom, g.edges[:, 0], (g.weights ** (2.0 - a)))
        T = np.where(denom > 0, part.sizes / np.where(denom > 0, denom, 1.0), 1.0)
        coef = rg.cut_coeffs
        Sigma = 1.0 / (2.0 * np.where(coef > 0, coef, 1.0) ** a)
        return Preconditioner(T=T, Sigma=Sigma, exponent=a)

    graph = graph_or_reduced
    denom = np.zeros(graph.n_vertices)
    np.add.at(denom, graph.edges[:, 0], graph.weights ** ((2.0 - a) / 2.0))
    T = np.where(denom > 0, 1.0 / np.where(denom > 0, denom, 1.0), 1.0)
    Sigma = 1.0 / (2.0 * graph.weights ** (a / 2.0))
    return Preconditioner(T=T, Sigma=Sigma, exponent=a)


# -- projections ----------------------------------------------------------------


def _conjugate(p):
    if p == 1:
        return np.inf
    if p == 2:
        return 2.0
    return p / (p - 1.0)


def project_ball(z, p_star, q_star, radius):
    """Euclidean projection of an edge field onto the p*;q* ball.

    Supported: (inf, inf) componentwise clamp, (inf, 2) per-edge
    rescaling, (2, 2) global rescaling.
    """
    if radius <= 0:
        raise DomainError("radius must be positive")
    z = np.asarray(z, dtype=np.float64)
    flat = z.ndim == 1
    if flat:
        z = z[:, None]
    if np.isinf(p_star) and np.isinf(q_star):
        out = np.clip(z, -radius, radius)
    elif np.isinf(p_star) and q_star == 2:
        norms = np.linalg.norm(z, axis=1)
        scale = radius / np.maximum(radius, norms)
        out = z * scale[:, None]
    elif p_star == 2 and q_star == 2:
        norm = np.linalg.norm(z)
        out = z * (radius / max(radius, norm))
    else:
        raise CapabilityError(
            f"projection onto the ({p_star}, {q_star}) ball is not supported"
        )
    return out[:, 0] if flat else out


def _project_metric(z, sigma, p, q, radius):
    """Projection in the Sigma^-1 metric used inside the dual update."""
    if p == 1 and q == 1:
        return np.clip(z, -radius, radius)
    if p == 1 and q == 2:
        norms = np.linalg.norm(z, axis=1)
        scale = radius / np.maximum(radius, norms)
        return z * scale[:, None]
    if p == 2 and q == 2:
        if np.isscalar(sigma) or np.unique(np.asarray(sigma)).size == 1:
            norm = np.linalg.norm(z)
            return z * (radius / max(radius, norm))
        return _project_l22_weighted(z, np.asarray(sigma, dtype=np.float64), radius)
    raise CapabilityError(f"(p, q) = ({p}, {q}) is not supported by the solver")


def _project_l22_weighted(z, sigma, radius):
    """Metric projection onto the global l2 ball with per-edge steps.

    Solves sum_e ||z_e||^2 / (1 + lam sigma_e)^2 = radius^2 for lam >= 0
    by bisection; the minimizer is y_e = z_e / (1 + lam sigma_e).
    """
    sq = np.sum(z * z, axis=1)
    if np.sqrt(sq.sum()) <= radius:
        return z
    lo, hi = 0.0, 1.0
    while np.sqrt(np.sum(sq / (1.0 + hi * sigma) ** 2)) > radius:
        hi *= 2.0
        if hi > 1e100:
            break
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if np.sqrt(np.sum(sq / (1.0 + mid * sigma) ** 2)) > radius:
            lo = mid
        else:
            hi = mid
    lam = 0.5 * (lo + hi)
    return z / (1.0 + lam * sigma)[:, None]


# -- the saddle-point engine ------------------------------------------------------


def _difference_operator(edges, coef, n_cols):
    m = edges.shape[0]
    rows = np.repeat(np.arange(m), 2)
    cols = edges[:, ::-1].ravel()  # (v, u) per row
    data = np.stack([coef, -coef], axis=1).ravel()
    return csr_matrix((data, (rows, cols)), shape=(m, n_cols))


def _pq_value(G, p, q):
    if G.size == 0:
        return 0.0
    inner = np.sum(np.abs(G) ** q, axis=1) ** (1.0 / q)
    return float(np.sum(inner**p) ** (1.0 / p))


def _scaled_norm(K, T, Sigma, seed=7):
    """Power-iteration estimate of ||Sigma^1/2 K T^1/2||."""
    m = K.shape[1]
    if K.shape[0] == 0 or m == 0:
        return 0.0
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(m)
    x /= np.linalg.norm(x)
    sT = np.sqrt(T)
    sS = np.sqrt(Sigma)
    est = 0.0
    for _ in range(40):
        y = sS * (K @ (sT * x))
        x = sT * (K.T @ (sS * y))
        nrm = np.linalg.norm(x)
        if nrm == 0.0:
            return 0.0
        est = np.sqrt(nrm)
        x /= nrm
    return float(est)


def _pd_engine(edges, coef, sizes, gsum, beta, p, q, cfg, precond, c0, data_const):
    """Shared primal-dual loop.  Returns (best iterate, energy trace)."""
    if (p, q) not in ((1.0, 1.0), (1.0, 2.0), (2.0, 2.0)):
        raise CapabilityError(f"(p, q) = ({p}, {q}) is not supported by the solver")
    m = sizes.size
    d = gsum.shape[1]
    cfg = cfg or PDConfig()

    def data_energy(c):
        return (
            0.5 * float(np.sum(sizes[:, None] * c * c))
            - float(np.sum(c * gsum))
            + data_const
        )

    means = gsum / sizes[:, None]
    c = means.copy() if c0 is None else np.asarray(c0, dtype=np.float64).copy()
    if c.ndim == 1:
        c = c[:, None]

    if beta == 0.0 or edges.shape[0] == 0:
        # the data term alone: closed form, the per-subset means
        trace = [data_energy(means)]
        return means.copy(), trace

    K = _difference_operator(edges, coef, m)

    if precond is not None:
        T = np.asarray(precond.T, dtype=np.float64).copy()
        Sigma = np.asarray(precond.Sigma, dtype=np.float64).copy()
    else:
        if cfg.tau is None or cfg.sigma is None:
            L = _operator_norm_from_matrix(K)
            tau = cfg.tau if cfg.tau is not None else 0.99 / max(L, 1e-300)
            sigma = cfg.sigma if cfg.sigma is not None else 0.99 / max(L, 1e-300)
        else:
            tau, sigma = cfg.tau, cfg.sigma
            L = _operator_norm_from_matrix(K)
            if tau * sigma * L * L >= 1.0 + 1e-9:
                raise StepSizeError(
                    f"sigma * tau * ||K||^2 = {tau * sigma * L * L:.3g} >= 1"
                )
        T = np.full(m, tau)
        Sigma = np.full(K.shape[0], sigma)

    s = _scaled_norm(K, T, Sigma)
    if s > 0.99:
        Sigma *= (0.99 / s) ** 2

    theta = cfg.theta
    tau_acc = float(np.min(T)) if cfg.accelerate else None

    y = np.zeros((K.shape[0], d))
    cbar = c.copy()
    energy0 = data_energy(c) + beta * _pq_value(K @ c, p, q)
    trace = [energy0]
    best_c = c.copy()
    best_e = energy0

    denom = 1.0 + T * sizes
    for _ in range(cfg.max_iters):
        y = _project_metric(y + Sigma[:, None] * (K @ cbar), Sigma, p, q, beta)
        c_prev = c
        c = (c - T[:, None] * (K.T @ y) + T[:, None] * gsum) / denom[:, None]
        if cfg.accelerate and precond is None:
            th = 1.0 / np.sqrt(1.0 + 2.0 * tau_acc)
            T = T * th
            Sigma = Sigma / th
            tau_acc *= th
            denom = 1.0 + T * sizes
            theta = th
        cbar = c + theta * (c - c_prev)

        e = data_energy(c) + beta * _pq_value(K @ c, p, q)
        trace.append(e)
        if not np.isfinite(e):
            raise StepSizeError("energy became non-finite")
        if e > 10.0 * abs(energy0) + 1.0:
            raise StepSizeError("energy exceeded ten times its initial value")
        if e < best_e:
            best_e = e
            best_c = c.copy()
        if abs(trace[-1] - trace[-2]) <= cfg.rel_tol * (1.0 + abs(trace[-1])):
            break

    return best_c, trace


def _operator_norm_from_matrix(K, seed=3):
    m = K.shape[1]
    if K.shape[0] == 0 or m == 0:
        return 0.0
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(m)
    x /= np.linalg.norm(x)
    est = 0.0
    for _ in range(50):
        y = K.T @ (K @ x)
        nrm = np.linalg.norm(y)
        if nrm == 0.0:
            return 0.0
        est = np.sqrt(nrm)
        x = y / nrm
    return float(est)


# -- public solver entry points ---------------------------------------------------


def primal_dual_full(graph, g, spec, cfg=None, precond=None):
    """Solve ``min 0.5||f-g||^2 + beta ||grad f||_{p;q}`` on the full graph.

    Returns the lowest-energy iterate and the per-iteration energy
    trace.  ``spec.beta`` weighs the power-one norm over directed edges.
    """
    if spec.kind != "pq":
        raise DomainError("primal_dual_full expects a pq regularizer")
    g = graph.check_vertex_field(g)
    sizes = np.ones(graph.n_vertices)
    data_const = 0.5 * float(np.sum(g * g))
    f, trace = _pd_engine(
        graph.edges,
        graph.sqrt_weights,
        sizes,
        g,
        float(spec.beta),
        float(spec.p),
        float(spec.q),
        cfg,
        precond,
        g.copy(),
        data_const,
    )
    return f, trace


def primal_dual_reduced(
    rg, part, g_sums, spec, cfg=None, precond=None, c0=None, data_const=0.0
):
    """Solve the reduced problem over per-subset constants.

    ``g_sums`` must be ``reduce_field(part, g)``.  With singleton
    subsets this reproduces :func:`primal_dual_full` iterate by iterate.
    ``data_const`` (0.5 ||g||^2) only shifts the reported energies.
    """
    if spec.kind != "pq":
        raise DomainError("primal_dual_reduced expects a pq regularizer")
    g_sums = np.asarray(g_sums, dtype=np.float64)
    if g_sums.ndim == 1:
        g_sums = g_sums[:, None]
    c, _ = _pd_engine(
        rg.graph.edges,
        rg.tv_coefficient(spec.p),
        part.sizes.astype(np.float64),
        g_sums,
        float(spec.beta),
        float(spec.p),
        float(spec.q),
        cfg,
        precond,
        c0,
        data_const,
    )
    return c


def primal_dual_reduced_with_trace(
    rg, part, g_sums, spec, cfg=None, precond=None, c0=None, data_const=0.0
):
    """Same as :func:`primal_dual_reduced` but also returns the trace."""
    g_sums = np.asarray(g_sums, dtype=np.float64)
    if g_sums.ndim == 1:
        g_sums = g_sums[:, None]
    return _pd_engine(
        rg.graph.edges,
        rg.tv_coefficient(spec.p),
        part.sizes.astype(np.float64),
        g_sums,
        float(spec.beta),
        float(spec.p),
        float(spec.q),
        cfg,
        precond,
        c0,
        data_const,
    )


def solve_l0_reduced(part, g):
    """Closed-form reduced solution for the weighted l0 energy: subset means.

    Computed as deviations from a per-subset reference value, so a field
    that is already constant on every subset is reproduced exactly (the
    final debiasing step is idempotent).
    """
    g = np.asarray(g, dtype=np.float64)
    if g.ndim == 1:
        g = g[:, None]
    firsts = np.full(part.n_subsets, part.n_vertices, dtype=np.int64)
    np.minimum.at(firsts, part.assignment, np.arange(part.n_vertices))
    ref = g[firsts]
    centered = reduce_field(part, g - ref[part.assignment])
    return ref + centered / part.sizes[:, None]
