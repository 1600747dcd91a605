"""Coarse-to-fine sparsification by alternating graph cuts and reduced solves.

One outer iteration: build a flow network whose minimum cut is the
steepest indicator-direction descent of the current energy, split every
subset along the cut into connected components, rebuild the reduced
graph, and re-solve for the per-subset constants.  The loop stops when
the best cut no longer decreases the energy, when no subset splits, or
at the iteration cap.

Three capacity regimes are supported: the anisotropic one (one flow
node per vertex and coordinate), the isotropic one (one node per
vertex, gradients projected on a per-subset direction), and the smooth
one where the cut degenerates to thresholding.  With both
regularization weights zero the anisotropic scheme reproduces a
quadtree/octree subdivision of the cloud.
"""

from __future__ import annotations

import time as _time
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NumericalError
from .graphs import (
    RegularizerSpec,
    energy,
    equality_tolerance,
    pq_norm,
    regularizer_gradient,
)
from .maxflow import SINK, SOURCE, FlowNetwork, check_submodular, max_flow
from .partition import (
    Partition,
    components_partition,
    expand,
    reduce_field,
    reduce_graph,
    split_by_cut,
)
from .solvers import (
    PDConfig,
    build_preconditioner,
    primal_dual_reduced_with_trace,
    solve_l0_reduced,
)

__all__ = [
    "CutPursuitConfig",
    "RunTrace",
    "DirectionSet",
    "choose_directions",
    "build_flow_aniso",
    "build_flow_iso",
    "threshold_cut",
    "run",
    "run_l0",
    "run_octree",
    "debias",
]


@dataclass
class CutPursuitConfig:
    """Options for the alternating cut/solve loop."""

    spec: RegularizerSpec = field(default_factory=RegularizerSpec)
    cut_mode: str = "auto"
    direction_mode: str = "kmeans2"
    stop_tol: float | None = None
    max_outer_iters: int = 50
    octree_iters: int | None = None
    debias: bool = False
    pd: PDConfig = field(default_factory=PDConfig)
    precondition: bool = True
    pc_exponent: float = 1.0
    seed: int = 0
    #: constants closer than this (relative to the data bounding box) count
    #: as equal inside the cut step; absorbs reduced-solver convergence dust,
    #: which would otherwise masquerade as differentiable jumps
    merge_tol: float = 1e-7

    def resolved_cut_mode(self):
        mode = self.cut_mode
        if mode == "auto":
            if self.spec.kind == "l0":
                return "iso"
            if self.spec.p == 1 and self.spec.q == 1:
                return "aniso"
            if self.spec.p > 1 and self.spec.q > 1:
                return "threshold"
            return "iso"
        return mode

    def validate(self):
        mode = self.resolved_cut_mode()
        if mode not in ("aniso", "iso", "threshold"):
            raise DomainError(f"unknown cut mode {mode!r}")
        spec = self.spec
        if spec.kind == "pq":
            if mode == "aniso" and not (spec.p == 1 and spec.q == 1):
                raise DomainError("anisotropic cuts require p = q = 1")
            if mode == "threshold" and not (spec.p > 1 and spec.q > 1):
                raise DomainError("threshold cuts require p, q > 1")
            if mode == "iso" and spec.p != 1:
                raise DomainError("isotropic cuts require p = 1")
        if self.stop_tol is not None and self.stop_tol < 0:
            raise DomainError("stop_tol must be >= 0")
        return mode


@dataclass
class RunTrace:
    """Per-outer-iteration progress: energy, subset count, cut value, timings.

    Energies are the solver-form objective (0.5 data term plus the
    power-one regularizer for the pq path, the weighted l0 energy for
    the l0 path).  Iteration 0 is the initial coarse solution.
    """

    energies: list = field(default_factory=list)
    n_subsets: list = field(default_factory=list)
    cut_values: list = field(default_factory=list)
    phase_ms: list = field(default_factory=list)

    def record(self, energy_val, m, cut_val, phases=None):
        if not np.isfinite(energy_val):
            raise NumericalError("non-finite energy in trace", trace=self)
        self.energies.append(float(energy_val))
        self.n_subsets.append(int(m))
        self.cut_values.append(float(cut_val))
        self.phase_ms.append(phases or {})

    @property
    def n_iterations(self):
        return max(len(self.energies) - 1, 0)


@dataclass
class DirectionSet:
    """Unit direction per subset; degenerate subsets are flagged instead.

    ``scale`` records the natural step length behind each direction (the
    2-means center distance, or twice the spread along the axis).  The
    weighted-l0 cut multiplies projected gradients by it, which keeps
    the scheme equivariant under rescaling the data and the cut weight
    together.
    """

    part: Partition
    gamma: np.ndarray  # (n_subsets, d), zero rows where degenerate
    degenerate: np.ndarray  # (n_subsets,) bool
    scale: np.ndarray = None  # (n_subsets,), zero where degenerate

    def __post_init__(self):
        if self.scale is None:
            self.scale = np.where(self.degenerate, 0.0, 1.0)

    def per_vertex(self):
        return self.gamma[self.part.assignment]


def _two_means(pts):
    """Deterministic 2-means: seeds are the point farthest from the mean
    and the point farthest from that seed; ties go to the lower index."""
    mean = pts.mean(axis=0)
    d0 = np.sum((pts - mean) ** 2, axis=1)
    s1 = int(np.argmax(d0))
    d1 = np.sum((pts - pts[s1]) ** 2, axis=1)
    s2 = int(np.argmax(d1))
    c1, c2 = pts[s1].copy(), pts[s2].copy()
    for _ in range(50):
        to_c2 = np.sum((pts - c2) ** 2, axis=1) < np.sum((pts - c1) ** 2, axis=1)
        if not to_c2.any() or to_c2.all():
            break
        n1, n2 = pts[~to_c2].mean(axis=0), pts[to_c2].mean(axis=0)
        if np.array_equal(n1, c1) and np.array_equal(n2, c2):
            break
        c1, c2 = n1, n2
    return c1, c2


def choose_directions(points, part, mode="kmeans2", seed=0):
    """Per-subset unit direction from 2-means centers, PCA, or at random.

    Subsets whose points coincide (or whose 2-means centers collapse)
    are flagged degenerate and get a zero direction.
    """
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    d = points.shape[1]
    m = part.n_subsets
    tol = equality_tolerance(points)
    if mode == "kmeans2":
        from ._kmeans import two_means_directions

        order = np.argsort(part.assignment, kind="stable")
        indptr = np.zeros(m + 1, dtype=np.int64)
        np.cumsum(part.sizes, out=indptr[1:])
        gamma, degenerate, scale = two_means_directions(points, indptr, order, tol)
        return DirectionSet(part=part, gamma=gamma, degenerate=degenerate, scale=scale)

    gamma = np.zeros((m, d))
    degenerate = np.zeros(m, dtype=bool)
    scale = np.zeros(m)
    rng = np.random.default_rng(seed)
    for i, sub in enumerate(part.subsets):
        pts = points[sub]
        if pts.shape[0] < 2 or np.all(np.ptp(pts, axis=0) <= tol):
            degenerate[i] = True
            continue
        if mode == "pca":
            centered = pts - pts.mean(axis=0)
            cov = centered.T @ centered / pts.shape[0]
            vals, vecs = np.linalg.eigh(cov)
            if vals[-1] <= tol * tol:
                degenerate[i] = True
            else:
                gamma[i] = vecs[:, -1]
                scale[i] = 2.0 * np.sqrt(vals[-1])
        elif mode == "random":
            vec = rng.standard_normal(d)
            gamma[i] = vec / np.linalg.norm(vec)
            scale[i] = 2.0 * float(np.std(pts @ gamma[i]))
            if scale[i] <= tol:
                gamma[i] = 0.0
                scale[i] = 0.0
                degenerate[i] = True
        else:
            raise DomainError(f"unknown direction mode {mode!r}")
    return DirectionSet(part=part, gamma=gamma, degenerate=degenerate, scale=scale)


# -- flow network construction -----------------------------------------------------


def _cut_tolerance(f, g, merge_tol):
    """Equality tolerance for the cut step, at the solver's resolution."""
    scale = float(np.linalg.norm(g.max(axis=0) - g.min(axis=0)))
    return max(equality_tolerance(f), merge_tol * scale)


def _smooth_gradient(graph, f, g, alpha, spec, data_only, tol=None):
    grad = f - g
    if not data_only and alpha != 0.0:
        grad = grad + alpha * regularizer_gradient(graph, f, spec, tol=tol)
    return grad


def build_flow_aniso(graph, f, g, alpha, data_only=False, tol=None):
    """Anisotropic cut network: one flow node per vertex and coordinate.

    Node (u, j) maps to id ``j * n_vertices + u``.  Gradient components
    route to source (>= 0) or sink; neighbor arcs of capacity
    ``alpha * sqrt(w)`` join same-coordinate copies of equal value.
    With ``data_only`` the differentiable regularizer gradient is left
    out (the weighted-l0 and octree cases).
    """
    f = graph.check_vertex_field(f)
    g = graph.check_vertex_field(g)
    n, d = f.shape
    spec = RegularizerSpec(kind="pq", p=1, q=1, alpha=alpha, beta=alpha)
    grad = _smooth_gradient(graph, f, g, alpha, spec, data_only, tol)
    if tol is None:
        tol = equality_tolerance(f)

    pairs = graph.edges[0::2]
    pw = alpha * graph.sqrt_weights[0::2]
    tails, heads, caps = [], [], []
    for j in range(d):
        base = j * n
        node = base + np.arange(n)
        pos = grad[:, j] >= 0
        tails.append(np.where(pos, SOURCE, node))
        heads.append(np.where(pos, node, SINK))
        caps.append(np.abs(grad[:, j]))
        eq = np.abs(f[pairs[:, 1], j] - f[pairs[:, 0], j]) <= tol
        if eq.any() and alpha != 0.0:
            pu = base + pairs[eq, 0]
            pv = base + pairs[eq, 1]
            tails.extend([pu, pv])
            heads.extend([pv, pu])
            caps.extend([pw[eq], pw[eq]])
    net = FlowNetwork(
        n * d, np.concatenate(tails), np.concatenate(heads), np.concatenate(caps)
    )
    check_submodular(net)
    return net


def build_flow_iso(graph, f, g, alpha, dirs, data_only=False, tol=None):
    """Isotropic cut network: one flow node per vertex.

    Per-vertex gradients are projected on the subset direction; vertices
    of degenerate subsets get zero-capacity terminal arcs.  Neighbor
    arcs of capacity ``alpha * sqrt(w)`` join equal-valued endpoints.
    """
    f = graph.check_vertex_field(f)
    g = graph.check_vertex_field(g)
    n = f.shape[0]
    spec = RegularizerSpec(kind="pq", p=1, q=2, alpha=alpha, beta=alpha)
    grad = _smooth_gradient(graph, f, g, alpha, spec, data_only, tol)
    s = np.sum(grad * dirs.per_vertex(), axis=1)
    if tol is None:
        tol = equality_tolerance(f)

    node = np.arange(n)
    pos = s >= 0
    tails = [np.where(pos, SOURCE, node)]
    heads = [np.where(pos, node, SINK)]
    caps = [np.abs(s)]
    pairs = graph.edges[0::2]
    eq = np.all(np.abs(f[pairs[:, 1]] - f[pairs[:, 0]]) <= tol, axis=1)
    if eq.any() and alpha != 0.0:
        pw = alpha * graph.sqrt_weights[0::2][eq]
        tails.extend([pairs[eq, 0], pairs[eq, 1]])
        heads.extend([pairs[eq, 1], pairs[eq, 0]])
        caps.extend([pw, pw])
    net = FlowNetwork(
        n, np.concatenate(tails), np.concatenate(heads), np.concatenate(caps)
    )
    check_submodular(net)
    return net


def threshold_cut(graph, f, g, spec, dirs):
    """Smooth-case cut: no network, just the sign of the projected gradient.

    Returns the boolean mask of vertices whose gradient component along
    their subset direction is strictly negative.
    """
    f = graph.check_vertex_field(f)
    g = graph.check_vertex_field(g)
    grad = _smooth_gradient(graph, f, g, spec.alpha, spec, data_only=False)
    s = np.sum(grad * dirs.per_vertex(), axis=1)
    return s < 0


# -- directional derivative bookkeeping ---------------------------------------------


def _severed_weight(graph, f, tol, new_assign, coordinate=None):
    """Sum of sqrt(w) over equal-valued unordered pairs split by the cut."""
    pairs = graph.edges[0::2]
    sw = graph.sqrt_weights[0::2]
    du = f[pairs[:, 0]]
    dv = f[pairs[:, 1]]
    if coordinate is None:
        eq = np.all(np.abs(dv - du) <= tol, axis=1)
    else:
        eq = np.abs(dv[:, coordinate] - du[:, coordinate]) <= tol
    sev = eq & (new_assign[pairs[:, 0]] != new_assign[pairs[:, 1]])
    return float(sw[sev].sum())


# -- the alternating loops -----------------------------------------------------------


def _solver_energy(graph, f, g, spec):
    return 0.5 * float(np.sum((f - g) ** 2)) + spec.beta * pq_norm(
        graph, f, spec.p, spec.q
    )


def _warm_start(old_part, new_part, c):
    first = np.full(new_part.n_subsets, old_part.n_vertices, dtype=np.int64)
    np.minimum.at(first, new_part.assignment, np.arange(new_part.n_vertices))
    return c[old_part.assignment[first]]


def _reduced_solve(graph, g, part, spec, cfg, c_warm, data_const):
    rg = reduce_graph(graph, part)
    pre = None
    if cfg.precondition and rg.graph.n_edges:
        pre = build_preconditioner(rg, cfg.pc_exponent)
    gsums = reduce_field(part, g)
    c, _ = primal_dual_reduced_with_trace(
        rg, part, gsums, spec, cfg.pd, pre, c0=c_warm, data_const=data_const
    )
    return c


def _cut_step(graph, f, g, part, cfg, mode, data_only):
    """Solve the partition problem; returns (B mask, J', maxflow value).

    The flow builders count each edge pair once in the regularizer; the
    energies minimized here (and by the reduced solves) sum both
    orientations, so the cut weight is doubled to linearize the same
    functional.
    """
    spec = cfg.spec
    alpha = 2.0 * spec.alpha
    tol = _cut_tolerance(f, g, cfg.merge_tol)
    d = f.shape[1]
    n = f.shape[0]

    if mode == "aniso":
        if alpha == 0.0:
            grad = f - g
            B = grad < 0  # ties stay on the source side
            jp = float(np.sum(grad[B]))
            return B, jp, 0.0
        net = build_flow_aniso(graph, f, g, alpha, data_only=data_only, tol=tol)
        res = max_flow(net)
        B = (~res.source_mask).reshape(d, n).T
        rspec = RegularizerSpec(kind="pq", p=1, q=1, alpha=alpha, beta=alpha)
        grad = _smooth_gradient(graph, f, g, alpha, rspec, data_only, tol)
        jp = float(np.sum(grad[B]))
        for j in range(d):
            jp += alpha * _severed_weight(
                graph, f, tol, B[:, j].astype(np.int64), coordinate=j
            )
        return B, jp, res.value

    dirs = choose_directions(g, part, cfg.direction_mode, cfg.seed)
    if mode == "threshold":
        # energy-consistent linearization of beta * ||grad f||_{p;q}: the
        # chain rule brings in N^(1-p) for the power-one norm
        nval = pq_norm(graph, f, spec.p, spec.q)
        scale = 2.0 * spec.alpha * nval ** (1.0 - spec.p) if nval > 0 else 0.0
        grad = (f - g) + scale * regularizer_gradient(graph, f, spec, tol=tol)
        s = np.sum(grad * dirs.per_vertex(), axis=1)
        B = s < 0
        return B, float(s[B].sum()), 0.0

    if data_only:
        # weighted-l0 cut: step lengths matter because the penalty does not
        # shrink with the step; use the unnormalized center differences
        dirs = DirectionSet(
            part=part,
            gamma=dirs.gamma * dirs.scale[:, None],
            degenerate=dirs.degenerate,
        )
    net = build_flow_iso(graph, f, g, alpha, dirs, data_only=data_only, tol=tol)
    res = max_flow(net)
    B = ~res.source_mask
    B[dirs.degenerate[part.assignment]] = False  # constant subsets never split
    rspec = RegularizerSpec(kind="pq", p=1, q=2, alpha=alpha, beta=alpha)
    grad = _smooth_gradient(graph, f, g, alpha, rspec, data_only, tol)
    s = np.sum(grad * dirs.per_vertex(), axis=1)
    jp = float(s[B].sum()) + alpha * _severed_weight(
        graph, f, tol, B.astype(np.int64)
    )
    return B, jp, res.value


def _refine(graph, part, B, mode):
    if mode == "aniso":
        new = part
        for j in range(B.shape[1]):
            new = split_by_cut(graph, new, B[:, j])
        return new
    return split_by_cut(graph, part, B)


def run(graph, g, cfg):
    """Cut pursuit for the p-q regularized denoising energy.

    Returns ``(partition, piecewise-constant field, trace)``.  The trace
    energy is ``0.5||f-g||^2 + beta ||grad f||_{p;q}``, which the reduced
    solves minimize over each refined partition, so it never increases.
    """
    if cfg.spec.kind != "pq":
        raise DomainError("run expects a pq regularizer; use run_l0 for l0")
    mode = cfg.validate()
    g = graph.check_vertex_field(g)
    spec = cfg.spec
    data_const = 0.5 * float(np.sum(g * g))

    # no edges cross the initial component partition, so means are optimal
    part = components_partition(graph)
    c = solve_l0_reduced(part, g)
    f = expand(part, c)
    e0 = _solver_energy(graph, f, g, spec)
    stop_tol = cfg.stop_tol if cfg.stop_tol is not None else 1e-9 * (1.0 + e0)

    trace = RunTrace()
    trace.record(e0, part.n_subsets, np.nan)

    for _ in range(cfg.max_outer_iters):
        f = expand(part, c)
        t0 = _time.perf_counter()
        B, jprime, cutval = _cut_step(graph, f, g, part, cfg, mode, data_only=False)
        t1 = _time.perf_counter()
        if jprime >= -stop_tol:
            break
        new_part = _refine(graph, part, B, mode)
        t2 = _time.perf_counter()
        if new_part.n_subsets == part.n_subsets:
            break
        c = _warm_start(part, new_part, c)
        part = new_part
        c = _reduced_solve(graph, g, part, spec, cfg, c, data_const)
        t3 = _time.perf_counter()
        f = expand(part, c)
        trace.record(
            _solver_energy(graph, f, g, spec),
            part.n_subsets,
            cutval,
            {
                "cut_ms": 1e3 * (t1 - t0),
                "split_ms": 1e3 * (t2 - t1),
                "solve_ms": 1e3 * (t3 - t2),
            },
        )

    if cfg.debias:
        c = solve_l0_reduced(part, g)
    return part, expand(part, c), trace


def _l0_split_gain(graph, g, old_part, new_part, alpha, f, tol):
    """Exact energy change per old subset if its refinement is accepted.

    Data change from subset means, penalty change from severed
    equal-valued pairs (counted once per orientation).
    """
    g2 = np.sum(g * g, axis=1)

    def fit(part):
        sums = reduce_field(part, g)
        sq = np.bincount(part.assignment, weights=g2, minlength=part.n_subsets)
        per = 0.5 * (sq - np.sum(sums * sums, axis=1) / part.sizes)
        return per

    old_fit = fit(old_part)
    new_fit = fit(new_part)
    first = np.full(new_part.n_subsets, old_part.n_vertices, dtype=np.int64)
    np.minimum.at(first, new_part.assignment, np.arange(new_part.n_vertices))
    parent = old_part.assignment[first]
    gain = -old_fit
    np.add.at(gain, parent, new_fit)

    pairs = graph.edges[0::2]
    sw = graph.sqrt_weights[0::2]
    pu, pv = pairs[:, 0], pairs[:, 1]
    eq = np.all(np.abs(f[pv] - f[pu]) <= tol, axis=1)
    sev = (
        eq
        & (old_part.assignment[pu] == old_part.assignment[pv])
        & (new_part.assignment[pu] != new_part.assignment[pv])
    )
    np.add.at(gain, old_part.assignment[pu[sev]], 2.0 * alpha * sw[sev])
    return gain


def run_l0(graph, g, cfg):
    """Cut pursuit for the weighted l0 energy (reduced solves are means).

    A subset's refinement is only kept when its exact energy change is
    negative, so the trace is nonincreasing.
    """
    if cfg.spec.kind != "l0":
        raise DomainError("run_l0 expects an l0 regularizer")
    mode = cfg.resolved_cut_mode()
    if mode == "threshold":
        raise DomainError("threshold cuts do not apply to the l0 energy")
    g = graph.check_vertex_field(g)
    spec = cfg.spec

    part = components_partition(graph)
    c = solve_l0_reduced(part, g)
    f = expand(part, c)
    e0 = energy(graph, f, g, spec)
    stop_tol = cfg.stop_tol if cfg.stop_tol is not None else 1e-9 * (1.0 + e0)

    trace = RunTrace()
    trace.record(e0, part.n_subsets, np.nan)

    for _ in range(cfg.max_outer_iters):
        f = expand(part, c)
        t0 = _time.perf_counter()
        B, jprime, cutval = _cut_step(graph, f, g, part, cfg, mode, data_only=True)
        t1 = _time.perf_counter()
        if jprime >= -stop_tol:
            break
        candidate = _refine(graph, part, B, mode)
        if candidate.n_subsets == part.n_subsets:
            break
        tol = _cut_tolerance(f, g, cfg.merge_tol)
        gain = _l0_split_gain(graph, g, part, candidate, spec.alpha, f, tol)
        accept = gain < 0
        if not accept.any():
            break
        if accept.all():
            new_part = candidate
        else:
            # keep rejected subsets whole
            accept_v = accept[part.assignment]
            key = part.assignment * np.int64(candidate.n_subsets + 1) + np.where(
                accept_v, candidate.assignment, 0
            )
            _, new_assign = np.unique(key, return_inverse=True)
            new_part = Partition(new_assign.astype(np.int64))
        if new_part.n_subsets == part.n_subsets:
            break
        t2 = _time.perf_counter()
        part = new_part
        c = solve_l0_reduced(part, g)
        t3 = _time.perf_counter()
        f = expand(part, c)
        trace.record(
            energy(graph, f, g, spec),
            part.n_subsets,
            cutval,
            {
                "cut_ms": 1e3 * (t1 - t0),
                "split_ms": 1e3 * (t2 - t1),
                "solve_ms": 1e3 * (t3 - t2),
            },
        )

    return part, expand(part, c), trace


def run_octree(graph, g, iters):
    """Quadtree/octree special case: both weights zero, fixed iteration count.

    Each subset splits by the coordinatewise sign of (data - subset
    mean); constants are subset means.  Runs exactly ``iters`` outer
    iterations (the user picks the level of detail).
    """
    if iters < 1:
        raise DomainError("iters must be >= 1")
    g = graph.check_vertex_field(g)
    part = components_partition(graph)
    c = solve_l0_reduced(part, g)
    trace = RunTrace()
    trace.record(0.5 * float(np.sum((expand(part, c) - g) ** 2)), part.n_subsets, np.nan)

    for _ in range(iters):
        f = expand(part, c)
        B = (f - g) < 0  # strictly above the mean, per coordinate
        part = _refine(graph, part, B, "aniso")
        c = solve_l0_reduced(part, g)
        f = expand(part, c)
        trace.record(0.5 * float(np.sum((f - g) ** 2)), part.n_subsets, 0.0)

    return part, expand(part, c), trace


def debias(part, g):
    """Replace subset constants with subset means (a zero-weight final solve)."""
    g = np.asarray(g, dtype=np.float64)
    if g.ndim == 1:
        g = g[:, None]
    return expand(part, solve_l0_reduced(part, g))
