"""Max-flow / min-cut on capacitated networks with distinguished s and t.

Internal nodes carry ids ``0 .. n_nodes - 1``; the module-level
constants :data:`SOURCE` and :data:`SINK` address the terminals in arc
lists.  Capacities stay 64-bit floats throughout (no quantization);
saturation is decided by exact subtraction, with parallel arcs summed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._bk import bk_solve
from .errors import DomainError, TooLargeError

__all__ = [
    "SOURCE",
    "SINK",
    "FlowNetwork",
    "CutResult",
    "max_flow",
    "brute_force_min_cut",
    "cut_value",
    "check_submodular",
]

SOURCE = -1
SINK = -2

BRUTE_FORCE_MAX_NODES = 20


class FlowNetwork:
    """Capacitated digraph over ``n_nodes`` internal nodes plus s and t.

    Arcs are (tail, head, capacity) with tails/heads either internal ids
    or :data:`SOURCE`/:data:`SINK`.  Parallel arcs are allowed and are
    summed when solving.
    """

    def __init__(self, n_nodes, tails, heads, caps):
        self.n_nodes = int(n_nodes)
        self.tails = np.asarray(tails, dtype=np.int64).ravel()
        self.heads = np.asarray(heads, dtype=np.int64).ravel()
        self.caps = np.asarray(caps, dtype=np.float64).ravel()
        if not (self.tails.shape == self.heads.shape == self.caps.shape):
            raise DomainError("arc arrays must have identical length")
        if self.caps.size:
            if not np.all(np.isfinite(self.caps)):
                raise DomainError("capacities must be finite")
            if self.caps.min() < 0:
                raise DomainError("capacities must be nonnegative")
            for arr in (self.tails, self.heads):
                if arr.max(initial=SINK) >= self.n_nodes or arr.min(initial=0) < SINK:
                    raise DomainError("arc endpoint out of range")

    @classmethod
    def from_arcs(cls, n_nodes, arcs):
        """Build from an iterable of (tail, head, capacity) triples."""
        arcs = list(arcs)
        if not arcs:
            return cls(n_nodes, [], [], [])
        tails, heads, caps = zip(*arcs)
        return cls(n_nodes, tails, heads, caps)

    @property
    def n_arcs(self):
        return self.caps.size

    def __repr__(self):
        return f"FlowNetwork(n_nodes={self.n_nodes}, n_arcs={self.n_arcs})"


@dataclass(frozen=True)
class CutResult:
    """A minimum s-t cut: its value and the source-side node mask."""

    value: float
    source_mask: np.ndarray  # bool per internal node, True = on s side

    @property
    def source_side(self):
        """The source side as a frozenset of node ids, s included."""
        return frozenset([SOURCE, *np.flatnonzero(self.source_mask).tolist()])

    def __contains__(self, node):
        if node == SOURCE:
            return True
        if node == SINK:
            return False
        return bool(self.source_mask[node])


def _compile(net):
    """Net terminal arcs into per-node capacities, pair up neighbor arcs."""
    n = net.n_nodes
    tr_cap = np.zeros(n, dtype=np.float64)
    base = 0.0

    t, h, c = net.tails, net.heads, net.caps
    st = (t == SOURCE) & (h == SINK)
    base += float(c[st].sum())
    src = (t == SOURCE) & (h >= 0)
    np.add.at(tr_cap, h[src], c[src])
    snk = (h == SINK) & (t >= 0)
    sink_cap = np.zeros(n, dtype=np.float64)
    np.add.at(sink_cap, t[snk], c[snk])
    base += float(np.minimum(tr_cap, sink_cap).sum())
    tr_cap -= sink_cap
    # arcs into the source or out of the sink can never carry flow

    inner = (t >= 0) & (h >= 0)
    ti, hi, ci = t[inner], h[inner], c[inner]
    keep = ti != hi  # self-loops carry no flow
    ti, hi, ci = ti[keep], hi[keep], ci[keep]
    if ti.size:
        lo = np.minimum(ti, hi)
        hi_ = np.maximum(ti, hi)
        fwd = ti < hi
        key = lo * n + hi_
        uniq, inv = np.unique(key, return_inverse=True)
        npairs = uniq.size
        cap = np.zeros(2 * npairs, dtype=np.float64)
        np.add.at(cap, 2 * inv + np.where(fwd, 0, 1), ci)
        arc_to = np.empty(2 * npairs, dtype=np.int64)
        arc_to[0::2] = uniq % n
        arc_to[1::2] = uniq // n
        tails2 = np.empty(2 * npairs, dtype=np.int64)
        tails2[0::2] = uniq // n
        tails2[1::2] = uniq % n
    else:
        cap = np.zeros(0, dtype=np.float64)
        arc_to = np.zeros(0, dtype=np.int64)
        tails2 = np.zeros(0, dtype=np.int64)

    order = np.argsort(tails2, kind="stable")
    first = np.zeros(n + 1, dtype=np.int64)
    np.add.at(first, tails2 + 1, 1)
    np.cumsum(first, out=first)
    return base, tr_cap, first, order, arc_to, cap


def max_flow(net):
    """Maximum flow and one minimum cut via the tree-based augmenting solver."""
    if net.n_nodes == 0:
        base = float(net.caps[(net.tails == SOURCE) & (net.heads == SINK)].sum())
        return CutResult(value=base, source_mask=np.zeros(0, dtype=bool))
    base, tr_cap, first, adj, arc_to, cap = _compile(net)
    flow, mask = bk_solve(net.n_nodes, first, adj, arc_to, cap, tr_cap)
    return CutResult(value=base + float(flow), source_mask=np.asarray(mask))


def cut_value(net, source_mask):
    """Capacity of the cut induced by a source-side mask over internal nodes."""
    source_mask = np.asarray(source_mask, dtype=bool)
    t, h, c = net.tails, net.heads, net.caps
    tail_s = np.where(t == SOURCE, True, np.where(t == SINK, False, False))
    tail_s = tail_s | ((t >= 0) & source_mask[np.clip(t, 0, None)])
    head_t = np.where(h == SINK, True, False)
    head_t = head_t | ((h >= 0) & ~source_mask[np.clip(h, 0, None)])
    return float(c[tail_s & head_t].sum())


def brute_force_min_cut(net):
    """Exhaustive minimum cut over all side assignments (test oracle).

    Ties are broken toward the lexicographically smallest source side.
    Refuses instances with more than 20 internal nodes.
    """
    n = net.n_nodes
    if n > BRUTE_FORCE_MAX_NODES:
        raise TooLargeError(f"brute force limited to {BRUTE_FORCE_MAX_NODES} nodes")
    n_masks = 1 << n
    bits = np.zeros((n_masks, max(n, 1)), dtype=bool)
    for i in range(n):
        bits[:, i] = (np.arange(n_masks) >> i) & 1
    values = np.zeros(n_masks)
    for t, h, c in zip(net.tails, net.heads, net.caps):
        if t == SOURCE:
            tail_in_s = np.ones(n_masks, dtype=bool)
        elif t == SINK:
            tail_in_s = np.zeros(n_masks, dtype=bool)
        else:
            tail_in_s = bits[:, t]
        if h == SINK:
            head_in_t = np.ones(n_masks, dtype=bool)
        elif h == SOURCE:
            head_in_t = np.zeros(n_masks, dtype=bool)
        else:
            head_in_t = ~bits[:, h]
        values = values + c * (tail_in_s & head_in_t)
    vmin = values.min()
    candidates = np.flatnonzero(values == vmin)
    best = min(candidates, key=lambda m: tuple(np.flatnonzero(bits[m, :n])))
    return CutResult(value=float(vmin), source_mask=bits[best, :n].copy())


def check_submodular(net):
    """Assert the pairwise-term regularity condition on a flow network.

    For every internal arc the pairwise energy has zero diagonal and the
    arc capacity off-diagonal, so regularity reduces to nonnegative
    capacities on internal arcs.
    """
    inner = (net.tails >= 0) & (net.heads >= 0)
    if np.any(net.caps[inner] < 0):
        raise DomainError("pairwise term violates regularity: negative capacity")
    return True
