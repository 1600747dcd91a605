"""Shared test oracles: brute-force enumerations kept independent of the
library code paths they check."""

import numpy as np

from pcsparse import Graph, Partition, energy, expand, solve_l0_reduced


def random_connected_graph(n, rng, w_lo=0.5, w_hi=2.0):
    """Random spanning tree plus a few extra edges, random weights."""
    pairs = set()
    perm = rng.permutation(n)
    for i in range(1, n):
        a, b = perm[i], perm[rng.integers(0, i)]
        pairs.add((min(a, b), max(a, b)))
    for _ in range(rng.integers(0, n)):
        a, b = rng.integers(0, n, 2)
        if a != b:
            pairs.add((min(a, b), max(a, b)))
    pu = [p[0] for p in pairs]
    pv = [p[1] for p in pairs]
    return Graph(n, pu, pv, rng.uniform(w_lo, w_hi, len(pairs)))


def set_partitions(n):
    """All set partitions of {0..n-1} as restricted growth strings."""
    rgs = [0] * n

    def rec(i, maxv):
        if i == n:
            yield rgs.copy()
            return
        for v in range(maxv + 1):
            rgs[i] = v
            yield from rec(i + 1, max(maxv, v + 1))

    yield from rec(0, 0)


def connected_partitions(graph):
    """Labels of every partition of V whose blocks are connected."""
    n = graph.n_vertices
    adj = [[] for _ in range(n)]
    for (u, v) in graph.edges:
        adj[u].append(v)
    out = []
    for rgs in set_partitions(n):
        lab = np.array(rgs)
        ok = True
        for s in range(lab.max() + 1):
            members = np.flatnonzero(lab == s)
            seen = {members[0]}
            stack = [members[0]]
            mset = set(members.tolist())
            while stack:
                x = stack.pop()
                for y in adj[x]:
                    if y in mset and y not in seen:
                        seen.add(y)
                        stack.append(y)
            if len(seen) != len(members):
                ok = False
                break
        if ok:
            out.append(lab)
    return out


def exhaustive_l0_minimum(graph, g, spec):
    """Global minimum of the weighted l0 energy over connected partitions."""
    best = np.inf
    for lab in connected_partitions(graph):
        part = Partition(lab)
        f = expand(part, solve_l0_reduced(part, g))
        best = min(best, energy(graph, f, g, spec))
    return best


def planted_cluster_instance(n, rng, noise=0.05):
    """Graph plus data split into two well-separated value clusters."""
    graph = random_connected_graph(n, rng)
    base = rng.normal(0, 1, (n, 2))
    labels = (base @ rng.normal(0, 1, 2) > 0).astype(int)
    centers = np.array([[0.0, 0.0], [3.0, 2.0]])
    g = centers[labels] + rng.normal(0, noise, (n, 2))
    return graph, g


def reference_quadtree(points, iters):
    """Recursive midpoint (cell-mean) subdivision, no graph involved."""
    cells = [np.arange(len(points))]
    for _ in range(iters):
        nxt = []
        for cell in cells:
            pts = points[cell]
            mean = pts.mean(axis=0)
            keys = (pts > mean) @ (2 ** np.arange(points.shape[1]))
            for k in np.unique(keys):
                nxt.append(cell[keys == k])
        cells = nxt
    return {frozenset(c.tolist()) for c in cells}
