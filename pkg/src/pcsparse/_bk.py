"""Boykov-Kolmogorov max-flow kernel.

Tree-reusing augmenting path solver on residual arrays.  Neighbor arcs
are stored in interleaved pairs so the reverse of arc ``a`` is ``a ^ 1``;
terminal capacities are netted into a single signed value per node
(positive = residual from the source, negative = residual to the sink).
"""

import numpy as np
from numba import njit

FREE, TREE_S, TREE_T = 0, 1, 2
NONE, TERMINAL, ORPHAN = -1, -2, -3


@njit(cache=True)
def bk_solve(n, first, adj, arc_to, cap, tr_cap):
    """Run max flow in place.  Returns (augmented flow, source-side mask).

    first/adj: CSR adjacency over directed arc ids (sorted by tail).
    arc_to: head node per arc.  cap: residual per arc (mutated).
    tr_cap: net terminal residual per node (mutated).
    """
    tree = np.zeros(n, np.int8)
    parent = np.full(n, NONE, np.int64)
    dist = np.zeros(n, np.int64)
    ts = np.zeros(n, np.int64)

    in_queue = np.zeros(n, np.bool_)
    queue = np.empty(n + 1, np.int64)
    qhead = 0
    qtail = 0

    orphans = np.empty(n, np.int64)
    norph = 0

    for u in range(n):
        if tr_cap[u] > 0.0:
            tree[u] = TREE_S
        elif tr_cap[u] < 0.0:
            tree[u] = TREE_T
        else:
            continue
        parent[u] = TERMINAL
        dist[u] = 1
        queue[qtail] = u
        qtail = (qtail + 1) % (n + 1)
        in_queue[u] = True

    time = 0
    flow = 0.0

    while qhead != qtail:
        u = queue[qhead]
        if tree[u] == FREE:
            qhead = (qhead + 1) % (n + 1)
            in_queue[u] = False
            continue

        # -- growth: scan u's arcs for free neighbors or the other tree
        tu = tree[u]
        m = NONE
        for k in range(first[u], first[u + 1]):
            a = adj[k]
            res = cap[a] if tu == TREE_S else cap[a ^ 1]
            if res <= 0.0:
                continue
            v = arc_to[a]
            tv = tree[v]
            if tv == FREE:
                tree[v] = tu
                parent[v] = a ^ 1
                dist[v] = dist[u] + 1
                ts[v] = ts[u]
                if not in_queue[v]:
                    queue[qtail] = v
                    qtail = (qtail + 1) % (n + 1)
                    in_queue[v] = True
            elif tv != tu:
                m = a if tu == TREE_S else a ^ 1
                break
            elif ts[v] <= ts[u] and dist[v] > dist[u] + 1:
                # heuristic re-parenting keeps paths short
                parent[v] = a ^ 1
                ts[v] = ts[u]
                dist[v] = dist[u] + 1

        if m == NONE:
            qhead = (qhead + 1) % (n + 1)
            in_queue[u] = False
            continue

        time += 1

        # -- augment along the path through connecting arc m (S -> T)
        x = arc_to[m ^ 1]
        y = arc_to[m]
        bottleneck = cap[m]
        w = x
        while parent[w] != TERMINAL:
            a = parent[w]
            if cap[a ^ 1] < bottleneck:
                bottleneck = cap[a ^ 1]
            w = arc_to[a]
        if tr_cap[w] < bottleneck:
            bottleneck = tr_cap[w]
        w = y
        while parent[w] != TERMINAL:
            a = parent[w]
            if cap[a] < bottleneck:
                bottleneck = cap[a]
            w = arc_to[a]
        if -tr_cap[w] < bottleneck:
            bottleneck = -tr_cap[w]

        cap[m] -= bottleneck
        cap[m ^ 1] += bottleneck
        w = x
        while parent[w] != TERMINAL:
            a = parent[w]
            cap[a] += bottleneck
            cap[a ^ 1] -= bottleneck
            nxt = arc_to[a]
            if cap[a ^ 1] <= 0.0:
                parent[w] = ORPHAN
                orphans[norph] = w
                norph += 1
            w = nxt
        tr_cap[w] -= bottleneck
        if tr_cap[w] <= 0.0:
            parent[w] = ORPHAN
            orphans[norph] = w
            norph += 1
        w = y
        while parent[w] != TERMINAL:
            a = parent[w]
            cap[a] -= bottleneck
            cap[a ^ 1] += bottleneck
            nxt = arc_to[a]
            if cap[a] <= 0.0:
                parent[w] = ORPHAN
                orphans[norph] = w
                norph += 1
            w = nxt
        tr_cap[w] += bottleneck
        if tr_cap[w] >= 0.0:
            parent[w] = ORPHAN
            orphans[norph] = w
            norph += 1
        flow += bottleneck

        # -- adoption: find new parents for all orphans
        while norph > 0:
            norph -= 1
            o = orphans[norph]
            to = tree[o]
            d_min = np.int64(1 << 60)
            best = NONE
            for k in range(first[o], first[o + 1]):
                a = adj[k]
                res = cap[a ^ 1] if to == TREE_S else cap[a]
                if res <= 0.0:
                    continue
                v = arc_to[a]
                if tree[v] != to:
                    continue
                # walk v's parent chain to certify a terminal origin
                d = np.int64(0)
                w = v
                valid = False
                while True:
                    if ts[w] == time:
                        d += dist[w]
                        valid = True
                        break
                    pa = parent[w]
                    if pa == TERMINAL:
                        ts[w] = time
                        dist[w] = 1
                        d += 1
                        valid = True
                        break
                    if pa == ORPHAN or pa == NONE:
                        break
                    w = arc_to[pa]
                    d += 1
                if not valid:
                    continue
                if d < d_min:
                    d_min = d
                    best = a
                # stamp the walked prefix so later walks stop early
                w = v
                dd = d
                while ts[w] != time:
                    dist[w] = dd
                    dd -= 1
                    ts[w] = time
                    w = arc_to[parent[w]]

            if best != NONE:
                parent[o] = best
                dist[o] = d_min + 1
                ts[o] = time
                continue

            # no parent: o leaves its tree; wake neighbors, cascade children
            for k in range(first[o], first[o + 1]):
                a = adj[k]
                v = arc_to[a]
                if tree[v] != to:
                    continue
                res = cap[a] if to == TREE_S else cap[a ^ 1]
                if res > 0.0 and not in_queue[v]:
                    queue[qtail] = v
                    qtail = (qtail + 1) % (n + 1)
                    in_queue[v] = True
                if parent[v] == (a ^ 1):
                    parent[v] = ORPHAN
                    orphans[norph] = v
                    norph += 1
            tree[o] = FREE

    return flow, tree == TREE_S
