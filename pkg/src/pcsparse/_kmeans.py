"""Batched deterministic 2-means over the subsets of a partition."""

import numpy as np
from numba import njit


@njit(cache=True)
def two_means_directions(pts, indptr, order, tol):
    """Per-subset unit direction between 2-means centers.

    Subset s holds vertices ``order[indptr[s]:indptr[s+1]]`` in ascending
    id order.  Seeds: the point farthest from the subset mean, then the
    point farthest from the first seed; ties pick the lower id.  Returns
    (directions, degenerate flags, center distances).
    """
    m = indptr.size - 1
    d = pts.shape[1]
    gamma = np.zeros((m, d))
    degen = np.zeros(m, np.bool_)
    scale = np.zeros(m)
    mean = np.zeros(d)
    c1 = np.zeros(d)
    c2 = np.zeros(d)
    n1 = np.zeros(d)
    n2 = np.zeros(d)

    for s in range(m):
        beg, end = indptr[s], indptr[s + 1]
        cnt = end - beg
        if cnt < 2:
            degen[s] = True
            continue

        for j in range(d):
            mean[j] = 0.0
        spread = 0.0
        for i in range(beg, end):
            p = order[i]
            for j in range(d):
                mean[j] += pts[p, j]
        for j in range(d):
            mean[j] /= cnt
        best = -1.0
        s1 = order[beg]
        for i in range(beg, end):
            p = order[i]
            dist = 0.0
            for j in range(d):
                diff = pts[p, j] - mean[j]
                dist += diff * diff
                adiff = abs(diff)
                if adiff > spread:
                    spread = adiff
            if dist > best:
                best = dist
                s1 = p
        if spread <= tol:
            degen[s] = True
            continue

        best = -1.0
        s2 = s1
        for i in range(beg, end):
            p = order[i]
            dist = 0.0
            for j in range(d):
                diff = pts[p, j] - pts[s1, j]
                dist += diff * diff
            if dist > best:
                best = dist
                s2 = p
        for j in range(d):
            c1[j] = pts[s1, j]
            c2[j] = pts[s2, j]

        for _ in range(50):
            for j in range(d):
                n1[j] = 0.0
                n2[j] = 0.0
            k1 = 0
            k2 = 0
            for i in range(beg, end):
                p = order[i]
                d1 = 0.0
                d2 = 0.0
                for j in range(d):
                    a = pts[p, j] - c1[j]
                    b = pts[p, j] - c2[j]
                    d1 += a * a
                    d2 += b * b
                if d2 < d1:
                    k2 += 1
                    for j in range(d):
                        n2[j] += pts[p, j]
                else:
                    k1 += 1
                    for j in range(d):
                        n1[j] += pts[p, j]
            if k1 == 0 or k2 == 0:
                break
            same = True
            for j in range(d):
                n1[j] /= k1
                n2[j] /= k2
                if n1[j] != c1[j] or n2[j] != c2[j]:
                    same = False
            if same:
                break
            for j in range(d):
                c1[j] = n1[j]
                c2[j] = n2[j]

        nrm = 0.0
        for j in range(d):
            diff = c2[j] - c1[j]
            nrm += diff * diff
        nrm = np.sqrt(nrm)
        if nrm <= tol:
            degen[s] = True
        else:
            for j in range(d):
                gamma[s, j] = (c2[j] - c1[j]) / nrm
            scale[s] = nrm
    return gamma, degen, scale
