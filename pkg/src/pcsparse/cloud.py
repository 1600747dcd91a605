"""Point cloud handling: k-NN graph construction and synthetic test clouds.

Clouds are plain ``(n, d)`` float arrays.  Graph weights follow the
inverse squared Euclidean distance rule, so coincident points (infinite
weight) are merged into a single vertex before construction.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from .errors import DomainError
from .graphs import Graph

__all__ = [
    "merge_duplicate_points",
    "knn_graph",
    "make_grid",
    "make_cube_shell",
    "make_sphere_shell",
    "add_gaussian_noise",
]


def merge_duplicate_points(points):
    """Collapse exactly coincident points onto their first occurrence.

    Returns ``(unique_points, merge_map)`` where ``merge_map[i]`` is the
    vertex id the i-th input point maps to.  Order of first occurrence
    is preserved.
    """
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    _, first, inverse = np.unique(
        points, axis=0, return_index=True, return_inverse=True
    )
    order = np.argsort(first, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(order.size)
    merge_map = rank[inverse.ravel()]
    return points[np.sort(first)], merge_map


def knn_graph(points, k, workers=1):
    """Symmetrized k-nearest-neighbor graph with 1/dist^2 weights.

    Each point is connected to its ``k`` nearest neighbors by Euclidean
    distance (ties broken by lower vertex id) and the edge set is
    symmetrized by union.  Coincident points are merged first.

    Returns ``(graph, merge_map)``; the map is the identity when the
    input has no duplicates.
    """
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if not np.all(np.isfinite(points)):
        raise DomainError("point coordinates must be finite")
    points, merge_map = merge_duplicate_points(points)
    n = points.shape[0]
    if k < 1 or k >= n:
        raise DomainError(f"need 1 <= k < n, got k={k}, n={n}")

    tree = cKDTree(points)
    # Query extra candidates so equal-distance ties at the k-th slot can
    # be broken deterministically by vertex id.
    extra = 16
    while True:
        kk = min(n, k + 1 + extra)
        dist, idx = tree.query(points, k=kk, workers=workers)
        # drop self matches (distance 0 to itself; duplicates were merged)
        self_col = idx == np.arange(n)[:, None]
        dist = np.where(self_col, np.inf, dist)
        order = np.lexsort((idx, dist), axis=1)
        dist = np.take_along_axis(dist, order, axis=1)
        idx = np.take_along_axis(idx, order, axis=1)
        if kk >= n or not np.any(dist[:, -1] == dist[:, k - 1]):
            break
        extra *= 4  # the k-th tie class may extend past the fetched candidates

    nbr = idx[:, :k]
    src = np.repeat(np.arange(n), k)
    dst = nbr.ravel()
    lo = np.minimum(src, dst)
    hi = np.maximum(src, dst)
    pairs = np.unique(np.stack([lo, hi], axis=1), axis=0)
    d2 = np.sum((points[pairs[:, 0]] - points[pairs[:, 1]]) ** 2, axis=1)
    graph = Graph(n, pairs[:, 0], pairs[:, 1], 1.0 / d2)
    return graph, merge_map


def make_grid(side, d=2):
    """Equidistant unit-spaced grid with ``side**d`` points (d = 2 or 3)."""
    if d not in (2, 3):
        raise DomainError("grid dimension must be 2 or 3")
    axes = [np.arange(side, dtype=np.float64)] * d
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def make_cube_shell(n, seed=0):
    """``n`` points sampled uniformly on the surface of the unit cube."""
    rng = np.random.default_rng(seed)
    face = rng.integers(0, 6, size=n)
    uv = rng.random((n, 2))
    pts = np.empty((n, 3))
    axis = face // 2
    level = (face % 2).astype(np.float64)
    for a in range(3):
        sel = axis == a
        others = [j for j in range(3) if j != a]
        pts[sel, a] = level[sel]
        pts[sel, others[0]] = uv[sel, 0]
        pts[sel, others[1]] = uv[sel, 1]
    return pts


def make_sphere_shell(n, seed=0):
    """``n`` points on the unit sphere (normalized Gaussian directions)."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, 3))
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    # resample the (measure zero) zero vectors
    while np.any(norms == 0):
        bad = norms[:, 0] == 0
        x[bad] = rng.standard_normal((bad.sum(), 3))
        norms = np.linalg.norm(x, axis=1, keepdims=True)
    return x / norms


def add_gaussian_noise(points, sigma, seed=0, relative=False):
    """Add i.i.d. per-coordinate Gaussian noise with standard deviation sigma.

    With ``relative=True`` sigma is interpreted relative to the bounding
    box diagonal instead of absolute data units.
    """
    if sigma < 0:
        raise DomainError("sigma must be >= 0")
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if sigma == 0:
        return points.copy()
    if relative:
        sigma = sigma * float(np.linalg.norm(points.max(0) - points.min(0)))
    rng = np.random.default_rng(seed)
    return points + rng.normal(0.0, sigma, size=points.shape)
