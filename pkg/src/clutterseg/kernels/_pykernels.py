"""Numpy reference implementations of the point-cloud kernels.

Used when the compiled extension is unavailable, and as the second route in
the kernel equivalence tests. Semantics must match ``_ckernels.pyx`` exactly,
including tie-breaking.
"""
import numpy as np


def fps(points, m, start):
    points = np.ascontiguousarray(points, dtype=np.float64)
    n = points.shape[0]
    out = np.empty(m, dtype=np.int64)
    if m == 0:
        return out
    dist = np.full(n, np.inf)
    cur = int(start)
    for i in range(m):
        out[i] = cur
        d = points - points[cur]
        d = d[:, 0] * d[:, 0] + d[:, 1] * d[:, 1]
        np.minimum(dist, d, out=dist)
        dist[cur] = -1.0
        # argmax returns the lowest index among ties
        cur = int(np.argmax(dist))
    return out


def ball_query(points, centers, radius, k):
    points = np.ascontiguousarray(points, dtype=np.float64)
    centers = np.ascontiguousarray(centers, dtype=np.float64)
    m = centers.shape[0]
    idx = np.empty((m, k), dtype=np.int64)
    degenerate = np.zeros(m, dtype=bool)
    r2 = radius * radius
    for j in range(m):
        d = points - centers[j]
        d = d[:, 0] * d[:, 0] + d[:, 1] * d[:, 1]
        inside = np.flatnonzero(d <= r2)
        if inside.size == 0:
            degenerate[j] = True
            idx[j, :] = int(np.argmin(d))
            continue
        # stable sort keeps ascending index among equal distances
        order = inside[np.argsort(d[inside], kind="stable")][:k]
        idx[j, : order.size] = order
        idx[j, order.size :] = order[0]
    return idx, degenerate


def three_nn(fine, coarse, k):
    fine = np.ascontiguousarray(fine, dtype=np.float64)
    coarse = np.ascontiguousarray(coarse, dtype=np.float64)
    n = fine.shape[0]
    k = min(k, coarse.shape[0])
    idx = np.empty((n, k), dtype=np.int64)
    w = np.empty((n, k), dtype=np.float64)
    for i in range(n):
        d = coarse - fine[i]
        d = d[:, 0] * d[:, 0] + d[:, 1] * d[:, 1]
        order = np.argsort(d, kind="stable")[:k]
        idx[i] = order
        dk = d[order]
        if dk[0] == 0.0:
            w[i] = 0.0
            w[i, 0] = 1.0
        else:
            inv = 1.0 / dk
            w[i] = inv / inv.sum()
    return idx, w


def scatter_add(n_rows, idx, values):
    values = np.asarray(values, dtype=np.float64)
    out = np.zeros((n_rows, values.shape[1]), dtype=np.float64)
    np.add.at(out, np.asarray(idx, dtype=np.int64), values)
    return out
