# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled point-cloud kernels (sampling, grouping, interpolation, scatter)."""
import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()


def fps(points, Py_ssize_t m, Py_ssize_t start):
    cdef double[:, ::1] p = np.ascontiguousarray(points, dtype=np.float64)
    cdef Py_ssize_t n = p.shape[0]
    out_arr = np.empty(m, dtype=np.int64)
    cdef cnp.int64_t[::1] out = out_arr
    if m == 0:
        return out_arr
    dist_arr = np.full(n, INFINITY)
    cdef double[::1] dist = dist_arr
    cdef Py_ssize_t i, j, cur = start, best
    cdef double cx, cy, dx, dy, d, bestd
    for i in range(m):
        out[i] = cur
        cx = p[cur, 0]
        cy = p[cur, 1]
        dist[cur] = -1.0
        best = 0
        bestd = -INFINITY
        for j in range(n):
            if dist[j] >= 0.0:
                dx = p[j, 0] - cx
                dy = p[j, 1] - cy
                d = dx * dx + dy * dy
                if d < dist[j]:
                    dist[j] = d
            if dist[j] > bestd:
                bestd = dist[j]
                best = j
        cur = best
    return out_arr


def ball_query(points, centers, double radius, Py_ssize_t k):
    cdef double[:, ::1] p = np.ascontiguousarray(points, dtype=np.float64)
    cdef double[:, ::1] c = np.ascontiguousarray(centers, dtype=np.float64)
    cdef Py_ssize_t n = p.shape[0], m = c.shape[0]
    idx_arr = np.empty((m, k), dtype=np.int64)
    deg_arr = np.zeros(m, dtype=bool)
    cdef cnp.int64_t[:, ::1] idx = idx_arr
    cdef cnp.uint8_t[::1] deg = deg_arr.view(np.uint8)
    # sorted buffer of the k nearest in-radius candidates
    buf_d_arr = np.empty(k, dtype=np.float64)
    buf_i_arr = np.empty(k, dtype=np.int64)
    cdef double[::1] bd = buf_d_arr
    cdef cnp.int64_t[::1] bi = buf_i_arr
    cdef double r2 = radius * radius, dx, dy, d, nearest_d
    cdef Py_ssize_t j, i, cnt, pos, nearest
    for j in range(m):
        cnt = 0
        nearest = 0
        nearest_d = INFINITY
        for i in range(n):
            dx = p[i, 0] - c[j, 0]
            dy = p[i, 1] - c[j, 1]
            d = dx * dx + dy * dy
            if d < nearest_d:
                nearest_d = d
                nearest = i
            if d > r2:
                continue
            if cnt == k and d >= bd[k - 1]:
                continue
            # insertion keeps ascending (distance, index) order
            pos = cnt if cnt < k else k - 1
            while pos > 0 and bd[pos - 1] > d:
                if pos < k:
                    bd[pos] = bd[pos - 1]
                    bi[pos] = bi[pos - 1]
                pos -= 1
            bd[pos] = d
            bi[pos] = i
            if cnt < k:
                cnt += 1
        if cnt == 0:
            deg[j] = 1
            for i in range(k):
                idx[j, i] = nearest
        else:
            for i in range(cnt):
                idx[j, i] = bi[i]
            for i in range(cnt, k):
                idx[j, i] = bi[0]
    return idx_arr, deg_arr


def three_nn(fine, coarse, Py_ssize_t k):
    cdef double[:, ::1] f = np.ascontiguousarray(fine, dtype=np.float64)
    cdef double[:, ::1] c = np.ascontiguousarray(coarse, dtype=np.float64)
    cdef Py_ssize_t n = f.shape[0], m = c.shape[0]
    if k > m:
        k = m
    idx_arr = np.empty((n, k), dtype=np.int64)
    w_arr = np.empty((n, k), dtype=np.float64)
    cdef cnp.int64_t[:, ::1] idx = idx_arr
    cdef double[:, ::1] w = w_arr
    buf_d_arr = np.empty(k, dtype=np.float64)
    cdef double[::1] bd = buf_d_arr
    cdef Py_ssize_t i, j, cnt, pos
    cdef double dx, dy, d, s
    for i in range(n):
        cnt = 0
        for j in range(m):
            dx = c[j, 0] - f[i, 0]
            dy = c[j, 1] - f[i, 1]
            d = dx * dx + dy * dy
            if cnt == k and d >= bd[k - 1]:
                continue
            pos = cnt if cnt < k else k - 1
            while pos > 0 and bd[pos - 1] > d:
                if pos < k:
                    bd[pos] = bd[pos - 1]
                    idx[i, pos] = idx[i, pos - 1]
                pos -= 1
            bd[pos] = d
            idx[i, pos] = j
            if cnt < k:
                cnt += 1
        if bd[0] == 0.0:
            w[i, 0] = 1.0
            for j in range(1, k):
                w[i, j] = 0.0
        else:
            s = 0.0
            for j in range(k):
                w[i, j] = 1.0 / bd[j]
                s += w[i, j]
            for j in range(k):
                w[i, j] /= s
    return idx_arr, w_arr


def scatter_add(Py_ssize_t n_rows, idx, values):
    cdef cnp.int64_t[::1] ix = np.ascontiguousarray(idx, dtype=np.int64).reshape(-1)
    cdef double[:, ::1] v = np.ascontiguousarray(values, dtype=np.float64)
    cdef Py_ssize_t L = v.shape[0], C = v.shape[1], i, j, r
    out_arr = np.zeros((n_rows, C), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    for i in range(L):
        r = ix[i]
        for j in range(C):
            out[r, j] += v[i, j]
    return out_arr
