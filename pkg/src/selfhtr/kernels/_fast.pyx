# cython: language_level=3
"""Compiled kernels: Levenshtein distance and bilinear warp.

Numerics must stay in lockstep with selfhtr.kernels._purepy; the tests
assert exact agreement between the two backends.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport floor

cnp.import_array()


def levenshtein(a, b):
    cdef cnp.ndarray[cnp.int64_t, ndim=1] xs, ys
    if isinstance(a, str):
        xs = np.frombuffer(a.encode("utf-32-le"), dtype=np.uint32).astype(np.int64)
    else:
        xs = np.asarray(a, dtype=np.int64)
    if isinstance(b, str):
        ys = np.frombuffer(b.encode("utf-32-le"), dtype=np.uint32).astype(np.int64)
    else:
        ys = np.asarray(b, dtype=np.int64)
    return _levenshtein_i64(xs, ys)


cdef int _levenshtein_i64(cnp.int64_t[::1] a, cnp.int64_t[::1] b):
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t m = b.shape[0]
    if n == 0:
        return <int> m
    if m == 0:
        return <int> n
    cdef cnp.ndarray[cnp.int64_t, ndim=1] prev_arr = np.arange(m + 1, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] cur_arr = np.zeros(m + 1, dtype=np.int64)
    cdef cnp.int64_t[::1] prev = prev_arr
    cdef cnp.int64_t[::1] cur = cur_arr
    cdef cnp.int64_t[::1] tmp
    cdef Py_ssize_t i, j
    cdef cnp.int64_t ai, cost, best
    for i in range(1, n + 1):
        cur[0] = i
        ai = a[i - 1]
        for j in range(1, m + 1):
            cost = 0 if ai == b[j - 1] else 1
            best = prev[j] + 1
            if cur[j - 1] + 1 < best:
                best = cur[j - 1] + 1
            if prev[j - 1] + cost < best:
                best = prev[j - 1] + cost
            cur[j] = best
        tmp = prev
        prev = cur
        cur = tmp
    return <int> prev[m]


def warp_bilinear(src, map_y, map_x, double fill=0.0, bint edge_clamp=False):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] s = np.ascontiguousarray(src, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] my = np.ascontiguousarray(map_y, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] mx = np.ascontiguousarray(map_x, dtype=np.float64)
    cdef Py_ssize_t h = s.shape[0]
    cdef Py_ssize_t w = s.shape[1]
    cdef Py_ssize_t oh = my.shape[0]
    cdef Py_ssize_t ow = my.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((oh, ow), dtype=np.float64)

    cdef Py_ssize_t r, c, y0i, x0i, y1i, x1i
    cdef double yy, xx, fy, fx, v00, v01, v10, v11, top, bot

    for r in range(oh):
        for c in range(ow):
            yy = my[r, c]
            xx = mx[r, c]
            if edge_clamp:
                if yy < 0.0:
                    yy = 0.0
                elif yy > h - 1.0:
                    yy = h - 1.0
                if xx < 0.0:
                    xx = 0.0
                elif xx > w - 1.0:
                    xx = w - 1.0
            elif yy < 0.0 or yy > h - 1.0 or xx < 0.0 or xx > w - 1.0:
                out[r, c] = fill
                continue
            fy = yy - floor(yy)
            fx = xx - floor(xx)
            y0i = <Py_ssize_t> floor(yy)
            x0i = <Py_ssize_t> floor(xx)
            y1i = y0i + 1
            x1i = x0i + 1
            if y0i < 0:
                y0i = 0
            if y0i > h - 1:
                y0i = h - 1
            if y1i < 0:
                y1i = 0
            if y1i > h - 1:
                y1i = h - 1
            if x0i < 0:
                x0i = 0
            if x0i > w - 1:
                x0i = w - 1
            if x1i < 0:
                x1i = 0
            if x1i > w - 1:
                x1i = w - 1
            v00 = s[y0i, x0i]
            v01 = s[y0i, x1i]
            v10 = s[y1i, x0i]
            v11 = s[y1i, x1i]
            top = v00 * (1.0 - fx) + v01 * fx
            bot = v10 * (1.0 - fx) + v11 * fx
            out[r, c] = top * (1.0 - fy) + bot * fy
    return out
