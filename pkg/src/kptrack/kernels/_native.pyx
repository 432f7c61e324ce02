# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels. Semantics match _numpy.py:
integer outputs are bit-identical, float accumulations may differ by
summation order at the 1e-15 level."""

import numpy as np

cimport numpy as cnp
from libc.math cimport floor, isfinite

cnp.import_array()

BACKEND = "native"


def splat_bilinear(values, x, y, Py_ssize_t h, Py_ssize_t w):
    cdef cnp.float64_t[::1] v = np.ascontiguousarray(values, dtype=np.float64)
    cdef cnp.float64_t[::1] xs = np.ascontiguousarray(x, dtype=np.float64)
    cdef cnp.float64_t[::1] ys = np.ascontiguousarray(y, dtype=np.float64)
    grid_arr = np.zeros((h, w), dtype=np.float64)
    cdef cnp.float64_t[:, ::1] grid = grid_arr
    cdef double off = 0.0
    cdef Py_ssize_t k, ix, iy
    cdef double fx, fy, xv, yv, vv
    cdef double w00, w10, w01, w11
    for k in range(v.shape[0]):
        xv = xs[k]
        yv = ys[k]
        vv = v[k]
        if not (isfinite(xv) and isfinite(yv)) or xv > 2147483648.0 \
                or xv < -2147483648.0 or yv > 2147483648.0 or yv < -2147483648.0:
            off += vv
            continue
        ix = <Py_ssize_t> floor(xv)
        iy = <Py_ssize_t> floor(yv)
        fx = xv - ix
        fy = yv - iy
        w00 = (1.0 - fx) * (1.0 - fy)
        w10 = fx * (1.0 - fy)
        w01 = (1.0 - fx) * fy
        w11 = fx * fy
        if 0 <= ix < w and 0 <= iy < h:
            grid[iy, ix] += vv * w00
        else:
            off += vv * w00
        if 0 <= ix + 1 < w and 0 <= iy < h:
            grid[iy, ix + 1] += vv * w10
        else:
            off += vv * w10
        if 0 <= ix < w and 0 <= iy + 1 < h:
            grid[iy + 1, ix] += vv * w01
        else:
            off += vv * w01
        if 0 <= ix + 1 < w and 0 <= iy + 1 < h:
            grid[iy + 1, ix + 1] += vv * w11
        else:
            off += vv * w11
    return grid_arr, off


def gather_bilinear(grid, x, y):
    cdef cnp.float64_t[:, ::1] g = np.ascontiguousarray(grid, dtype=np.float64)
    cdef cnp.float64_t[::1] xs = np.ascontiguousarray(x, dtype=np.float64)
    cdef cnp.float64_t[::1] ys = np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t h = g.shape[0], w = g.shape[1]
    out_arr = np.empty(xs.shape[0], dtype=np.float64)
    cdef cnp.float64_t[::1] out = out_arr
    cdef Py_ssize_t k, ix, iy, ix1, iy1
    cdef double xv, yv, fx, fy
    for k in range(xs.shape[0]):
        xv = xs[k]
        if xv < 0.0:
            xv = 0.0
        elif xv > w - 1.0:
            xv = w - 1.0
        yv = ys[k]
        if yv < 0.0:
            yv = 0.0
        elif yv > h - 1.0:
            yv = h - 1.0
        ix = <Py_ssize_t> floor(xv)
        if ix > w - 2:
            ix = w - 2
        if ix < 0:
            ix = 0
        iy = <Py_ssize_t> floor(yv)
        if iy > h - 2:
            iy = h - 2
        if iy < 0:
            iy = 0
        fx = xv - ix
        fy = yv - iy
        ix1 = ix + 1
        if ix1 > w - 1:
            ix1 = w - 1
        iy1 = iy + 1
        if iy1 > h - 1:
            iy1 = h - 1
        out[k] = (g[iy, ix] * (1 - fx) * (1 - fy) + g[iy, ix1] * fx * (1 - fy)
                  + g[iy1, ix] * (1 - fx) * fy + g[iy1, ix1] * fx * fy)
    return out_arr


def stratified_pick(cum, u):
    cdef cnp.float64_t[::1] c = np.ascontiguousarray(cum, dtype=np.float64)
    cdef cnp.float64_t[::1] us = np.ascontiguousarray(u, dtype=np.float64)
    cdef Py_ssize_t n = c.shape[0]
    out_arr = np.empty(us.shape[0], dtype=np.int64)
    cdef cnp.int64_t[::1] out = out_arr
    cdef Py_ssize_t k, lo, hi, mid
    cdef double uv
    for k in range(us.shape[0]):
        uv = us[k]
        # bisect_right: first index with c[idx] > uv
        lo = 0
        hi = n
        while lo < hi:
            mid = (lo + hi) // 2
            if c[mid] <= uv:
                lo = mid + 1
            else:
                hi = mid
        if lo > n - 1:
            lo = n - 1
        out[k] = lo
    return out_arr
