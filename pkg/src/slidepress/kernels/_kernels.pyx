# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled pixel kernels: single-pass loops over RGB rasters.

Must stay bit-identical to slidepress.kernels._pure; both use exact
integer arithmetic with round-half-up.
"""

import numpy as np

BACKEND = "compiled"


def luminance(const unsigned char[:, :, ::1] tile):
    cdef Py_ssize_t h = tile.shape[0]
    cdef Py_ssize_t w = tile.shape[1]
    out_arr = np.empty((h, w), dtype=np.uint8)
    cdef unsigned char[:, ::1] out = out_arr
    cdef Py_ssize_t y, x
    cdef unsigned int lum
    for y in range(h):
        for x in range(w):
            lum = 299u * tile[y, x, 0] + 587u * tile[y, x, 1] + 114u * tile[y, x, 2]
            out[y, x] = <unsigned char>((lum + 500u) // 1000u)
    return out_arr


def luminance_stats(const unsigned char[:, :, ::1] tile, int signal_threshold):
    cdef Py_ssize_t h = tile.shape[0]
    cdef Py_ssize_t w = tile.shape[1]
    cdef Py_ssize_t y, x
    cdef unsigned int lum, l8
    cdef unsigned long long total = 0
    cdef unsigned long long signal = 0
    cdef unsigned int thresh = <unsigned int>signal_threshold
    for y in range(h):
        for x in range(w):
            lum = 299u * tile[y, x, 0] + 587u * tile[y, x, 1] + 114u * tile[y, x, 2]
            l8 = (lum + 500u) // 1000u
            total += l8
            if l8 >= thresh:
                signal += 1
    cdef double n = <double>(h * w)
    return total / n, signal / n


def downsample_2x2(const unsigned char[:, :, ::1] src):
    cdef Py_ssize_t h = src.shape[0]
    cdef Py_ssize_t w = src.shape[1]
    cdef Py_ssize_t c = src.shape[2]
    cdef Py_ssize_t oh = (h + 1) // 2
    cdef Py_ssize_t ow = (w + 1) // 2
    out_arr = np.empty((oh, ow, c), dtype=np.uint8)
    cdef unsigned char[:, :, ::1] out = out_arr
    cdef Py_ssize_t y, x, k, sy, sx
    cdef unsigned int acc, cnt
    for y in range(oh):
        sy = 2 * y
        for x in range(ow):
            sx = 2 * x
            for k in range(c):
                acc = src[sy, sx, k]
                cnt = 1
                if sx + 1 < w:
                    acc += src[sy, sx + 1, k]
                    cnt += 1
                if sy + 1 < h:
                    acc += src[sy + 1, sx, k]
                    cnt += 1
                    if sx + 1 < w:
                        acc += src[sy + 1, sx + 1, k]
                        cnt += 1
                out[y, x, k] = <unsigned char>((acc + cnt // 2) // cnt)
    return out_arr
