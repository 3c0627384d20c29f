# cython: boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled implementations of the per-pixel kernel core.

Mirrors ``_kernels_py`` exactly: symmetric padding, ascending tap order,
float64 accumulation. Compiled with -ffp-contract=off so the results are
bit-identical to the NumPy fallback.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "cython"


def sepconv2d(plane, kernel):
    """Separable 2-D correlation with symmetric padding (see _kernels_py)."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] src = np.ascontiguousarray(plane, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] kern = np.ascontiguousarray(kernel, dtype=np.float64)
    cdef Py_ssize_t k = kern.shape[0]
    cdef Py_ssize_t h = src.shape[0]
    cdef Py_ssize_t w = src.shape[1]
    if k == 1:
        return src * (kern[0] * kern[0])
    cdef Py_ssize_t pad = k // 2
    cdef cnp.ndarray[cnp.float64_t, ndim=2] padded = np.pad(src, pad, mode="symmetric")
    cdef cnp.ndarray[cnp.float64_t, ndim=2] tmp = np.empty((h + 2 * pad, w), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((h, w), dtype=np.float64)
    cdef Py_ssize_t i, j, t
    cdef double acc
    with nogil:
        for i in range(h + 2 * pad):
            for j in range(w):
                acc = kern[0] * padded[i, j]
                for t in range(1, k):
                    acc = acc + kern[t] * padded[i, j + t]
                tmp[i, j] = acc
        for i in range(h):
            for j in range(w):
                acc = kern[0] * tmp[i, j]
                for t in range(1, k):
                    acc = acc + kern[t] * tmp[i + t, j]
                out[i, j] = acc
    return out


def erode2d(mask, radius):
    """Binary erosion by a square element; zero padding (see _kernels_py)."""
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] m = np.ascontiguousarray(
        np.asarray(mask) != 0, dtype=np.uint8
    )
    cdef Py_ssize_t r = radius
    if r <= 0:
        return m
    cdef Py_ssize_t h = m.shape[0]
    cdef Py_ssize_t w = m.shape[1]
    cdef Py_ssize_t k = 2 * r + 1
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] padded = np.pad(m, r, mode="constant", constant_values=0)
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] tmp = np.empty((h + 2 * r, w), dtype=np.uint8)
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] out = np.empty((h, w), dtype=np.uint8)
    cdef Py_ssize_t i, j, t
    cdef cnp.uint8_t acc
    with nogil:
        # values are normalized to {0, 1}: erosion is a windowed AND
        for i in range(h + 2 * r):
            for j in range(w):
                acc = padded[i, j]
                for t in range(1, k):
                    acc = acc & padded[i, j + t]
                tmp[i, j] = acc
        for i in range(h):
            for j in range(w):
                acc = tmp[i, j]
                for t in range(1, k):
                    acc = acc & tmp[i + t, j]
                out[i, j] = acc
    return out


def dilate2d(mask, radius):
    """Binary dilation by a square element; zero padding (see _kernels_py)."""
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] m = np.ascontiguousarray(
        np.asarray(mask) != 0, dtype=np.uint8
    )
    cdef Py_ssize_t r = radius
    if r <= 0:
        return m
    cdef Py_ssize_t h = m.shape[0]
    cdef Py_ssize_t w = m.shape[1]
    cdef Py_ssize_t k = 2 * r + 1
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] padded = np.pad(m, r, mode="constant", constant_values=0)
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] tmp = np.empty((h + 2 * r, w), dtype=np.uint8)
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] out = np.empty((h, w), dtype=np.uint8)
    cdef Py_ssize_t i, j, t
    cdef cnp.uint8_t acc
    with nogil:
        # values are normalized to {0, 1}: dilation is a windowed OR
        for i in range(h + 2 * r):
            for j in range(w):
                acc = padded[i, j]
                for t in range(1, k):
                    acc = acc | padded[i, j + t]
                tmp[i, j] = acc
        for i in range(h):
            for j in range(w):
                acc = tmp[i, j]
                for t in range(1, k):
                    acc = acc | tmp[i + t, j]
                out[i, j] = acc
    return out
