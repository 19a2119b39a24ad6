# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled solver kernels: fused elementwise loops, no temporaries."""
from libc.math cimport log


def refresh_ratio(double[:, ::1] Y, double[:, ::1] V, double eps,
                  double[:, ::1] out):
    """out = Y / max(V, eps), elementwise, in place."""
    cdef Py_ssize_t i, j, K = Y.shape[0], T = Y.shape[1]
    cdef double v
    for i in range(K):
        for j in range(T):
            v = V[i, j]
            if v < eps:
                v = eps
            out[i, j] = Y[i, j] / v
    return out.base if out.base is not None else out


def rank1_add(double[:, ::1] V, double[::1] d, double[::1] x):
    """V += outer(d, x), in place."""
    cdef Py_ssize_t i, j, K = V.shape[0], T = V.shape[1]
    cdef double di
    for i in range(K):
        di = d[i]
        for j in range(T):
            V[i, j] += di * x[j]
    return V.base if V.base is not None else V


def kl_divergence_floored(double[:, ::1] Y, double[:, ::1] V, double eps):
    """Generalized KL divergence sum(Y log(Y/V) - Y + V) with V floored at eps.

    Zero entries of Y contribute V only (0*log 0 taken as 0).
    """
    cdef Py_ssize_t i, j, K = Y.shape[0], T = Y.shape[1]
    cdef double total = 0.0, y, v
    for i in range(K):
        for j in range(T):
            v = V[i, j]
            if v < eps:
                v = eps
            y = Y[i, j]
            if y > 0.0:
                total += y * log(y / v) - y + v
            else:
                total += v
    return total
