# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled quantile-regression kernels (hot path of back-propagation)."""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "compiled"


def qr_loss(cnp.ndarray[cnp.float64_t, ndim=1] values,
            cnp.ndarray[cnp.float64_t, ndim=1] taus,
            cnp.ndarray[cnp.float64_t, ndim=1] targets,
            double kappa):
    cdef Py_ssize_t nq = values.shape[0]
    cdef Py_ssize_t m = targets.shape[0]
    cdef Py_ssize_t i, j
    cdef double u, au, w, huber, acc = 0.0
    for i in range(nq):
        for j in range(m):
            u = targets[j] - values[i]
            au = u if u >= 0 else -u
            w = taus[i] - (1.0 if u < 0 else 0.0)
            if w < 0:
                w = -w
            if au <= kappa:
                huber = 0.5 * u * u
            else:
                huber = kappa * (au - 0.5 * kappa)
            acc += w * huber / kappa
    return acc / m


def qr_gradient(cnp.ndarray[cnp.float64_t, ndim=1] values,
                cnp.ndarray[cnp.float64_t, ndim=1] taus,
                cnp.ndarray[cnp.float64_t, ndim=1] targets,
                double kappa):
    cdef Py_ssize_t nq = values.shape[0]
    cdef Py_ssize_t m = targets.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.zeros(nq, dtype=np.float64)
    cdef Py_ssize_t i, j
    cdef double u, w, clipped, acc
    for i in range(nq):
        acc = 0.0
        for j in range(m):
            u = targets[j] - values[i]
            w = taus[i] - (1.0 if u < 0 else 0.0)
            if w < 0:
                w = -w
            clipped = u
            if clipped > kappa:
                clipped = kappa
            elif clipped < -kappa:
                clipped = -kappa
            acc -= w * clipped / kappa
        out[i] = acc / m
    return out
