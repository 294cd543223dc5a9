# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled sequential recurrences.

These loops carry a data dependency from one sample to the next, so numpy
cannot vectorize them.  Signatures and results match ``_fallback`` exactly.
"""
import numpy as np

from libc.math cimport sin, M_PI


def propagate(const double[:, ::1] F, const double[:, ::1] G, const double[::1] x0, const double[:, ::1] U):
    cdef Py_ssize_t k = F.shape[0], steps = U.shape[1]
    cdef Py_ssize_t i, l, j
    cdef double acc
    out = np.empty((k, steps), dtype=np.float64)
    cdef double[:, ::1] X = out
    if steps == 0:
        return out
    # the forcing term has no recurrence; one BLAS call covers every sample
    cdef double[:, ::1] GU = np.ascontiguousarray(np.asarray(G) @ np.asarray(U))
    for i in range(k):
        X[i, 0] = x0[i]
    for j in range(steps - 1):
        for i in range(k):
            acc = GU[i, j]
            for l in range(k):
                acc += F[i, l] * X[l, j]
            X[i, j + 1] = acc
    return out


cdef inline void _deriv(const double[:, ::1] A0, const double[:, ::1] A1, const double[:, ::1] B,
                        double duty, double* x, double[::1] u, double* dx,
                        Py_ssize_t k, Py_ssize_t e) noexcept nogil:
    cdef Py_ssize_t i, l
    cdef double acc
    for i in range(k):
        acc = 0.0
        for l in range(k):
            acc += (A0[i, l] + duty * A1[i, l]) * x[l]
        for l in range(e):
            acc += B[i, l] * u[l]
        dx[i] = acc


def rk4(const double[:, ::1] A0, const double[:, ::1] A1, const double[:, ::1] B, const double[::1] x0,
        const double[:, ::1] U, double dt, int substeps,
        double duty_mean, double duty_amp, double duty_freq, double t0):
    cdef Py_ssize_t k = A0.shape[0], e = B.shape[1], steps = U.shape[1]
    cdef Py_ssize_t i, j, q
    cdef double h = dt / substeps, t, d0, dm, d1
    out = np.empty((k, steps), dtype=np.float64)
    cdef double[:, ::1] X = out
    if steps == 0:
        return out
    x_arr = np.array(x0, dtype=np.float64)
    work = np.empty((5, k), dtype=np.float64)
    u_arr = np.empty(e, dtype=np.float64)
    cdef double[::1] x = x_arr, u = u_arr
    cdef double[:, ::1] w = work
    for i in range(k):
        X[i, 0] = x[i]
    for j in range(steps - 1):
        for i in range(e):
            u[i] = U[i, j]
        for q in range(substeps):
            t = t0 + j * dt + q * h
            d0 = duty_mean + duty_amp * sin(2.0 * M_PI * duty_freq * t)
            dm = duty_mean + duty_amp * sin(2.0 * M_PI * duty_freq * (t + 0.5 * h))
            d1 = duty_mean + duty_amp * sin(2.0 * M_PI * duty_freq * (t + h))
            _deriv(A0, A1, B, d0, &x[0], u, &w[0, 0], k, e)
            for i in range(k):
                w[4, i] = x[i] + 0.5 * h * w[0, i]
            _deriv(A0, A1, B, dm, &w[4, 0], u, &w[1, 0], k, e)
            for i in range(k):
                w[4, i] = x[i] + 0.5 * h * w[1, i]
            _deriv(A0, A1, B, dm, &w[4, 0], u, &w[2, 0], k, e)
            for i in range(k):
                w[4, i] = x[i] + h * w[2, i]
            _deriv(A0, A1, B, d1, &w[4, 0], u, &w[3, 0], k, e)
            for i in range(k):
                x[i] += h / 6.0 * (w[0, i] + 2.0 * w[1, i] + 2.0 * w[2, i] + w[3, i])
        for i in range(k):
            X[i, j + 1] = x[i]
    return out


def power_abs_sums(const double[::1] magnitudes, Py_ssize_t n):
    cdef Py_ssize_t r = magnitudes.shape[0], i, j
    cdef double acc, term, mag
    out = np.zeros(r, dtype=np.float64)
    cdef double[::1] res = out
    for i in range(r):
        mag = magnitudes[i]
        term = 1.0
        acc = 0.0
        for j in range(n):
            term *= mag
            acc += term
        res[i] = acc
    return out
