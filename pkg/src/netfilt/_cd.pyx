# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled cyclic coordinate descent for ``||y - X b||^2 + mu ||b||_1``.

Mirrors :mod:`netfilt._cd_py` statement for statement; see there for the
algorithm description.
"""
from libc.math cimport fabs, sqrt

import numpy as np


cdef inline double _soft(double z, double t) noexcept nogil:
    if z > t:
        return z - t
    if z < -t:
        return z + t
    return 0.0


cdef double _residual_and_kkt(const double[::1, :] X, const double[::1] y, double[::1] beta,
                              double[::1] r, const double[::1] col_sq, double mu) noexcept nogil:
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1], i, j
    cdef double g, v, worst = 0.0
    for i in range(n):
        r[i] = y[i]
    for j in range(d):
        if beta[j] != 0.0:
            for i in range(n):
                r[i] -= X[i, j] * beta[j]
    for j in range(d):
        if col_sq[j] == 0.0:
            continue
        g = 0.0
        for i in range(n):
            g += X[i, j] * r[i]
        g = -2.0 * g
        if beta[j] == 0.0:
            v = fabs(g) - mu
            if v < 0.0:
                v = 0.0
        elif beta[j] > 0.0:
            v = fabs(g + mu)
        else:
            v = fabs(g - mu)
        if v > worst:
            worst = v
    return worst


cdef double _sweep(const double[::1, :] X, double[::1] beta, double[::1] r,
                   const double[::1] col_sq, double mu, bint active_only) noexcept nogil:
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1], i, j
    cdef double rho, new, delta, change, worst = 0.0
    for j in range(d):
        if col_sq[j] == 0.0:
            beta[j] = 0.0
            continue
        if active_only and beta[j] == 0.0:
            continue
        rho = 0.0
        for i in range(n):
            rho += X[i, j] * r[i]
        rho += col_sq[j] * beta[j]
        new = _soft(2.0 * rho, mu) / (2.0 * col_sq[j])
        delta = new - beta[j]
        if delta != 0.0:
            for i in range(n):
                r[i] -= delta * X[i, j]
            beta[j] = new
            change = 2.0 * fabs(delta) * col_sq[j]
            if change > worst:
                worst = change
    return worst


def coordinate_descent(X, y, double mu, double[::1] beta, double tol=1e-7, int max_iter=10000):
    """Solve in place, warm-started from ``beta``.

    Returns ``(sweeps, converged, kkt_residual)``.
    """
    cdef const double[::1, :] Xv = np.asfortranarray(X, dtype=np.float64)
    cdef const double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t n = Xv.shape[0], d = Xv.shape[1], j, i
    cdef double[::1] col_sq = np.empty(d)
    cdef double[::1] r = np.empty(n)
    cdef double kkt = 0.0, s
    cdef int sweeps = 0, inner
    cdef bint converged = False
    if beta.shape[0] != d or yv.shape[0] != n:
        raise ValueError("dimension mismatch")
    with nogil:
        for j in range(d):
            s = 0.0
            for i in range(n):
                s += Xv[i, j] * Xv[i, j]
            col_sq[j] = s
        kkt = _residual_and_kkt(Xv, yv, beta, r, col_sq, mu)
        while kkt > tol and sweeps < max_iter:
            _sweep(Xv, beta, r, col_sq, mu, False)
            sweeps += 1
            inner = 0
            while sweeps < max_iter and inner < 1000:
                if _sweep(Xv, beta, r, col_sq, mu, True) <= tol:
                    break
                sweeps += 1
                inner += 1
            kkt = _residual_and_kkt(Xv, yv, beta, r, col_sq, mu)
        converged = kkt <= tol
    return sweeps, bool(converged), kkt
