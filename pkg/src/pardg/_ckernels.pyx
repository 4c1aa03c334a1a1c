# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels; same signatures and arithmetic order as _pykernels."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef inline double _edge_term(double w, double xu, double xv, bint directed) noexcept nogil:
    if directed:
        return w * xu * (1.0 - xv)
    return w * (xu * (1.0 - xv) + xv * (1.0 - xu))


def cut_value(const cnp.intp_t[::1] tails, const cnp.intp_t[::1] heads,
              const double[::1] weights, const double[::1] x, bint directed):
    cdef Py_ssize_t e, m = tails.shape[0]
    cdef double acc = 0.0
    with nogil:
        for e in range(m):
            acc += _edge_term(weights[e], x[tails[e]], x[heads[e]], directed)
    return acc


def cut_values(const cnp.intp_t[::1] tails, const cnp.intp_t[::1] heads,
               const double[::1] weights, X, bint directed):
    cdef const double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef Py_ssize_t k = Xv.shape[0], m = tails.shape[0], r, e
    out = np.zeros(k)
    cdef double[::1] o = out
    cdef double acc
    with nogil:
        for r in range(k):
            acc = 0.0
            for e in range(m):
                acc += _edge_term(weights[e], Xv[r, tails[e]], Xv[r, heads[e]], directed)
            o[r] = acc
    return out


def cut_gradient(const cnp.intp_t[::1] tails, const cnp.intp_t[::1] heads,
                 const double[::1] weights, const double[::1] x, bint directed):
    cdef Py_ssize_t e, m = tails.shape[0]
    cdef Py_ssize_t u, v
    grad = np.zeros(x.shape[0])
    cdef double[::1] g = grad
    with nogil:
        for e in range(m):
            u = tails[e]
            v = heads[e]
            if directed:
                g[u] += weights[e] * (1.0 - x[v])
                g[v] += -(weights[e] * x[u])
            else:
                g[u] += weights[e] * (1.0 - 2.0 * x[v])
                g[v] += weights[e] * (1.0 - 2.0 * x[u])
    return grad


def brute_force_cut(const cnp.intp_t[::1] tails, const cnp.intp_t[::1] heads,
                    const double[::1] weights, Py_ssize_t n, bint directed):
    cdef long long total = 1LL << n
    cdef long long mask, best_mask = 0
    cdef double acc, best_value = -1.0 / 0.0
    cdef Py_ssize_t e, m = tails.shape[0]
    cdef double xu, xv
    with nogil:
        for mask in range(total):
            acc = 0.0
            for e in range(m):
                xu = <double>((mask >> tails[e]) & 1)
                xv = <double>((mask >> heads[e]) & 1)
                acc += _edge_term(weights[e], xu, xv, directed)
            if acc > best_value:
                best_value = acc
                best_mask = mask
    return int(best_mask), best_value


def quad_value(double c, const double[::1] b, const double[:, ::1] A, const double[::1] x):
    cdef Py_ssize_t i, j, n = x.shape[0]
    cdef double lin = 0.0, quad = 0.0, row
    with nogil:
        for i in range(n):
            lin += b[i] * x[i]
        for i in range(n):
            row = 0.0
            for j in range(n):
                row += A[i, j] * x[j]
            quad += x[i] * row
    return c + lin - 0.5 * quad


def quad_gradient(const double[::1] b, const double[:, ::1] A, const double[::1] x):
    cdef Py_ssize_t i, j, n = x.shape[0]
    cdef double s
    grad = np.empty(n)
    cdef double[::1] g = grad
    with nogil:
        for i in range(n):
            s = 0.0
            for j in range(n):
                s += (A[i, j] + A[j, i]) * x[j]
            g[i] = b[i] - 0.5 * s
    return grad


def quad_values(double c, const double[::1] b, const double[:, ::1] A, X):
    cdef const double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef Py_ssize_t r, i, j, k = Xv.shape[0], n = Xv.shape[1]
    cdef double lin, quad, row
    out = np.empty(k)
    cdef double[::1] o = out
    with nogil:
        for r in range(k):
            lin = 0.0
            quad = 0.0
            for i in range(n):
                lin += b[i] * Xv[r, i]
            for i in range(n):
                row = 0.0
                for j in range(n):
                    row += A[i, j] * Xv[r, j]
                quad += Xv[r, i] * row
            o[r] = c + lin - 0.5 * quad
    return out
