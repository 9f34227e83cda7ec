# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled dense-layer kernels.

All arrays are C-contiguous float64. Matrix products go through the BLAS
dgemm exposed by scipy; the row-major layout is handled by swapping the
operand order (C = A @ B row-major is C^T = B^T @ A^T column-major).
"""

from scipy.linalg.cython_blas cimport dgemm


cdef void _gemm_nn(double[:, ::1] a, double[:, ::1] b, double[:, ::1] c) noexcept nogil:
    # c = a @ b
    cdef int m = a.shape[0], k = a.shape[1], n = b.shape[1]
    cdef double one = 1.0, zero = 0.0
    dgemm("N", "N", &n, &m, &k, &one, &b[0, 0], &n, &a[0, 0], &k, &zero, &c[0, 0], &n)


cdef void _gemm_nt(double[:, ::1] a, double[:, ::1] b, double[:, ::1] c) noexcept nogil:
    # c = a @ b.T  with a (m, k), b (n, k), c (m, n)
    cdef int m = a.shape[0], k = a.shape[1], n = b.shape[0]
    cdef double one = 1.0, zero = 0.0
    dgemm("T", "N", &n, &m, &k, &one, &b[0, 0], &k, &a[0, 0], &k, &zero, &c[0, 0], &n)


cdef void _gemm_tn(double[:, ::1] a, double[:, ::1] b, double[:, ::1] c) noexcept nogil:
    # c = a.T @ b  with a (m, k), b (m, n), c (k, n)
    cdef int m = a.shape[0], k = a.shape[1], n = b.shape[1]
    cdef double one = 1.0, zero = 0.0
    dgemm("N", "T", &n, &k, &m, &one, &b[0, 0], &n, &a[0, 0], &k, &zero, &c[0, 0], &n)


def affine(double[:, ::1] x, double[:, ::1] w, double[::1] b, double[:, ::1] out):
    """out = x @ w + b"""
    cdef Py_ssize_t i, j
    cdef Py_ssize_t m = x.shape[0], n = w.shape[1]
    _gemm_nn(x, w, out)
    for i in range(m):
        for j in range(n):
            out[i, j] += b[j]


def affine_relu(double[:, ::1] x, double[:, ::1] w, double[::1] b, double[:, ::1] out):
    """out = max(x @ w + b, 0)"""
    cdef Py_ssize_t i, j
    cdef Py_ssize_t m = x.shape[0], n = w.shape[1]
    cdef double v
    _gemm_nn(x, w, out)
    for i in range(m):
        for j in range(n):
            v = out[i, j] + b[j]
            out[i, j] = v if v > 0.0 else 0.0


def relu_backward(double[:, ::1] h, double[:, ::1] g):
    """g[h == 0] = 0 in place; h is the post-activation output."""
    cdef Py_ssize_t i, j
    for i in range(h.shape[0]):
        for j in range(h.shape[1]):
            if h[i, j] <= 0.0:
                g[i, j] = 0.0


def affine_backward(double[:, ::1] x, double[:, ::1] w, double[:, ::1] gy,
                    double[:, ::1] gx, double[:, ::1] gw, double[::1] gb):
    """Gradients of out = x @ w + b: gx = gy @ w.T, gw = x.T @ gy, gb = sum_rows(gy)."""
    cdef Py_ssize_t i, j
    cdef Py_ssize_t m = gy.shape[0], n = gy.shape[1]
    _gemm_nt(gy, w, gx)
    _gemm_tn(x, gy, gw)
    for j in range(n):
        gb[j] = 0.0
    for i in range(m):
        for j in range(n):
            gb[j] += gy[i, j]


def affine_backward_data(double[:, ::1] w, double[:, ::1] gy, double[:, ::1] gx):
    """Input gradient only: gx = gy @ w.T (used when parameters are frozen)."""
    _gemm_nt(gy, w, gx)
