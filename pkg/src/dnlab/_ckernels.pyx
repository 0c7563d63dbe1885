# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled edge kernels; see ``_pykernels`` for the reference semantics."""
import numpy as np

ctypedef Py_ssize_t idx_t


def edge_bilinear(const idx_t[::1] src, const idx_t[::1] dst, const double[::1] w,
                  const double[:, ::1] F, const double[:, ::1] H):
    cdef idx_t ne = src.shape[0], k = F.shape[1], e, j, a, b
    cdef double we
    out = np.zeros(k, dtype=np.float64)
    cdef double[::1] acc = out
    for e in range(ne):
        a = src[e]
        b = dst[e]
        we = w[e]
        for j in range(k):
            acc[j] += we * (F[a, j] - F[b, j]) * (H[a, j] - H[b, j])
    return out


def edge_phi_energy(const idx_t[::1] src, const idx_t[::1] dst, const double[::1] w,
                    const double[::1] phi, const double[:, ::1] F):
    cdef idx_t ne = src.shape[0], k = F.shape[1], e, j, a, b
    cdef double we, d
    out = np.zeros(k, dtype=np.float64)
    cdef double[::1] acc = out
    for e in range(ne):
        a = src[e]
        b = dst[e]
        we = w[e] * phi[a] * phi[b]
        if we == 0.0:
            continue
        for j in range(k):
            d = F[a, j] - F[b, j]
            acc[j] += we * d * d
    return out


def edge_laplacian(const idx_t[::1] src, const idx_t[::1] dst, const double[::1] w,
                   const double[:, ::1] F):
    cdef idx_t ne = src.shape[0], n = F.shape[0], k = F.shape[1], e, j, a, b
    cdef double we, flux
    out = np.zeros((n, k), dtype=np.float64)
    cdef double[:, ::1] acc = out
    for e in range(ne):
        a = src[e]
        b = dst[e]
        we = w[e]
        for j in range(k):
            flux = we * (F[a, j] - F[b, j])
            acc[a, j] += flux
            acc[b, j] -= flux
    return out
