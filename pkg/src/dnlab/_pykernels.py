"""Pure numpy implementations of the edge kernels.

Every kernel takes an edge list ``(src, dst, w)`` over an extended vertex
index space and column-batched function values ``F`` of shape
``(n_ext, k)``.  Semantics must match ``_ckernels.pyx`` exactly.
"""
import numpy as np


def edge_bilinear(src, dst, w, F, H):
    dF = F[src] - F[dst]
    if H is F:
        return np.einsum("e,ek,ek->k", w, dF, dF)
    dH = H[src] - H[dst]
    return np.einsum("e,ek,ek->k", w, dF, dH)


def edge_phi_energy(src, dst, w, phi, F):
    dF = F[src] - F[dst]
    return np.einsum("e,ek,ek->k", w * phi[src] * phi[dst], dF, dF)


def edge_laplacian(src, dst, w, F):
    flux = w[:, None] * (F[src] - F[dst])
    out = np.zeros_like(F)
    np.add.at(out, src, flux)
    np.add.at(out, dst, -flux)
    return out
