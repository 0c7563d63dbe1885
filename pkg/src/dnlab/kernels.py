"""Backend selection for the edge kernels.

The compiled extension ``dnlab._ckernels`` is used when it imports; the numpy
fallback otherwise.  Set ``DNLAB_KERNELS=python`` to force the fallback.
"""
import os

import numpy as np

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("DNLAB_KERNELS", "").lower() != "python":
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels


def get_backend(name=None):
    """Return the kernel module for ``name`` ("cython", "python") or the active one."""
    if name is None:
        return _impl
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels

        return _ckernels
    raise ValueError(f"unknown kernel backend {name!r}")


def _cols(F):
    F = np.asarray(F, dtype=np.float64)
    if F.ndim == 1:
        F = F[:, None]
    return np.ascontiguousarray(F)


def edge_bilinear(src, dst, w, F, H=None):
    Fc = _cols(F)
    Hc = Fc if H is None or H is F else _cols(H)
    return _impl.edge_bilinear(src, dst, w, Fc, Hc)


def edge_phi_energy(src, dst, w, phi, F):
    return _impl.edge_phi_energy(src, dst, w, np.ascontiguousarray(phi, dtype=np.float64), _cols(F))


def edge_laplacian(src, dst, w, F):
    return _impl.edge_laplacian(src, dst, w, _cols(F))
