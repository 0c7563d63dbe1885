import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dnlab import kernels
from dnlab.graph import lattice_graph

BACKENDS = ["python"] + (["cython"] if kernels.BACKEND == "cython" else [])


def _edge_case(n_ext, n_edges, k, seed):
    rng = np.random.default_rng(seed)
    src = rng.integers(0, n_ext, size=n_edges).astype(np.intp)
    dst = rng.integers(0, n_ext, size=n_edges).astype(np.intp)
    w = rng.random(n_edges)
    F = rng.normal(size=(n_ext, k))
    H = rng.normal(size=(n_ext, k))
    phi = rng.random(n_ext)
    return src, dst, w, F, H, phi


def _naive(src, dst, w, F, H, phi):
    k = F.shape[1]
    bil = np.zeros(k)
    phe = np.zeros(k)
    lap = np.zeros_like(F)
    for a, b, we in zip(src, dst, w):
        bil += we * (F[a] - F[b]) * (H[a] - H[b])
        phe += we * phi[a] * phi[b] * (F[a] - F[b]) ** 2
        lap[a] += we * (F[a] - F[b])
        lap[b] -= we * (F[a] - F[b])
    return bil, phe, lap


@pytest.mark.parametrize("name", BACKENDS)
@settings(max_examples=40, deadline=None)
@given(n_ext=st.integers(1, 30), n_edges=st.integers(0, 60), k=st.integers(1, 4), seed=st.integers(0, 10**6))
def test_kernels_match_loop_reference(name, n_ext, n_edges, k, seed):
    mod = kernels.get_backend(name)
    src, dst, w, F, H, phi = _edge_case(n_ext, n_edges, k, seed)
    bil, phe, lap = _naive(src, dst, w, F, H, phi)
    np.testing.assert_allclose(mod.edge_bilinear(src, dst, w, F, H), bil, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(mod.edge_phi_energy(src, dst, w, phi, F), phe, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(mod.edge_laplacian(src, dst, w, F), lap, rtol=1e-12, atol=1e-12)


@pytest.mark.skipif(kernels.BACKEND != "cython", reason="compiled kernels not built")
def test_backends_agree_on_lattice():
    g = lattice_graph(3, 8)
    src, dst, w = g.ext_edges
    F = np.random.default_rng(1).normal(size=(g.n_ext, 9))
    py, cy = kernels.get_backend("python"), kernels.get_backend("cython")
    np.testing.assert_allclose(cy.edge_bilinear(src, dst, w, F, F), py.edge_bilinear(src, dst, w, F, F), rtol=1e-13)
    np.testing.assert_allclose(cy.edge_laplacian(src, dst, w, F), py.edge_laplacian(src, dst, w, F), atol=1e-13)


def test_wrappers_accept_vectors_and_default_h():
    g = lattice_graph(2, 3)
    src, dst, w = g.ext_edges
    f = np.arange(g.n_ext, dtype=float)
    assert kernels.edge_bilinear(src, dst, w, f).shape == (1,)
    assert kernels.edge_bilinear(src, dst, w, f)[0] == kernels.edge_bilinear(src, dst, w, f, f)[0]
    assert kernels.edge_laplacian(src, dst, w, f).shape == (g.n_ext, 1)


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


def test_environment_forces_numpy_fallback():
    env = dict(os.environ, DNLAB_KERNELS="python")
    out = subprocess.run([sys.executable, "-c", "import dnlab.kernels as k; print(k.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
