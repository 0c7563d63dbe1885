"""Compare the compiled and numpy edge kernels.

    python benchmarks/bench_kernels.py [--radius 16] [--columns 64] [--repeat 5]

Prints best-of-N wall times per kernel and backend plus the speedup, after
checking that both backends agree on the inputs used.
"""
import argparse
import timeit

import numpy as np

from dnlab import kernels
from dnlab.graph import lattice_graph


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--radius", type=int, default=16, help="radius of the Z^3 ball")
    ap.add_argument("--columns", type=int, default=64, help="functions per batch")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    g = lattice_graph(3, args.radius)
    src, dst, w = g.ext_edges
    rng = np.random.default_rng(0)
    F = np.ascontiguousarray(rng.normal(size=(g.n_ext, args.columns)))
    H = np.ascontiguousarray(rng.normal(size=(g.n_ext, args.columns)))
    phi = rng.random(g.n_ext)

    try:
        backends = {"python": kernels.get_backend("python"), "cython": kernels.get_backend("cython")}
    except ImportError:
        print("compiled kernels are not built; only the numpy backend is available")
        backends = {"python": kernels.get_backend("python")}

    cases = {
        "edge_bilinear": lambda m: m.edge_bilinear(src, dst, w, F, H),
        "edge_phi_energy": lambda m: m.edge_phi_energy(src, dst, w, phi, F),
        "edge_laplacian": lambda m: m.edge_laplacian(src, dst, w, F),
    }
    print(f"Z^3 ball radius {args.radius}: {g.n} vertices, {src.size} edges, {args.columns} columns")
    print(f"{'kernel':<18}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}")
    for name, fn in cases.items():
        ref = fn(backends["python"])
        times = {}
        for b, mod in backends.items():
            out = fn(mod)
            if not np.allclose(out, ref, rtol=1e-12, atol=1e-12 * np.abs(ref).max()):
                raise SystemExit(f"{name}: backend {b} disagrees with numpy")
            times[b] = min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat))
        speed = times["python"] / times["cython"] if "cython" in times else float("nan")
        print(f"{name:<18}" + "".join(f"{times[b] * 1e3:>10.2f}ms" for b in backends) + f"{speed:>9.1f}x")


if __name__ == "__main__":
    main()
