"""Approximating forms Q^(α), the cut-off forms Q_φ, and the split of a form
into main part Q^M and killing part Q^k."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import kernels
from .errors import NoStabilization, NotInDomain, SolverDiverged, SpecError
from .forms import FormEvaluator
from .graph import VertexFunction, WeightedGraph

DEFAULT_ALPHAS = tuple(10.0**k for k in range(7))


def truncation_laplacian(g: WeightedGraph) -> sp.csr_matrix:
    """Neumann Laplacian of the finite truncation: inner edges plus killing, crossing edges dropped."""
    n = g.n
    B = sp.coo_matrix((g.w, (g.src, g.dst)), shape=(n, n))
    B = (B + B.T).tocsr()
    deg = np.asarray(B.sum(axis=1)).ravel()
    return (sp.diags(deg + g.killing) - B).tocsc()


def truncation_energy(g: WeightedGraph, f: VertexFunction) -> float:
    """Q̃ of the truncation alone, the limit of Q^(α)(f) as α → ∞."""
    v = f.values
    d = v[g.src] - v[g.dst]
    return float(np.dot(g.w, d * d) + np.dot(g.killing, v * v))


def approximating_form(g: WeightedGraph, alpha: float, f: VertexFunction, L=None) -> float:
    """Q^(α)(f) = α⟨(I − αG_α)f, f⟩_m with G_α = (ℒ/m + α)^{-1} on the truncation.

    With v = αG_α f, i.e. (ℒ/α + M)v = Mf, the value equals ⟨ℒv, f⟩, which
    avoids the cancellation in ⟨f, f⟩_m − α⟨G_α f, f⟩_m for large α.
    """
    if alpha <= 0:
        raise SpecError("alpha must be positive")
    L = truncation_laplacian(g) if L is None else L
    M = sp.diags(g.measure)
    f_vals = f.values
    try:
        v = spla.spsolve((L / alpha + M).tocsc(), g.measure * f_vals)
    except RuntimeError as exc:  # singular factorization
        raise SolverDiverged(str(exc)) from None
    if not np.all(np.isfinite(v)):
        raise SolverDiverged("resolvent solve produced non-finite values")
    return float(f_vals @ (L @ v))


@dataclass(frozen=True)
class ApproxFormResult:
    alphas: tuple[float, ...]
    values: tuple[float, ...]
    limit: float
    target: float
    monotone: bool
    log: tuple[str, ...] = field(default=(), repr=False)

    @property
    def relative_gap(self) -> float:
        return abs(self.target - self.limit) / max(abs(self.target), 1e-300)


def approximating_sweep(g: WeightedGraph, f: VertexFunction, alphas: Sequence[float] = DEFAULT_ALPHAS,
                        mono_tol: float = 1e-12) -> ApproxFormResult:
    """Q^(α)(f) over an increasing α grid; the limit is extrapolated by the last value."""
    alphas = tuple(sorted(float(a) for a in alphas))
    L = truncation_laplacian(g)
    vals = tuple(approximating_form(g, a, f, L) for a in alphas)
    log, ok = [], True
    for (a0, v0), (a1, v1) in zip(zip(alphas, vals), zip(alphas[1:], vals[1:])):
        if v1 < v0 - mono_tol * (1 + abs(v0)):
            ok = False
            log.append(f"decrease {a0:g}->{a1:g}: {v0!r} > {v1!r}")
    return ApproxFormResult(alphas, vals, vals[-1], truncation_energy(g, f), ok, tuple(log))


# ---------------------------------------------------------------------------
# cut-off forms


def q_phi_batch(Q: FormEvaluator, phi: np.ndarray, F: np.ndarray, with_scale: bool = False):
    """Q_φ(f) = Q(φf) − Q(φf², φ) for extended columns F and one extended φ.

    With ``with_scale`` also returns the magnitude of the cancelling terms,
    which bounds the rounding error of the difference.
    """
    phi = np.asarray(phi, dtype=float)
    if np.any(phi < 0) or np.any(phi > 1):
        raise NotInDomain("cut-off must take values in [0, 1]")
    P = phi[:, None]
    pf2 = P * F * F
    Pk = np.broadcast_to(P, F.shape)
    vals = Q.batch(np.hstack([P * F, pf2 + Pk, pf2 - Pk]))
    a, bp, bm = np.split(vals, 3)
    out = a - (bp - bm) / 4.0
    if with_scale:
        return out, np.abs(a) + (np.abs(bp) + np.abs(bm)) / 4.0
    return out


def q_phi(Q: FormEvaluator, phi: VertexFunction, f: VertexFunction) -> float:
    return float(q_phi_batch(Q, phi.ext, f.ext[:, None])[0])


def q_phi_identity(g: WeightedGraph, phi: VertexFunction, f: VertexFunction) -> float:
    """½Σ b(x,y)φ(x)φ(y)(f(x)−f(y))², crossing edges included."""
    src, dst, w = g.ext_edges
    return float(kernels.edge_phi_energy(src, dst, w, phi.ext, f.ext[:, None])[0])


def cutoff_sequence(g: WeightedGraph, levels: int | None = None, root=None) -> list[VertexFunction]:
    """Increasing cut-offs: ball indicators with a one-layer ramp, ending at φ ≡ 1.

    φ_n is 1 on the ball of radius r_n, 1/2 on the next sphere and 0 beyond.
    The last member is the constant 1 including the tail, so the sequence
    reaches 1 everywhere on the truncated model.
    """
    dist = g.distances if root is None else _distances_from(g, g.vertex(root))
    rmax = int(dist.max())
    if levels is None or levels >= rmax + 1:
        radii = list(range(rmax + 1))
    else:
        radii = sorted({int(round(x)) for x in np.linspace(0, rmax, max(levels, 1))})
    seq = []
    for r in radii:
        vals = np.where(dist <= r, 1.0, np.where(dist == r + 1, 0.5, 0.0))
        seq.append(VertexFunction(g, vals))
    seq.append(VertexFunction.constant(g, 1.0))
    return seq


def _distances_from(g: WeightedGraph, x: int) -> np.ndarray:
    from scipy.sparse.csgraph import shortest_path

    return shortest_path(g.adjacency, unweighted=True, indices=x).astype(int)


@dataclass(frozen=True)
class MainKillingSplit:
    QM: float
    Qk: float
    Q: float
    history: tuple[float, ...] = field(repr=False)


def main_and_killing(Q: FormEvaluator, f: VertexFunction, phi_seq: Sequence[VertexFunction] | None = None,
                     tol: float = 1e-10) -> MainKillingSplit:
    """Q^M(f) as the limit of Q_{φ_n}(f) along increasing cut-offs, and Q^k = Q − Q^M.

    All members of the sequence are evaluated; the limit is accepted when the
    last two values agree within ``tol·(1 + |Q(f)|)`` plus the rounding
    error of the two differences.  Cut-offs that slice heavy edges make
    Q(φf) much larger than Q_φ(f), so the rounding term can dominate.
    """
    g = Q.graph
    phi_seq = cutoff_sequence(g) if phi_seq is None else list(phi_seq)
    F = f.ext[:, None]
    hist, scales = [], []
    for phi in phi_seq:
        v, sc = q_phi_batch(Q, phi.ext, F, with_scale=True)
        hist.append(float(v[0]))
        scales.append(float(sc[0]))
    hist = tuple(hist)
    total = float(Q.batch(F)[0])
    rounding = 64 * np.finfo(float).eps * (sum(scales[-2:]) if len(scales) >= 2 else 0.0)
    if len(hist) >= 2 and abs(hist[-1] - hist[-2]) > tol * (1 + abs(total)) + rounding:
        raise NoStabilization(
            f"Q_phi did not stabilize: last change {abs(hist[-1] - hist[-2]):.3e}"
        )
    QM = hist[-1]
    return MainKillingSplit(QM, total - QM, total, hist)


def neumann_parts(g: WeightedGraph, f: VertexFunction) -> tuple[float, float]:
    """Direct evaluation of Q^(N)_(b,0)(f) and Q^(N)_(0,c)(f) = Σ c f²."""
    src, dst, w = g.ext_edges
    main = float(kernels.edge_bilinear(src, dst, w, f.ext[:, None])[0])
    kill = float(np.dot(g.killing, f.values ** 2))
    return main, kill


def is_increasing_cutoff_sequence(seq: Sequence[VertexFunction]) -> bool:
    """True when the sequence is pointwise nondecreasing with values in [0, 1]."""
    prev = None
    for phi in seq:
        e = phi.ext
        if np.any(e < 0) or np.any(e > 1):
            return False
        if prev is not None and np.any(e < prev):
            return False
        prev = e
    return True

