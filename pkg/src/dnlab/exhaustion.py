"""Finite-section potential theory: Dirichlet solves on exhaustions, Green's
functions, a transience probe and the Royden decomposition.

All solves are of the form ℒu = rhs on a finite set K with u prescribed on
the rest of the extended vertex space (remaining truncation vertices and the
tail slots).  The restricted operator is a symmetric M-matrix, positive
definite as soon as every component of K touches the exterior or carries
killing.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph
from scipy.sparse.linalg import splu

from .errors import (
    EvalError,
    NoConvergence,
    NotHarmonic,
    NotTransient,
    SingularSystem,
    SolverDiverged,
)
from .graph import (
    VertexFunction,
    WeightedGraph,
    energy,
    energy_ext,
    laplacian_apply,
    laplacian_ext,
)

log = logging.getLogger(__name__)

DIRECT_LIMIT = 5000
CG_TOL = 1e-12
SOLVE_TOL = 1e-11


def pcg(A, b, tol=CG_TOL, maxiter=None):
    """Jacobi-preconditioned conjugate gradients for SPD ``A``.

    Stops when ||r|| <= tol * ||b||.  Raises SolverDiverged after ``maxiter``
    iterations (default 10 * n).
    """
    n = b.shape[0]
    maxiter = 10 * n if maxiter is None else maxiter
    d = A.diagonal()
    if np.any(d <= 0):
        raise SingularSystem("non-positive diagonal entry in CG system")
    x = np.zeros(n)
    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        return x
    r = b.copy()
    z = r / d
    p = z.copy()
    rz = r @ z
    for _ in range(maxiter):
        Ap = A @ p
        alpha = rz / (p @ Ap)
        x += alpha * p
        r -= alpha * Ap
        if np.linalg.norm(r) <= tol * bnorm:
            return x
        z = r / d
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise SolverDiverged(f"CG did not reach relative residual {tol:g} in {maxiter} iterations")


class DirichletOperator:
    """ℒ restricted to K with exterior values eliminated; factorized once."""

    def __init__(self, g: WeightedGraph, K, method: str = "auto"):
        self.graph = g
        K = _as_indices(g, K)
        self.K = K
        mask = np.zeros(g.n_ext, dtype=bool)
        mask[K] = True
        self.exterior = np.flatnonzero(~mask)
        L = g.laplacian_matrix
        rows = L[K]
        self.A = rows[:, K].tocsc()
        self.B = rows[:, self.exterior].tocsr()
        self._check_nonsingular()
        if method == "auto":
            method = "direct" if K.size <= DIRECT_LIMIT else "cg"
        if method not in ("direct", "cg"):
            raise ValueError(f"unknown solver method {method!r}")
        self.method = method
        self._lu = splu(self.A) if method == "direct" else None

    def _check_nonsingular(self):
        g, K = self.graph, self.K
        contact = (np.asarray(abs(self.B).sum(axis=1)).ravel() > 0) | (g.killing[K] > 0)
        sub = g.adjacency[K][:, K]
        ncomp, lab = csgraph.connected_components(sub, directed=False)
        grounded = np.zeros(ncomp, dtype=bool)
        grounded[lab[contact]] = True
        if not grounded.all():
            raise SingularSystem(
                "a component of K has neither exterior contact nor killing (recurrent, no exterior)"
            )

    def solve(self, rhs_K: np.ndarray, exterior_values: np.ndarray | None = None,
              tol: float = SOLVE_TOL) -> np.ndarray:
        """Solve for u on K; ``rhs_K`` may be (|K|,) or (|K|, k)."""
        b = np.array(rhs_K, dtype=float)
        if exterior_values is not None:
            b = b - self.B @ exterior_values
        if self.method == "direct":
            u = self._lu.solve(b)
        elif b.ndim == 1:
            u = pcg(self.A, b)
        else:
            u = np.column_stack([pcg(self.A, b[:, j]) for j in range(b.shape[1])])
        self._check_residual(u, b, tol)
        return u

    def _check_residual(self, u, b, tol):
        # row-scaled backward error |Au - b|_i / (Σ_j |A_ij| ‖u‖∞ + |b_i|)
        r = np.abs(self.A @ u - b)
        rowsum = np.asarray(abs(self.A).sum(axis=1)).ravel()
        umax = np.abs(u).max(axis=0) if u.size else 0.0
        scale = (rowsum[:, None] * umax if u.ndim == 2 else rowsum * umax) + np.abs(b)
        with np.errstate(invalid="ignore", divide="ignore"):
            rel = np.where(scale > 0, r / scale, 0.0)
        worst = float(rel.max()) if rel.size else 0.0
        if worst > tol:
            raise SolverDiverged(f"Dirichlet solve residual {worst:.3e} exceeds {tol:g}")


def _as_indices(g: WeightedGraph, K) -> np.ndarray:
    K = np.asarray(K) if not isinstance(K, (list, tuple, set, frozenset)) else K
    if isinstance(K, np.ndarray) and K.dtype == bool:
        return np.flatnonzero(K)
    if isinstance(K, np.ndarray) and np.issubdtype(K.dtype, np.integer):
        idx = np.unique(K.astype(np.intp))
    else:
        idx = np.unique(g.vertices(list(K)))
    if idx.size == 0:
        raise EvalError("empty solve region")
    if idx[0] < 0 or idx[-1] >= g.n:
        raise EvalError("solve region must lie in the truncation")
    return idx


def _ext_of(g: WeightedGraph, f, name: str) -> np.ndarray:
    if f is None:
        return np.zeros(g.n_ext)
    if isinstance(f, VertexFunction):
        if f.graph is not g:
            raise EvalError(f"{name} lives on a different graph")
        return f.ext
    arr = np.asarray(f, dtype=float)
    if arr.shape == (g.n,):
        return np.concatenate([arr, np.zeros(g.n_slots)])
    if arr.shape == (g.n_ext,):
        return arr
    raise EvalError(f"{name} has shape {arr.shape}, expected ({g.n},)")


def dirichlet_solve(
    g: WeightedGraph, K, rhs=None, boundary=None, *, method: str = "auto", tol: float = SOLVE_TOL
) -> VertexFunction:
    """Solve ℒu = rhs on K with u = boundary off K (including the tail)."""
    op = DirichletOperator(g, K, method)
    rhs_ext = _ext_of(g, rhs, "rhs")
    bnd = _ext_of(g, boundary, "boundary")
    u = bnd.copy()
    u[op.K] = op.solve(rhs_ext[op.K], bnd[op.exterior], tol)
    return VertexFunction.from_ext(g, u)


# ---------------------------------------------------------------------------
# exhaustions


@dataclass(frozen=True, eq=False)
class Exhaustion:
    """Metric balls K_1 ⊂ K_2 ⊂ ... around ``root`` with the given radii."""

    graph: WeightedGraph
    root: int
    radii: tuple[int, ...]
    sets: tuple[np.ndarray, ...] = field(repr=False)

    def __len__(self):
        return len(self.sets)

    def __getitem__(self, n: int) -> np.ndarray:
        return self.sets[n]


def metric_balls(
    g: WeightedGraph, root=None, levels: int | None = None, radii: Sequence[int] | None = None
) -> Exhaustion:
    """Exhaustion by graph-metric balls.

    Without ``radii``, uses ``levels`` radii evenly spaced up to the largest
    distance in the truncation (all radii 1..max when ``levels`` is None).
    """
    r0 = g.root if root is None else g.vertex(root)
    if r0 == g.root:
        dist = g.distances
    else:
        dist = csgraph.shortest_path(g.adjacency, unweighted=True, indices=r0).astype(int)
    dmax = int(dist.max())
    if radii is None:
        if levels is None or levels >= dmax:
            radii = list(range(1, dmax + 1)) if dmax else [0]
        else:
            radii = sorted({int(round(x)) for x in np.linspace(dmax / levels, dmax, levels)})
    radii = tuple(int(r) for r in radii)
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError("exhaustion radii must be strictly increasing")
    sets = []
    for r in radii:
        K = np.flatnonzero(dist <= r)
        if sets and K.size <= sets[-1].size:
            raise ValueError(f"ball of radius {r} does not grow the exhaustion")
        K.setflags(write=False)
        sets.append(K)
    return Exhaustion(g, r0, radii, tuple(sets))


# ---------------------------------------------------------------------------
# Green's function


@dataclass(frozen=True, eq=False)
class GreenApprox:
    base: int
    radii: tuple[int, ...]
    levels: tuple[VertexFunction, ...] = field(repr=False)
    diagonal: np.ndarray = field(repr=False)
    verdict: str
    monotone: bool
    growth_exponent: float | None = None

    @property
    def final(self) -> VertexFunction:
        return self.levels[-1]

    @property
    def increments(self) -> np.ndarray:
        return np.diff(self.diagonal)


def greens_function(g: WeightedGraph, x, ex: Exhaustion, tol: float = 1e-6) -> GreenApprox:
    """Finite-section Green's functions g_x^(n) = solve on K_n of ℒu = δ_x, u = 0 outside.

    The verdict is a heuristic over the diagonal sequence g_x^(n)(x):
    "transient" when the relative increment of the last two levels is below
    ``tol`` (or the exhaustion covers a finite graph exactly),
    "recurrent-suspected" when increments never shrink by more than half and
    decay no faster than 1/r^1.5, "inconclusive" otherwise.
    """
    xi = g.vertex(x)
    if xi not in set(ex[0].tolist()):
        raise EvalError("base vertex must lie in the first exhaustion level")
    rhs = np.zeros(g.n_ext)
    rhs[xi] = 1.0
    levels, diag = [], []
    for K in ex.sets:
        u = dirichlet_solve(g, K, rhs)
        levels.append(u)
        diag.append(u.values[xi])
    diag = np.array(diag)
    stacked = np.array([u.ext for u in levels])
    monotone = bool(np.all(np.diff(stacked, axis=0) >= -1e-12 * (1 + np.abs(stacked[1:]))))
    verdict, p = _transience_verdict(g, ex, diag, tol)
    return GreenApprox(xi, ex.radii, tuple(levels), diag, verdict, monotone, p)


def _transience_verdict(g, ex, diag, tol):
    if g.n_slots == 0 and ex[-1].size == g.n:
        return "transient", None
    inc = np.diff(diag)
    if inc.size >= 2 and np.all(inc[-2:] < tol * diag[-2:]):
        return "transient", None
    if inc.size >= 2 and np.all(inc > 0):
        ratios = inc[1:] / inc[:-1]
        r = np.asarray(ex.radii, dtype=float)
        # increments per unit radius decay like r^-p
        slope = inc / np.diff(r)
        p = float(-np.log(slope[-1] / slope[-2]) / np.log(r[-1] / r[-2]))
        if np.all(ratios >= 0.5) and p <= 1.5:
            return "recurrent-suspected", p
        return "inconclusive", p
    return "inconclusive", None


def reproducing_residual(g: WeightedGraph, green: VertexFunction, x, f: VertexFunction) -> float:
    """|f(x) − Q̃(g_x, f)| for a finitely supported f."""
    val = float(energy_ext(g, green.ext, f.ext))
    return abs(f(g.labels[g.vertex(x)]) - val)


# ---------------------------------------------------------------------------
# Royden decomposition


class RoydenProjector:
    """Batch projection onto functions supported in K: F ↦ F₀ with ℒF₀ = ℒF on K."""

    def __init__(self, g: WeightedGraph, K, method: str = "auto"):
        self.graph = g
        self.op = DirichletOperator(g, K, method)

    def project(self, F: np.ndarray) -> np.ndarray:
        g = self.graph
        F = np.asarray(F, dtype=float)
        LF = laplacian_ext(g, F)
        F0 = np.zeros_like(F)
        F0[self.op.K] = self.op.solve(LF[self.op.K])
        return F0


@dataclass(frozen=True, eq=False)
class RoydenSplit:
    f0: VertexFunction
    fh: VertexFunction
    pythagorean_residual: float
    harmonicity_residual: float
    radius: int
    converged: bool
    history: tuple[tuple[int, float, float], ...] = field(repr=False, default=())


def is_transient(g: WeightedGraph, ex: Exhaustion | None = None) -> bool:
    """Certificate from the generator, else the Green's function probe."""
    if g.has_killing or g.certificate == "transient":
        return True
    if g.certificate == "recurrent":
        return False
    ex = ex or metric_balls(g)
    return greens_function(g, g.root, ex).verdict == "transient"


def royden_decompose(
    g: WeightedGraph, f: VertexFunction, ex: Exhaustion, tol: float = 1e-8
) -> RoydenSplit:
    """Split f = f₀ + f_h with f₀ supported in K_n and f_h harmonic on K_n.

    Levels are visited in order; the first level (after the first) whose
    f₀ changed by less than ``tol`` in sup norm and whose Pythagorean
    residual is below ``tol·(1 + Q̃(f))`` is accepted.
    """
    if not is_transient(g, ex):
        raise NotTransient("the Royden decomposition needs a transient graph")
    if f.graph is not g:
        raise EvalError("function lives on a different graph")
    F = f.ext
    qf = energy(g, f)
    LF = laplacian_ext(g, F)
    prev = None
    history = []
    for radius, K in zip(ex.radii, ex.sets):
        op = DirichletOperator(g, K)
        F0 = np.zeros(g.n_ext)
        F0[K] = op.solve(LF[K])
        Fh = F - F0
        q0, qh = energy_ext(g, np.column_stack([F0, Fh]))
        pyth = abs(qf - q0 - qh)
        harm = float(np.max(np.abs(laplacian_ext(g, Fh)[np.union1d(K, g.interior)])))
        change = np.inf if prev is None else float(np.max(np.abs(F0 - prev)))
        history.append((radius, change, pyth))
        log.debug("royden radius=%d change=%.3e pyth=%.3e", radius, change, pyth)
        if change < tol and pyth <= tol * (1 + qf):
            return RoydenSplit(
                VertexFunction.from_ext(g, F0), VertexFunction.from_ext(g, Fh),
                pyth, harm, radius, True, tuple(history),
            )
        prev = F0
    raise NoConvergence(
        f"Royden decomposition did not settle below {tol:g}; last step {history[-1]}"
    )


# ---------------------------------------------------------------------------


def harmquadrat_residual(g: WeightedGraph, h: VertexFunction, x, harmonic_tol: float = 1e-9) -> float:
    """|−ℒ(h²)(x) − Σ_y b(x,y)(h(x) − h(y))² − c(x)h(x)²| for h harmonic near x."""
    i = g.vertex(x)
    idx, wts = g.neighbors(i)
    near = [i] + [j for j in idx if j < g.n]
    lh = max(abs(laplacian_apply(g, h, j)) for j in near)
    if lh > harmonic_tol:
        raise NotHarmonic(f"max |ℒh| = {lh:.3e} near {g.labels[i]!r}")
    ext = h.ext
    lhs = -laplacian_apply(g, h * h, i)
    rhs = float(np.dot(wts, (ext[i] - ext[idx]) ** 2) + g.killing[i] * ext[i] ** 2)
    return abs(lhs - rhs)
