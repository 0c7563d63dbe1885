"""Harmonic boundary of star graphs with summable inverse ray weights.

A star with N rays whose inverse weights are summable has exactly N
harmonic boundary points ∞_1, ..., ∞_N, one per ray.  Everything here is
explicit: a basis of the bounded finite-energy harmonic functions, the
coefficient system behind harmonic extension, harmonic measures, the trace
(limit along rays, with an energy-based tail bound) and the
Dirichlet-to-Neumann matrix.

Basis functions are represented on the truncation with *frozen* tails: the
tail constant of ray j equals the value at the deepest vertex of ray j.
They are therefore harmonic at every interior vertex, and their energies
miss exactly the analytic remainder b₁²·Σ_{l>depth} 1/b_l per ray.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .errors import InfiniteEnergy, InvariantError, SingularLambdaSystem, TailError
from .graph import Tail, VertexFunction, WeightedGraph, energy, star_graph
from .weights import WeightFamily, parse_family


@dataclass(frozen=True)
class BoundaryForm:
    """Symmetric quadratic form q(φ) = φᵀAφ on an N-point boundary.

    ``wide_sense`` is a marker only: on a finite boundary every PSD matrix
    is densely defined.
    """

    matrix: np.ndarray
    wide_sense: bool = False

    def __post_init__(self):
        A = np.array(self.matrix, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise InvariantError("boundary form needs a square matrix")
        scale = max(1.0, float(np.max(np.abs(A)))) if A.size else 1.0
        if not np.allclose(A, A.T, rtol=0, atol=1e-12 * scale):
            raise InvariantError("boundary form matrix is not symmetric")
        A = 0.5 * (A + A.T)
        A.setflags(write=False)
        object.__setattr__(self, "matrix", A)

    @property
    def N(self) -> int:
        return self.matrix.shape[0]

    def __call__(self, phi):
        phi = np.asarray(phi, dtype=float)
        if phi.ndim == 1:
            return float(phi @ self.matrix @ phi)
        return np.einsum("ki,ij,kj->k", phi, self.matrix, phi)

    def bilinear(self, phi, psi) -> float:
        return float(np.asarray(phi, float) @ self.matrix @ np.asarray(psi, float))

    def __add__(self, other: "BoundaryForm") -> "BoundaryForm":
        return BoundaryForm(self.matrix + other.matrix)

    def __sub__(self, other: "BoundaryForm") -> "BoundaryForm":
        return BoundaryForm(self.matrix - other.matrix)

    def scaled(self, a: float) -> "BoundaryForm":
        return BoundaryForm(a * self.matrix)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def is_psd(self, tol: float = 1e-12) -> bool:
        ev = self.eigenvalues()
        return bool(ev[0] >= -tol * max(1.0, abs(ev[-1])))

    def kills_constants(self, tol: float = 1e-10) -> bool:
        return bool(np.max(np.abs(self.matrix @ np.ones(self.N))) <= tol)

    def is_markov_matrix(self, tol: float = 1e-12) -> bool:
        """Exact criterion on a finite set: nonpositive off-diagonal, nonnegative row sums."""
        A = self.matrix
        off = A - np.diag(np.diag(A))
        scale = max(1.0, float(np.max(np.abs(A))))
        return bool(np.all(off <= tol * scale) and np.all(A.sum(axis=1) >= -tol * scale))

    @classmethod
    def from_jump_weights(cls, W) -> "BoundaryForm":
        """q(φ) = ½ Σ_ij W_ij (φ_i − φ_j)² for symmetric W ≥ 0."""
        W = np.array(W, dtype=float)
        np.fill_diagonal(W, 0.0)
        return cls(np.diag(W.sum(axis=1)) - W)

    def to_json(self) -> dict:
        return {"N": self.N, "matrix": [repr(float(x)) for x in self.matrix.ravel()]}

    @classmethod
    def from_json(cls, data: dict) -> "BoundaryForm":
        from .errors import SpecError

        try:
            rows = data["matrix"]
            if rows and isinstance(rows[0], list):  # nested rows
                rows = [x for r in rows for x in r]
            vals = [float(str(x)) for x in rows]
            N = int(data["N"]) if "N" in data else math.isqrt(len(vals))
        except (KeyError, TypeError, ValueError) as exc:
            raise SpecError(f"malformed boundary form: {exc}") from None
        if len(vals) != N * N:
            raise SpecError(f"boundary form needs {N * N} entries, got {len(vals)}")
        return cls(np.array(vals).reshape(N, N))


@dataclass(frozen=True, eq=False)
class StarGraph:
    """N rays with per-ray weight families, truncated at ``depth``."""

    N: int
    families: tuple[WeightFamily, ...]
    depth: int
    measure: str | float = "summable"

    def __post_init__(self):
        fams = self.families
        if isinstance(fams, (str, WeightFamily)):
            fams = (fams,) * self.N
        fams = tuple(parse_family(f) if isinstance(f, str) else f for f in fams)
        object.__setattr__(self, "families", fams)
        if self.N < 2:
            raise InvariantError("a star needs at least two rays")
        if len(fams) != self.N:
            raise InvariantError(f"expected {self.N} ray families, got {len(fams)}")
        for j, f in enumerate(fams, 1):
            if not f.summable:
                raise InvariantError(f"ray {j}: inverse weights {f.label()} are not summable")

    @classmethod
    def uniform(cls, N: int = 3, family: str | WeightFamily = "geometric:2", depth: int = 20,
                measure="summable") -> "StarGraph":
        return cls(N, (family,) * N, depth, measure)

    @cached_property
    def graph(self) -> WeightedGraph:
        g = star_graph(self.N, self.families, self.depth, self.measure)
        # c ≡ 0, so 1 lies in the form domain and no extra boundary point is needed
        assert not g.has_killing
        return g

    @property
    def is_uniform(self) -> bool:
        return all(f == self.families[0] for f in self.families)

    @property
    def b1(self) -> float:
        return self.families[0].weight(1)

    @cached_property
    def resistances(self) -> np.ndarray:
        """Σ_k 1/b_k^(j) per ray."""
        return np.array([f.inv_sum() for f in self.families])

    @cached_property
    def B(self) -> np.ndarray:
        """B^(j) = b₁^(1) · Σ_k 1/b_k^(j)."""
        return self.b1 * self.resistances

    @cached_property
    def tail_sums(self) -> np.ndarray:
        """Σ_{l>depth} 1/b_l^(j) per ray."""
        return np.array([f.tail_inv_sum(self.depth) for f in self.families])

    # vertex bookkeeping
    def vertex(self, k: int, j: int) -> str:
        if k == 0:
            return "0"
        if not (1 <= j <= self.N and 1 <= k <= self.depth):
            raise KeyError(f"no vertex {k}_{j} in the truncation")
        return f"{k}_{j}"

    def ray(self, j: int) -> np.ndarray:
        base = 1 + (j - 1) * self.depth
        return np.arange(base, base + self.depth)

    @cached_property
    def deepest(self) -> np.ndarray:
        return np.array([self.ray(j)[-1] for j in range(1, self.N + 1)])

    def function(self, fn: Callable[[int, int], float]) -> VertexFunction:
        """Function from ``fn(k, j)`` (``k = 0`` is the centre) with frozen tails."""
        vals = np.empty(self.graph.n)
        vals[0] = fn(0, 1)
        for j in range(1, self.N + 1):
            vals[self.ray(j)] = [fn(k, j) for k in range(1, self.depth + 1)]
        return VertexFunction(self.graph, vals, Tail.per_ray(vals[self.deepest]))

    def freeze(self, values) -> VertexFunction:
        """Values on the truncation, tail of each ray frozen at its deepest value."""
        vals = np.asarray(values, dtype=float)
        return VertexFunction(self.graph, vals, Tail.per_ray(vals[self.deepest]))

    # harmonic basis
    @cached_property
    def basis_ext(self) -> np.ndarray:
        """Extended values (n_ext, N) of h_1, ..., h_N."""
        g = self.graph
        H = np.zeros((g.n, self.N))
        H[:, 0] = 1.0
        r1 = np.array(self.families[0].partial_inv_sums(self.depth))
        for j in range(2, self.N + 1):
            rj = np.array(self.families[j - 1].partial_inv_sums(self.depth))
            H[self.ray(1), j - 1] = -self.b1 * r1
            H[self.ray(j), j - 1] = self.b1 * rj
        tails = np.zeros((self.N, self.N))
        for j in range(self.N):
            tails[j] = H[self.deepest[j]]
        ext = np.vstack([H, tails])
        ext.setflags(write=False)
        return ext

    @cached_property
    def boundary_matrix(self) -> np.ndarray:
        """M[j, i] = h_i(∞_j): the coefficient-to-boundary-value map."""
        M = np.zeros((self.N, self.N))
        M[:, 0] = 1.0
        for i in range(1, self.N):
            M[i, i] = self.B[i]
            M[0, i] = -self.B[0]
        return M

    @cached_property
    def lambda_map(self) -> np.ndarray:
        M = self.boundary_matrix
        if np.linalg.cond(M) > 1e12:
            raise SingularLambdaSystem("harmonic coefficient system is singular")
        return np.linalg.inv(M)


def harmonic_basis(s: StarGraph) -> list[VertexFunction]:
    """h_1 ≡ 1 and, for j ≥ 2, h_j = −b₁Σ1/b_l^(1) on ray 1, +b₁Σ1/b_l^(j) on ray j."""
    return [VertexFunction.from_ext(s.graph, s.basis_ext[:, i]) for i in range(s.N)]


def lambdas(s: StarGraph, phi) -> np.ndarray:
    """Coefficients λ with Σ λ_i h_i(∞_j) = φ_j.

    Uses the closed form λ₁ = mean(φ), λ_j = (φ_j − λ₁)/B for uniform stars
    and the linear system otherwise.
    """
    phi = np.asarray(phi, dtype=float)
    if phi.shape[-1] != s.N:
        raise ValueError(f"boundary function needs {s.N} values")
    if s.is_uniform:
        lam1 = phi.mean(axis=-1, keepdims=True)
        rest = (phi[..., 1:] - lam1) / s.B[0]
        return np.concatenate([lam1, rest], axis=-1)
    try:
        return np.linalg.solve(s.boundary_matrix, phi.T).T
    except np.linalg.LinAlgError:
        raise SingularLambdaSystem("harmonic coefficient system is singular") from None


def harmonic_extension(s: StarGraph, phi) -> tuple[VertexFunction, np.ndarray]:
    """H_φ = Σ λ_i h_i on the truncation, and λ."""
    lam = lambdas(s, phi)
    return VertexFunction.from_ext(s.graph, s.basis_ext @ lam), lam


@dataclass(frozen=True)
class HarmonicMeasure:
    base: str
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def total(self) -> float:
        return float(self.weights.sum())

    def integrate(self, phi) -> float:
        return float(np.dot(self.weights, phi))


def harmonic_measure(s: StarGraph, x) -> HarmonicMeasure:
    """μ_x({∞_j}) = H_{e_j}(x)."""
    i = s.graph.vertex(x)
    row = s.basis_ext[i] @ s.lambda_map
    return HarmonicMeasure(s.graph.labels[i], row)


@dataclass(frozen=True)
class TraceResult:
    values: np.ndarray
    error_bound: np.ndarray


def trace(s: StarGraph, f: VertexFunction) -> TraceResult:
    """Tr f read at the deepest vertex of each ray.

    ``error_bound[j] = sqrt(2·Q̃(f)·Σ_{l>depth} 1/b_l^(j))`` bounds the distance
    to the limit along the ray when the untruncated function carries no more
    energy beyond the truncation than the truncation energy itself.
    """
    try:
        q = energy(s.graph, f)
    except TailError as exc:
        raise InfiniteEnergy(str(exc)) from None
    if not np.isfinite(q):
        raise InfiniteEnergy("function has infinite energy")
    vals = f.values[s.deepest].copy()
    return TraceResult(vals, np.sqrt(2.0 * q * s.tail_sums))


def trace_ext(s: StarGraph, F: np.ndarray) -> np.ndarray:
    """Batch trace: rows (k, N) from extended columns (n_ext, k)."""
    return np.asarray(F)[s.deepest].T


def gram_matrix(s: StarGraph, mode: str = "analytic") -> np.ndarray:
    """Energy Gram matrix Q̃(h_i, h_j).

    ``mode``: "analytic" (infinite sums), "truncated" (energies of the
    truncated basis functions) or "corrected" (truncated plus the analytic
    tail remainder).
    """
    N, b1 = s.N, s.b1
    if mode == "analytic":
        G = np.zeros((N, N))
        G[1:, 1:] = b1 * s.B[0]
        G[np.arange(1, N), np.arange(1, N)] += b1 * s.B[1:]
        return G
    from .graph import energy_gram

    G = energy_gram(s.graph, s.basis_ext)
    if mode == "truncated":
        return G
    if mode == "corrected":
        tail = np.zeros((N, N))
        tail[1:, 1:] = b1 * b1 * s.tail_sums[0]
        tail[np.arange(1, N), np.arange(1, N)] += b1 * b1 * s.tail_sums[1:]
        return G + tail
    raise ValueError(f"unknown Gram mode {mode!r}")


def qdn_matrix(s: StarGraph) -> BoundaryForm:
    """Dirichlet-to-Neumann form of the star.

    Uniform rays: A = (b₁/B)(I − J/N).  Otherwise the analytic Gram matrix is
    conjugated by the boundary-value-to-coefficient map.
    """
    N = s.N
    if s.is_uniform:
        A = (s.b1 / s.B[0]) * (np.eye(N) - np.ones((N, N)) / N)
        return BoundaryForm(A)
    Lam = s.lambda_map
    return BoundaryForm(Lam.T @ gram_matrix(s, "analytic") @ Lam)


def trace_continuity_ratio(s: StarGraph, fs: Sequence[VertexFunction], o="0") -> float:
    """max over nonzero f of ∫(Tr f)² dμ_o / (Q̃(f) + f(o)²)."""
    mu = harmonic_measure(s, o)
    oi = s.graph.vertex(o)
    best = 0.0
    for f in fs:
        if not np.any(f.ext):
            continue
        tr = trace(s, f).values
        norm2 = energy(s.graph, f) + f.values[oi] ** 2
        best = max(best, mu.integrate(tr**2) / norm2)
    return best
