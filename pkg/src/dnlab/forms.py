"""Form evaluators between the Dirichlet and Neumann realizations, trace
forms, the composed forms Q_q(f) = Q̃(f₀) + q(Tr f), and the checkers for
order, Markov property and the decomposition identities.

Evaluators work on column batches of extended values (see
``graph.VertexFunction.ext``) so that sampled check suites run as a few
vectorized solves rather than one solve per function.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import contractions as _contractions
from .errors import NotAdmissible, NotEvaluable, NotInDomain
from .exhaustion import RoydenProjector
from .graph import VertexFunction, WeightedGraph, energy_ext, stack
from .star import BoundaryForm, StarGraph, qdn_matrix, trace_ext

BatchFn = Callable[[np.ndarray], np.ndarray]


class FormEvaluator:
    """A quadratic form evaluated on vertex functions of one graph."""

    def __init__(self, kind: str, graph: WeightedGraph, batch: BatchFn, *,
                 star: StarGraph | None = None, q: BoundaryForm | None = None, name: str = ""):
        self.kind = kind
        self.graph = graph
        self._batch = batch
        self.star = star
        self.q = q
        self.name = name or kind

    def batch(self, F: np.ndarray) -> np.ndarray:
        F = np.asarray(F, dtype=float)
        if F.ndim == 1:
            F = F[:, None]
        return np.asarray(self._batch(F), dtype=float)

    def __call__(self, f: VertexFunction) -> float:
        if f.graph is not self.graph:
            raise NotInDomain("function lives on a different graph")
        return float(self.batch(f.ext)[0])

    def bilinear_batch(self, F: np.ndarray, H: np.ndarray) -> np.ndarray:
        both = np.hstack([F + H, F - H])
        v = self.batch(both)
        k = F.shape[1]
        return (v[:k] - v[k:]) / 4.0

    def bilinear(self, f: VertexFunction, h: VertexFunction) -> float:
        return float(self.bilinear_batch(f.ext[:, None], h.ext[:, None])[0])

    def __repr__(self):
        return f"FormEvaluator({self.name!r})"


def _as_graph(s) -> tuple[WeightedGraph, StarGraph | None]:
    return (s.graph, s) if isinstance(s, StarGraph) else (s, None)


def _check_l2(g: WeightedGraph, F: np.ndarray):
    """f ∈ ℓ²(X, m): automatic on the truncation; the tail needs finite mass or zero."""
    tails = F[g.n:]
    if math.isinf(g.tail_mass) and tails.size and np.any(tails != 0):
        raise NotInDomain("nonzero tail is not square summable for an infinite measure")


def neumann(s) -> FormEvaluator:
    """Q^(N): Q̃ restricted to finite-energy functions in ℓ²(X, m)."""
    g, star = _as_graph(s)

    def batch(F):
        _check_l2(g, F)
        return energy_ext(g, F)

    return FormEvaluator("neumann", g, batch, star=star, name="Q^(N)")


def eval_neumann(s, f: VertexFunction) -> float:
    return neumann(s)(f)


def neumann_main(s) -> FormEvaluator:
    """Q^(N) of the graph (b, 0): jump part only."""
    g, star = _as_graph(s)
    src, dst, w = g.ext_edges
    from . import kernels

    def batch(F):
        _check_l2(g, F)
        return kernels.edge_bilinear(src, dst, w, F)

    return FormEvaluator("neumann-main", g, batch, star=star, name="Q^(N)_(b,0)")


def neumann_killing(s) -> FormEvaluator:
    """Q^(N) of the totally disconnected graph (0, c): Σ c f²."""
    g, star = _as_graph(s)

    def batch(F):
        _check_l2(g, F)
        return np.einsum("i,ik,ik->k", g.killing, F[: g.n], F[: g.n])

    return FormEvaluator("neumann-killing", g, batch, star=star, name="Q^(N)_(0,c)")


def projector(s) -> RoydenProjector:
    """Royden projection onto functions supported in the whole truncation."""
    g, _ = _as_graph(s)
    return RoydenProjector(g, np.arange(g.n))


def dirichlet_part(s) -> FormEvaluator:
    """f ↦ Q̃(f₀)."""
    g, star = _as_graph(s)
    P = projector(s)
    return FormEvaluator("dirichlet-part", g, lambda F: energy_ext(g, P.project(F)),
                         star=star, name="Q̃(f0)")


def custom(graph: WeightedGraph, fn: Callable[[VertexFunction], float], name="custom") -> FormEvaluator:
    def batch(F):
        return np.array([fn(VertexFunction.from_ext(graph, F[:, k])) for k in range(F.shape[1])])

    return FormEvaluator("custom", graph, batch, name=name)


# ---------------------------------------------------------------------------
# admissibility and composed forms


@dataclass
class AdmissibilityReport:
    q_psd: bool
    difference_psd: bool
    difference_markov_matrix: bool
    sampled: "MarkovReport"

    @property
    def admissible(self) -> bool:
        return self.q_psd and self.difference_psd and self.sampled.passed


def boundary_samples(N: int, samples: int = 10_000, seed: int = 0) -> np.ndarray:
    """Random points of ℝ^N plus a structured grid (unit vectors, sign patterns, constants)."""
    rng = np.random.default_rng(seed)
    rand = np.vstack([
        rng.uniform(-2.0, 2.0, size=(samples // 2, N)),
        rng.normal(0.0, 1.5, size=(samples - samples // 2, N)),
    ])
    eye = np.eye(N)
    signs = np.array(np.meshgrid(*[[-1.0, 0.0, 1.0]] * N)).reshape(N, -1).T if N <= 8 else eye
    structured = np.vstack([eye, -eye, 2 * eye, 0.5 * eye, signs, 1.5 * signs,
                            np.ones((1, N)), np.zeros((1, N))])
    return np.vstack([rand, structured])


def check_admissible(s: StarGraph, q: BoundaryForm, samples: int = 10_000, seed: int = 0,
                     tol: float = 1e-10) -> AdmissibilityReport:
    """q PSD, q − q^DN PSD and Markovian (exact criterion and sampled contractions)."""
    diff = q - qdn_matrix(s)
    pts = boundary_samples(s.N, samples, seed)
    return AdmissibilityReport(
        q.is_psd(), diff.is_psd(), diff.is_markov_matrix(),
        markov_check(diff, pts, tol=tol),
    )


def compose_form(s: StarGraph, q: BoundaryForm, verify: bool = True, samples: int = 10_000,
                 seed: int = 0) -> FormEvaluator:
    """Q_q(f) = Q̃(f₀) + q(Tr f)."""
    if q.N != s.N:
        raise NotAdmissible(f"boundary form has size {q.N}, star has {s.N} boundary points")
    if verify:
        rep = check_admissible(s, q, samples, seed)
        if not rep.admissible:
            raise NotAdmissible(
                f"q not admissible: psd={rep.q_psd} diff_psd={rep.difference_psd} "
                f"markov_violations={len(rep.sampled.violations)}"
            )
    g = s.graph
    P = projector(s)

    def batch(F):
        return energy_ext(g, P.project(F)) + q(trace_ext(s, F))

    return FormEvaluator("composed", g, batch, star=s, q=q, name="Q_q")


def trace_form(s: StarGraph, Q: FormEvaluator) -> BoundaryForm:
    """A_ij = Q(H_{e_i}, H_{e_j})."""
    Hs = s.basis_ext @ s.lambda_map  # columns H_{e_j}
    N = s.N
    ii, jj = np.triu_indices(N)
    try:
        vals = Q.bilinear_batch(Hs[:, ii], Hs[:, jj])
    except NotInDomain as exc:
        raise NotEvaluable(f"form cannot be evaluated on harmonic extensions: {exc}") from None
    A = np.zeros((N, N))
    A[ii, jj] = vals
    A[jj, ii] = vals
    return BoundaryForm(A)


# ---------------------------------------------------------------------------
# checks


@dataclass
class MarkovReport:
    checked: int
    violations: list = field(default_factory=list)
    worst_excess: float = -math.inf

    @property
    def passed(self) -> bool:
        return not self.violations


def _values_of(form, fns) -> np.ndarray:
    if isinstance(form, BoundaryForm):
        pts = np.atleast_2d(np.asarray(fns, dtype=float))
        return pts
    if isinstance(fns, np.ndarray):
        return fns
    return stack(list(fns))


def markov_check(form, test_fns, contractions: Sequence = None, tol: float = 1e-10) -> MarkovReport:
    """Check form(C∘f) ≤ form(f) + tol·(1 + form(f)) for every f and C.

    ``form`` is a FormEvaluator (``test_fns``: list of VertexFunction or an
    extended batch) or a BoundaryForm (``test_fns``: array (k, N)).
    """
    contractions = _contractions.library() if contractions is None else contractions
    data = _values_of(form, test_fns)
    ev = form if isinstance(form, BoundaryForm) else form.batch
    before = ev(data)
    rep = MarkovReport(0)
    for C in contractions:
        after = ev(C(data))
        excess = after - before - tol * (1 + np.abs(before))
        rep.checked += excess.size
        rep.worst_excess = max(rep.worst_excess, float(np.max(excess)))
        for k in np.flatnonzero(excess > 0):
            rep.violations.append((int(k), str(C), float(before[k]), float(after[k])))
    return rep


@dataclass
class OrderReport:
    checked: int
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


def order_check(Q1: FormEvaluator, Q2: FormEvaluator, test_fns, tol: float = 1e-10) -> OrderReport:
    """Check Q1(f) ≥ Q2(f) − tol·(1 + |Q2(f)|) on every test function."""
    data = _values_of(Q1, test_fns)
    a, b = Q1.batch(data), Q2.batch(data)
    bad = np.flatnonzero(a < b - tol * (1 + np.abs(b)))
    return OrderReport(a.size, [(int(k), float(a[k]), float(b[k])) for k in bad])


def decomposition_residuals(s: StarGraph, Q: FormEvaluator, q: BoundaryForm,
                            f: VertexFunction) -> tuple[float, float]:
    """r1 = |Q(f) − Q̃(f₀) − q(Tr f)| and r2 = |Q(f) − Q^(N)(f) − (q − q^DN)(Tr f)|."""
    r1, r2 = decomposition_residuals_batch(s, Q, q, f.ext[:, None])
    return float(r1[0]), float(r2[0])


def decomposition_residuals_batch(s: StarGraph, Q: FormEvaluator, q: BoundaryForm, F: np.ndarray):
    g = s.graph
    qf = Q.batch(F)
    q0 = energy_ext(g, projector(s).project(F))
    tr = trace_ext(s, F)
    qn = neumann(s).batch(F)
    r1 = np.abs(qf - q0 - q(tr))
    r2 = np.abs(qf - qn - (q - qdn_matrix(s))(tr))
    return r1, r2


# ---------------------------------------------------------------------------
# test families on stars


def star_test_batch(s: StarGraph, count: int, seed: int = 0, compact_radius: int = 6,
                    d0_tails: bool = True) -> np.ndarray:
    """Extended batch of bounded finite-energy functions with frozen tails.

    Each column is H_φ (random φ) plus a random finitely supported part on
    the ball of radius ``compact_radius`` and, optionally, a D₀ component
    that decays along each ray like Σ_{l>k} 1/b_l.
    """
    rng = np.random.default_rng(seed)
    g = s.graph
    phis = rng.uniform(-2.0, 2.0, size=(count, s.N))
    F = s.basis_ext @ (phis @ s.lambda_map.T).T
    ball = np.flatnonzero(g.distances <= compact_radius)
    F[ball] += rng.normal(0.0, 0.5, size=(ball.size, count))
    if d0_tails:
        beta = rng.normal(0.0, 0.5, size=(s.N, count))
        for j in range(1, s.N + 1):
            fam = s.families[j - 1]
            decay = np.array([fam.tail_inv_sum(k) for k in range(1, s.depth + 1)])
            decay /= fam.inv_sum()
            F[s.ray(j)] += decay[:, None] * beta[j - 1]
    F[g.n:] = F[s.deepest]
    return F


def star_structured_functions(s: StarGraph) -> list[VertexFunction]:
    """Basis functions, extensions of coordinate functions, deltas and constants."""
    from .star import harmonic_basis, harmonic_extension

    g = s.graph
    fs = list(harmonic_basis(s))
    fs += [harmonic_extension(s, e)[0] for e in np.eye(s.N)]
    fs += [VertexFunction.delta(g, v) for v in ("0", "1_1", f"2_{s.N}")]
    fs += [VertexFunction.constant(g, 1.0), VertexFunction.constant(g, -0.7), VertexFunction.zero(g)]
    fs += [fs[1] + VertexFunction.delta(g, "0"), 0.3 * fs[1] - 0.2 * fs[-4]]
    return fs
