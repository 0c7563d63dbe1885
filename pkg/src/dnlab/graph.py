"""Weighted graphs with killing and measure, vertex functions, the formal
Laplacian and the energy form.

An infinite graph is represented by a finite *truncation* together with its
crossing edges: every edge that leaves the truncation is stored as an
"outer" edge from a truncation vertex to a *tail slot*.  A vertex function
carries values on the truncation plus a tail rule giving one constant per
slot, i.e. its (constant) values beyond the truncation.  With that
convention the Laplacian at every truncation vertex and the energy of every
function are finite, exact sums: edges strictly beyond the truncation join
vertices with equal values and contribute nothing.

Generated truncations use one slot per ray for stars and paths, and a
single slot (the one-point boundary) for lattice balls.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph

from . import kernels
from .errors import EvalError, InvariantError, SpecError, TailError
from .weights import WeightFamily, parse_family

TAIL_RULES = ("zero", "constant", "constant-per-ray")


@dataclass(frozen=True)
class Tail:
    """Values of a function beyond the truncation."""

    rule: str = "zero"
    values: tuple[float, ...] = ()

    def __post_init__(self):
        if self.rule not in TAIL_RULES:
            raise SpecError(f"unknown tail rule {self.rule!r}")
        if self.rule == "zero" and self.values:
            raise SpecError("zero tail takes no values")
        if self.rule == "constant" and len(self.values) != 1:
            raise SpecError("constant tail takes exactly one value")

    @classmethod
    def constant(cls, c: float) -> "Tail":
        return cls("constant", (float(c),))

    @classmethod
    def per_ray(cls, values: Iterable[float]) -> "Tail":
        return cls("constant-per-ray", tuple(float(v) for v in values))

    @classmethod
    def from_slots(cls, slots: np.ndarray) -> "Tail":
        slots = np.asarray(slots, dtype=float)
        if slots.size == 0 or not np.any(slots):
            return ZERO_TAIL
        if np.all(slots == slots[0]):
            return cls.constant(slots[0])
        return cls.per_ray(slots)

    @property
    def is_zero(self) -> bool:
        return self.rule == "zero" or not any(self.values)

    def slot_values(self, n_slots: int) -> np.ndarray:
        if self.rule == "zero":
            return np.zeros(n_slots)
        if self.rule == "constant":
            return np.full(n_slots, self.values[0])
        if len(self.values) != n_slots:
            raise EvalError(
                f"per-ray tail has {len(self.values)} values but the graph has {n_slots} tail slots"
            )
        return np.array(self.values, dtype=float)


ZERO_TAIL = Tail()


class WeightedGraph:
    """A connected weighted graph ``(b, c)`` over a measure ``m``.

    Parameters
    ----------
    labels : sequence of str
        Vertex names of the truncation; position is the vertex index.
    edges : iterable of (i, j, w)
        Inner edges, each unordered pair given once.
    killing, measure : array_like
        ``c >= 0`` and ``m > 0`` per truncation vertex.
    outer : iterable of (i, slot, w)
        Crossing edges from truncation vertex ``i`` to tail slot ``slot``.
    n_slots : int
        Number of tail slots (0 for a finite graph).
    tail_killing : bool
        Whether some vertex beyond the truncation has positive killing.
    tail_mass : float
        ``m`` of the complement of the truncation (``inf`` allowed).
    certificate : {"transient", "recurrent", None}
        Known type of the underlying infinite graph.
    """

    def __init__(
        self,
        labels: Sequence[str],
        edges: Iterable[tuple[int, int, float]],
        killing,
        measure,
        outer: Iterable[tuple[int, int, float]] = (),
        n_slots: int = 0,
        *,
        slot_names: Sequence[str] | None = None,
        tail_killing: bool = False,
        tail_mass: float = 0.0,
        root: int = 0,
        certificate: str | None = None,
        kind: str = "explicit",
        params: dict | None = None,
    ):
        self.labels = tuple(str(v) for v in labels)
        self.n = len(self.labels)
        if self.n == 0:
            raise InvariantError("graph has no vertices")
        self.index = {v: i for i, v in enumerate(self.labels)}
        if len(self.index) != self.n:
            raise InvariantError("duplicate vertex labels")

        e = list(edges)
        src = np.array([a for a, _, _ in e], dtype=np.intp)
        dst = np.array([b for _, b, _ in e], dtype=np.intp)
        w = np.array([x for _, _, x in e], dtype=float)
        lo, hi = np.minimum(src, dst), np.maximum(src, dst)
        self.src, self.dst, self.w = _frozen(lo), _frozen(hi), _frozen(w)

        o = list(outer)
        self.outer_src = _frozen(np.array([a for a, _, _ in o], dtype=np.intp))
        self.outer_slot = _frozen(np.array([s for _, s, _ in o], dtype=np.intp))
        self.outer_w = _frozen(np.array([x for _, _, x in o], dtype=float))
        self.n_slots = int(n_slots)
        self.slot_names = tuple(slot_names) if slot_names else tuple(
            f"inf_{j + 1}" for j in range(self.n_slots)
        )

        self.killing = _frozen(np.broadcast_to(np.asarray(killing, dtype=float), (self.n,)).copy())
        self.measure = _frozen(np.broadcast_to(np.asarray(measure, dtype=float), (self.n,)).copy())
        self.tail_killing = bool(tail_killing)
        self.tail_mass = float(tail_mass)
        self.root = int(root)
        self.certificate = certificate
        self.kind = kind
        self.params = dict(params or {})
        self._validate()

    # -- invariants ---------------------------------------------------------
    def _validate(self):
        n = self.n
        if self.src.size and (self.src.min() < 0 or self.dst.max() >= n):
            raise InvariantError("edge endpoint out of range")
        if np.any(self.src == self.dst):
            raise InvariantError("self-loops are not allowed: b(x,x) must be 0")
        if np.any(self.w < 0) or np.any(self.outer_w < 0) or not np.all(np.isfinite(self.w)):
            raise InvariantError("edge weights must be finite and nonnegative")
        pairs = self.src.astype(np.int64) * n + self.dst
        if np.unique(pairs).size != pairs.size:
            raise InvariantError("an edge is stored more than once")
        if self.outer_src.size and (
            self.outer_slot.min() < 0 or self.outer_slot.max() >= self.n_slots
        ):
            raise InvariantError("outer edge refers to a missing tail slot")
        if np.any(self.killing < 0) or not np.all(np.isfinite(self.killing)):
            raise InvariantError("killing must be finite and nonnegative")
        if np.any(self.measure <= 0) or not np.all(np.isfinite(self.measure)):
            raise InvariantError("measure must be strictly positive and finite")
        if not 0 <= self.root < n:
            raise InvariantError("root out of range")
        ncomp, _ = csgraph.connected_components(self.adjacency, directed=False)
        if ncomp != 1:
            raise InvariantError(f"graph is disconnected ({ncomp} components)")

    # -- derived structure --------------------------------------------------
    @property
    def n_ext(self) -> int:
        return self.n + self.n_slots

    @cached_property
    def adjacency(self) -> sp.csr_matrix:
        """Symmetric inner weight matrix b (n x n)."""
        a = sp.coo_matrix((self.w, (self.src, self.dst)), shape=(self.n, self.n))
        return (a + a.T).tocsr()

    @cached_property
    def ext_edges(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Inner and crossing edges over the extended index space [vertices | slots]."""
        src = np.concatenate([self.src, self.outer_src])
        dst = np.concatenate([self.dst, self.n + self.outer_slot])
        w = np.concatenate([self.w, self.outer_w])
        return _frozen(src), _frozen(dst), _frozen(w)

    @cached_property
    def laplacian_matrix(self) -> sp.csr_matrix:
        """Extended Laplacian (n_ext x n_ext); rows of tail slots are not meaningful."""
        src, dst, w = self.ext_edges
        n = self.n_ext
        b = sp.coo_matrix((w, (src, dst)), shape=(n, n))
        b = (b + b.T).tocsr()
        deg = np.asarray(b.sum(axis=1)).ravel()
        diag = deg + np.concatenate([self.killing, np.zeros(self.n_slots)])
        return (sp.diags(diag) - b).tocsr()

    @cached_property
    def degree(self) -> np.ndarray:
        """Weighted degree sum_y b(x,y) including crossing edges."""
        d = np.asarray(self.adjacency.sum(axis=1)).ravel()
        np.add.at(d, self.outer_src, self.outer_w)
        return _frozen(d)

    @cached_property
    def frontier(self) -> np.ndarray:
        mask = np.zeros(self.n, dtype=bool)
        mask[self.outer_src] = True
        return _frozen(mask)

    @cached_property
    def interior(self) -> np.ndarray:
        """Indices of vertices with no crossing edge."""
        return _frozen(np.flatnonzero(~self.frontier))

    @cached_property
    def distances(self) -> np.ndarray:
        """Graph distance from the root (number of edges)."""
        d = csgraph.shortest_path(self.adjacency, unweighted=True, indices=self.root)
        return _frozen(d.astype(int))

    def vertex(self, v) -> int:
        """Index of label ``v`` (an int is taken as an index)."""
        if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
            if 0 <= v < self.n:
                return int(v)
            raise EvalError(f"vertex index {v} out of range")
        try:
            return self.index[str(v)]
        except KeyError:
            raise EvalError(f"unknown vertex {v!r}") from None

    def vertices(self, vs) -> np.ndarray:
        return np.array([self.vertex(v) for v in vs], dtype=np.intp)

    def neighbors(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Extended indices and weights of all neighbours of ``x``."""
        i = self.vertex(x)
        row = self.adjacency.getrow(i)
        mask = self.outer_src == i
        idx = np.concatenate([row.indices, self.n + self.outer_slot[mask]])
        wts = np.concatenate([row.data, self.outer_w[mask]])
        return idx, wts

    @property
    def has_killing(self) -> bool:
        return bool(np.any(self.killing > 0)) or self.tail_killing

    def __repr__(self):
        return (
            f"WeightedGraph(kind={self.kind!r}, n={self.n}, edges={self.src.size}, "
            f"slots={self.n_slots})"
        )


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    a.setflags(write=False)
    return a


# ---------------------------------------------------------------------------
# vertex functions


class VertexFunction:
    """Real function on the truncation plus a tail rule.

    ``values[i]`` is the value at vertex index ``i``; beyond the truncation
    the function equals ``tail.slot_values(graph.n_slots)`` per slot.
    Instances are immutable.
    """

    __slots__ = ("graph", "values", "tail")

    def __init__(self, graph: WeightedGraph, values, tail: Tail = ZERO_TAIL):
        vals = np.array(values, dtype=float).reshape(-1)
        if vals.shape != (graph.n,):
            raise EvalError(f"expected {graph.n} values, got {vals.size}")
        if graph.n_slots == 0 and not tail.is_zero:
            raise EvalError("finite graph has no tail")
        tail.slot_values(graph.n_slots)  # validates arity
        vals.setflags(write=False)
        self.graph = graph
        self.values = vals
        self.tail = tail

    # constructors
    @classmethod
    def from_ext(cls, graph: WeightedGraph, ext) -> "VertexFunction":
        ext = np.asarray(ext, dtype=float)
        return cls(graph, ext[: graph.n], Tail.from_slots(ext[graph.n:]))

    @classmethod
    def from_dict(cls, graph, mapping: dict, tail: Tail = ZERO_TAIL) -> "VertexFunction":
        vals = np.zeros(graph.n)
        for k, v in mapping.items():
            vals[graph.vertex(k)] = float(v)
        return cls(graph, vals, tail)

    @classmethod
    def delta(cls, graph, x) -> "VertexFunction":
        vals = np.zeros(graph.n)
        vals[graph.vertex(x)] = 1.0
        return cls(graph, vals)

    @classmethod
    def constant(cls, graph, c: float = 1.0) -> "VertexFunction":
        tail = Tail.constant(c) if graph.n_slots else ZERO_TAIL
        return cls(graph, np.full(graph.n, float(c)), tail)

    @classmethod
    def zero(cls, graph) -> "VertexFunction":
        return cls(graph, np.zeros(graph.n))

    # evaluation
    @property
    def ext(self) -> np.ndarray:
        return np.concatenate([self.values, self.tail.slot_values(self.graph.n_slots)])

    @property
    def tail_values(self) -> np.ndarray:
        return self.tail.slot_values(self.graph.n_slots)

    @property
    def is_finite_support(self) -> bool:
        return self.tail.is_zero

    def support(self) -> list[str]:
        return [self.graph.labels[i] for i in np.flatnonzero(self.values)]

    def __call__(self, v) -> float:
        g = self.graph
        if isinstance(v, str) and v in g.slot_names:
            return float(self.tail_values[g.slot_names.index(v)])
        return float(self.values[g.vertex(v)])

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.ext))) if self.graph.n_ext else 0.0

    def map(self, fn) -> "VertexFunction":
        """Pointwise ``fn`` applied to values and tail constants alike."""
        return VertexFunction.from_ext(self.graph, fn(self.ext))

    # arithmetic (pointwise, tails included)
    def _combine(self, other, op):
        if isinstance(other, VertexFunction):
            if other.graph is not self.graph:
                raise EvalError("functions live on different graphs")
            return VertexFunction.from_ext(self.graph, op(self.ext, other.ext))
        return VertexFunction.from_ext(self.graph, op(self.ext, float(other)))

    def __add__(self, other):
        return self._combine(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __rsub__(self, other):
        return self._combine(other, lambda a, b: b - a)

    def __mul__(self, other):
        return self._combine(other, np.multiply)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._combine(other, np.divide)

    def __neg__(self):
        return VertexFunction.from_ext(self.graph, -self.ext)

    def __pow__(self, p):
        return VertexFunction.from_ext(self.graph, self.ext**p)

    def allclose(self, other: "VertexFunction", atol=1e-12) -> bool:
        return bool(np.allclose(self.ext, other.ext, rtol=0.0, atol=atol))

    def __repr__(self):
        return f"VertexFunction(n={self.values.size}, tail={self.tail.rule})"


def stack(fs: Sequence[VertexFunction]) -> np.ndarray:
    """Column batch (n_ext, k) of extended values."""
    if not fs:
        raise ValueError("empty function list")
    return np.column_stack([f.ext for f in fs])


def _check_same(g: WeightedGraph, *fs: VertexFunction):
    for f in fs:
        if f.graph is not g:
            raise EvalError("function is defined on a different graph")


# ---------------------------------------------------------------------------
# Laplacian and energy


def laplacian_apply(g: WeightedGraph, f: VertexFunction, x) -> float:
    """ℒf(x) = Σ_y b(x,y)(f(x) − f(y)) + c(x) f(x), an exact finite sum."""
    _check_same(g, f)
    i = g.vertex(x)
    idx, wts = g.neighbors(i)
    ext = f.ext
    return float(np.dot(wts, ext[i] - ext[idx]) + g.killing[i] * ext[i])


def laplacian_ext(g: WeightedGraph, F: np.ndarray) -> np.ndarray:
    """ℒ applied to a batch of extended columns; returns (n, k) on the truncation."""
    src, dst, w = g.ext_edges
    F = np.asarray(F, dtype=float)
    one = F.ndim == 1
    out = kernels.edge_laplacian(src, dst, w, F)[: g.n]
    Fc = F[:, None] if one else F
    out += g.killing[:, None] * Fc[: g.n]
    return out[:, 0] if one else out


def laplacian(g: WeightedGraph, f: VertexFunction) -> np.ndarray:
    """ℒf at every truncation vertex."""
    _check_same(g, f)
    return laplacian_ext(g, f.ext)


def _check_tail_killing(g: WeightedGraph, F: np.ndarray):
    if g.tail_killing and g.n_slots:
        tails = np.asarray(F)[g.n:]
        if np.any(tails != 0):
            raise TailError("nonzero constant tail meets nonzero killing beyond the truncation")


def energy_ext(g: WeightedGraph, F: np.ndarray, H: np.ndarray | None = None) -> np.ndarray:
    """Batch energy Q̃(F_k, H_k) over extended columns; returns shape (k,)."""
    F = np.asarray(F, dtype=float)
    one = F.ndim == 1
    Fc = F[:, None] if one else F
    Hc = Fc if H is None else (np.asarray(H, float)[:, None] if one else np.asarray(H, float))
    _check_tail_killing(g, Fc)
    if H is not None:
        _check_tail_killing(g, Hc)
    src, dst, w = g.ext_edges
    val = kernels.edge_bilinear(src, dst, w, Fc, None if H is None else Hc)
    val = val + np.einsum("i,ik,ik->k", g.killing, Fc[: g.n], Hc[: g.n])
    return val[0] if one else val


def energy(g: WeightedGraph, f: VertexFunction) -> float:
    """Q̃(f) = ½ Σ b(x,y)(f(x) − f(y))² + Σ c(x) f(x)²."""
    _check_same(g, f)
    return float(energy_ext(g, f.ext))


def energy_bilinear(g: WeightedGraph, f: VertexFunction, h: VertexFunction) -> float:
    _check_same(g, f, h)
    return float(energy_ext(g, f.ext, h.ext))


def green_formula_residual(g: WeightedGraph, f: VertexFunction, h: VertexFunction) -> float:
    """|Q̃(f,h) − Σ_x f(x) ℒh(x)| for finitely supported ``f``."""
    _check_same(g, f, h)
    if not f.is_finite_support:
        raise EvalError("Green's formula needs a finitely supported f (zero tail)")
    lhs = energy_bilinear(g, f, h)
    rhs = float(np.dot(f.values, laplacian(g, h)))
    return abs(lhs - rhs)


# ---------------------------------------------------------------------------
# generators


def _measure_values(measure, dist: np.ndarray, tail_summable_mass: float):
    """Return (m, tail_mass) for "summable", "uniform" or a positive number."""
    if measure == "summable":
        return 2.0 ** (-dist.astype(float)), tail_summable_mass
    if measure == "uniform":
        measure = 1.0
    try:
        val = float(measure)
    except (TypeError, ValueError):
        raise SpecError(f"unknown measure option {measure!r}") from None
    if val <= 0:
        raise InvariantError("measure must be positive")
    return np.full(dist.size, val), math.inf


def star_graph(
    N: int,
    families: WeightFamily | str | Sequence[WeightFamily | str],
    depth: int,
    measure="summable",
) -> WeightedGraph:
    """Star of ``N`` rays of length ``depth`` joined at the centre "0".

    Vertex ``k_j`` (label ``f"{k}_{j}"``) is the k-th vertex of ray j; the edge
    ``(k-1)_j – k_j`` has weight ``b_k^(j)`` and ``0_j`` is the centre.  The
    crossing edge of ray j has weight ``b_{depth+1}^(j)`` and ends in slot j.
    """
    fams = _ray_families(families, N)
    if depth < 1:
        raise InvariantError("star depth must be at least 1")
    labels = ["0"] + [f"{k}_{j}" for j in range(1, N + 1) for k in range(1, depth + 1)]
    edges, outer = [], []
    for j in range(1, N + 1):
        fam = fams[j - 1]
        base = 1 + (j - 1) * depth
        for k in range(1, depth + 1):
            prev = 0 if k == 1 else base + k - 2
            edges.append((prev, base + k - 1, fam.weight(k)))
        outer.append((base + depth - 1, j - 1, fam.weight(depth + 1)))
    dist = np.concatenate([[0]] + [np.arange(1, depth + 1)] * N)
    m, tail_mass = _measure_values(measure, dist, N * 2.0 ** (-depth))
    summable = [f.summable for f in fams]
    return WeightedGraph(
        labels,
        edges,
        0.0,
        m,
        outer,
        N,
        slot_names=[f"inf_{j}" for j in range(1, N + 1)],
        tail_mass=tail_mass,
        certificate="transient" if any(summable) else "recurrent",
        kind="star",
        params={"N": N, "families": tuple(fams), "depth": depth, "measure": measure},
    )


def _ray_families(families, N) -> tuple[WeightFamily, ...]:
    if N < 1:
        raise InvariantError("need at least one ray")
    if isinstance(families, (str, WeightFamily)):
        families = [families] * N
    fams = tuple(parse_family(f) if isinstance(f, str) else f for f in families)
    if len(fams) != N:
        raise SpecError(f"expected {N} ray weight families, got {len(fams)}")
    return fams


def path_graph(
    depth: int,
    family: WeightFamily | str = "constant",
    measure="uniform",
    killing: dict | None = None,
) -> WeightedGraph:
    """The half-line ℕ = {0, 1, ...} truncated at ``depth``; edge (k-1, k) has weight b_k."""
    fam = parse_family(family) if isinstance(family, str) else family
    labels = [str(k) for k in range(depth + 1)]
    edges = [(k - 1, k, fam.weight(k)) for k in range(1, depth + 1)]
    outer = [(depth, 0, fam.weight(depth + 1))]
    c = np.zeros(depth + 1)
    for v, val in (killing or {}).items():
        c[int(v)] = float(val)
    m, tail_mass = _measure_values(measure, np.arange(depth + 1), 2.0 ** (-depth))
    transient = fam.summable or bool(np.any(c > 0))
    return WeightedGraph(
        labels, edges, c, m, outer, 1,
        slot_names=["inf"],
        tail_mass=tail_mass,
        certificate="transient" if transient else "recurrent",
        kind="path",
        params={"depth": depth, "family": fam, "measure": measure},
    )


def lattice_point(label: str) -> tuple[int, ...]:
    return tuple(int(t) for t in label.split(","))


def lattice_label(p: Sequence[int]) -> str:
    return ",".join(str(int(t)) for t in p)


def lattice_sphere_size(d: int, r: int) -> int:
    """Number of points of ℤ^d with |x|_1 = r."""
    if r == 0:
        return 1
    return sum(2**k * math.comb(d, k) * math.comb(r - 1, k - 1) for k in range(1, min(d, r) + 1))


def lattice_graph(d: int, radius: int, killing="origin", measure="summable") -> WeightedGraph:
    """ℓ¹-ball of radius ``radius`` in ℤ^d with unit weights.

    All crossing edges end in a single tail slot "inf" (the one-point
    boundary of ℤ^d, d ≥ 3).  ``killing="origin"`` puts c = δ_0.
    """
    if d < 1 or radius < 1:
        raise InvariantError("lattice needs d >= 1 and radius >= 1")
    pts = [p for p in itertools.product(range(-radius, radius + 1), repeat=d)
           if sum(map(abs, p)) <= radius]
    pts.sort(key=lambda p: (sum(map(abs, p)), p))
    index = {p: i for i, p in enumerate(pts)}
    edges, outer = [], []
    for p, i in index.items():
        for axis in range(d):
            for step in (1, -1):
                q = list(p)
                q[axis] += step
                j = index.get(tuple(q))
                if j is None:
                    outer.append((i, 0, 1.0))
                elif step == 1:
                    edges.append((i, j, 1.0))
    c = np.zeros(len(pts))
    if killing == "origin":
        c[0] = 1.0
    elif killing not in (None, "none"):
        raise SpecError(f"unknown lattice killing option {killing!r}")
    dist = np.array([sum(map(abs, p)) for p in pts])
    tail = sum(lattice_sphere_size(d, r) * 2.0 ** (-r) for r in range(radius + 1, radius + 400))
    m, tail_mass = _measure_values(measure, dist, tail)
    transient = d >= 3 or bool(np.any(c > 0))
    return WeightedGraph(
        [lattice_label(p) for p in pts], edges, c, m, outer, 1,
        slot_names=["inf"],
        tail_mass=tail_mass,
        certificate="transient" if transient else "recurrent",
        kind="lattice",
        params={"d": d, "radius": radius, "killing": killing, "measure": measure},
    )


# ---------------------------------------------------------------------------
# spec parsing


def build_graph(spec: dict) -> WeightedGraph:
    """Build a graph from a JSON-compatible spec.

    Either ``{"generator": "star" | "lattice" | "path", ...params}`` (params
    may also sit under ``"params"`` or the generator may be a dict with a
    ``"type"`` key), or an explicit ``{"vertices", "edges", "killing",
    "measure"}`` description.
    """
    if not isinstance(spec, dict):
        raise SpecError("graph spec must be a JSON object")
    if "generator" in spec:
        return _build_generated(spec)
    return _build_explicit(spec)


def _build_generated(spec: dict) -> WeightedGraph:
    gen = spec["generator"]
    if isinstance(gen, dict):
        params = {k: v for k, v in gen.items() if k != "type"}
        kind = gen.get("type")
    else:
        kind = gen
        params = dict(spec.get("params", {}))
        params.update({k: v for k, v in spec.items() if k not in ("generator", "params")})
    try:
        if kind == "star":
            return star_graph(
                int(params["N"]), params.get("weights", "geometric:2"), int(params["depth"]),
                params.get("measure", "summable"),
            )
        if kind == "lattice":
            return lattice_graph(
                int(params.get("d", 3)), int(params["radius"]), params.get("killing", "origin"),
                params.get("measure", "summable"),
            )
        if kind == "path":
            return path_graph(
                int(params["depth"]), params.get("weights", "constant"),
                params.get("measure", "uniform"), params.get("killing"),
            )
    except KeyError as exc:
        raise SpecError(f"generator {kind!r} is missing parameter {exc.args[0]!r}") from None
    raise SpecError(f"unknown generator {kind!r}")


def _parse_weight(x) -> float:
    try:
        return float(str(x)) if isinstance(x, str) else float(x)
    except (TypeError, ValueError):
        raise SpecError(f"not a number: {x!r}") from None


def _build_explicit(spec: dict) -> WeightedGraph:
    if "vertices" not in spec:
        raise SpecError("explicit graph spec needs 'vertices'")
    labels = [str(v) for v in spec["vertices"]]
    index = {v: i for i, v in enumerate(labels)}

    def idx(v):
        try:
            return index[str(v)]
        except KeyError:
            raise SpecError(f"edge refers to unknown vertex {v!r}") from None

    weights: dict[tuple[int, int], float] = {}
    for e in spec.get("edges", []):
        try:
            u, v, w = idx(e["u"]), idx(e["v"]), _parse_weight(e["w"])
        except (KeyError, TypeError):
            raise SpecError(f"malformed edge {e!r}") from None
        if u == v:
            if w != 0:
                raise InvariantError(f"self-loop at {labels[u]!r}: b(x,x) must be 0")
            continue
        key = (min(u, v), max(u, v))
        if key in weights and weights[key] != w:
            raise InvariantError(
                f"asymmetric weights b({labels[u]},{labels[v]})={w} vs {weights[key]}"
            )
        weights[key] = w
    edges = [(a, b, w) for (a, b), w in weights.items() if w != 0]
    if any(w < 0 for w in weights.values()):
        raise InvariantError("edge weights must be nonnegative")

    c = np.zeros(len(labels))
    kill = spec.get("killing", [])
    items = kill.items() if isinstance(kill, dict) else ((k["v"], k["c"]) for k in kill)
    for v, val in items:
        c[idx(v)] = _parse_weight(val)

    meas = spec.get("measure", 1.0)
    if isinstance(meas, dict):
        m = np.full(len(labels), _parse_weight(meas.get("default", 1.0)))
        for v, val in meas.get("overrides", {}).items():
            m[idx(v)] = _parse_weight(val)
    else:
        m = np.full(len(labels), _parse_weight(meas))

    root = idx(spec["root"]) if "root" in spec else 0
    return WeightedGraph(
        labels, edges, c, m,
        root=root,
        certificate="transient" if np.any(c > 0) else "recurrent",
        kind="explicit",
    )


def energy_gram(g: WeightedGraph, F: np.ndarray) -> np.ndarray:
    """Matrix of Q̃(F_i, F_j) over the columns of an extended batch."""
    src, dst, w = g.ext_edges
    F = np.asarray(F, dtype=float)
    _check_tail_killing(g, F)
    D = F[src] - F[dst]
    G = D.T @ (w[:, None] * D) + F[: g.n].T @ (g.killing[:, None] * F[: g.n])
    return 0.5 * (G + G.T)
