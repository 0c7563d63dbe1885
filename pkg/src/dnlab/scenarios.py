"""Named, deterministic verification scenarios and their reports."""
from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .approx import approximating_form, approximating_sweep, main_and_killing, neumann_parts
from .errors import ScenarioError, TailError
from .exhaustion import greens_function, metric_balls, reproducing_residual
from .forms import (
    FormEvaluator, compose_form, decomposition_residuals_batch, neumann, order_check,
    star_structured_functions, star_test_batch, trace_form,
)
from .graph import (
    VertexFunction, WeightedGraph, build_graph, energy, lattice_graph, lattice_label, path_graph, stack,
)
from .star import (
    BoundaryForm, StarGraph, gram_matrix, harmonic_basis, harmonic_extension, harmonic_measure,
    qdn_matrix, trace, trace_continuity_ratio,
)

# Where an expected value comes from.
CLOSED_FORM = "closed-form"   # explicit formula for the model
COMPUTED = "computed"         # independent computation frozen as a constant
DEFINITION = "definition"     # immediate from the definitions


@dataclass(frozen=True)
class Assertion:
    id: str
    expected: object
    got: object
    tol: float | None
    source: str
    passed: bool

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        tol = "-" if self.tol is None else f"{self.tol:.1e}"
        return f"{mark}  {self.id:<34} expected={_fmt(self.expected):<24} got={_fmt(self.got):<24} tol={tol:<8} [{self.source}]"


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, np.ndarray):
        return np.array2string(x, precision=17, separator=",").replace("\n", "")
    return str(x)


@dataclass
class Report:
    name: str
    params: dict
    assertions: list[Assertion] = field(default_factory=list)
    series: list[tuple[str, float, float]] = field(default_factory=list)
    runtime: float = 0.0

    @property
    def passed(self) -> bool:
        return all(a.passed for a in self.assertions)

    def close(self, id, expected, got, tol, source=COMPUTED):
        exp, val = np.asarray(expected, dtype=float), np.asarray(got, dtype=float)
        ok = bool(np.all(np.isfinite(val)) and np.all(np.abs(val - exp) <= tol))
        self.assertions.append(Assertion(id, expected, got, tol, source, ok))
        return ok

    def at_most(self, id, bound, got, source=COMPUTED):
        ok = bool(np.isfinite(got) and got <= bound)
        self.assertions.append(Assertion(id, f"<= {bound:g}", got, None, source, ok))
        return ok

    def holds(self, id, expected, got, source=DEFINITION):
        ok = expected == got
        self.assertions.append(Assertion(id, expected, got, None, source, ok))
        return ok

    def text(self) -> str:
        head = f"== scenario {self.name} ({'PASS' if self.passed else 'FAIL'}, {self.runtime:.3f} s)"
        params = "   params: " + ", ".join(f"{k}={v}" for k, v in sorted(self.params.items()))
        return "\n".join([head, params] + [a.line() for a in self.assertions])

    def csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["scenario", "series", "parameter", "value"])
        for s, p, v in self.series:
            w.writerow([self.name, s, repr(p), repr(v)])
        return buf.getvalue()


@dataclass(frozen=True)
class Scenario:
    name: str
    params: dict = field(default_factory=dict)
    seed: int = 0


# ---------------------------------------------------------------------------
# lattice counterexample


def counterexample_form(L: WeightedGraph, f: VertexFunction) -> float:
    """Q(f) = Q̃_(b,0)(f) + (f(∞) − f(0))² on a lattice ball with one tail slot."""
    if f.tail.rule not in ("zero", "constant"):
        raise TailError("the one-point boundary needs a constant tail")
    return float(counterexample_evaluator(L).batch(f.ext[:, None])[0])


def counterexample_evaluator(L: WeightedGraph) -> FormEvaluator:
    if L.kind != "lattice" or L.n_slots != 1:
        raise ScenarioError("counterexample form lives on a lattice ball")
    from . import kernels

    src, dst, w = L.ext_edges
    origin = L.vertex(lattice_label((0,) * L.params["d"]))
    inf = L.n

    def batch(F):
        return kernels.edge_bilinear(src, dst, w, F) + (F[inf] - F[origin]) ** 2

    return FormEvaluator("custom", L, batch, name="Q_counterexample")


def lattice_finite_support_family(L: WeightedGraph, count: int = 10, seed: int = 0) -> list[VertexFunction]:
    """Deltas near the origin plus random combinations on the ball of radius 3."""
    rng = np.random.default_rng(seed)
    d = L.params["d"]
    fs = [VertexFunction.delta(L, lattice_label((0,) * d)),
          VertexFunction.delta(L, lattice_label((1,) + (0,) * (d - 1)))]
    ball = np.flatnonzero(L.distances <= 3)
    while len(fs) < count:
        v = np.zeros(L.n)
        v[ball] = rng.normal(size=ball.size) * (rng.random(ball.size) < 0.5)
        fs.append(VertexFunction(L, v))
    return fs


# ---------------------------------------------------------------------------
# scenarios


def _star_toy(rep: Report, p: dict, seed: int):
    N, w, depth = int(p.get("N", 3)), p.get("weights", "geometric:2"), int(p.get("depth", 30))
    fine = int(p.get("fine_depth", max(depth, 40)))
    s, sf = StarGraph(N, w, depth), StarGraph(N, w, fine)
    if not (N == 3 and sf.is_uniform and sf.b1 == 2.0 and abs(sf.B[0] - 2.0) < 1e-15):
        raise ScenarioError("star-toy expects N=3 with b_k = 2^k")
    rep.close("mu_center", [1 / 3] * 3, harmonic_measure(s, "0").weights, 1e-12, CLOSED_FORM)
    G = gram_matrix(s, "truncated")
    rep.close("gram_diagonal", [8.0, 8.0], np.diag(G)[1:], 1e-8, CLOSED_FORM)
    rep.close("gram_off_diagonal", 4.0, G[1, 2], 1e-8, CLOSED_FORM)
    h = harmonic_basis(s)
    rep.close("h2_values", [-1.0, 1.0, 0.0], [h[1](s.vertex(1, 1)), h[1](s.vertex(1, 2)), h[1](s.vertex(1, 3))],
              1e-12, CLOSED_FORM)
    tr = trace(s, h[1])
    rep.close("trace_h2", [-2.0, 2.0, 0.0], tr.values, float(tr.error_bound.max()) + 1e-12, CLOSED_FORM)
    phi = np.array([1.0, 0.0, 0.0])
    q = qdn_matrix(sf)
    formula = sf.b1 / (2 * sf.B[0] * N) * sum((a - b) ** 2 for a in phi for b in phi)
    H, lam = harmonic_extension(sf, phi)
    rep.close("qdn_formula", 2 / 3, formula, 1e-12, CLOSED_FORM)
    rep.close("qdn_matrix_eval", 2 / 3, q(phi), 1e-9, COMPUTED)
    rep.close("qdn_energy_route", q(phi), energy(sf.graph, H), 1e-9, COMPUTED)
    rep.close("qdn_full_matrix", np.eye(3) - 1 / 3, q.matrix, 1e-9, COMPUTED)
    rep.close("lambda", [1 / 3, -1 / 6, -1 / 6], lam, 1e-12, COMPUTED)
    rep.close("H_center", 1 / 3, H("0"), 1e-12, COMPUTED)
    rep.close("ratio_h2", 1 / 3, trace_continuity_ratio(sf, [harmonic_basis(sf)[1]]), 1e-9, COMPUTED)
    for k in (1, 5, 10, depth):
        rep.series.append(("H_phi_ray1", float(k), H(sf.vertex(k, 1))))


def _lattice_counterexample(rep: Report, p: dict, seed: int):
    d, radius = int(p.get("d", 3)), int(p.get("radius", 10))
    if d < 3:
        raise ScenarioError("the counterexample needs d >= 3")
    L = lattice_graph(d, radius, killing="origin", measure="summable")
    Q, QN = counterexample_evaluator(L), neumann(L)
    one = VertexFunction.constant(L, 1.0)
    rep.close("Q(1)", 0.0, Q(one), 0.0, CLOSED_FORM)
    rep.close("QN(1)", 1.0, QN(one), 0.0, CLOSED_FORM)
    fam = lattice_finite_support_family(L, 10, seed)
    order = order_check(Q, QN, [one] + fam)
    rep.holds("order_fails_at_constant", [0], [k for k, _, _ in order.failures], CLOSED_FORM)
    delta0 = fam[0]
    rep.close("Q(delta_0)", 2 * d + 1.0, Q(delta0), 1e-12, COMPUTED)
    F = stack(fam)
    gap = float(np.max(np.abs(Q.batch(F) - QN.batch(F))))
    rep.close("dirichlet_side_agreement", 0.0, gap, 1e-10, CLOSED_FORM)


def _green_transience(rep: Report, p: dict, seed: int):
    levels = int(p.get("levels", 8))
    path = path_graph(int(p.get("path_depth", 256)))
    ga = greens_function(path, path.root, metric_balls(path, levels=levels))
    rep.holds("path_verdict", "recurrent-suspected", ga.verdict, COMPUTED)
    rep.holds("path_monotone", True, ga.monotone)
    for r, v in zip(ga.radii, ga.diagonal):
        rep.series.append(("path_g(x)", float(r), float(v)))

    s = StarGraph.uniform(3, "geometric:2", int(p.get("star_depth", 40)))
    gs = greens_function(s.graph, "0", metric_balls(s.graph, levels=levels))
    rep.holds("star_verdict", "transient", gs.verdict, COMPUTED)
    rep.close("star_g0(0)", 1 / 3, gs.diagonal[-1], 1e-10, COMPUTED)
    for r, v in zip(gs.radii, gs.diagonal):
        rep.series.append(("star_g(x)", float(r), float(v)))

    L = lattice_graph(3, int(p.get("radius", 10)), killing=None)
    gl = greens_function(L, L.root, metric_balls(L, levels=levels))
    for name, g, gx in (("star", s.graph, gs), ("lattice", L, gl)):
        fin = gx.final
        rep.close(f"{name}_sup_at_base", 0.0, fin.sup_norm() - fin.values[gx.base], 1e-10, CLOSED_FORM)
        rng = np.random.default_rng(seed)
        ball = np.flatnonzero(g.distances <= 2)
        worst = 0.0
        for _ in range(5):
            v = np.zeros(g.n)
            v[ball] = rng.normal(size=ball.size)
            f = VertexFunction(g, v)
            worst = max(worst, reproducing_residual(g, fin, gx.base, f) / (1 + f.sup_norm()))
        rep.at_most(f"{name}_reproducing", 1e-8, worst, CLOSED_FORM)


def roundtrip_forms(s: StarGraph, seed: int = 0) -> list[BoundaryForm]:
    """q^DN and four admissible perturbations with A·1 = 0."""
    rng = np.random.default_rng(seed)
    qdn = qdn_matrix(s)
    out = [qdn, qdn.scaled(2.0)]
    for scale in (0.5, 1.0, 3.0):
        W = rng.uniform(0.0, scale, size=(s.N, s.N))
        out.append(qdn + BoundaryForm.from_jump_weights(W + W.T))
    return out


def roundtrip_family(s: StarGraph, seed: int = 0, count: int = 20) -> np.ndarray:
    structured = stack(star_structured_functions(s))
    k = max(count - structured.shape[1], 0)
    return np.hstack([structured, star_test_batch(s, k, seed)])[:, :count]


def _roundtrip(rep: Report, p: dict, seed: int):
    s = StarGraph.uniform(int(p.get("N", 3)), p.get("weights", "geometric:2"), int(p.get("depth", 40)))
    tol = float(p.get("tol", 1e-7))
    F = roundtrip_family(s, seed, int(p.get("functions", 20)))
    for i, q in enumerate(roundtrip_forms(s, seed)):
        Q = compose_form(s, q, samples=int(p.get("samples", 10_000)), seed=seed)
        back = trace_form(s, Q)
        rep.close(f"q{i}_roundtrip", q.matrix, back.matrix, tol, CLOSED_FORM)
        r1, r2 = decomposition_residuals_batch(s, Q, back, F)
        scale = 1 + Q.batch(F)
        rep.at_most(f"q{i}_r1", tol, float(np.max(r1 / scale)), CLOSED_FORM)
        rep.at_most(f"q{i}_r2", tol, float(np.max(r2 / scale)), CLOSED_FORM)


def _approx_parts(rep: Report, p: dict, seed: int):
    two = build_graph({"vertices": ["a", "b"], "edges": [{"u": "a", "v": "b", "w": 1}],
                       "killing": [{"v": "a", "c": 1}]})
    rep.close("two_vertex_alpha1", 0.4, approximating_form(two, 1.0, VertexFunction.delta(two, "b")),
              1e-14, COMPUTED)
    s = StarGraph.uniform(3, "geometric:2", int(p.get("depth", 30)))
    res = approximating_sweep(s.graph, VertexFunction.delta(s.graph, "0"))
    rep.holds("alpha_monotone", True, res.monotone)
    rep.at_most("alpha_1e6_rel_gap", 0.01, res.relative_gap)
    for a, v in zip(res.alphas, res.values):
        rep.series.append(("Q_alpha(delta_center)", a, v))
    h2 = harmonic_basis(s)[1]
    mk = main_and_killing(neumann(s), h2)
    rep.close("star_QM", 8.0, mk.QM, 1e-7, CLOSED_FORM)
    rep.close("star_Qk", 0.0, mk.Qk, 1e-10, DEFINITION)
    L = lattice_graph(3, int(p.get("radius", 6)))
    fs = [VertexFunction.constant(L, 1.0)] + lattice_finite_support_family(L, 4, seed)
    fs.append(VertexFunction.constant(L, 0.5) + fs[3])
    for i, f in enumerate(fs):
        mk = main_and_killing(neumann(L), f)
        qm, qk = neumann_parts(L, f)
        rep.close(f"lattice_f{i}_QM", qm, mk.QM, 1e-8 * (1 + mk.Q), COMPUTED)
        rep.close(f"lattice_f{i}_Qk", qk, mk.Qk, 1e-8 * (1 + mk.Q), COMPUTED)


SCENARIOS: dict[str, Callable[[Report, dict, int], None]] = {
    "star-toy": _star_toy,
    "z-lattice-counterexample": _lattice_counterexample,
    "green-transience": _green_transience,
    "main-theorem-roundtrip": _roundtrip,
    "approx-parts": _approx_parts,
}


def run_scenario(sc: Scenario) -> Report:
    try:
        fn = SCENARIOS[sc.name]
    except KeyError:
        raise ScenarioError(f"unknown scenario {sc.name!r}; choose from {', '.join(SCENARIOS)}") from None
    rep = Report(sc.name, dict(sc.params, seed=sc.seed))
    t0 = time.perf_counter()
    fn(rep, sc.params, sc.seed)
    rep.runtime = time.perf_counter() - t0
    if not rep.assertions:
        raise ScenarioError(f"scenario {sc.name!r} produced no assertions")
    return rep


__all__ = [
    "Assertion", "Report", "Scenario", "SCENARIOS", "run_scenario", "counterexample_form",
    "counterexample_evaluator", "lattice_finite_support_family", "roundtrip_forms", "roundtrip_family",
    "CLOSED_FORM", "COMPUTED", "DEFINITION",
]
