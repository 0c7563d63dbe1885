import itertools

import numpy as np
import pytest

from dnlab.errors import NotHarmonic, NotTransient, SingularSystem
from dnlab.exhaustion import (
    DirichletOperator, dirichlet_solve, greens_function, harmquadrat_residual, is_transient,
    metric_balls, reproducing_residual, royden_decompose,
)
from dnlab.graph import VertexFunction, build_graph, energy, energy_bilinear, lattice_graph, path_graph
from dnlab.star import StarGraph, harmonic_basis


def test_zero_problem_has_zero_solution(star):
    g = star.graph
    u = dirichlet_solve(g, metric_balls(g)[4])
    assert not np.any(u.ext)


def test_two_vertex_solve(two_vertex):
    u = dirichlet_solve(two_vertex, ["a", "b"], VertexFunction.delta(two_vertex, "a"))
    assert np.allclose(u.values, [1.0, 1.0], atol=1e-14)


def test_harmonic_function_solves_its_own_problem(star):
    g = star.graph
    h2 = harmonic_basis(star)[1]
    K = metric_balls(g, radii=[5]).sets[0]
    u = dirichlet_solve(g, K, boundary=h2)
    assert np.max(np.abs(u.values - h2.values)) <= 1e-10


def test_direct_and_cg_agree():
    L = lattice_graph(3, 7, killing=None)
    K = metric_balls(L, radii=[6]).sets[0]
    rhs = np.zeros(L.n_ext)
    rhs[[0, 3, 17]] = [1.0, -2.0, 0.5]
    a = dirichlet_solve(L, K, rhs, method="direct")
    b = dirichlet_solve(L, K, rhs, method="cg")
    assert np.max(np.abs(a.ext - b.ext)) <= 1e-10


def test_singular_system_detected():
    g = build_graph({"vertices": ["a", "b"], "edges": [{"u": "a", "v": "b", "w": 1}]})
    with pytest.raises(SingularSystem):
        DirichletOperator(g, ["a", "b"])
    with pytest.raises(ValueError):
        DirichletOperator(g, ["a"], method="magic")


def test_metric_balls_are_increasing(star):
    ex = metric_balls(star.graph, levels=5)
    assert len(ex) == 5
    sizes = [K.size for K in ex.sets]
    assert sizes == sorted(set(sizes))
    assert all(star.graph.root in K for K in ex.sets)
    with pytest.raises(ValueError):
        metric_balls(star.graph, radii=[3, 2])


def test_path_green_is_resistance_to_exterior():
    # unit resistors in series: g^(n)(0) = r + 1 with zero exterior at distance r + 1
    p = path_graph(40)
    ga = greens_function(p, "0", metric_balls(p, radii=[4, 9, 19, 39]))
    assert np.allclose(ga.diagonal, [5.0, 10.0, 20.0, 40.0], rtol=1e-13)
    assert ga.monotone
    assert ga.verdict == "recurrent-suspected"


def test_star_green_is_parallel_ray_resistance():
    s = StarGraph(3, ("geometric:2", "geometric:3", "power:2"), 40)
    g = s.graph
    ga = greens_function(g, "0", metric_balls(g, levels=4))
    # exterior sits one edge past the deepest vertex
    R = [sum(1.0 / f.weight(k) for k in range(1, 42)) for f in s.families]
    assert abs(ga.diagonal[-1] - 1.0 / sum(1.0 / r for r in R)) <= 1e-12
    assert ga.monotone


def _dense_lattice_green(radius, solve_radius):
    """Independent assembly from coordinates: unit edges, zero exterior."""
    pts = [p for p in itertools.product(range(-solve_radius, solve_radius + 1), repeat=3)
           if sum(map(abs, p)) <= solve_radius]
    idx = {p: i for i, p in enumerate(pts)}
    A = np.zeros((len(pts), len(pts)))
    for p, i in idx.items():
        A[i, i] = 6.0
        for ax, st in itertools.product(range(3), (1, -1)):
            q = list(p)
            q[ax] += st
            j = idx.get(tuple(q))
            if j is not None:
                A[i, j] = -1.0
    e = np.zeros(len(pts))
    e[idx[(0, 0, 0)]] = 1.0
    return np.linalg.solve(A, e)[idx[(0, 0, 0)]]


def test_lattice_green_matches_dense_oracle():
    L = lattice_graph(3, 6, killing=None)
    ga = greens_function(L, L.root, metric_balls(L, radii=[2, 4, 6]))
    for r, v in zip(ga.radii, ga.diagonal):
        assert abs(v - _dense_lattice_green(6, r)) <= 1e-12
    for u in ga.levels:
        assert abs(u.sup_norm() - u.values[ga.base]) <= 1e-10


def test_reproducing_property_on_star(star):
    g = star.graph
    ga = greens_function(g, "0", metric_balls(g, levels=3))
    f = VertexFunction.from_dict(g, {"0": 1.5, "1_2": -0.5, "2_3": 2.0})
    assert reproducing_residual(g, ga.final, "0", f) <= 1e-8


def test_two_vertex_green(two_vertex):
    ga = greens_function(two_vertex, "a", metric_balls(two_vertex, root="a"))
    assert np.allclose(ga.final.values, [1.0, 1.0])
    assert ga.verdict == "transient"


def test_transience_certificates():
    assert is_transient(StarGraph.uniform(3, "geometric:2", 10).graph)
    assert not is_transient(path_graph(10))
    assert is_transient(path_graph(10, killing={"0": 1.0}))
    assert is_transient(lattice_graph(3, 3, killing=None))


def test_royden_of_finite_support(star):
    g = star.graph
    f = VertexFunction.from_dict(g, {"0": 1.0, "1_1": -2.0})
    split = royden_decompose(g, f, metric_balls(g))
    assert np.max(np.abs(split.f0.ext - f.ext)) <= 1e-10
    assert np.max(np.abs(split.fh.ext)) <= 1e-10


def test_royden_of_harmonic_function(star):
    g = star.graph
    h2 = harmonic_basis(star)[1]
    split = royden_decompose(g, h2, metric_balls(g))
    assert np.max(np.abs(split.f0.ext)) <= 1e-10
    assert split.harmonicity_residual <= 1e-10


def test_royden_energy_split(star):
    g = star.graph
    f = VertexFunction.delta(g, "0") + harmonic_basis(star)[1]
    split = royden_decompose(g, f, metric_balls(g))
    # Q(δ_0) = 3·b_1 = 6 and the cross term vanishes because ℒh₂(0) = 0
    assert abs(energy(g, split.f0) - 6.0) <= 1e-12
    assert abs(energy(g, f) - 6.0 - energy(g, split.fh)) <= 1e-8
    assert abs(energy_bilinear(g, split.f0, split.fh)) <= 1e-8 * (1 + energy(g, f))


def test_royden_requires_transience():
    p = path_graph(20)
    with pytest.raises(NotTransient):
        royden_decompose(p, VertexFunction.delta(p, "0"), metric_balls(p))


def test_harmquadrat(star):
    g = star.graph
    h = harmonic_basis(star)
    one = VertexFunction.constant(g, 1.0)
    assert harmquadrat_residual(g, one, "0") == 0.0
    assert harmquadrat_residual(g, h[1], "0") <= 1e-10
    assert harmquadrat_residual(g, 1 + h[2], "2_3") <= 1e-10
    with pytest.raises(NotHarmonic):
        harmquadrat_residual(g, VertexFunction.delta(g, "0"), "0")
