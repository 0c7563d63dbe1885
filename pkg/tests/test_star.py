import numpy as np
import pytest

from dnlab.errors import InfiniteEnergy, InvariantError
from dnlab.graph import Tail, VertexFunction, energy
from dnlab.star import (
    BoundaryForm, StarGraph, gram_matrix, harmonic_basis, harmonic_extension, harmonic_measure, lambdas,
    qdn_matrix, trace, trace_continuity_ratio,
)


def kron_dn(resistances):
    """Schur complement of the centre in the network centre--boundary with ray resistances R_j."""
    c = 1.0 / np.asarray(resistances, dtype=float)
    return np.diag(c) - np.outer(c, c) / c.sum()


def test_basis_values(star):
    h = harmonic_basis(star)
    assert np.all(h[0].ext == 1.0)
    h2 = h[1]
    assert (h2("1_1"), h2("1_2"), h2("1_3")) == (-1.0, 1.0, 0.0)
    assert np.all(h2.values[star.ray(3)] == 0.0)
    assert star.boundary_matrix[1, 1] == 2.0 and star.boundary_matrix[0, 1] == -2.0


def test_basis_is_harmonic_on_interior(mixed_star):
    g = mixed_star.graph
    from dnlab.graph import laplacian

    # heavy edges deep in a ray amplify rounding, so scale by degree
    for h in harmonic_basis(mixed_star):
        r = np.abs(laplacian(g, h)[g.interior]) / (g.degree[g.interior] * np.abs(h.ext).max())
        assert r.max() <= 1e-14


def test_lambda_closed_form_matches_linear_system(deep_star):
    rng = np.random.default_rng(0)
    phis = rng.normal(size=(20, 3))
    closed = lambdas(deep_star, phis)
    solved = np.linalg.solve(deep_star.boundary_matrix, phis.T).T
    assert np.max(np.abs(closed - solved)) <= 1e-12
    assert np.allclose(lambdas(deep_star, [1.0, 0.0, 0.0]), [1 / 3, -1 / 6, -1 / 6], atol=1e-15)


def test_constant_extension(star):
    H, lam = harmonic_extension(star, [2.0, 2.0, 2.0])
    assert np.allclose(lam, [2.0, 0.0, 0.0])
    assert np.allclose(H.ext, 2.0)


def test_extension_approaches_boundary_values(star):
    H, _ = harmonic_extension(star, [1.0, 0.0, 0.0])
    assert abs(H("0") - 1 / 3) <= 1e-15
    along = [H(star.vertex(k, 1)) for k in range(1, star.depth + 1)]
    assert np.all(np.diff(along) > 0)
    assert abs(along[-1] - 1.0) <= trace(star, H).error_bound[0]


def test_harmonic_measures(star):
    mu0 = harmonic_measure(star, "0")
    assert np.allclose(mu0.weights, 1 / 3, atol=1e-15)
    mu = harmonic_measure(star, "3_2")
    assert abs(mu.total - 1.0) <= 1e-14
    assert np.all(mu.weights > 0) and np.all(mu.weights < 1)
    s2 = StarGraph.uniform(2, "geometric:2", 30)
    deep = [harmonic_measure(s2, s2.vertex(k, 1)).weights[0] for k in (1, 10, 30)]
    assert deep[0] < deep[1] < deep[2] and deep[2] > 1 - 1e-8


def test_measure_weights_in_unit_interval(mixed_star):
    for x in mixed_star.graph.labels[::7]:
        w = harmonic_measure(mixed_star, x).weights
        assert np.all(w > 0) and np.all(w < 1) and abs(w.sum() - 1) <= 1e-12


def test_trace_examples(star):
    g = star.graph
    f = VertexFunction.from_dict(g, {"0": 1.0, "3_2": 4.0})
    assert trace(star, f).values.tolist() == [0.0, 0.0, 0.0]
    assert trace(star, VertexFunction.constant(g, 1.0)).values.tolist() == [1.0, 1.0, 1.0]
    s20 = StarGraph.uniform(3, "geometric:2", 20)
    tr = trace(s20, harmonic_basis(s20)[1])
    assert np.all(np.abs(tr.values - [-2.0, 2.0, 0.0]) <= tr.error_bound)
    # sqrt(2 · 8 · Σ_{l>20} 2^{-l})
    assert np.allclose(tr.error_bound, np.sqrt(2 * energy(s20.graph, harmonic_basis(s20)[1]) * 2.0**-20))


def test_trace_of_infinite_energy():
    s = StarGraph.uniform(3, "geometric:2", 5)
    g = s.graph
    f = VertexFunction(g, np.full(g.n, np.inf))
    with pytest.raises(InfiniteEnergy):
        trace(s, f)


def test_uniform_qdn(star):
    A = qdn_matrix(star).matrix
    assert np.allclose(A, np.eye(3) - 1 / 3, atol=1e-15)
    q = qdn_matrix(star)
    assert abs(q([1.0, 0.0, 0.0]) - 2 / 3) <= 1e-15
    assert abs(q([3.0, 3.0, 3.0])) <= 1e-14


@pytest.mark.parametrize("fams", [
    ("geometric:2", "geometric:3", "power:2"),
    ("power:3", "power:1.5", "geometric:2*5", "geometric:4"),
])
def test_general_qdn_against_kron_oracle(fams):
    s = StarGraph(len(fams), fams, 40)
    R = [f.inv_sum() for f in s.families]
    assert np.max(np.abs(qdn_matrix(s).matrix - kron_dn(R))) <= 1e-10
    ev = np.sort(qdn_matrix(s).eigenvalues())
    assert abs(ev[0]) <= 1e-12 and ev[1] > 1e-3


def test_general_qdn_is_energy_of_extension(mixed_star):
    rng = np.random.default_rng(1)
    q = qdn_matrix(mixed_star)
    for phi in rng.normal(size=(10, 3)):
        H, _ = harmonic_extension(mixed_star, phi)
        # power-law rays converge slowly, so compare with the tail-corrected energy
        e = energy(mixed_star.graph, H)
        lam = lambdas(mixed_star, phi)
        corr = lam @ (gram_matrix(mixed_star, "corrected") - gram_matrix(mixed_star, "truncated")) @ lam
        assert abs(q(phi) - (e + corr)) <= 1e-9 * (1 + q(phi))


def test_gram_modes(star):
    an = gram_matrix(star, "analytic")
    assert an[1, 1] == 8.0 and an[1, 2] == 4.0 and np.all(an[0] == 0)
    with pytest.raises(ValueError):
        gram_matrix(star, "guess")


def test_trace_continuity_ratio(star):
    one = VertexFunction.constant(star.graph, 1.0)
    zero = VertexFunction.zero(star.graph)
    assert trace_continuity_ratio(star, [zero, one]) == 1.0
    s = StarGraph.uniform(3, "geometric:2", 40)
    assert abs(trace_continuity_ratio(s, [harmonic_basis(s)[1]]) - 1 / 3) <= 1e-9


def test_star_validation():
    with pytest.raises(InvariantError):
        StarGraph.uniform(3, "constant", 5)
    with pytest.raises(InvariantError):
        StarGraph.uniform(1, "geometric:2", 5)
    with pytest.raises(InvariantError):
        StarGraph(3, ("geometric:2", "geometric:2"), 5)


def test_boundary_form_basics():
    W = np.array([[0, 1.0, 0.5], [1.0, 0, 0], [0.5, 0, 0]])
    q = BoundaryForm.from_jump_weights(W)
    assert q.is_markov_matrix() and q.kills_constants() and q.is_psd()
    phi = np.array([2.0, -1.0, 0.0])
    assert abs(q(phi) - (1.0 * 9 + 0.5 * 4)) <= 1e-14
    assert np.allclose(q(np.vstack([phi, phi])), q(phi))
    assert BoundaryForm.from_json(q.to_json()).matrix.tolist() == q.matrix.tolist()
    assert not BoundaryForm(np.array([[1.0, 0.5], [0.5, 1.0]])).is_markov_matrix()
    assert not BoundaryForm(np.diag([1.0, -1.0])).is_psd()
    with pytest.raises(ValueError):
        q.matrix[0, 0] = 5.0


def test_tail_rule_of_frozen_functions(star):
    f = star.freeze(np.arange(star.graph.n, dtype=float))
    assert f.tail == Tail.per_ray(f.values[star.deepest])
