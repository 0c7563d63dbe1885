import numpy as np
import pytest

from dnlab.errors import ScenarioError, TailError
from dnlab.graph import Tail, VertexFunction, energy, lattice_graph, path_graph
from dnlab.scenarios import (
    SCENARIOS, Report, Scenario, counterexample_evaluator, counterexample_form, lattice_finite_support_family,
    roundtrip_forms, run_scenario,
)
from dnlab.star import qdn_matrix


@pytest.mark.parametrize("name", sorted(SCENARIOS))
def test_scenarios_pass(name):
    rep = run_scenario(Scenario(name))
    assert rep.passed, rep.text()
    assert rep.assertions and rep.runtime > 0


def test_unknown_scenario():
    with pytest.raises(ScenarioError):
        run_scenario(Scenario("nope"))


def test_scenarios_are_deterministic():
    a = run_scenario(Scenario("main-theorem-roundtrip", seed=4))
    b = run_scenario(Scenario("main-theorem-roundtrip", seed=4))
    assert len(a.assertions) == len(b.assertions)
    for x, y in zip(a.assertions, b.assertions):
        assert x.id == y.id and np.array_equal(np.asarray(x.got), np.asarray(y.got))


def test_star_toy_rejects_other_weights():
    with pytest.raises(ScenarioError):
        run_scenario(Scenario("star-toy", {"weights": "geometric:3"}))


def test_counterexample_values():
    L = lattice_graph(3, 4)
    one = VertexFunction.constant(L, 1.0)
    assert counterexample_form(L, one) == 0.0
    d = VertexFunction.delta(L, "0,0,0")
    # six unit edges plus the jump from the origin to the point at infinity
    assert counterexample_form(L, d) == 7.0
    with pytest.raises(ScenarioError):
        counterexample_evaluator(path_graph(4))


def test_counterexample_needs_constant_tail():
    L = lattice_graph(3, 2)
    with pytest.raises(TailError):
        counterexample_form(L, VertexFunction(L, np.zeros(L.n), Tail.per_ray([1.0])))


def test_finite_support_family_agrees_with_energy():
    L = lattice_graph(3, 5)
    fam = lattice_finite_support_family(L, 6, seed=1)
    assert all(f.is_finite_support for f in fam)
    for f in fam:
        assert abs(counterexample_form(L, f) - energy(L, f)) <= 1e-12 * (1 + energy(L, f))
    assert all(np.array_equal(a.values, b.values)
               for a, b in zip(fam, lattice_finite_support_family(L, 6, seed=1)))


def test_roundtrip_forms_are_admissible(star):
    qdn = qdn_matrix(star)
    for q in roundtrip_forms(star, seed=0):
        diff = q - qdn
        assert diff.is_psd() and diff.is_markov_matrix()


def test_report_rendering():
    rep = Report("demo", {"a": 1})
    rep.close("x", 1.0, 1.0 + 1e-13, 1e-12)
    rep.at_most("y", 1e-3, 5e-2)
    rep.holds("z", True, True)
    rep.series.append(("s", 1.0, 2.0))
    assert not rep.passed
    text = rep.text()
    assert "FAIL" in text and "PASS  x" in text and "params: a=1" in text
    assert rep.csv().splitlines() == ["scenario,series,parameter,value", "demo,s,1.0,2.0"]
