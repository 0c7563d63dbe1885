import math
from fractions import Fraction

import pytest

from dnlab.errors import SpecError
from dnlab.weights import WeightFamily, parse_family


def test_geometric_sums_are_exact_rationals():
    fam = parse_family("geometric:2")
    assert fam.inv_sum() == 1.0
    for D in (0, 1, 5, 30):
        exact = sum(Fraction(1, 2**k) for k in range(D + 1, D + 200))
        assert abs(fam.tail_inv_sum(D) - float(exact)) <= 1e-15 * float(exact) + 1e-300


def test_power_tail_against_direct_summation():
    fam = parse_family("power:2")
    assert abs(fam.inv_sum() - math.pi**2 / 6) <= 1e-14
    # direct partial sum plus the Euler-Maclaurin remainder of 1/k^2 beyond K
    K = 100_000
    D = 10
    head = math.fsum(1.0 / k**2 for k in range(D + 1, K + 1))
    rest = 1.0 / K - 1.0 / (2 * K**2) + 1.0 / (6 * K**3)
    assert abs(fam.tail_inv_sum(D) - (head + rest)) <= 1e-14


def test_partial_sums_complement_tails():
    fam = parse_family("geometric:3*2")
    parts = fam.partial_inv_sums(12)
    for k, p in enumerate(parts, 1):
        assert abs(p + fam.tail_inv_sum(k) - fam.inv_sum()) <= 1e-15


@pytest.mark.parametrize("text, kind, ratio, scale", [
    ("geometric:2", "geometric", 2.0, 1.0),
    (" power:2.5 ", "power", 2.5, 1.0),
    ("constant", "constant", 1.0, 1.0),
    ("constant:3", "constant", 1.0, 3.0),
    ("geometric:1.5*4", "geometric", 1.5, 4.0),
])
def test_parse(text, kind, ratio, scale):
    assert parse_family(text) == WeightFamily(kind, ratio, scale)


@pytest.mark.parametrize("text", ["geometric", "power:x", "cubic:2", "geometric:-1", "constant*0"])
def test_parse_errors(text):
    with pytest.raises(SpecError):
        parse_family(text)


def test_summability():
    assert parse_family("geometric:2").summable
    assert not parse_family("geometric:1").summable
    assert not parse_family("power:1").summable
    assert not parse_family("constant").summable
    assert parse_family("constant").tail_inv_sum(3) == math.inf
    assert parse_family("power:2*2").label() == "power:2*2"
