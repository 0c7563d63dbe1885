import numpy as np
import pytest

from dnlab.contractions import NormalContraction, absolute, clamp, identity, is_normal, library, truncate, unit


def test_library_members():
    assert [str(C) for C in library()] == ["identity", "abs", "unit", "clamp[-1,1]", "truncate[0.5]"]
    assert all(is_normal(C) for C in library())


def test_pointwise_definitions():
    r = np.array([-2.0, -0.7, 0.0, 0.3, 1.5])
    assert identity()(r).tolist() == r.tolist()
    assert absolute()(r).tolist() == [2.0, 0.7, 0.0, 0.3, 1.5]
    assert unit()(np.array([-1.0, 0.5, 2.0])).tolist() == [0.0, 0.5, 1.0]
    assert clamp(-1, 0.5)(r).tolist() == [-1.0, -0.7, 0.0, 0.3, 0.5]
    assert truncate(0.5)(r).tolist() == [-0.5, -0.5, 0.0, 0.3, 0.5]


@pytest.mark.parametrize("args", [("clamp", 0.5, 1.0), ("clamp", -1.0, -0.5), ("truncate", -1.0, 0.0),
                                  ("square", 0.0, 0.0)])
def test_invalid_contractions(args):
    with pytest.raises(ValueError):
        NormalContraction(*args)


def test_is_normal_detects_expansion():
    class Doubler(NormalContraction):
        def __call__(self, r):
            return 2 * np.asarray(r, dtype=float)

    assert not is_normal(Doubler("identity"))
