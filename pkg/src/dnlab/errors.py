"""Exception hierarchy shared by all dnlab modules."""


class DnlabError(Exception):
    """Base class for every error raised by dnlab."""


class SpecError(DnlabError, ValueError):
    """A graph, function or form file could not be parsed."""


class InvariantError(DnlabError, ValueError):
    """Input parsed but violates a structural invariant (symmetry, positivity, connectivity)."""


class EvalError(DnlabError, KeyError):
    """A function was evaluated at a vertex where it is undefined."""

    def __str__(self):  # KeyError quotes its message otherwise
        return str(self.args[0]) if self.args else ""


class TailError(DnlabError, ValueError):
    """A tail rule makes an infinite sum diverge."""


class SingularSystem(DnlabError, ArithmeticError):
    pass


class SolverDiverged(DnlabError, ArithmeticError):
    pass


class NotTransient(DnlabError, ValueError):
    pass


class NoConvergence(DnlabError, ArithmeticError):
    pass


class NotHarmonic(DnlabError, ValueError):
    pass


class SingularLambdaSystem(DnlabError, ArithmeticError):
    pass


class InfiniteEnergy(DnlabError, ValueError):
    pass


class NotInDomain(DnlabError, ValueError):
    pass


class NotAdmissible(DnlabError, ValueError):
    pass


class NotEvaluable(DnlabError, ValueError):
    pass


class NoStabilization(DnlabError, ArithmeticError):
    pass


class ScenarioError(DnlabError, ValueError):
    pass
