"""dnlab: boundary theory of Dirichlet forms on weighted graphs, computed on finite truncations."""
from .approx import (
    ApproxFormResult, approximating_form, approximating_sweep, cutoff_sequence, main_and_killing,
    neumann_parts, q_phi,
)
from .contractions import NormalContraction, apply_contraction, library
from .errors import *  # noqa: F401,F403
from .exhaustion import (
    Exhaustion, GreenApprox, RoydenSplit, dirichlet_solve, greens_function, harmquadrat_residual,
    metric_balls, royden_decompose,
)
from .forms import (
    FormEvaluator, compose_form, decomposition_residuals, eval_neumann, markov_check, neumann,
    order_check, trace_form,
)
from .graph import (
    Tail, VertexFunction, WeightedGraph, build_graph, energy, energy_bilinear, green_formula_residual,
    lattice_graph, laplacian_apply, path_graph, star_graph,
)
from .kernels import BACKEND
from .scenarios import Scenario, counterexample_form, run_scenario
from .star import (
    BoundaryForm, StarGraph, harmonic_basis, harmonic_extension, harmonic_measure, qdn_matrix, trace,
    trace_continuity_ratio,
)
from .weights import WeightFamily, parse_family

__version__ = "0.1.0"
