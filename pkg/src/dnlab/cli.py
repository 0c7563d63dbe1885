"""Command line front end: ``dnlab <command> ...``.

Exit codes: 0 success, 1 an assertion or check failed, 2 bad input.
"""
from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ThreadPoolExecutor

from . import fileio
from .approx import approximating_sweep, cutoff_sequence, main_and_killing, neumann_parts
from .errors import DnlabError, EvalError, InvariantError, NotAdmissible, ScenarioError, SpecError
from .exhaustion import greens_function, metric_balls, royden_decompose
from .forms import (
    check_admissible, compose_form, dirichlet_part, markov_check, neumann, star_test_batch, trace_form,
)
from .graph import energy
from .scenarios import SCENARIOS, Scenario, run_scenario
from .star import StarGraph, harmonic_measure, qdn_matrix, trace

log = logging.getLogger("dnlab")


class InputError(Exception):
    pass


def _emit(args, payload) -> None:
    text = fileio.dump(payload)
    if getattr(args, "out", None):
        fileio.dump(payload, args.out)
    print(text)


def _graph(args):
    if not args.spec:
        raise InputError("--spec is required")
    return fileio.load_graph(args.spec)


def _star(args) -> StarGraph:
    if getattr(args, "spec", None):
        return fileio.star_from_spec(fileio.read_json(args.spec))
    return StarGraph(args.N, args.weights, args.depth)


# ---------------------------------------------------------------------------


def cmd_green(args) -> int:
    g = _graph(args)
    vertex = args.vertex if args.vertex is not None else g.labels[g.root]
    ex = metric_balls(g, root=vertex, levels=args.levels)
    ga = greens_function(g, vertex, ex, tol=args.tol)
    fin = ga.final
    _emit(args, {
        "vertex": vertex,
        "radii": list(ga.radii),
        "diagonal": ga.diagonal,
        "verdict": ga.verdict,
        "monotone": ga.monotone,
        "growth_exponent": ga.growth_exponent,
        "sup_minus_diagonal": fin.sup_norm() - float(fin.values[ga.base]),
    })
    return 0 if ga.monotone else 1


def cmd_decompose(args) -> int:
    g = _graph(args)
    f = fileio.load_function(g, args.f)
    split = royden_decompose(g, f, metric_balls(g, levels=args.levels), tol=args.tol)
    _emit(args, {
        "radius": split.radius,
        "energy_f": energy(g, f),
        "energy_f0": energy(g, split.f0),
        "energy_fh": energy(g, split.fh),
        "pythagorean_residual": split.pythagorean_residual,
        "harmonicity_residual": split.harmonicity_residual,
        "f0": fileio.function_to_json(split.f0),
        "fh": fileio.function_to_json(split.fh),
    })
    return 0


def cmd_star_qdn(args) -> int:
    s = _star(args)
    q = qdn_matrix(s)
    _emit(args, {"N": s.N, "depth": s.depth, "matrix": q.matrix, "eigenvalues": q.eigenvalues()})
    return 0


def cmd_star_trace(args) -> int:
    s = _star(args)
    f = fileio.load_function(s.graph, args.f)
    tr = trace(s, f)
    _emit(args, {"trace": tr.values, "error_bound": tr.error_bound})
    return 0


def cmd_star_measure(args) -> int:
    s = _star(args)
    mu = harmonic_measure(s, args.vertex)
    _emit(args, {"vertex": mu.base, "weights": mu.weights, "total": mu.total})
    return 0


def _boundary_form(args, s):
    if args.q:
        return fileio.load_boundary_form(args.q)
    return qdn_matrix(s)


def cmd_forms_trace(args) -> int:
    s = _star(args)
    if args.form == "neumann":
        Q = neumann(s)
    elif args.form == "dirichlet-part":
        Q = dirichlet_part(s)
    else:
        Q = compose_form(s, _boundary_form(args, s), verify=True, seed=args.seed)
    A = trace_form(s, Q)
    _emit(args, {"form": args.form, "matrix": A.matrix})
    return 0


def cmd_forms_compose(args) -> int:
    s = _star(args)
    q = _boundary_form(args, s)
    if args.verify:
        rep = check_admissible(s, q, seed=args.seed)
        out = {
            "q_psd": rep.q_psd, "difference_psd": rep.difference_psd,
            "difference_markov_matrix": rep.difference_markov_matrix,
            "sampled_checks": rep.sampled.checked, "sampled_violations": len(rep.sampled.violations),
            "admissible": rep.admissible,
        }
        if rep.admissible:
            out["trace_matrix"] = trace_form(s, compose_form(s, q, verify=False)).matrix
        _emit(args, out)
        return 0 if rep.admissible else 1
    _emit(args, {"trace_matrix": trace_form(s, compose_form(s, q, verify=False)).matrix})
    return 0


def cmd_forms_check(args) -> int:
    suites = {
        "main-theorem": "main-theorem-roundtrip",
        "star-toy": "star-toy",
        "counterexample": "z-lattice-counterexample",
    }
    if args.suite == "markov":
        s = _star(args)
        q = _boundary_form(args, s)
        F = star_test_batch(s, args.samples, args.seed)
        results = {"energy": markov_check(neumann(s), F).passed}
        try:
            results["composed"] = markov_check(compose_form(s, q, seed=args.seed), F).passed
        except NotAdmissible as exc:
            results["composed"] = f"not admissible: {exc}"
        _emit(args, results)
        return 0 if all(v is True for v in results.values()) else 1
    rep = run_scenario(Scenario(suites[args.suite], {}, args.seed))
    print(rep.text())
    return 0 if rep.passed else 1


def cmd_approx_sweep(args) -> int:
    g = _graph(args)
    f = fileio.load_function(g, args.f)
    alphas = [float(a) for a in args.alphas.split(",") if a.strip()]
    res = approximating_sweep(g, f, alphas)
    _emit(args, {"alphas": res.alphas, "values": res.values, "limit": res.limit,
                 "target": res.target, "monotone": res.monotone})
    return 0 if res.monotone else 1


def cmd_approx_parts(args) -> int:
    g = _graph(args)
    f = fileio.load_function(g, args.f)
    mk = main_and_killing(neumann(g), f, cutoff_sequence(g, args.levels))
    main, kill = neumann_parts(g, f)
    _emit(args, {"QM": mk.QM, "Qk": mk.Qk, "Q": mk.Q, "history": mk.history,
                 "neumann_main": main, "neumann_killing": kill})
    return 0


def cmd_scenario(args) -> int:
    params = fileio.read_json(args.spec) if args.spec else {}
    if args.tol is not None:
        params["tol"] = args.tol
    if args.levels is not None:
        params["levels"] = args.levels
    names = list(SCENARIOS) if args.name == "all" else [args.name]
    jobs = [Scenario(n, params if args.name != "all" else {}, args.seed) for n in names]
    if args.parallel and len(jobs) > 1:
        with ThreadPoolExecutor() as pool:
            reports = list(pool.map(run_scenario, jobs))
    else:
        reports = [run_scenario(j) for j in jobs]
    text = "\n\n".join(r.text() for r in reports)
    print(text)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write("".join(r.csv() if i == 0 else r.csv().split("\n", 1)[1] for i, r in enumerate(reports)))
    return 0 if all(r.passed for r in reports) else 1


# ---------------------------------------------------------------------------


def _star_options(p):
    p.add_argument("--spec", help="star generator spec (JSON)")
    p.add_argument("--N", type=int, default=3)
    p.add_argument("--weights", default="geometric:2")
    p.add_argument("--depth", type=int, default=30)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="also write the result to this file")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="dnlab", description="Dirichlet forms on infinite weighted graphs.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("green", parents=[common], help="Green's function on an exhaustion")
    p.add_argument("--spec", required=True)
    p.add_argument("--vertex")
    p.add_argument("--levels", type=int, default=8)
    p.add_argument("--tol", type=float, default=1e-6)
    p.set_defaults(fn=cmd_green)

    p = sub.add_parser("decompose", parents=[common], help="Royden decomposition of a function")
    p.add_argument("--spec", required=True)
    p.add_argument("--f", required=True)
    p.add_argument("--levels", type=int)
    p.add_argument("--tol", type=float, default=1e-8)
    p.set_defaults(fn=cmd_decompose)

    star = sub.add_parser("star", help="star graphs and their boundary").add_subparsers(dest="action", required=True)
    p = star.add_parser("qdn", parents=[common])
    _star_options(p)
    p.set_defaults(fn=cmd_star_qdn)
    p = star.add_parser("trace", parents=[common])
    _star_options(p)
    p.add_argument("--f", required=True)
    p.set_defaults(fn=cmd_star_trace)
    p = star.add_parser("measure", parents=[common])
    _star_options(p)
    p.add_argument("--vertex", default="0")
    p.set_defaults(fn=cmd_star_measure)

    forms = sub.add_parser("forms", help="boundary forms and checks").add_subparsers(dest="action", required=True)
    p = forms.add_parser("trace", parents=[common])
    _star_options(p)
    p.add_argument("--form", choices=("neumann", "dirichlet-part", "composed"), default="neumann")
    p.add_argument("--q", help="boundary form file for --form composed")
    p.set_defaults(fn=cmd_forms_trace)
    p = forms.add_parser("compose", parents=[common])
    _star_options(p)
    p.add_argument("--q", help="boundary form file (default: the Dirichlet-to-Neumann form)")
    p.add_argument("--verify", action="store_true")
    p.set_defaults(fn=cmd_forms_compose)
    p = forms.add_parser("check", parents=[common])
    _star_options(p)
    p.add_argument("--suite", choices=("main-theorem", "star-toy", "counterexample", "markov"),
                   default="main-theorem")
    p.add_argument("--q")
    p.add_argument("--samples", type=int, default=1000)
    p.set_defaults(fn=cmd_forms_check)

    approx = sub.add_parser("approx", help="approximating forms").add_subparsers(dest="action", required=True)
    p = approx.add_parser("sweep", parents=[common])
    p.add_argument("--spec", required=True)
    p.add_argument("--f", required=True)
    p.add_argument("--alphas", default="1,10,100,1000,10000,100000,1000000")
    p.set_defaults(fn=cmd_approx_sweep)
    p = approx.add_parser("parts", parents=[common])
    p.add_argument("--spec", required=True)
    p.add_argument("--f", required=True)
    p.add_argument("--levels", type=int)
    p.set_defaults(fn=cmd_approx_parts)

    p = sub.add_parser("scenario", parents=[common], help="run a verification scenario")
    p.add_argument("name", choices=sorted(SCENARIOS) + ["all"])
    p.add_argument("--spec", help="JSON object of scenario parameters")
    p.add_argument("--tol", type=float)
    p.add_argument("--levels", type=int)
    p.add_argument("--csv", help="write plot-ready series as CSV")
    p.add_argument("--parallel", action="store_true", help="run independent scenarios concurrently")
    p.set_defaults(fn=cmd_scenario)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.fn(args)
    except (InputError, SpecError, InvariantError, EvalError, ScenarioError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DnlabError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
