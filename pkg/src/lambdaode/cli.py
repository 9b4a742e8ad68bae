"""Command-line front end: ``lambdaode {solve,verify,basis,decompose,integrate,selftest}``.

Exit codes: 0 success, 2 invalid problem file, 3 non-convergence or failed
certificate, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import platform
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .calculus import ftc_roundtrip, integrate, variable_upper_integral
from .expr import ExprError
from .ode import HigherOrderODE, LinearODE, picard_solve, residuals, uniqueness_check
from .problem import Problem, ProblemError, bundled_examples, load_problem
from .solspace import (NotConvergedError, decompose_solution_space, evaluation_matrix, solution_basis,
                       superposition_check, verify_module_closure)
from .stepfn import VGridFunction, read_csv, write_csv

EXIT_OK, EXIT_INVALID, EXIT_FAILED, EXIT_IO = 0, 2, 3, 4


def jsonable(x):
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        if np.iscomplexobj(x):
            return {"re": jsonable(x.real.tolist()), "im": jsonable(x.imag.tolist())}
        return jsonable(x.tolist())
    if isinstance(x, (complex, np.complexfloating)):
        return {"re": float(x.real), "im": float(x.imag)}
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if np.isfinite(x) else str(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def stamp(elapsed: float) -> dict:
    """Volatile metadata kept apart from the reproducible part of a report."""
    return {
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "runtime_s": round(elapsed, 6),
        "lambdaode": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "platform": platform.platform(),
    }


def write_report(out: Path, body: dict, elapsed: float) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / "report.json"
    doc = {"report": jsonable(body), "stamp": stamp(elapsed)}
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def _names(problem: Problem, width: int) -> list[str]:
    m = problem.module.dim
    if width == m:
        return [f"f_{j + 1}" for j in range(m)]
    names = []
    for k in range(width // m):
        prefix = "f" if k == 0 else ("Df" if k == 1 else f"D{k}f")
        names += [f"{prefix}_{j + 1}" for j in range(m)]
    return names


def _problem_summary(problem: Problem) -> dict:
    return {
        "source": Path(problem.source).name if problem.source != "<dict>" else problem.source,
        "algebra": {"name": problem.algebra.name, "dim": problem.algebra.dim, "field": problem.algebra.field,
                    "p": problem.algebra.norm_exponent},
        "module": {"name": problem.module.name, "dim": problem.module.dim, "p": problem.module.norm_exponent},
        "curve": {"name": problem.curve.name, "N": problem.curve.N, "alpha": problem.curve.alpha,
                  "beta": problem.curve.beta, "length": problem.curve.length, "p": problem.curve.p},
        "ode_kind": problem.kind,
        "solver": {k: problem.solver[k] for k in sorted(problem.solver)},
    }


def _exact_error(problem: Problem, sol: VGridFunction) -> float | None:
    if problem.exact is None:
        return None
    m = problem.module.dim
    ref = problem.exact(sol.t)
    return float(np.max(problem.module.norm(sol.values[:, :m] - ref)))


def _require_ode(problem: Problem):
    if problem.ode is None:
        raise ProblemError("this command needs an 'ode' block")
    return problem.first_order()


# ------------------------------------------------------------------ commands


def cmd_solve(problem: Problem, args) -> tuple[dict, int]:
    ode = _require_ode(problem)
    s = problem.solver
    rep = picard_solve(ode, N=s["N"], tol=float(s["tol"]), max_iter=int(s["max_iter"]), seed=int(s["seed"]))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(rep.solution.t, rep.solution.values, _names(problem, rep.solution.dim), out / "solution.csv")
    write_bounds_csv(rep.bounds_rows(), out / "bounds.csv")
    body = {"command": "solve", "problem": _problem_summary(problem), "solve": rep.to_dict()}
    tol = float(s["tol"])
    body["solve"]["residuals_within_10tol"] = rep.residual_ode <= 10 * tol and rep.residual_integral <= 10 * tol
    err = _exact_error(problem, rep.solution)
    if err is not None:
        body["solve"]["max_error_vs_exact"] = err
    pts = problem.outputs.get("points")
    if pts:
        body["solve"]["values_at_points"] = {str(x): rep.solution(np.asarray(float(x))) for x in pts}
    return body, EXIT_OK if rep.converged else EXIT_FAILED


def write_bounds_csv(rows, path: Path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iteration", "measured_diff", "apriori_bound"])
        for n, d, b in rows:
            w.writerow([n, f"{d:.17g}", f"{b:.17g}"])


def cmd_verify(problem: Problem, args) -> tuple[dict, int]:
    ode = _require_ode(problem)
    if args.solution is None:
        raise ProblemError("verify needs --solution (a solution.csv or a directory containing one)")
    path = Path(args.solution)
    if path.is_dir():
        path = path / "solution.csv"
    try:
        f = read_csv(path)
    except ValueError as exc:
        raise ProblemError(str(exc)) from None
    if f.dim != (ode.module.dim):
        raise ProblemError(f"solution has {f.dim} columns, the problem's state space has dimension {ode.module.dim}")
    if abs(f.alpha - problem.curve.alpha) > 1e-12 or abs(f.beta - problem.curve.beta) > 1e-12:
        raise ProblemError("solution grid does not span the curve's parameter domain")
    tol = float(problem.solver["tol"])
    r_ode, r_int = residuals(ode, f)
    limit = 10 * tol
    body = {
        "command": "verify",
        "problem": _problem_summary(problem),
        "solution_file": path.name,
        "N": f.N,
        "residual_ode": r_ode,
        "residual_integral": r_int,
        "residual_limit": limit,
        "passed": r_ode <= limit and r_int <= limit,
    }
    err = _exact_error(problem, f)
    if err is not None:
        body["max_error_vs_exact"] = err
    if body["passed"]:
        # compare against a fresh Picard solve on the same grid
        ref = picard_solve(ode, N=f.N, tol=tol, max_iter=int(problem.solver["max_iter"]),
                           seed=int(problem.solver["seed"]))
        u = uniqueness_check(ode, f, ref.solution, tol=limit)
        body["uniqueness"] = u.to_dict()
    return body, EXIT_OK if body["passed"] else EXIT_FAILED


def _linear_homogeneous(problem: Problem) -> LinearODE:
    ode = _require_ode(problem)
    if not isinstance(ode, LinearODE):
        raise ProblemError("basis/decompose need a linear ('linear' or 'higher') ODE")
    if isinstance(problem.ode, HigherOrderODE) and problem.ode.g is not None:
        raise ProblemError("basis/decompose need a homogeneous equation (drop 'g')")
    if not ode.homogeneous:
        raise ProblemError("basis/decompose need a homogeneous equation (drop 'g')")
    return ode


def _basis_body(problem: Problem, args, s) -> dict:
    t0 = s.ode.t0
    pts = [t0] + [float(x) for x in problem.outputs.get("points", [problem.curve.beta]) if float(x) != t0]
    evs = {}
    for x in pts:
        E = evaluation_matrix(s, x)
        evs[repr(float(x))] = {"matrix": E.matrix, "condition": E.condition}
    A = problem.algebra
    closure = {}
    for i in range(A.dim):
        c = verify_module_closure(s, A.basis(i))
        label = A.basis_labels[i] if A.basis_labels else f"b{i + 1}"
        closure[label] = {"base_residuals": c.base_residuals, "acted_residuals": c.acted_residuals,
                          "passed": c.passed}
    sup = superposition_check(s, seed=int(problem.solver["seed"]))
    ev0 = s.eval_matrix_at(t0)
    return {
        "dim_V": s.ode.module.dim,
        "dim_sol": s.dim,
        "residual_tol": s.residual_tol,
        "solutions": [
            {"index": j + 1, "iterations": r.iterations, "converged": r.converged,
             "residual_ode": r.residual_ode, "residual_integral": r.residual_integral,
             "certified": ok, "stop_reason": r.stop_reason, "certificate": r.certificate}
            for j, (r, ok) in enumerate(zip(s.reports, s.certified))
        ],
        "evaluation_matrices": evs,
        "eval_at_t0_is_identity": bool(np.array_equal(ev0, np.eye(s.dim))),
        "closure": closure,
        "superposition": {"max_residual": sup.max_residual, "limit": sup.limit, "passed": sup.passed},
    }


def _solve_basis(problem: Problem, args):
    ode = _linear_homogeneous(problem)
    sv = problem.solver
    s = solution_basis(ode, N=sv["N"], tol=float(sv["tol"]), max_iter=int(sv["max_iter"]), jobs=int(sv["jobs"]))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    names = [f"F{j + 1}_{c}" for j in range(s.dim) for c in _names(problem, ode.module.dim)]
    vals = np.hstack([F.values for F in s.basis_solutions])
    write_csv(s.t, vals, names, out / "basis.csv")
    return s


def _basis_ok(body: dict) -> bool:
    return (all(x["certified"] for x in body["solutions"]) and body["superposition"]["passed"]
            and all(c["passed"] for c in body["closure"].values()) and body["dim_sol"] == body["dim_V"])


def cmd_basis(problem: Problem, args) -> tuple[dict, int]:
    s = _solve_basis(problem, args)
    body = {"command": "basis", "problem": _problem_summary(problem), **_basis_body(problem, args, s)}
    body["passed"] = _basis_ok(body)
    return body, EXIT_OK if body["passed"] else EXIT_FAILED


def cmd_decompose(problem: Problem, args) -> tuple[dict, int]:
    s = _solve_basis(problem, args)
    body = {"command": "decompose", "problem": _problem_summary(problem), **_basis_body(problem, args, s)}
    d = decompose_solution_space(s, seed=int(problem.solver["seed"]))
    body["decomposition"] = d.to_dict()
    body["sigma_normed"] = problem.module.check_sigma_normed(seed=int(problem.solver["seed"])).to_dict()
    if d.repeated_summands:
        body["decomposition"]["note"] = ("isomorphic summands occur more than once; Krull-Schmidt fixes "
                                         "multiplicities, so repeats are reported rather than merged")
    body["passed"] = _basis_ok(body)
    return body, EXIT_OK if body["passed"] else EXIT_FAILED


def cmd_integrate(problem: Problem, args) -> tuple[dict, int]:
    if problem.integrand is None:
        raise ProblemError("integrate needs an 'integrate' block with an expression 'f'")
    curve = problem.curve
    f = curve.grid(problem.integrand["f"])
    t0 = problem.integrand["t0"]
    poset, F = variable_upper_integral(f, curve, t0)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    poset.to_csv(out / "ipost.csv")
    write_csv(F.t, F.values, [f"F_{j + 1}" for j in range(F.dim)], out / "solution.csv")
    ftc = ftc_roundtrip(f, curve, t0, norm=problem.module.norm)
    body = {
        "command": "integrate",
        "problem": _problem_summary(problem),
        "integrand": problem.integrand["source"],
        "t0": t0,
        "integral": integrate(f, curve),
        "curve_length": curve.length,
        "ftc": ftc.to_dict(),
    }
    return body, EXIT_OK


def cmd_selftest(args) -> tuple[dict, int]:
    from .selftest import run_selftest

    results = run_selftest(seed=args.seed, verbose=not args.quiet)
    passed = all(r["passed"] for r in results)
    return {"command": "selftest", "checks": results, "passed": passed}, EXIT_OK if passed else EXIT_FAILED


COMMANDS = {
    "solve": cmd_solve,
    "verify": cmd_verify,
    "basis": cmd_basis,
    "decompose": cmd_decompose,
    "integrate": cmd_integrate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lambdaode", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_file=True):
        if with_file:
            p.add_argument("problem", help="problem JSON file, or the name of a bundled example")
        p.add_argument("--grid", type=int, default=None, help="number of grid cells N (default 4096)")
        p.add_argument("--tol", type=float, default=None, help="Picard stopping tolerance (default 1e-8)")
        p.add_argument("--max-iter", type=int, default=None, help="Picard iteration cap (default 64)")
        p.add_argument("--seed", type=int, default=None, help="seed for sampling and decomposition (default 0)")
        p.add_argument("--jobs", type=int, default=None, help="parallel basis solves (default 1)")
        p.add_argument("--out", default=None, help="output directory (default: outputs.dir or '.')")
        p.add_argument("--quiet", action="store_true", help="print nothing on success")

    for name, helptext in [("solve", "Picard solve with a-priori bound table"),
                           ("verify", "check a solution CSV against the problem's residual certificate"),
                           ("basis", "certified basis of the homogeneous solution space"),
                           ("decompose", "basis plus module decomposition of the solution space"),
                           ("integrate", "variable upper integral of an expression along the curve")]:
        p = sub.add_parser(name, help=helptext)
        common(p)
        if name == "verify":
            p.add_argument("--solution", default=None, help="solution.csv or a directory holding it")
    p = sub.add_parser("selftest", help="run the built-in invariant suite")
    common(p, with_file=False)
    sub.add_parser("examples", help="list bundled example problems")
    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "examples":
        print("\n".join(bundled_examples()))
        return EXIT_OK
    t_start = time.perf_counter()
    try:
        if args.command == "selftest":
            args.seed = 0 if args.seed is None else args.seed
            body, code = cmd_selftest(args)
            out = Path(args.out) if args.out else None
        else:
            overrides = {"N": args.grid, "tol": args.tol, "max_iter": args.max_iter, "seed": args.seed,
                         "jobs": args.jobs}
            problem = load_problem(args.problem, overrides)
            if args.out is None:
                args.out = problem.outputs.get("dir", ".")
            out = Path(args.out)
            body, code = COMMANDS[args.command](problem, args)
        if out is not None:
            path = write_report(out, body, time.perf_counter() - t_start)
        else:
            path = None
    except (ProblemError, ExprError) as exc:
        print(f"lambdaode: invalid problem: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NotConvergedError as exc:
        print(f"lambdaode: {exc}", file=sys.stderr)
        return EXIT_FAILED
    except OSError as exc:
        print(f"lambdaode: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    if not args.quiet:
        print(_summary_line(body, code, path))
    return code


def _summary_line(body: dict, code: int, path) -> str:
    status = "ok" if code == EXIT_OK else "FAILED"
    bits = [f"{body['command']}: {status}"]
    if "solve" in body:
        s = body["solve"]
        bits.append(f"iterations={s['iterations']} residual_ode={s['residual_ode']:.3g}"
                    f" residual_integral={s['residual_integral']:.3g}")
        if "max_error_vs_exact" in s:
            bits.append(f"max_error={s['max_error_vs_exact']:.3g}")
    if "residual_ode" in body:
        bits.append(f"residual_ode={body['residual_ode']:.3g} limit={body['residual_limit']:.3g}")
    if "decomposition" in body:
        bits.append(f"summands={body['decomposition']['summand_dims']}")
    elif "dim_sol" in body:
        bits.append(f"dim Sol={body['dim_sol']}")
    if "integral" in body:
        bits.append(f"integral={np.asarray(body['integral']).tolist()}")
    if path is not None:
        bits.append(f"report={os.fspath(path)}")
    return "  ".join(bits)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
