"""JSON problem files: parsing and up-front validation.

Every dimension is checked before any numerical work starts; failures raise
:class:`ProblemError`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable

import numpy as np

from . import algebra as alg
from . import module as mod
from .calculus import Curve
from .expr import ExprError, Expression, algebra_function, module_function, rhs_function
from .ode import IVP, HigherOrderODE, LinearODE, reduce_order

DEFAULTS = {"N": 4096, "tol": 1e-8, "max_iter": 64, "seed": 0, "jobs": 1}


class ProblemError(ValueError):
    pass


@dataclass
class Problem:
    raw: dict
    algebra: alg.FiniteDimAlgebra
    module: mod.BanachModule
    curve: Curve
    kind: str
    ode: IVP | LinearODE | HigherOrderODE | None
    solver: dict
    outputs: dict
    exact: Callable | None = None
    integrand: dict | None = None
    source: str = ""
    notes: list = field(default_factory=list)

    def first_order(self) -> IVP | LinearODE:
        if isinstance(self.ode, HigherOrderODE):
            return reduce_order(self.ode)
        return self.ode


def bundled_examples() -> list[str]:
    return sorted(p.name[:-5] for p in resources.files("lambdaode.problems").iterdir() if p.name.endswith(".json"))


def bundled_path(name: str) -> Path:
    ref = resources.files("lambdaode.problems") / f"{name}.json"
    return Path(str(ref))


def read_problem(path) -> dict:
    """Read a problem file; a bundled-example name (``example1`` or ``example1.json``) is also accepted."""
    p = Path(path)
    if not p.is_file() and p.parent == Path("."):
        stem = p.stem if p.suffix == ".json" else p.name
        if (resources.files("lambdaode.problems") / f"{stem}.json").is_file():
            p = bundled_path(stem)
    text = p.read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemError(f"{path}: invalid JSON ({exc})") from None


def _scalar(v, where):
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return v
    if isinstance(v, list) and len(v) == 2 and all(isinstance(x, (int, float)) for x in v):
        return complex(v[0], v[1])
    if isinstance(v, str):
        try:
            return complex(v.replace(" ", ""))
        except ValueError:
            pass
    raise ProblemError(f"{where}: expected a number, [re, im] pair, or complex literal, got {v!r}")


def _vector(v, n, where):
    if not isinstance(v, list) or len(v) != n:
        raise ProblemError(f"{where}: expected a list of {n} numbers, got {v!r}")
    vals = [_scalar(x, where) for x in v]
    return np.array(vals, dtype=complex if any(isinstance(x, complex) for x in vals) else float)


def _build_algebra(block: dict) -> alg.FiniteDimAlgebra:
    if not isinstance(block, dict):
        raise ProblemError("algebra block must be an object")
    p = float(block.get("p", 1.0))
    if "preset" in block:
        try:
            return alg.preset(str(block["preset"]), block.get("n"), p)
        except ValueError as exc:
            raise ProblemError(f"algebra: {exc}") from None
    for key in ("dim", "structure", "unit", "sigma"):
        if key not in block:
            raise ProblemError(f"algebra: missing field {key!r}")
    n = int(block["dim"])
    if n < 1:
        raise ProblemError("algebra: dim must be positive")
    c = _vector(block["structure"], n ** 3, "algebra.structure").reshape(n, n, n)
    unit = _vector(block["unit"], n, "algebra.unit")
    sigma = _vector(block["sigma"], n, "algebra.sigma")
    field_ = "complex" if any(np.iscomplexobj(a) for a in (c, unit, sigma)) else block.get("field", "real")
    labels = block.get("labels") or ()
    try:
        A = alg.FiniteDimAlgebra(c, unit, sigma, p, tuple(labels), field=field_)
    except ValueError as exc:
        raise ProblemError(f"algebra: {exc}") from None
    report = A.check_axioms()
    if not report.passed:
        bad = [f"{c.name} (violation {c.violation:.3g})" for c in report.checks if not c.passed]
        raise ProblemError("algebra: axioms fail: " + ", ".join(bad))
    return A


def _norm_spec(spec, default_p):
    if spec is None:
        return default_p, None
    if isinstance(spec, (int, float)):
        return float(spec), None
    if isinstance(spec, str) and spec in ("inf", "infinity"):
        return np.inf, None
    if isinstance(spec, dict):
        return float(spec.get("p", default_p)), spec.get("weights")
    raise ProblemError(f"module.norm: expected an exponent or {{p, weights}}, got {spec!r}")


def _build_module(block: dict, A: alg.FiniteDimAlgebra) -> mod.BanachModule:
    if not isinstance(block, dict):
        raise ProblemError("module block must be an object")
    p, weights = _norm_spec(block.get("norm"), A.norm_exponent)
    if "module_preset" in block:
        try:
            V = mod.module_preset(str(block["module_preset"]), A, block.get("dim"), p)
        except ValueError as exc:
            raise ProblemError(f"module: {exc}") from None
        if weights is not None:
            V = mod.BanachModule(A, V.actions, p, _vector(weights, V.dim, "module.norm.weights").real, V.name)
        return V
    for key in ("dim", "actions"):
        if key not in block:
            raise ProblemError(f"module: missing field {key!r}")
    m = int(block["dim"])
    acts = block["actions"]
    if not isinstance(acts, list) or len(acts) != A.dim:
        raise ProblemError(f"module.actions: need {A.dim} matrices (one per algebra basis element)")
    R = np.stack([_vector(a, m * m, f"module.actions[{i}]").reshape(m, m) for i, a in enumerate(acts)])
    try:
        V = mod.BanachModule(A, R, p, None if weights is None else _vector(weights, m, "module.norm.weights").real)
    except ValueError as exc:
        raise ProblemError(f"module: {exc}") from None
    resid = V.representation_residual()
    if resid > 1e-10:
        raise ProblemError(f"module: actions are not a representation of the algebra (residual {resid:.3g})")
    return V


def _build_curve(block: dict, A: alg.FiniteDimAlgebra, N: int) -> Curve:
    if not isinstance(block, dict):
        raise ProblemError("curve block must be an object")
    p = float(block.get("p", 2.0))
    if "segment" in block:
        seg = block["segment"]
        start = _vector(seg.get("from"), A.dim, "curve.segment.from")
        end = _vector(seg.get("to"), A.dim, "curve.segment.to")
        try:
            return Curve.segment(start, end, N, p, float(seg.get("alpha", 0.0)), float(seg.get("beta", 1.0)))
        except ValueError as exc:
            raise ProblemError(f"curve: {exc}") from None
    if "preset" in block:
        try:
            return Curve.preset(str(block["preset"]), A.dim, N, p)
        except ValueError as exc:
            raise ProblemError(f"curve: {exc}") from None
    raise ProblemError("curve: give either 'segment' or 'preset'")


def _expr(build, src, V, where):
    try:
        fn = build(str(src), V)
    except ExprError as exc:
        raise ProblemError(f"{where}: {exc}") from None
    return fn


def _probe(fn, where, *args):
    try:
        fn(*args)
    except (ExprError, ValueError) as exc:
        raise ProblemError(f"{where}: {exc}") from None


def load_problem(source, overrides: dict | None = None) -> Problem:
    """Parse and validate a problem (path, bundled name, or already-decoded dict)."""
    raw = source if isinstance(source, dict) else read_problem(source)
    if not isinstance(raw, dict):
        raise ProblemError("problem file must contain a JSON object")
    if str(raw.get("version")) != "1":
        raise ProblemError(f"unsupported problem version {raw.get('version')!r} (expected \"1\")")
    for key in ("algebra", "module", "curve"):
        if key not in raw:
            raise ProblemError(f"missing block {key!r}")
    solver = {**DEFAULTS, **{k: v for k, v in raw.get("solver", {}).items() if v is not None}}
    solver.update({k: v for k, v in (overrides or {}).items() if v is not None})
    N = int(solver.get("N", raw["curve"].get("segment", {}).get("N", DEFAULTS["N"])))
    if N < 2:
        raise ProblemError("solver.N must be at least 2")
    solver["N"] = N
    if not float(solver["tol"]) > 0:
        raise ProblemError("solver.tol must be positive")

    A = _build_algebra(raw["algebra"])
    V = _build_module(raw["module"], A)
    curve = _build_curve(raw["curve"], A, N)
    probe_t = curve.t[:3]

    ode_block = raw.get("ode")
    ode = None
    kind = "none"
    exact = None
    if ode_block is not None:
        kind = ode_block.get("kind", "ivp")
        t0 = float(ode_block.get("t0", curve.alpha))
        if not curve.alpha <= t0 <= curve.beta:
            raise ProblemError(f"ode.t0={t0} outside the curve domain [{curve.alpha}, {curve.beta}]")
        L = solver.get("L")
        M = solver.get("M")
        if kind == "ivp":
            f0 = _vector(ode_block.get("f0"), V.dim, "ode.f0")
            G = _expr(rhs_function, ode_block.get("rhs"), V, "ode.rhs")
            _probe(G, "ode.rhs", probe_t, np.broadcast_to(f0, (3, V.dim)))
            ode = IVP(V, curve, G, t0, f0, None if L is None else float(L), None if M is None else float(M))
        elif kind == "linear":
            f0 = _vector(ode_block.get("f0"), V.dim, "ode.f0")
            Af = _expr(algebra_function, ode_block.get("A"), V, "ode.A")
            _probe(Af, "ode.A", probe_t)
            g = None
            if ode_block.get("g") is not None:
                g = _expr(module_function, ode_block["g"], V, "ode.g")
                _probe(g, "ode.g", probe_t)
            ode = LinearODE(V, curve, Af, t0, f0, g, lipschitz=None if L is None else float(L))
        elif kind == "higher":
            coeffs = ode_block.get("A")
            if not isinstance(coeffs, list) or len(coeffs) < 2:
                raise ProblemError("ode.A: higher-order equations need a list of >= 2 coefficients A_0..A_{n-1}")
            fns = [_expr(algebra_function, c, V, f"ode.A[{i}]") for i, c in enumerate(coeffs)]
            for i, fn in enumerate(fns):
                _probe(fn, f"ode.A[{i}]", probe_t)
            jet = ode_block.get("jet")
            if not isinstance(jet, list) or len(jet) != len(coeffs):
                raise ProblemError(f"ode.jet: need {len(coeffs)} initial values (f, Df, ...)")
            jet = [_vector(j, V.dim, f"ode.jet[{i}]") for i, j in enumerate(jet)]
            g = None
            if ode_block.get("g") is not None:
                g = _expr(module_function, ode_block["g"], V, "ode.g")
                _probe(g, "ode.g", probe_t)
            ode = HigherOrderODE(V, curve, fns, t0, jet, g)
        else:
            raise ProblemError(f"ode.kind must be ivp, linear, or higher, got {kind!r}")
        if ode_block.get("exact") is not None:
            exact = _expr(module_function, ode_block["exact"], V, "ode.exact")
            _probe(exact, "ode.exact", probe_t)

    integrand = None
    if raw.get("integrate") is not None:
        blk = raw["integrate"]
        fn = _expr(module_function, blk.get("f"), V, "integrate.f")
        _probe(fn, "integrate.f", probe_t)
        t0 = float(blk.get("t0", curve.alpha))
        if not curve.alpha <= t0 <= curve.beta:
            raise ProblemError("integrate.t0 outside the curve domain")
        integrand = {"f": fn, "t0": t0, "source": blk.get("f")}

    outputs = dict(raw.get("outputs", {}))
    pts = outputs.get("points", [])
    for x in pts:
        if not curve.alpha <= float(x) <= curve.beta:
            raise ProblemError(f"outputs.points: {x} outside the curve domain")
    return Problem(raw, A, V, curve, kind, ode, solver, outputs, exact, integrand, str(source) if not isinstance(source, dict) else "<dict>")


__all__ = ["Problem", "ProblemError", "load_problem", "bundled_examples", "bundled_path", "Expression"]
