"""Small typed expression language for right-hand sides in problem files.

Grammar: numeric literals (``2``, ``0.5``, ``1j``), the parameter ``x``, the
unknown ``f``, algebra basis labels (``eps``, ``i``, ``p1``...), module basis
vectors ``e1..em``, ``pi``, the operators ``+ - * / **`` and parentheses, and
``sin``, ``cos``, ``exp`` on scalars. Expressions are parsed with :mod:`ast`
and only this subset is accepted.

Values carry a kind: scalar, algebra element, or module element. ``alg * mod``
is the module action, ``alg * alg`` the algebra product, ``mod * mod`` is
allowed only for one-dimensional modules, a scalar added to an
algebra element means ``scalar * 1 + a``.
"""

from __future__ import annotations

import ast
from dataclasses import dataclass

import numpy as np

from .module import BanachModule

FUNCS = {"sin": np.sin, "cos": np.cos, "exp": np.exp}


class ExprError(ValueError):
    pass


@dataclass
class _Val:
    kind: str  # "s", "a", "m"
    data: np.ndarray


class Expression:
    def __init__(self, source: str, module: BanachModule, allow_f: bool = False):
        self.source = str(source)
        self.module = module
        self.algebra = module.algebra
        self.allow_f = allow_f
        try:
            tree = ast.parse(self.source.strip(), mode="eval")
        except SyntaxError as exc:
            raise ExprError(f"cannot parse expression {source!r}: {exc.msg}") from None
        self._check(tree.body)
        self.tree = tree.body
        self.symbols = {}
        for i, lab in enumerate(self.algebra.basis_labels):
            if lab.isidentifier():
                self.symbols[lab] = _Val("a", self.algebra.basis(i))
        for j in range(module.dim):
            e = np.zeros(module.dim)
            e[j] = 1.0
            self.symbols[f"e{j + 1}"] = _Val("m", e)

    def _check(self, node):
        allowed = (ast.BinOp, ast.UnaryOp, ast.Constant, ast.Name, ast.Call,
                   ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.USub, ast.UAdd, ast.Load)
        for sub in ast.walk(node):
            if not isinstance(sub, allowed):
                raise ExprError(f"unsupported syntax {type(sub).__name__} in {self.source!r}")
            if isinstance(sub, ast.Constant) and not isinstance(sub.value, (int, float, complex)):
                raise ExprError(f"only numeric literals are allowed in {self.source!r}")
            if isinstance(sub, ast.Call):
                if not isinstance(sub.func, ast.Name) or sub.func.id not in FUNCS or len(sub.args) != 1 or sub.keywords:
                    raise ExprError(f"only sin, cos, exp of one argument are allowed in {self.source!r}")
            if isinstance(sub, ast.Name) and sub.id == "f" and not self.allow_f:
                raise ExprError(f"the unknown f is not allowed here: {self.source!r}")

    def names(self) -> set[str]:
        return {n.id for n in ast.walk(self.tree) if isinstance(n, ast.Name)} - set(FUNCS)

    def validate(self):
        unknown = self.names() - set(self.symbols) - {"x", "pi", "f"}
        if unknown:
            raise ExprError(f"unknown symbols {sorted(unknown)} in {self.source!r}")

    # ---------------------------------------------------------------- eval

    def _eval(self, node, env) -> _Val:
        if isinstance(node, ast.Constant):
            return _Val("s", np.asarray(node.value))
        if isinstance(node, ast.Name):
            if node.id in env:
                return env[node.id]
            if node.id == "pi":
                return _Val("s", np.asarray(np.pi))
            if node.id in self.symbols:
                return self.symbols[node.id]
            raise ExprError(f"unknown symbol {node.id!r} in {self.source!r}")
        if isinstance(node, ast.UnaryOp):
            v = self._eval(node.operand, env)
            return _Val(v.kind, -v.data) if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.Call):
            v = self._eval(node.args[0], env)
            if v.kind != "s":
                raise ExprError(f"{node.func.id} applies to scalars only in {self.source!r}")
            return _Val("s", FUNCS[node.func.id](v.data))
        if isinstance(node, ast.BinOp):
            return self._binop(node.op, self._eval(node.left, env), self._eval(node.right, env))
        raise ExprError(f"unsupported syntax in {self.source!r}")  # pragma: no cover

    def _lift(self, v: _Val) -> np.ndarray:
        """Scalar to algebra element ``v * 1``."""
        return np.asarray(v.data)[..., None] * self.algebra.unit

    def _binop(self, op, a: _Val, b: _Val) -> _Val:
        ka, kb = a.kind, b.kind
        if isinstance(op, (ast.Add, ast.Sub)):
            sign = 1 if isinstance(op, ast.Add) else -1
            if ka == kb:
                return _Val(ka, a.data + sign * b.data)
            if {ka, kb} == {"s", "a"}:
                x = self._lift(a) if ka == "s" else a.data
                y = self._lift(b) if kb == "s" else b.data
                return _Val("a", x + sign * y)
            raise ExprError(f"cannot add {_NAMES[ka]} and {_NAMES[kb]} in {self.source!r}")
        if isinstance(op, ast.Mult):
            if ka == "s" or kb == "s":
                s, o = (a, b) if ka == "s" else (b, a)
                sd = np.asarray(s.data)
                return _Val(o.kind, sd[..., None] * o.data if o.kind != "s" and sd.ndim else sd * o.data)
            if ka == "a" and kb == "a":
                return _Val("a", self.algebra.multiply(a.data, b.data))
            if ka == "a" and kb == "m":
                return _Val("m", self.module.act(a.data, b.data))
            if ka == "m" and kb == "m" and self.module.dim == 1:
                return _Val("m", a.data * b.data)
            raise ExprError(f"cannot multiply {_NAMES[ka]} by {_NAMES[kb]} in {self.source!r}")
        if isinstance(op, ast.Div):
            if kb != "s":
                raise ExprError(f"can only divide by scalars in {self.source!r}")
            bd = np.asarray(b.data)
            return _Val(ka, a.data / (bd[..., None] if ka != "s" and bd.ndim else bd))
        if isinstance(op, ast.Pow):
            if ka != "s" or kb != "s":
                raise ExprError(f"powers apply to scalars only in {self.source!r}")
            return _Val("s", a.data ** b.data)
        raise ExprError(f"unsupported operator in {self.source!r}")  # pragma: no cover

    def evaluate(self, t, f=None, expect: str = "m") -> np.ndarray:
        """Evaluate on parameter array ``t``; returns shape (K, m) or (K, n)."""
        t = np.asarray(t, dtype=float)
        env = {"x": _Val("s", t)}
        if f is not None:
            env["f"] = _Val("m", np.asarray(f))
        v = self._eval(self.tree, env)
        K = len(t)
        if expect == "a":
            if v.kind == "s":
                v = _Val("a", self._lift(v))
            if v.kind != "a":
                raise ExprError(f"{self.source!r} must be algebra-valued")
            return np.broadcast_to(v.data, (K, self.algebra.dim))
        if expect == "m":
            if v.kind == "s":
                if self.module.dim == 1:
                    return np.broadcast_to(np.asarray(v.data)[..., None], (K, 1))
                if np.all(np.asarray(v.data) == 0):
                    return np.zeros((K, self.module.dim))
            if v.kind != "m":
                raise ExprError(f"{self.source!r} must be module-valued (use e1..e{self.module.dim})")
            return np.broadcast_to(v.data, (K, self.module.dim))
        if v.kind != "s":
            raise ExprError(f"{self.source!r} must be scalar-valued")
        return np.broadcast_to(v.data, (K,))


_NAMES = {"s": "a scalar", "a": "an algebra element", "m": "a module element"}


def rhs_function(source: str, module: BanachModule):
    e = Expression(source, module, allow_f=True)
    e.validate()
    return lambda t, f: e.evaluate(t, f, expect="m")


def algebra_function(source: str, module: BanachModule):
    e = Expression(source, module)
    e.validate()
    return lambda t: e.evaluate(t, expect="a")


def module_function(source: str, module: BanachModule):
    e = Expression(source, module)
    e.validate()
    return lambda t: e.evaluate(t, expect="m")
