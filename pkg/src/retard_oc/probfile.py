"""Declarative text format for state-linear problems and verification functions.

Problem files describe the expressible family: rational horizon and delays,
matrices with polynomial-in-t entries, control terms affine or quadratic in
the control with polynomial-in-t coefficients, costs as quadratic forms,
and polynomial histories.  The expression language also admits ``exp(...)``
so verification-function files can carry exponential pieces.  Anything
beyond the family is registered in code by name instead.

Problem file grammar (line oriented, ``#`` starts a comment)::

    problem NAME
    kind state-linear
    horizon a = 0  b = 4
    delays r = 2  s = 1
    dims n = 1  m = 1
    control-set all                 # or: control-set box lo = -1 hi = 1
    A[0,0]  = 1                     # entries default to 0; variables: t
    AD[0,0] = 1
    g[0]  = 0                       # variables: t, u0..u{m-1}
    gD[0] = -10*v0                  # variables: t, v0..v{m-1}
    f0x = x0                        # variables: t, x0.., y0..
    f0u = 100*u0^2                  # variables: t, u0.., v0..
    phi[0] = 1                      # variables: t
    psi[0] = 0

Value-function file grammar (pieces are affine in the state)::

    value-function
    dims n = 1
    piece 0 1                       # closed t-interval of the piece
    eta[0] = -2*t + 5
    c = 3*t - 1
    piece 1 2
    ...

Scalars accept integers, decimals, and rationals like ``1/2``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from .errors import ProblemFileError
from .lattice import as_rational
from .problems import ControlSet, StateLinearProblem

# -- expression language -------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(\d+\.\d+|\d+)|([A-Za-z_][A-Za-z_0-9]*)|(\*\*|[()+\-*/^,]))")


class Expr:
    def eval(self, env: dict) -> float:
        raise NotImplementedError

    def diff(self, var: str) -> "Expr":
        raise NotImplementedError

    def variables(self) -> set:
        raise NotImplementedError


@dataclass(frozen=True)
class Const(Expr):
    value: float

    def eval(self, env):
        return self.value

    def diff(self, var):
        return Const(0.0)

    def variables(self):
        return set()


@dataclass(frozen=True)
class Var(Expr):
    name: str

    def eval(self, env):
        try:
            return env[self.name]
        except KeyError:
            raise ProblemFileError(f"unknown variable {self.name!r}") from None

    def diff(self, var):
        return Const(1.0 if var == self.name else 0.0)

    def variables(self):
        return {self.name}


def _is_const(e: Expr, v: Optional[float] = None) -> bool:
    return isinstance(e, Const) and (v is None or e.value == v)


@dataclass(frozen=True)
class Add(Expr):
    a: Expr
    b: Expr

    def eval(self, env):
        return self.a.eval(env) + self.b.eval(env)

    def diff(self, var):
        return add(self.a.diff(var), self.b.diff(var))

    def variables(self):
        return self.a.variables() | self.b.variables()


@dataclass(frozen=True)
class Mul(Expr):
    a: Expr
    b: Expr

    def eval(self, env):
        return self.a.eval(env) * self.b.eval(env)

    def diff(self, var):
        return add(mul(self.a.diff(var), self.b), mul(self.a, self.b.diff(var)))

    def variables(self):
        return self.a.variables() | self.b.variables()


@dataclass(frozen=True)
class Div(Expr):
    a: Expr
    b: Expr

    def eval(self, env):
        return self.a.eval(env) / self.b.eval(env)

    def diff(self, var):
        return Div(add(mul(self.a.diff(var), self.b),
                       mul(Const(-1.0), mul(self.a, self.b.diff(var)))),
                   Mul(self.b, self.b))

    def variables(self):
        return self.a.variables() | self.b.variables()


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: int

    def eval(self, env):
        return self.base.eval(env) ** self.exponent

    def diff(self, var):
        if self.exponent == 0:
            return Const(0.0)
        return mul(mul(Const(float(self.exponent)),
                       Pow(self.base, self.exponent - 1) if self.exponent != 1
                       else Const(1.0)),
                   self.base.diff(var))

    def variables(self):
        return self.base.variables()


@dataclass(frozen=True)
class ExpFn(Expr):
    arg: Expr

    def eval(self, env):
        return float(np.exp(self.arg.eval(env)))

    def diff(self, var):
        return mul(self, self.arg.diff(var))

    def variables(self):
        return self.arg.variables()


def add(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b):
        return Const(a.value + b.value)
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    return Add(a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b):
        return Const(a.value * b.value)
    if _is_const(a, 0.0) or _is_const(b, 0.0):
        return Const(0.0)
    if _is_const(a, 1.0):
        return b
    if _is_const(b, 1.0):
        return a
    return Mul(a, b)


class _Parser:
    """Recursive descent over +, -, *, /, unary -, ^ (integer powers),
    parentheses and exp()."""

    def __init__(self, text: str, line: Optional[int] = None):
        self.tokens: list[str] = []
        pos = 0
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if not m:
                if text[pos:].strip():
                    raise ProblemFileError(
                        f"cannot tokenize {text[pos:].strip()!r}", line)
                break
            self.tokens.append(m.group(0).strip())
            pos = m.end()
        self.pos = 0
        self.line = line

    def peek(self) -> Optional[str]:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self) -> str:
        tok = self.peek()
        if tok is None:
            raise ProblemFileError("unexpected end of expression", self.line)
        self.pos += 1
        return tok

    def expect(self, tok: str):
        got = self.take()
        if got != tok:
            raise ProblemFileError(f"expected {tok!r}, got {got!r}", self.line)

    def parse(self) -> Expr:
        e = self.expr()
        if self.peek() is not None:
            raise ProblemFileError(f"trailing input {self.peek()!r}", self.line)
        return e

    def expr(self) -> Expr:
        node = self.term()
        while self.peek() in ("+", "-"):
            op = self.take()
            rhs = self.term()
            node = add(node, rhs if op == "+" else mul(Const(-1.0), rhs))
        return node

    def term(self) -> Expr:
        node = self.factor()
        while self.peek() in ("*", "/"):
            op = self.take()
            rhs = self.factor()
            node = mul(node, rhs) if op == "*" else Div(node, rhs)
        return node

    def factor(self) -> Expr:
        if self.peek() == "-":
            self.take()
            return mul(Const(-1.0), self.factor())
        if self.peek() == "+":
            self.take()
            return self.factor()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek() in ("^", "**"):
            self.take()
            tok = self.take()
            if not tok.isdigit():
                raise ProblemFileError(
                    f"exponent must be a nonnegative integer, got {tok!r}",
                    self.line)
            return Pow(base, int(tok))
        return base

    def atom(self) -> Expr:
        tok = self.take()
        if tok == "(":
            node = self.expr()
            self.expect(")")
            return node
        if re.fullmatch(r"\d+\.\d+|\d+", tok):
            return Const(float(tok))
        if tok == "exp":
            self.expect("(")
            node = self.expr()
            self.expect(")")
            return ExpFn(node)
        if re.fullmatch(r"[A-Za-z_][A-Za-z_0-9]*", tok):
            return Var(tok)
        raise ProblemFileError(f"unexpected token {tok!r}", self.line)


def parse_expression(text: str, allowed: set, line: Optional[int] = None) -> Expr:
    expr = _Parser(text, line).parse()
    extra = expr.variables() - allowed
    if extra:
        raise ProblemFileError(
            f"variables {sorted(extra)} not allowed here (allowed: "
            f"{sorted(allowed)})", line)
    return expr


# -- problem files ---------------------------------------------------------------

_ASSIGN = re.compile(
    r"^(?P<name>[A-Za-z_][A-Za-z_0-9]*)\s*"
    r"(?:\[(?P<idx>\d+(?:\s*,\s*\d+)?)\])?\s*=\s*(?P<rhs>.+)$")
_SCALARS = re.compile(r"([a-z]+)\s*=\s*(-?\d+(?:/\d+)?|-?\d+\.\d+)")


def _scalar_pairs(rest: str, line: int) -> dict:
    out = {}
    for key, val in _SCALARS.findall(rest):
        try:
            out[key] = as_rational(val)
        except Exception as exc:
            raise ProblemFileError(f"bad rational {val!r}", line) from exc
    if not out:
        raise ProblemFileError(f"expected key = value pairs in {rest!r}", line)
    return out


def _entry_evaluator(exprs: dict, shape: tuple, env_builder) -> Callable:
    def evaluate(*args):
        env = env_builder(*args)
        out = np.zeros(shape)
        for idx, expr in exprs.items():
            out[idx] = expr.eval(env)
        return out if shape else float(out)
    return evaluate


def parse_problem(text: str, source: str = "<string>") -> StateLinearProblem:
    """Parse a state-linear problem from declarative text.

    Raises :class:`ProblemFileError` with the offending 1-based line number.
    """
    name = None
    horizon: dict = {}
    delays: dict = {}
    dims: dict = {}
    control: Optional[ControlSet] = None
    entries: dict[str, dict] = {k: {} for k in ("A", "AD", "g", "gD", "phi", "psi")}
    scalars: dict[str, Expr] = {}

    lines = text.splitlines()
    for lineno, raw in enumerate(lines, start=1):
        stripped = raw.split("#", 1)[0].strip()
        if not stripped:
            continue
        head = stripped.split(None, 1)
        keyword = head[0]
        rest = head[1] if len(head) > 1 else ""
        if keyword == "problem":
            name = rest.strip() or None
            continue
        if keyword == "kind":
            if rest.strip() != "state-linear":
                raise ProblemFileError(
                    f"unsupported kind {rest.strip()!r}; only 'state-linear' "
                    f"problems are expressible in files", lineno)
            continue
        if keyword == "horizon":
            horizon = _scalar_pairs(rest, lineno)
            continue
        if keyword == "delays":
            delays = _scalar_pairs(rest, lineno)
            continue
        if keyword == "dims":
            dims = {k: int(v) for k, v in _scalar_pairs(rest, lineno).items()}
            continue
        if keyword == "control-set":
            spec = rest.strip()
            if spec == "all":
                control = "all"
            elif spec.startswith("box"):
                m = re.match(r"box\s+lo\s*=\s*(?P<lo>[-\d.,/\s]+?)\s+hi\s*=\s*"
                             r"(?P<hi>[-\d.,/\s]+?)\s*$", spec)
                if not m:
                    raise ProblemFileError(
                        "expected: control-set box lo = ... hi = ...", lineno)
                lo = [float(Fraction(v)) for v in m.group("lo").replace(",", " ").split()]
                hi = [float(Fraction(v)) for v in m.group("hi").replace(",", " ").split()]
                control = ControlSet.box(lo, hi)
            else:
                raise ProblemFileError(
                    f"unknown control set {spec!r} (use 'all' or 'box ...')", lineno)
            continue
        m = _ASSIGN.match(stripped)
        if not m:
            raise ProblemFileError(f"cannot parse {stripped!r}", lineno)
        target, idx, rhs = m.group("name"), m.group("idx"), m.group("rhs")
        if target in ("f0x", "f0u"):
            if idx is not None:
                raise ProblemFileError(f"{target} is scalar, drop the index", lineno)
            allowed = {"t", "x", "y"} if target == "f0x" else {"t", "u", "v"}
            scalars[target] = _parse_field(rhs, allowed, dims, lineno)
        elif target in entries:
            if idx is None:
                raise ProblemFileError(f"{target} needs an index like {target}[0]", lineno)
            index = tuple(int(v) for v in idx.split(","))
            allowed = {"A": {"t"}, "AD": {"t"}, "g": {"t", "u"},
                       "gD": {"t", "v"}, "phi": {"t"}, "psi": {"t"}}[target]
            entries[target][index] = _parse_field(rhs, allowed, dims, lineno)
        else:
            raise ProblemFileError(f"unknown field {target!r}", lineno)

    for key, what in (("a", "horizon"), ("b", "horizon")):
        if key not in horizon:
            raise ProblemFileError(f"missing '{key}' in {what} line")
    for key in ("r", "s"):
        if key not in delays:
            raise ProblemFileError(f"missing '{key}' in delays line")
    if "n" not in dims or "m" not in dims:
        raise ProblemFileError("missing dims line (need n and m)")
    n, m_dim = dims["n"], dims["m"]
    for target, exprs in entries.items():
        rank = 2 if target in ("A", "AD") else 1
        bound = {"A": (n, n), "AD": (n, n), "g": (n,), "gD": (n,),
                 "phi": (n,), "psi": (m_dim,)}[target]
        for index in exprs:
            if len(index) != rank or any(i >= b for i, b in zip(index, bound)):
                raise ProblemFileError(
                    f"index {index} out of range for {target} with dims {bound}")
    if "f0x" not in scalars or "f0u" not in scalars:
        raise ProblemFileError("both f0x and f0u must be given")

    def t_env(t):
        return {"t": float(t)}

    def tu_env(prefix):
        def build(t, vec):
            env = {"t": float(t)}
            for i in range(m_dim):
                env[f"{prefix}{i}"] = float(np.asarray(vec).reshape(m_dim)[i])
            return env
        return build

    A_fn = _entry_evaluator(entries["A"], (n, n), t_env)
    AD_fn = _entry_evaluator(entries["AD"], (n, n), t_env)
    g_fn = _entry_evaluator(entries["g"], (n,), tu_env("u"))
    gD_fn = _entry_evaluator(entries["gD"], (n,), tu_env("v"))
    phi_fn = _entry_evaluator(entries["phi"], (n,), t_env)
    psi_fn = _entry_evaluator(entries["psi"], (m_dim,), t_env)

    f0x_expr, f0u_expr = scalars["f0x"], scalars["f0u"]

    def xy_env(t, x, y):
        env = {"t": float(t)}
        for i in range(n):
            env[f"x{i}"] = float(np.asarray(x).reshape(n)[i])
            env[f"y{i}"] = float(np.asarray(y).reshape(n)[i])
        return env

    def uv_env(t, u, v):
        env = {"t": float(t)}
        for i in range(m_dim):
            env[f"u{i}"] = float(np.asarray(u).reshape(m_dim)[i])
            env[f"v{i}"] = float(np.asarray(v).reshape(m_dim)[i])
        return env

    f0x_dx = [f0x_expr.diff(f"x{i}") for i in range(n)]
    f0x_dy = [f0x_expr.diff(f"y{i}") for i in range(n)]

    return StateLinearProblem(
        a=horizon["a"], b=horizon["b"], r=delays["r"], s=delays["s"],
        n=n, m=m_dim,
        A=A_fn, A_D=AD_fn, g=g_fn, g_D=gD_fn,
        f0x=lambda t, x, y: f0x_expr.eval(xy_env(t, x, y)),
        f0u=lambda t, u, v: f0u_expr.eval(uv_env(t, u, v)),
        phi=phi_fn, psi=psi_fn,
        control_set=(ControlSet.free(m_dim) if control in (None, "all") else control),
        f0x_dx=lambda t, x, y: np.array(
            [e.eval(xy_env(t, x, y)) for e in f0x_dx]),
        f0x_dy=lambda t, x, y: np.array(
            [e.eval(xy_env(t, x, y)) for e in f0x_dy]),
        name=name or source,
    )


def _parse_field(rhs: str, allowed_prefixes: set, dims: dict, lineno: int) -> Expr:
    if "n" not in dims or "m" not in dims:
        raise ProblemFileError(
            "a dims line with both n and m must precede field definitions",
            lineno)
    allowed = {"t"} if "t" in allowed_prefixes else set()
    for prefix, count_key in (("x", "n"), ("y", "n"), ("u", "m"), ("v", "m")):
        if prefix in allowed_prefixes:
            allowed |= {f"{prefix}{i}" for i in range(dims[count_key])}
    return parse_expression(rhs, allowed, lineno)


def load_problem(path: str) -> StateLinearProblem:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_problem(fh.read(), source=path)


# -- value-function files -----------------------------------------------------------

def parse_value_function(text: str):
    """Parse a piecewise, state-affine verification function.

    Each piece holds S(t, x) = sum_i eta_i(t) x_i + c(t) on a closed
    t-interval; the time derivative is differentiated exactly from the
    expressions.  Returns a :class:`ValueFunctionCandidate`.
    """
    from .sufficiency import ValueFunctionCandidate

    n = 1
    pieces: list[dict] = []
    current: Optional[dict] = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.split("#", 1)[0].strip()
        if not stripped:
            continue
        head = stripped.split(None, 1)
        keyword = head[0]
        rest = head[1] if len(head) > 1 else ""
        if keyword == "value-function":
            continue
        if keyword == "dims":
            n = int(_scalar_pairs(rest, lineno).get("n", 1))
            continue
        if keyword == "piece":
            bounds = rest.split()
            if len(bounds) != 2:
                raise ProblemFileError("expected: piece LO HI", lineno)
            current = {"lo": float(Fraction(bounds[0])),
                       "hi": float(Fraction(bounds[1])),
                       "eta": {}, "c": Const(0.0)}
            pieces.append(current)
            continue
        m = _ASSIGN.match(stripped)
        if not m or current is None:
            raise ProblemFileError(f"cannot parse {stripped!r}", lineno)
        target, idx, rhs = m.group("name"), m.group("idx"), m.group("rhs")
        expr = parse_expression(rhs, {"t"}, lineno)
        if target == "eta":
            if idx is None:
                raise ProblemFileError("eta needs an index like eta[0]", lineno)
            current["eta"][int(idx)] = expr
        elif target == "c":
            current["c"] = expr
        else:
            raise ProblemFileError(f"unknown field {target!r}", lineno)
    if not pieces:
        raise ProblemFileError("no pieces defined")
    pieces.sort(key=lambda p: p["lo"])

    def pick(t: float) -> dict:
        for piece in pieces[:-1]:
            if t < piece["hi"]:
                return piece
        return pieces[-1]

    def S(t, x):
        piece = pick(float(t))
        env = {"t": float(t)}
        x = np.asarray(x, float).reshape(n)
        val = piece["c"].eval(env)
        for i, expr in piece["eta"].items():
            val += expr.eval(env) * x[i]
        return val

    def S_t(t, x):
        piece = pick(float(t))
        env = {"t": float(t)}
        x = np.asarray(x, float).reshape(n)
        val = piece["c"].diff("t").eval(env)
        for i, expr in piece["eta"].items():
            val += expr.diff("t").eval(env) * x[i]
        return val

    def S_x(t, x):
        piece = pick(float(t))
        env = {"t": float(t)}
        out = np.zeros(n)
        for i, expr in piece["eta"].items():
            out[i] = expr.eval(env)
        return out

    return ValueFunctionCandidate(S=S, S_t=S_t, S_x=S_x)


def load_value_function(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_value_function(fh.read())
