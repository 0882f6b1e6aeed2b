"""Expression language for functions, bifunctions and set predicates.

Grammar (lowest precedence first)::

    expr    := or
    or      := and ("or" and)*
    and     := not ("and" not)*
    not     := "not" not | cmp
    cmp     := sum (("<" | "<=" | ">" | ">=" | "==" | "!=") sum)?
    sum     := product (("+" | "-") product)*
    product := unary (("*" | "/") unary)*
    unary   := ("-" | "+") unary | power
    power   := atom (("^" | "**") unary)?
    atom    := NUMBER | NAME | NAME "(" args? ")" | "(" expr ")" | "[" expr ("," expr)* "]"
    args    := arg ("," arg)*
    arg     := NAME "=" expr | expr

Names: ``x`` (the point, a vector), ``x1 .. xd`` (coordinates), ``y`` and
``y1 .. yd`` in bifunctions, constants ``pi``, ``e``, ``inf``.
``piecewise(c1, v1, c2, v2, ..., default)`` picks the first branch whose
condition holds; ``if(c, a, b)`` is its three-argument form.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .core import FeasibleSet, FunctionModel, Polyhedron, empty_set, whole_space
from .errors import ParseError

# --------------------------------------------------------------------------
# AST (positions do not take part in equality)
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Node:
    pass


@dataclass(frozen=True)
class Num(Node):
    value: float
    pos: tuple[int, int] = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Name(Node):
    name: str
    pos: tuple[int, int] = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Unary(Node):
    op: str
    operand: Node
    pos: tuple[int, int] = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Binary(Node):
    op: str
    left: Node
    right: Node
    pos: tuple[int, int] = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Call(Node):
    func: str
    args: tuple[Node, ...]
    kwargs: tuple[tuple[str, Node], ...] = ()
    pos: tuple[int, int] = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Vec(Node):
    items: tuple[Node, ...]
    pos: tuple[int, int] = field(default=(0, 0), compare=False, repr=False)


# --------------------------------------------------------------------------
# Tokenizer
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Token:
    kind: str  # num, name, op, end
    text: str
    line: int
    col: int


_TOKEN = re.compile(r"""
    (?P<ws>[ \t]+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>\*\*|<=|>=|==|!=|[-+*/^()\[\],<>=])
""", re.VERBOSE)

KEYWORDS = {"and", "or", "not"}


def tokenize(text: str, line: int = 1, col0: int = 1) -> list[Token]:
    out, i = [], 0
    while i < len(text):
        m = _TOKEN.match(text, i)
        if m is None:
            raise ParseError("E100", f"unexpected character {text[i]!r}", line, col0 + i,
                             ("number", "name", "operator"))
        kind = m.lastgroup
        if kind != "ws":
            out.append(Token(kind, m.group(), line, col0 + i))
        i = m.end()
    out.append(Token("end", "", line, col0 + len(text)))
    return out


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------

_CMP = ("<", "<=", ">", ">=", "==", "!=")


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.toks = tokens
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def _pos(self, t: Token) -> tuple[int, int]:
        return (t.line, t.col)

    def at(self, *texts: str) -> bool:
        t = self.tok
        return t.kind in ("op", "name") and t.text in texts

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def fail(self, expected: tuple[str, ...], t: Token | None = None):
        t = t or self.tok
        what = "end of input" if t.kind == "end" else repr(t.text)
        raise ParseError("E100", f"unexpected {what}", t.line, t.col, expected)

    def close(self, closer: str, opener: Token, also: tuple[str, ...] = ()):
        if self.at(closer):
            self.advance()
            return
        # point at the unclosed bracket, not at where the input ran out
        t = self.tok
        what = "end of input" if t.kind == "end" else repr(t.text)
        raise ParseError("E100", f"unclosed {opener.text!r} (found {what})",
                         opener.line, opener.col, (closer,) + also)

    def parse(self) -> Node:
        node = self.expr()
        if self.tok.kind != "end":
            self.fail(("operator", "end of input"))
        return node

    def expr(self) -> Node:
        return self.or_()

    def or_(self) -> Node:
        node = self.and_()
        while self.at("or"):
            t = self.advance()
            node = Binary("or", node, self.and_(), self._pos(t))
        return node

    def and_(self) -> Node:
        node = self.not_()
        while self.at("and"):
            t = self.advance()
            node = Binary("and", node, self.not_(), self._pos(t))
        return node

    def not_(self) -> Node:
        if self.at("not"):
            t = self.advance()
            return Unary("not", self.not_(), self._pos(t))
        return self.cmp()

    def cmp(self) -> Node:
        node = self.sum_()
        if self.tok.kind == "op" and self.tok.text in _CMP:
            t = self.advance()
            node = Binary(t.text, node, self.sum_(), self._pos(t))
        return node

    def sum_(self) -> Node:
        node = self.product()
        while self.tok.kind == "op" and self.tok.text in ("+", "-"):
            t = self.advance()
            node = Binary(t.text, node, self.product(), self._pos(t))
        return node

    def product(self) -> Node:
        node = self.unary()
        while self.tok.kind == "op" and self.tok.text in ("*", "/"):
            t = self.advance()
            node = Binary(t.text, node, self.unary(), self._pos(t))
        return node

    def unary(self) -> Node:
        if self.tok.kind == "op" and self.tok.text in ("-", "+"):
            t = self.advance()
            return Unary(t.text, self.unary(), self._pos(t))
        return self.power()

    def power(self) -> Node:
        node = self.atom()
        if self.tok.kind == "op" and self.tok.text in ("^", "**"):
            t = self.advance()
            node = Binary("^", node, self.unary(), self._pos(t))
        return node

    def atom(self) -> Node:
        t = self.tok
        if t.kind == "num":
            self.advance()
            return Num(float(t.text), self._pos(t))
        if t.kind == "name" and t.text not in KEYWORDS:
            self.advance()
            if self.at("("):
                return self.call(t)
            return Name(t.text, self._pos(t))
        if self.at("("):
            self.advance()
            node = self.expr()
            self.close(")", t)
            return node
        if self.at("["):
            self.advance()
            items = [self.expr()]
            while self.at(","):
                self.advance()
                items.append(self.expr())
            self.close("]", t, (",",))
            return Vec(tuple(items), self._pos(t))
        self.fail(("number", "name", "(", "[", "-", "not"))

    def call(self, name: Token) -> Node:
        opener = self.advance()
        args, kwargs = [], []
        if not self.at(")"):
            while True:
                nxt = self.toks[self.i + 1]
                if self.tok.kind == "name" and nxt.kind == "op" and nxt.text == "=":
                    key = self.advance().text
                    self.advance()
                    kwargs.append((key, self.expr()))
                else:
                    if kwargs:
                        raise ParseError("E100", "positional argument after keyword argument",
                                         self.tok.line, self.tok.col, ("name=",))
                    args.append(self.expr())
                if not self.at(","):
                    break
                self.advance()
        self.close(")", opener, (",",))
        return Call(name.text, tuple(args), tuple(kwargs), self._pos(name))


def parse_expression(text: str, line: int = 1, col0: int = 1) -> Node:
    """Parse one expression; positions are reported relative to ``line``/``col0``."""
    return _Parser(tokenize(text, line, col0)).parse()


# --------------------------------------------------------------------------
# Serializer
# --------------------------------------------------------------------------

def _num(v: float) -> str:
    if v == math.inf:
        return "inf"
    return repr(float(v))


def to_source(node: Node) -> str:
    """Fully parenthesized source text; parsing it gives back an equal tree."""
    if isinstance(node, Num):
        return _num(node.value)
    if isinstance(node, Name):
        return node.name
    if isinstance(node, Unary):
        sep = " " if node.op == "not" else ""
        return f"({node.op}{sep}{to_source(node.operand)})"
    if isinstance(node, Binary):
        return f"({to_source(node.left)} {node.op} {to_source(node.right)})"
    if isinstance(node, Call):
        parts = [to_source(a) for a in node.args]
        parts += [f"{k}={to_source(v)}" for k, v in node.kwargs]
        return f"{node.func}({', '.join(parts)})"
    if isinstance(node, Vec):
        return "[" + ", ".join(to_source(a) for a in node.items) + "]"
    raise TypeError(f"not an expression node: {node!r}")


# --------------------------------------------------------------------------
# Type checking and compilation
# --------------------------------------------------------------------------

NUM, VEC, BOOL = "number", "vector", "boolean"
CONSTANTS = {"pi": math.pi, "e": math.e, "inf": math.inf}
UNARY_FUNCS: dict[str, Callable] = {
    "abs": np.abs, "sqrt": np.sqrt, "exp": np.exp, "log": np.log,
    "sin": np.sin, "cos": np.cos, "tan": np.tan, "arctan": np.arctan, "atan": np.arctan,
}
BUILTINS = frozenset(UNARY_FUNCS) | {"min", "max", "norm", "dot", "sum", "member",
                                     "piecewise", "if"}
_ARITH = {"+": np.add, "-": np.subtract, "*": np.multiply, "/": np.divide, "^": np.power}
_COMPARE = {"<": np.less, "<=": np.less_equal, ">": np.greater, ">=": np.greater_equal,
            "==": np.equal, "!=": np.not_equal}


@dataclass(frozen=True)
class Typed:
    kind: str
    size: int  # vector length; 0 for numbers and booleans
    fn: Callable[[Mapping[str, np.ndarray]], np.ndarray]
    constant: bool = False


@dataclass(frozen=True)
class Context:
    dim: int
    variables: tuple[str, ...] = ("x",)
    sets: Mapping[str, FeasibleSet] = field(default_factory=dict)
    functions: Mapping[str, FunctionModel] = field(default_factory=dict)


def _err(code: str, msg: str, node: Node, expected: tuple[str, ...] = ()):
    line, col = getattr(node, "pos", (0, 0))
    raise ParseError(code, msg, line, col, expected)


def _coord(name: str) -> tuple[str, int] | None:
    m = re.fullmatch(r"([A-Za-z]+)(\d+)", name)
    return (m.group(1), int(m.group(2))) if m else None


def _expect(t: Typed, kind: str, node: Node, what: str) -> Typed:
    if t.kind != kind:
        _err("E107", f"{what} must be a {kind}, got a {t.kind}", node)
    return t


def _arity(node: Call, lo: int, hi: int | None) -> None:
    n = len(node.args)
    if node.kwargs:
        _err("E102", f"{node.func}() takes no keyword arguments", node)
    if n < lo or (hi is not None and n > hi):
        want = str(lo) if hi == lo else (f"at least {lo}" if hi is None else f"{lo} to {hi}")
        _err("E102", f"{node.func}() takes {want} argument(s), got {n}", node)


def compile_node(node: Node, ctx: Context) -> Typed:
    if isinstance(node, Num):
        v = node.value
        return Typed(NUM, 0, lambda env: np.float64(v), True)
    if isinstance(node, Name):
        return _compile_name(node, ctx)
    if isinstance(node, Unary):
        a = compile_node(node.operand, ctx)
        if node.op == "not":
            _expect(a, BOOL, node.operand, "operand of not")
            return Typed(BOOL, 0, lambda env: np.logical_not(a.fn(env)), a.constant)
        if a.kind == BOOL:
            _err("E107", f"unary {node.op} needs a number or vector", node)
        if node.op == "-":
            return Typed(a.kind, a.size, lambda env: np.negative(a.fn(env)), a.constant)
        return a
    if isinstance(node, Binary):
        return _compile_binary(node, ctx)
    if isinstance(node, Vec):
        items = [compile_node(it, ctx) for it in node.items]
        for it, sub in zip(items, node.items):
            _expect(it, NUM, sub, "vector entry")

        def vec(env, items=items):
            vals = np.broadcast_arrays(*[np.asarray(it.fn(env), float) for it in items])
            return np.stack(vals, axis=-1)
        return Typed(VEC, len(items), vec, all(it.constant for it in items))
    if isinstance(node, Call):
        return _compile_call(node, ctx)
    raise TypeError(f"not an expression node: {node!r}")


def _compile_name(node: Name, ctx: Context) -> Typed:
    n = node.name
    if n in CONSTANTS:
        v = CONSTANTS[n]
        return Typed(NUM, 0, lambda env: np.float64(v), True)
    if n in ctx.variables:
        return Typed(VEC, ctx.dim, lambda env: env[n])
    c = _coord(n)
    if c is not None and c[0] in ctx.variables:
        var, k = c
        if not 1 <= k <= ctx.dim:
            _err("E103", f"coordinate {n} out of range for dimension {ctx.dim}", node)
        return Typed(NUM, 0, lambda env: env[var][..., k - 1])
    if n in ctx.sets:
        _err("E107", f"set {n} can only appear as the second argument of member()", node)
    hint = ("x",) + (("y",) if "y" in ctx.variables else ())
    _err("E101", f"unknown identifier {n!r}", node, hint + tuple(sorted(CONSTANTS)))


def _compile_binary(node: Binary, ctx: Context) -> Typed:
    a = compile_node(node.left, ctx)
    b = compile_node(node.right, ctx)
    const = a.constant and b.constant
    if node.op in ("and", "or"):
        _expect(a, BOOL, node.left, f"operand of {node.op}")
        _expect(b, BOOL, node.right, f"operand of {node.op}")
        f = np.logical_and if node.op == "and" else np.logical_or
        return Typed(BOOL, 0, lambda env: f(a.fn(env), b.fn(env)), const)
    if node.op in _COMPARE:
        _expect(a, NUM, node.left, "comparison operand")
        _expect(b, NUM, node.right, "comparison operand")
        f = _COMPARE[node.op]
        return Typed(BOOL, 0, lambda env: f(a.fn(env), b.fn(env)), const)
    for t, sub in ((a, node.left), (b, node.right)):
        if t.kind == BOOL:
            _err("E107", f"operand of {node.op} must be a number or vector", sub)
    f = _ARITH[node.op]
    if a.kind == VEC and b.kind == VEC:
        if node.op not in ("+", "-"):
            _err("E107", f"{node.op} between two vectors is not defined", node)
        if a.size != b.size:
            _err("E103", f"vector sizes differ ({a.size} vs {b.size})", node)
        return Typed(VEC, a.size, lambda env: f(a.fn(env), b.fn(env)), const)
    if a.kind == VEC or b.kind == VEC:
        if node.op in ("+", "-", "^"):
            _err("E107", f"{node.op} between a vector and a number is not defined", node)
        if b.kind == VEC and node.op == "/":
            _err("E107", "cannot divide by a vector", node)
        va, vb = a.kind == VEC, b.kind == VEC
        size = a.size if va else b.size

        def mixed(env):
            x = np.asarray(a.fn(env), float)
            y = np.asarray(b.fn(env), float)
            return f(x if va else x[..., None], y if vb else y[..., None])
        return Typed(VEC, size, mixed, const)
    return Typed(NUM, 0, lambda env: f(a.fn(env), b.fn(env)), const)


def _reduce(ufunc, parts):
    out = parts[0]
    for p in parts[1:]:
        out = ufunc(out, p)
    return out


def _compile_call(node: Call, ctx: Context) -> Typed:
    name = node.func
    if name in UNARY_FUNCS:
        _arity(node, 1, 1)
        a = compile_node(node.args[0], ctx)
        if a.kind == BOOL:
            _err("E107", f"{name}() needs a number or vector", node.args[0])
        f = UNARY_FUNCS[name]
        return Typed(a.kind, a.size, lambda env: f(a.fn(env)), a.constant)
    if name in ("min", "max"):
        _arity(node, 1, None)
        parts = [compile_node(x, ctx) for x in node.args]
        uf = np.minimum if name == "min" else np.maximum
        if len(parts) == 1:
            p = _expect(parts[0], VEC, node.args[0], f"single argument of {name}()")
            red = np.min if name == "min" else np.max
            return Typed(NUM, 0, lambda env: red(p.fn(env), axis=-1), p.constant)
        for p, sub in zip(parts, node.args):
            _expect(p, NUM, sub, f"argument of {name}()")
        return Typed(NUM, 0, lambda env: _reduce(uf, [p.fn(env) for p in parts]),
                     all(p.constant for p in parts))
    if name == "norm":
        _arity(node, 1, 2)
        v = _expect(compile_node(node.args[0], ctx), VEC, node.args[0], "argument of norm()")
        p = 2.0
        if len(node.args) == 2:
            pt = _expect(compile_node(node.args[1], ctx), NUM, node.args[1], "norm order")
            if not pt.constant:
                _err("E107", "norm order must be a constant", node.args[1])
            p = float(pt.fn({}))
            if not (p >= 1):
                _err("E109", f"norm order must be >= 1, got {p}", node.args[1])
        return Typed(NUM, 0, lambda env: _norm(v.fn(env), p), v.constant)
    if name == "dot":
        _arity(node, 2, 2)
        a = _expect(compile_node(node.args[0], ctx), VEC, node.args[0], "argument of dot()")
        b = _expect(compile_node(node.args[1], ctx), VEC, node.args[1], "argument of dot()")
        if a.size != b.size:
            _err("E103", f"dot() of vectors of sizes {a.size} and {b.size}", node)
        return Typed(NUM, 0, lambda env: np.sum(a.fn(env) * b.fn(env), axis=-1),
                     a.constant and b.constant)
    if name == "sum":
        _arity(node, 1, 1)
        a = _expect(compile_node(node.args[0], ctx), VEC, node.args[0], "argument of sum()")
        return Typed(NUM, 0, lambda env: np.sum(a.fn(env), axis=-1), a.constant)
    if name == "member":
        _arity(node, 2, 2)
        v = _expect(compile_node(node.args[0], ctx), VEC, node.args[0], "argument of member()")
        s = node.args[1]
        if not isinstance(s, Name) or s.name not in ctx.sets:
            _err("E101", "second argument of member() must be a declared set", s,
                 tuple(sorted(ctx.sets)))
        S = ctx.sets[s.name]
        if v.size != S.dim:
            _err("E103", f"member() point has size {v.size}, set {s.name} has dimension "
                 f"{S.dim}", node)

        def member(env):
            X = np.asarray(v.fn(env), float)
            flat = X.reshape(-1, S.dim)
            return np.asarray(S.contains(flat), bool).reshape(X.shape[:-1])
        return Typed(BOOL, 0, member)
    if name in ("piecewise", "if"):
        return _compile_piecewise(node, ctx)
    if name in ctx.functions:
        _arity(node, 1, 1)
        g = ctx.functions[name]
        v = _expect(compile_node(node.args[0], ctx), VEC, node.args[0], f"argument of {name}()")
        if v.size != g.dim:
            _err("E103", f"{name}() expects a point of size {g.dim}, got {v.size}", node)

        def call(env):
            X = np.asarray(v.fn(env), float)
            return np.asarray(g(X.reshape(-1, g.dim))).reshape(X.shape[:-1])
        return Typed(NUM, 0, call, v.constant)
    _err("E101", f"unknown function {name!r}", node,
         tuple(sorted(BUILTINS | set(ctx.functions))))


def _compile_piecewise(node: Call, ctx: Context) -> Typed:
    if node.kwargs:
        _err("E102", f"{node.func}() takes no keyword arguments", node)
    n = len(node.args)
    if node.func == "if" and n != 3:
        _err("E102", f"if() takes 3 arguments, got {n}", node)
    if n < 3 or n % 2 == 0:
        _err("E104", "piecewise() needs condition/value pairs followed by a default value "
             f"(an odd count of at least 3), got {n} argument(s)", node)
    parts = [compile_node(a, ctx) for a in node.args]
    conds, vals = parts[0:-1:2], parts[1:-1:2] + [parts[-1]]
    for c, sub in zip(conds, node.args[0:-1:2]):
        if c.kind != BOOL:
            _err("E104", "piecewise condition must be a comparison or boolean", sub)
    for v, sub in zip(vals, list(node.args[1:-1:2]) + [node.args[-1]]):
        if v.kind != NUM:
            _err("E104", "piecewise value must be a number", sub)

    def pw(env):
        cs = [np.asarray(c.fn(env), bool) for c in conds]
        vs = [np.asarray(v.fn(env), float) for v in vals[:-1]]
        shape = np.broadcast_shapes(*[c.shape for c in cs], *[v.shape for v in vs],
                                    np.shape(vals[-1].fn(env)))
        cs = [np.broadcast_to(c, shape) for c in cs]
        vs = [np.broadcast_to(v, shape) for v in vs]
        out = np.select(cs, vs, default=vals[-1].fn(env))
        return out
    return Typed(NUM, 0, pw, all(p.constant for p in parts))


def _norm(v: np.ndarray, p: float) -> np.ndarray:
    v = np.asarray(v, float)
    if p == math.inf:
        return np.max(np.abs(v), axis=-1)
    if p == 2.0:
        return np.sqrt(np.sum(v * v, axis=-1))
    if p == 1.0:
        return np.sum(np.abs(v), axis=-1)
    return np.sum(np.abs(v) ** p, axis=-1) ** (1.0 / p)


def free_names(node: Node) -> set[str]:
    if isinstance(node, Name):
        return {node.name}
    if isinstance(node, Unary):
        return free_names(node.operand)
    if isinstance(node, Binary):
        return free_names(node.left) | free_names(node.right)
    if isinstance(node, Call):
        out = set()
        for a in node.args:
            out |= free_names(a)
        for _, a in node.kwargs:
            out |= free_names(a)
        return out
    if isinstance(node, Vec):
        out = set()
        for a in node.items:
            out |= free_names(a)
        return out
    return set()


def constant_value(node: Node) -> float | np.ndarray:
    """Evaluate a variable-free expression; vectors of vectors become matrices."""
    if isinstance(node, Vec):
        rows = [constant_value(it) for it in node.items]
        try:
            return np.array(rows, dtype=float)
        except ValueError:
            _err("E103", "ragged matrix literal", node)
    t = compile_node(node, Context(0, ()))
    if t.kind == BOOL:
        _err("E107", "expected a numeric constant", node)
    return np.asarray(t.fn({}), float) if t.kind == VEC else float(t.fn({}))


# --------------------------------------------------------------------------
# Compiled evaluators and structure detection
# --------------------------------------------------------------------------

def compile_function(node: Node, ctx: Context) -> Callable[[np.ndarray], np.ndarray]:
    """Evaluator ``X (N, d) -> (N,)`` for a numeric expression over ``x``."""
    t = compile_node(node, ctx)
    if t.kind != NUM:
        _err("E107", f"function body must be a number, got a {t.kind}", node)

    def ev(X):
        X = np.asarray(X, float)
        with np.errstate(all="ignore"):
            return np.broadcast_to(np.asarray(t.fn({"x": X}), float), X.shape[:-1])
    return ev


def compile_predicate(node: Node, ctx: Context) -> Callable[[np.ndarray], np.ndarray]:
    t = compile_node(node, ctx)
    if t.kind != BOOL:
        _err("E107", f"set predicate must be a boolean, got a {t.kind}", node)

    def ev(X):
        X = np.asarray(X, float)
        with np.errstate(all="ignore"):
            return np.broadcast_to(np.asarray(t.fn({"x": X}), bool), X.shape[:-1])
    return ev


def compile_bifunction(node: Node, ctx: Context) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    t = compile_node(node, ctx)
    if t.kind != NUM:
        _err("E107", f"bifunction body must be a number, got a {t.kind}", node)

    def ev(X, Y):
        X = np.asarray(X, float)
        Y = np.asarray(Y, float)
        shape = np.broadcast_shapes(X.shape[:-1], Y.shape[:-1])
        with np.errstate(all="ignore"):
            return np.broadcast_to(np.asarray(t.fn({"x": X, "y": Y}), float), shape)
    return ev


def affine_form(node: Node, dim: int) -> tuple[np.ndarray, float] | None:
    """``(c, c0)`` with ``node == c.x + c0`` when the expression is affine in ``x``."""
    if isinstance(node, Num):
        return np.zeros(dim), node.value
    if isinstance(node, Name):
        if node.name in CONSTANTS:
            return np.zeros(dim), CONSTANTS[node.name]
        c = _coord(node.name)
        if c is not None and c[0] == "x" and 1 <= c[1] <= dim:
            e = np.zeros(dim)
            e[c[1] - 1] = 1.0
            return e, 0.0
        return None
    if isinstance(node, Unary) and node.op in ("-", "+"):
        a = affine_form(node.operand, dim)
        if a is None:
            return None
        return (-a[0], -a[1]) if node.op == "-" else a
    if isinstance(node, Binary) and node.op in ("+", "-", "*", "/"):
        a = affine_form(node.left, dim)
        b = affine_form(node.right, dim)
        if a is None or b is None:
            return None
        if node.op == "+":
            return a[0] + b[0], a[1] + b[1]
        if node.op == "-":
            return a[0] - b[0], a[1] - b[1]
        if node.op == "*":
            if not np.any(a[0]):
                return a[1] * b[0], a[1] * b[1]
            if not np.any(b[0]):
                return b[1] * a[0], b[1] * a[1]
            return None
        if np.any(b[0]) or b[1] == 0:
            return None
        return a[0] / b[1], a[1] / b[1]
    if isinstance(node, Call) and node.func == "dot" and len(node.args) == 2 and not node.kwargs:
        for v, w in ((node.args[0], node.args[1]), (node.args[1], node.args[0])):
            if isinstance(w, Name) and w.name == "x" and isinstance(v, Vec) and \
                    len(v.items) == dim and not (free_names(v) - set(CONSTANTS)):
                try:
                    return np.asarray(constant_value(v), float), 0.0
                except ParseError:
                    return None
    return None


def max_affine_sublevel(node: Node, dim: int) -> Callable[[float], FeasibleSet] | None:
    """Exact sublevel sets for ``max`` of affine pieces (or a single affine piece)."""
    pieces = node.args if isinstance(node, Call) and node.func == "max" and \
        len(node.args) >= 2 and not node.kwargs else (node,)
    forms = [affine_form(p, dim) for p in pieces]
    if any(f is None for f in forms):
        return None
    consts = [c0 for c, c0 in forms if not np.any(c)]
    rows = [(c, c0) for c, c0 in forms if np.any(c)]
    floor = max(consts) if consts else -math.inf
    if not all(math.isfinite(c0) for _, c0 in rows):
        return None
    A = np.array([c for c, _ in rows]).reshape(-1, dim)
    b0 = np.array([c0 for _, c0 in rows])

    def sub(lam: float) -> FeasibleSet:
        if lam < floor:
            return empty_set(dim)
        if not rows:
            return whole_space(dim)
        return Polyhedron(A, lam - b0)
    return sub


def difference_form(node: Node) -> str | None:
    """Name ``g`` when the bifunction body is literally ``g(y) - g(x)``."""
    if isinstance(node, Binary) and node.op == "-" and isinstance(node.left, Call) and \
            isinstance(node.right, Call) and node.left.func == node.right.func:
        a, b = node.left, node.right
        if len(a.args) == 1 and len(b.args) == 1 and not a.kwargs and not b.kwargs and \
                a.args[0] == Name("y") and b.args[0] == Name("x"):
            return a.func
    return None
