"""Line-oriented problem files.

::

    noncoercive-problem v1
    # comments run to the end of the line
    [space]
    dim = 2
    norm = 2

    [sets]
    C = box(lower=[0, 0], upper=[1, 2])

    [functions]
    f = arctan(norm(x))
    f.flags = quasi_convex, lsc, bounded_below

    [bifunctions]
    psi = if(member(x, C) or member(y, C), 0, -1)

    [task]
    kind = solve-ep
    bifunction = psi

Sections may appear in any order but each at most once; declarations may
only refer to names declared above them.  Set kinds: ``whole()``,
``box(lower=, upper=)``, ``halfspaces(A=, b=)``, ``ball(center=, radius=, p=)``,
``orthant()``, ``union(S, ...)``, ``intersection(S, ...)`` and
``predicate(condition, convex=, closed=)``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .core import (
    BIFUNCTION_ANNOTATIONS,
    FUNCTION_FLAGS,
    Ball,
    BifunctionModel,
    Box,
    FeasibleSet,
    FunctionModel,
    Intersection,
    Polyhedron,
    Predicate,
    Union,
    whole_space,
)
from .errors import NoncoerciveError, ParseError
from .expr import (
    Call,
    Context,
    Name,
    Node,
    compile_bifunction,
    compile_function,
    compile_node,
    compile_predicate,
    constant_value,
    difference_form,
    max_affine_sublevel,
    parse_expression,
    to_source,
)

HEADER = "noncoercive-problem v1"
SECTIONS = ("space", "sets", "functions", "bifunctions", "task")
TASK_KINDS = ("analyze", "cone", "solve-ep", "minimize", "check")
CHECK_CLASSES = ("cyclic", "pseudomonotone", "locally_dominated", "transfer_quasi_convex")

TASK_KEYS: dict[str, str] = {
    "kind": "kind",
    "seed": "int",
    "function": "name",
    "bifunction": "name",
    "set": "name",
    "intersect": "names",
    "directions": "int",
    "direction_list": "matrix",
    "base": "vector",
    "resolution": "real",
    "stages": "vector",
    "escape_ratio": "real",
    "eps": "real",
    "tol": "real",
    "y_sample": "matrix",
    "classes": "names",
    "grid_radius": "real",
    "points": "int",
    "tuple_length": "int",
    "subset_size": "int",
}

REQUIRED = {
    "analyze": ("function",),
    "cone": ("set",),
    "solve-ep": ("bifunction",),
    "minimize": ("function",),
    "check": ("bifunction",),
}


@dataclass(frozen=True)
class SetDecl:
    name: str
    expr: Call


@dataclass(frozen=True)
class FunctionDecl:
    name: str
    expr: Node
    flags: tuple[str, ...] = ()
    domain: str | None = None


@dataclass(frozen=True)
class BifunctionDecl:
    name: str
    expr: Node
    annotations: tuple[str, ...] = ()
    feasible: str | None = None


@dataclass(frozen=True)
class ProblemFile:
    dim: int
    norm: float
    sets: tuple[SetDecl, ...]
    functions: tuple[FunctionDecl, ...]
    bifunctions: tuple[BifunctionDecl, ...]
    task: tuple[tuple[str, Any], ...]
    compiled: dict = field(default_factory=dict, compare=False, repr=False)

    def task_value(self, key: str, default=None):
        return dict(self.task).get(key, default)

    @property
    def kind(self) -> str | None:
        return self.task_value("kind")

    def set(self, name: str) -> FeasibleSet:
        return self.compiled["sets"][name]

    def function(self, name: str) -> FunctionModel:
        return self.compiled["functions"][name]

    def bifunction(self, name: str) -> BifunctionModel:
        return self.compiled["bifunctions"][name]


# --------------------------------------------------------------------------
# Parsing
# --------------------------------------------------------------------------

_KEY = re.compile(r"^([A-Za-z_][A-Za-z_0-9]*)(?:\.([A-Za-z_][A-Za-z_0-9]*))?\s*$")


@dataclass
class _Line:
    no: int
    key: str
    attr: str | None
    value: str
    value_col: int
    key_col: int


def _strip_comment(raw: str) -> str:
    i = raw.find("#")
    return raw if i < 0 else raw[:i]


def _split(raw: str, no: int) -> _Line:
    text = _strip_comment(raw).rstrip()
    if "=" not in text:
        lead = len(text) - len(text.lstrip())
        raise ParseError("E100", "expected 'key = value'", no, lead + 1, ("=",))
    i = text.index("=")
    left = text[:i]
    m = _KEY.match(left.strip())
    key_col = len(left) - len(left.lstrip()) + 1
    if m is None:
        raise ParseError("E100", f"bad key {left.strip()!r}", no, key_col, ("name", "name.attr"))
    rest = text[i + 1:]
    lead = len(rest) - len(rest.lstrip())
    return _Line(no, m.group(1), m.group(2), rest.strip(), i + 2 + lead, key_col)


def _expr(line: _Line) -> Node:
    if not line.value:
        raise ParseError("E100", "missing value", line.no, line.value_col, ("expression",))
    return parse_expression(line.value, line.no, line.value_col)


def _names(line: _Line) -> tuple[str, ...]:
    parts = [p.strip() for p in line.value.split(",")]
    if not line.value or any(not re.fullmatch(r"[A-Za-z_][A-Za-z_0-9\-]*", p) for p in parts):
        raise ParseError("E109", f"expected a comma-separated list of names, got {line.value!r}",
                         line.no, line.value_col)
    return tuple(parts)


def _const(line: _Line, want: str):
    node = _expr(line)
    try:
        v = constant_value(node)
    except ParseError as e:
        raise ParseError("E109", f"{line.key}: {e.message}", e.line or line.no,
                         e.column or line.value_col) from None
    arr = np.asarray(v, float)
    ok = {"real": arr.ndim == 0, "vector": arr.ndim == 1, "matrix": arr.ndim == 2}[want]
    if want == "matrix" and arr.ndim == 1:
        arr, ok = arr[None, :], True
    if not ok:
        raise ParseError("E109", f"{line.key} must be a {want}", line.no, line.value_col)
    if want == "real":
        return float(arr)
    if want == "vector":
        return tuple(float(c) for c in arr)
    return tuple(tuple(float(c) for c in row) for row in arr)


def _task_value(line: _Line):
    if line.attr is not None:
        raise ParseError("E105", f"task keys have no attributes ({line.key}.{line.attr})",
                         line.no, line.key_col)
    kind = TASK_KEYS.get(line.key)
    if kind is None:
        raise ParseError("E105", f"unknown task key {line.key!r}", line.no, line.key_col,
                         tuple(sorted(TASK_KEYS)))
    if kind == "kind":
        if line.value not in TASK_KINDS:
            raise ParseError("E109", f"unknown task kind {line.value!r}", line.no,
                             line.value_col, TASK_KINDS)
        return line.value
    if kind == "int":
        if not re.fullmatch(r"-?\d+", line.value):
            raise ParseError("E109", f"{line.key} must be an integer", line.no, line.value_col)
        return int(line.value)
    if kind == "name":
        if not re.fullmatch(r"[A-Za-z_][A-Za-z_0-9]*", line.value):
            raise ParseError("E109", f"{line.key} must be a name", line.no, line.value_col)
        return line.value
    if kind == "names":
        return _names(line)
    v = _const(line, kind)
    _check_range(line, v)
    return v


POSITIVE_KEYS = {"resolution", "grid_radius", "directions", "points", "tuple_length",
                 "subset_size"}
NONNEGATIVE_KEYS = {"eps", "tol", "seed"}


def _check_range(line: _Line, v) -> None:
    key = line.key
    bad = None
    if key in POSITIVE_KEYS and not v > 0:
        bad = "must be > 0"
    elif key in NONNEGATIVE_KEYS and not v >= 0:
        bad = "must be >= 0"
    elif key == "escape_ratio" and not 0 < v < 1:
        bad = "must lie strictly between 0 and 1"
    elif key == "stages" and (len(v) == 0 or v[0] <= 0
                              or any(b <= a for a, b in zip(v, v[1:]))):
        bad = "must be positive and strictly increasing"
    if bad:
        raise ParseError("E109", f"{key} {bad}", line.no, line.value_col)


class _Builder:
    def __init__(self):
        self.dim: int | None = None
        self.norm = 2.0
        self.sets: list[SetDecl] = []
        self.functions: list[FunctionDecl] = []
        self.bifunctions: list[BifunctionDecl] = []
        self.task: dict[str, Any] = {}
        self.task_pos: dict[str, tuple[int, int]] = {}
        self.compiled = {"sets": {}, "functions": {}, "bifunctions": {}}
        self.declared: dict[str, str] = {}

    # -- space ------------------------------------------------------------
    def space(self, line: _Line):
        if line.attr is not None or line.key not in ("dim", "norm"):
            raise ParseError("E105", f"unknown space key {line.key!r}", line.no, line.key_col,
                             ("dim", "norm"))
        if line.key == "dim":
            if not re.fullmatch(r"\d+", line.value) or int(line.value) < 1:
                raise ParseError("E109", "dim must be a positive integer", line.no,
                                 line.value_col)
            self.dim = int(line.value)
        else:
            p = _const(line, "real")
            if not (p >= 1):
                raise ParseError("E109", f"norm order must be >= 1, got {p}", line.no,
                                 line.value_col)
            self.norm = p

    def need_dim(self, line: _Line) -> int:
        if self.dim is None:
            raise ParseError("E105", "[space] with dim must come before declarations",
                             line.no, line.key_col, ("[space]",))
        return self.dim

    def declare(self, line: _Line, what: str):
        if line.key in self.declared:
            raise ParseError("E108", f"{line.key!r} is already declared as a "
                             f"{self.declared[line.key]}", line.no, line.key_col)
        if line.key in ("x", "y", "pi", "e", "inf") or re.fullmatch(r"[xy]\d+", line.key):
            raise ParseError("E108", f"{line.key!r} is a reserved name", line.no, line.key_col)
        self.declared[line.key] = what

    def context(self, variables=("x",)) -> Context:
        return Context(self.dim, variables, dict(self.compiled["sets"]),
                       dict(self.compiled["functions"]))

    # -- sets ---------------------------------------------------------------
    def set_line(self, line: _Line):
        dim = self.need_dim(line)
        if line.attr is not None:
            raise ParseError("E105", "sets have no attributes", line.no, line.key_col)
        self.declare(line, "set")
        node = _expr(line)
        if not isinstance(node, Call):
            raise ParseError("E109", "a set is declared as kind(arguments)", line.no,
                             line.value_col, ("whole", "box", "halfspaces", "ball", "orthant",
                                              "union", "intersection", "predicate"))
        S = self.build_set(node, dim, line)
        self.sets.append(SetDecl(line.key, node))
        self.compiled["sets"][line.key] = S

    def build_set(self, node: Call, dim: int, line: _Line) -> FeasibleSet:
        kw = dict(node.kwargs)
        pos = node.pos if node.pos != (0, 0) else (line.no, line.value_col)

        def arity(allowed: tuple[str, ...], required: tuple[str, ...], nargs: int = 0):
            extra = set(kw) - set(allowed)
            missing = set(required) - set(kw)
            if extra or missing or len(node.args) != nargs:
                raise ParseError("E102", f"{node.func}() takes keywords {list(allowed)} "
                                 f"(required {list(required)}) and {nargs} positional "
                                 "argument(s)", *pos)

        def vec(key, size=dim):
            v = np.asarray(constant_value(kw[key]), float)
            if v.ndim != 1 or v.size != size:
                raise ParseError("E103", f"{key} must be a vector of length {size}",
                                 *kw[key].pos)
            return v

        def boolean(key, default):
            if key not in kw:
                return default
            v = kw[key]
            if not isinstance(v, Name) or v.name not in ("true", "false"):
                raise ParseError("E109", f"{key} must be true or false", *v.pos)
            return v.name == "true"

        try:
            k = node.func
            if k == "whole":
                arity((), ())
                return whole_space(dim)
            if k == "orthant":
                arity((), ())
                return Polyhedron(-np.eye(dim), np.zeros(dim))
            if k == "box":
                arity(("lower", "upper"), ("lower", "upper"))
                return Box(vec("lower"), vec("upper"))
            if k == "halfspaces":
                arity(("A", "b"), ("A", "b"))
                A = np.asarray(constant_value(kw["A"]), float)
                if A.ndim == 1:
                    A = A[None, :]
                if A.ndim != 2 or A.shape[1] != dim:
                    raise ParseError("E103", f"A must have {dim} columns", *kw["A"].pos)
                return Polyhedron(A, vec("b", A.shape[0]))
            if k == "ball":
                arity(("center", "radius", "p"), ("center", "radius"))
                r = constant_value(kw["radius"])
                p = float(constant_value(kw["p"])) if "p" in kw else self.norm
                return Ball(vec("center"), float(r), p)
            if k in ("union", "intersection"):
                arity((), (), len(node.args))
                parts = []
                for a in node.args:
                    if not isinstance(a, Name) or a.name not in self.compiled["sets"]:
                        raise ParseError("E101", "expected a declared set name", *a.pos,
                                         tuple(sorted(self.compiled["sets"])))
                    parts.append(self.compiled["sets"][a.name])
                if k == "union":
                    return Union(tuple(parts), dim)
                if not parts:
                    raise ParseError("E102", "intersection() needs at least one set", *pos)
                return Intersection(tuple(parts))
            if k == "predicate":
                arity(("convex", "closed"), (), 1)
                fn = compile_predicate(node.args[0], self.context())
                return Predicate(fn, dim, boolean("convex", False), boolean("closed", True),
                                 to_source(node.args[0]))
        except ParseError:
            raise
        except NoncoerciveError as e:
            raise ParseError("E109", e.message, *pos) from None
        raise ParseError("E101", f"unknown set kind {node.func!r}", *pos,
                         ("whole", "box", "halfspaces", "ball", "orthant", "union",
                          "intersection", "predicate"))

    # -- functions ----------------------------------------------------------
    def function_line(self, line: _Line):
        self.need_dim(line)
        if line.attr is None:
            self.declare(line, "function")
            node = _expr(line)
            self.functions.append(FunctionDecl(line.key, node))
            return
        i = self._find(self.functions, line, "function")
        d = self.functions[i]
        if line.attr == "flags":
            flags = _names(line)
            bad = [f for f in flags if f not in FUNCTION_FLAGS]
            if bad:
                raise ParseError("E109", f"unknown flag(s) {bad}", line.no, line.value_col,
                                 tuple(sorted(FUNCTION_FLAGS)))
            self.functions[i] = FunctionDecl(d.name, d.expr, tuple(sorted(set(flags))), d.domain)
        elif line.attr == "domain":
            if line.value not in self.compiled["sets"]:
                raise ParseError("E101", f"unknown set {line.value!r}", line.no, line.value_col,
                                 tuple(sorted(self.compiled["sets"])))
            self.functions[i] = FunctionDecl(d.name, d.expr, d.flags, line.value)
        else:
            raise ParseError("E105", f"unknown function attribute {line.attr!r}", line.no,
                             line.key_col, ("flags", "domain"))

    def _find(self, decls, line: _Line, what: str) -> int:
        for i, d in enumerate(decls):
            if d.name == line.key:
                return i
        raise ParseError("E101", f"attribute of undeclared {what} {line.key!r}", line.no,
                         line.key_col)

    def compile_function_decl(self, d: FunctionDecl):
        ctx = self.context()
        ev = compile_function(d.expr, ctx)
        domain = self.compiled["sets"][d.domain] if d.domain else None
        sub = max_affine_sublevel(d.expr, self.dim)
        if sub is not None and domain is not None:
            base = sub
            sub = lambda lam: Intersection((base(lam), domain))  # noqa: E731
        try:
            f = FunctionModel(self.dim, ev, domain, frozenset(d.flags), d.name, sub)
        except NoncoerciveError as e:
            raise ParseError("E109", f"function {d.name}: {e.message}", *d.expr.pos) from None
        self.compiled["functions"][d.name] = f

    # -- bifunctions --------------------------------------------------------
    def bifunction_line(self, line: _Line):
        self.need_dim(line)
        if line.attr is None:
            self.declare(line, "bifunction")
            node = _expr(line)
            self.bifunctions.append(BifunctionDecl(line.key, node))
            return
        i = self._find(self.bifunctions, line, "bifunction")
        d = self.bifunctions[i]
        if line.attr == "annotations":
            ann = _names(line)
            bad = [a for a in ann if a not in BIFUNCTION_ANNOTATIONS]
            if bad:
                raise ParseError("E109", f"unknown annotation(s) {bad}", line.no,
                                 line.value_col, tuple(sorted(BIFUNCTION_ANNOTATIONS)))
            self.bifunctions[i] = BifunctionDecl(d.name, d.expr, tuple(sorted(set(ann))),
                                                 d.feasible)
        elif line.attr == "feasible":
            if line.value not in self.compiled["sets"]:
                raise ParseError("E101", f"unknown set {line.value!r}", line.no, line.value_col,
                                 tuple(sorted(self.compiled["sets"])))
            self.bifunctions[i] = BifunctionDecl(d.name, d.expr, d.annotations, line.value)
        else:
            raise ParseError("E105", f"unknown bifunction attribute {line.attr!r}", line.no,
                             line.key_col, ("annotations", "feasible"))

    def compile_bifunction_decl(self, d: BifunctionDecl):
        ctx = self.context(("x", "y"))
        t = compile_node(d.expr, ctx)
        ev = compile_bifunction(d.expr, ctx)
        K = self.compiled["sets"][d.feasible] if d.feasible else whole_space(self.dim)
        const = float(t.fn({})) if t.constant else None
        g = difference_form(d.expr)
        diff = self.compiled["functions"].get(g) if g else None
        self.compiled["bifunctions"][d.name] = BifunctionModel(
            self.dim, ev, K, frozenset(d.annotations), d.name, const, diff)


def parse_problem(text: str) -> ProblemFile:
    """Parse and compile a problem file; diagnostics are ``ParseError`` with line/column."""
    b = _Builder()
    lines = text.splitlines()
    section = None
    seen: set[str] = set()
    header_seen = False
    for no, raw in enumerate(lines, start=1):
        body = _strip_comment(raw).strip()
        if not body:
            continue
        if not header_seen:
            if body != HEADER:
                raise ParseError("E106", f"first line must be {HEADER!r}", no, 1, (HEADER,))
            header_seen = True
            continue
        m = re.fullmatch(r"\[\s*([A-Za-z_\-]+)\s*\]", body)
        if m:
            name = m.group(1)
            if name not in SECTIONS:
                raise ParseError("E105", f"unknown section [{name}]", no,
                                 raw.index("[") + 1, SECTIONS)
            if name in seen:
                raise ParseError("E108", f"section [{name}] appears twice", no,
                                 raw.index("[") + 1)
            seen.add(name)
            section = name
            continue
        if body.startswith("["):
            raise ParseError("E100", "malformed section header", no, raw.index("[") + 1, ("]",))
        if section is None:
            raise ParseError("E105", "key outside any section", no, 1, SECTIONS)
        line = _split(raw, no)
        if section == "space":
            b.space(line)
        elif section == "sets":
            b.set_line(line)
        elif section == "functions":
            b.function_line(line)
        elif section == "bifunctions":
            b.bifunction_line(line)
        else:
            if line.key in b.task:
                raise ParseError("E108", f"task key {line.key!r} given twice", no, line.key_col)
            b.task[line.key] = _task_value(line)
            b.task_pos[line.key] = (no, line.value_col)
    if not header_seen:
        raise ParseError("E106", f"missing header {HEADER!r}", 1, 1, (HEADER,))
    if b.dim is None:
        raise ParseError("E105", "missing [space] dim", 1, 1, ("[space]",))
    # attributes may follow a declaration, so expressions compile after the scan
    for d in b.functions:
        b.compile_function_decl(d)
    for d in b.bifunctions:
        b.compile_bifunction_decl(d)
    for key, value in b.task.items():
        at = b.task_pos[key]
        if key in ("function",) and value not in b.compiled["functions"]:
            raise ParseError("E101", f"task refers to undeclared function {value!r}", *at)
        if key in ("bifunction",) and value not in b.compiled["bifunctions"]:
            raise ParseError("E101", f"task refers to undeclared bifunction {value!r}", *at)
        if key == "set" and value not in b.compiled["sets"]:
            raise ParseError("E101", f"task refers to undeclared set {value!r}", *at)
        if key == "intersect":
            for v in value:
                if v not in b.compiled["sets"]:
                    raise ParseError("E101", f"task refers to undeclared set {v!r}", *at)
        if key == "classes":
            for v in value:
                if v not in CHECK_CLASSES:
                    raise ParseError("E109", f"unknown class {v!r}", *at, CHECK_CLASSES)
    return ProblemFile(b.dim, b.norm, tuple(b.sets), tuple(b.functions), tuple(b.bifunctions),
                       tuple(sorted(b.task.items())), b.compiled)


# --------------------------------------------------------------------------
# Serialization
# --------------------------------------------------------------------------

def _fmt_real(v: float) -> str:
    if v == math.inf:
        return "inf"
    if v == -math.inf:
        return "-inf"
    return repr(float(v))


def _fmt_value(key: str, v) -> str:
    kind = TASK_KEYS[key]
    if kind in ("kind", "name"):
        return v
    if kind == "int":
        return str(v)
    if kind == "names":
        return ", ".join(v)
    if kind == "real":
        return _fmt_real(v)
    if kind == "vector":
        return "[" + ", ".join(_fmt_real(c) for c in v) + "]"
    return "[" + ", ".join("[" + ", ".join(_fmt_real(c) for c in row) + "]" for row in v) + "]"


def serialize_problem(p: ProblemFile) -> str:
    out = [HEADER, "", "[space]", f"dim = {p.dim}", f"norm = {_fmt_real(p.norm)}"]
    if p.sets:
        out += ["", "[sets]"] + [f"{d.name} = {to_source(d.expr)}" for d in p.sets]
    if p.functions:
        out += ["", "[functions]"]
        for d in p.functions:
            out.append(f"{d.name} = {to_source(d.expr)}")
            if d.flags:
                out.append(f"{d.name}.flags = {', '.join(d.flags)}")
            if d.domain:
                out.append(f"{d.name}.domain = {d.domain}")
    if p.bifunctions:
        out += ["", "[bifunctions]"]
        for d in p.bifunctions:
            out.append(f"{d.name} = {to_source(d.expr)}")
            if d.annotations:
                out.append(f"{d.name}.annotations = {', '.join(d.annotations)}")
            if d.feasible:
                out.append(f"{d.name}.feasible = {d.feasible}")
    if p.task:
        out += ["", "[task]"] + [f"{k} = {_fmt_value(k, v)}" for k, v in p.task]
    return "\n".join(out) + "\n"
