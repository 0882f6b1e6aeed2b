"""Shared numeric and problem-description types.

Points are plain 1-D float arrays; batches of points are ``(N, d)`` arrays.
Function and bifunction evaluators are vectorized over such batches.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import (
    DimensionMismatchError,
    EvaluationError,
    ExtendedRealFault,
    ImproperFunctionError,
    InvalidParameterError,
)

FloatArray = NDArray[np.float64]

BOUNDARY_TOL = 1e-9

QUASI_CONVEX = "quasi_convex"
LSC = "lsc"
BOUNDED_BELOW = "bounded_below"
RADIAL = "radial"
FUNCTION_FLAGS = frozenset({QUASI_CONVEX, LSC, BOUNDED_BELOW, RADIAL})

BIFUNCTION_ANNOTATIONS = frozenset({
    "pseudomonotone", "cyclically_anti_quasimonotone", "locally_dominated",
    "transfer_quasi_convex", "diag_nonnegative", "diag_zero",
    "y_quasi_convex", "x_quasi_concave", "transfer_lsc", "transfer_usc",
})


@functools.total_ordering
class ExtendedReal:
    """A value in the extended real line with a total order."""

    __slots__ = ("_v",)

    def __init__(self, value: float | ExtendedReal):
        v = float(value)
        if math.isnan(v):
            raise ExtendedRealFault("NaN is not an extended real")
        self._v = v

    @classmethod
    def inf_of(cls, values: Iterable[float | ExtendedReal]) -> ExtendedReal:
        """Infimum; +inf over an empty collection."""
        out = math.inf
        for v in values:
            out = min(out, float(ExtendedReal(v)))
        return cls(out)

    @classmethod
    def sup_of(cls, values: Iterable[float | ExtendedReal]) -> ExtendedReal:
        """Supremum; -inf over an empty collection."""
        out = -math.inf
        for v in values:
            out = max(out, float(ExtendedReal(v)))
        return cls(out)

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self._v)

    @property
    def is_pos_inf(self) -> bool:
        return self._v == math.inf

    @property
    def is_neg_inf(self) -> bool:
        return self._v == -math.inf

    def __float__(self) -> float:
        return self._v

    def _coerce(self, other) -> float:
        if isinstance(other, ExtendedReal):
            return other._v
        if isinstance(other, (int, float, np.floating, np.integer)):
            v = float(other)
            if math.isnan(v):
                raise ExtendedRealFault("NaN is not an extended real")
            return v
        return NotImplemented

    def __eq__(self, other) -> bool:
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self._v == o

    def __lt__(self, other) -> bool:
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self._v < o

    def __hash__(self) -> int:
        return hash(self._v)

    def __neg__(self) -> ExtendedReal:
        return ExtendedReal(-self._v)

    def __add__(self, other) -> ExtendedReal:
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        if math.isinf(self._v) and math.isinf(o) and self._v != o:
            raise ExtendedRealFault("(+inf) + (-inf) is undefined")
        return ExtendedReal(self._v + o)

    __radd__ = __add__

    def __sub__(self, other) -> ExtendedReal:
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self + ExtendedReal(-o)

    def __rsub__(self, other) -> ExtendedReal:
        return (-self) + other

    def __mul__(self, other) -> ExtendedReal:
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        if (math.isinf(self._v) and o == 0) or (math.isinf(o) and self._v == 0):
            raise ExtendedRealFault("0 * inf is undefined")
        return ExtendedReal(self._v * o)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"ExtendedReal({self})"

    def __str__(self) -> str:
        if self._v == math.inf:
            return "+inf"
        if self._v == -math.inf:
            return "-inf"
        return repr(self._v)


POS_INF = ExtendedReal(math.inf)
NEG_INF = ExtendedReal(-math.inf)


def as_point(x: ArrayLike, dim: int | None = None) -> FloatArray:
    """Validate and return a finite 1-D float array."""
    p = np.atleast_1d(np.asarray(x, dtype=float))
    if p.ndim != 1 or p.size == 0:
        raise DimensionMismatchError("a point must be a non-empty 1-D sequence",
                                     shape=p.shape)
    if dim is not None and p.size != dim:
        raise DimensionMismatchError(f"expected dimension {dim}, got {p.size}",
                                     expected=dim, got=p.size)
    if not np.all(np.isfinite(p)):
        raise InvalidParameterError("point coordinates must be finite", point=p)
    return p


def as_batch(X: ArrayLike, dim: int) -> FloatArray:
    """Coerce ``(d,)`` or ``(N, d)`` input to an ``(N, d)`` float array."""
    a = np.asarray(X, dtype=float)
    if a.ndim == 1:
        a = a.reshape(1, -1)
    if a.ndim != 2 or a.shape[1] != dim:
        raise DimensionMismatchError(f"expected points of dimension {dim}",
                                     expected=dim, shape=a.shape)
    return a


def norm(x: ArrayLike, p: float = 2.0) -> FloatArray | float:
    """p-norm along the last axis."""
    a = np.asarray(x, dtype=float)
    out = np.linalg.norm(a, ord=p, axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def validate_norm_order(p: float) -> float:
    p = float(p)
    if not (p >= 1.0):
        raise InvalidParameterError("norm order must be >= 1", p=p)
    return p


# --------------------------------------------------------------------------
# Feasible sets
# --------------------------------------------------------------------------

class FeasibleSet:
    """Membership-testable subset of R^d.

    Subclasses set ``kind``, ``dim``, ``convex`` and ``closed`` and implement
    ``_contains`` on an ``(N, d)`` batch.
    """

    kind: str = "abstract"
    dim: int
    convex: bool
    closed: bool

    def contains(self, X: ArrayLike):
        a = np.asarray(X, dtype=float)
        single = a.ndim == 1
        out = self._contains(as_batch(a, self.dim))
        return bool(out[0]) if single else out

    def _contains(self, X: FloatArray) -> NDArray[np.bool_]:
        raise NotImplementedError

    def halfspaces(self) -> tuple[FloatArray, FloatArray] | None:
        """Exact ``A x <= b`` description, when the set is polyhedral."""
        return None

    @property
    def bounded(self) -> bool | None:
        """True/False when known analytically, None otherwise."""
        return None

    def describe(self) -> str:
        return self.kind


@dataclass(frozen=True, eq=False)
class Box(FeasibleSet):
    lower: FloatArray
    upper: FloatArray
    kind = "box"

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float).ravel()
        hi = np.asarray(self.upper, dtype=float).ravel()
        if lo.shape != hi.shape or lo.size == 0:
            raise DimensionMismatchError("box bounds must share a non-zero length")
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)) or np.any(lo > hi):
            raise InvalidParameterError("box requires lower <= upper", lower=lo, upper=hi)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.size

    convex = True
    closed = True

    def _contains(self, X):
        return np.all((X >= self.lower - BOUNDARY_TOL) & (X <= self.upper + BOUNDARY_TOL), axis=1)

    def halfspaces(self):
        d = self.dim
        rows, rhs = [], []
        for i in range(d):
            if np.isfinite(self.upper[i]):
                e = np.zeros(d)
                e[i] = 1.0
                rows.append(e)
                rhs.append(self.upper[i])
            if np.isfinite(self.lower[i]):
                e = np.zeros(d)
                e[i] = -1.0
                rows.append(e)
                rhs.append(-self.lower[i])
        return np.array(rows).reshape(-1, d), np.array(rhs, dtype=float)

    @property
    def bounded(self):
        return bool(np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper)))

    def describe(self):
        return f"box(lower={self.lower.tolist()}, upper={self.upper.tolist()})"


@dataclass(frozen=True, eq=False)
class Polyhedron(FeasibleSet):
    """Intersection of halfspaces ``<a_i, x> <= b_i``; no rows means R^d."""

    A: FloatArray
    b: FloatArray
    dim: int = 0
    kind = "polyhedron"
    convex = True
    closed = True

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        d = self.dim or (A.shape[1] if A.ndim == 2 else 0)
        if d <= 0:
            raise DimensionMismatchError("polyhedron needs a positive dimension")
        A = A.reshape(-1, d)
        b = np.asarray(self.b, dtype=float).ravel()
        if b.size != A.shape[0]:
            raise DimensionMismatchError("one right-hand side per halfspace",
                                         rows=A.shape[0], rhs=b.size)
        if A.shape[0] and np.any(np.all(A == 0, axis=1)):
            raise InvalidParameterError("halfspace normals must be nonzero")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise InvalidParameterError("halfspace data must be finite")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "dim", d)

    def _contains(self, X):
        if self.A.shape[0] == 0:
            return np.ones(X.shape[0], dtype=bool)
        return np.all(X @ self.A.T <= self.b + BOUNDARY_TOL, axis=1)

    def halfspaces(self):
        return self.A, self.b

    @property
    def bounded(self):
        return False if self.A.shape[0] == 0 else None

    def describe(self):
        if self.A.shape[0] == 0:
            return f"whole(R^{self.dim})"
        return f"polyhedron({self.A.shape[0]} halfspaces)"


@dataclass(frozen=True, eq=False)
class Ball(FeasibleSet):
    center: FloatArray
    radius: float
    p: float = 2.0
    kind = "ball"
    convex = True
    closed = True

    def __post_init__(self):
        c = as_point(self.center)
        if not (np.isfinite(self.radius) and self.radius >= 0):
            raise InvalidParameterError("ball radius must be finite and >= 0",
                                        radius=self.radius)
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", float(self.radius))
        object.__setattr__(self, "p", validate_norm_order(self.p))

    @property
    def dim(self) -> int:
        return self.center.size

    def _contains(self, X):
        r = np.linalg.norm(X - self.center, ord=self.p, axis=1)
        return r <= self.radius * (1.0 + 1e-12) + BOUNDARY_TOL

    @property
    def bounded(self):
        return True

    def describe(self):
        return f"ball(center={self.center.tolist()}, radius={self.radius}, p={self.p})"


@dataclass(frozen=True, eq=False)
class Union(FeasibleSet):
    """Finite union; the empty union is the empty set."""

    parts: tuple[FeasibleSet, ...]
    dim: int = 0
    kind = "union"

    def __post_init__(self):
        parts = tuple(self.parts)
        d = self.dim or (parts[0].dim if parts else 0)
        if d <= 0:
            raise DimensionMismatchError("union needs a dimension")
        if any(s.dim != d for s in parts):
            raise DimensionMismatchError("union members must share a dimension")
        object.__setattr__(self, "parts", parts)
        object.__setattr__(self, "dim", d)

    @property
    def convex(self) -> bool:
        return len(self.parts) <= 1 and all(s.convex for s in self.parts)

    @property
    def closed(self) -> bool:  # type: ignore[override]
        return all(s.closed for s in self.parts)

    def _contains(self, X):
        out = np.zeros(X.shape[0], dtype=bool)
        for s in self.parts:
            out |= s._contains(X)
        return out

    def halfspaces(self):
        return self.parts[0].halfspaces() if len(self.parts) == 1 else None

    @property
    def bounded(self):
        if not self.parts:
            return True
        flags = [s.bounded for s in self.parts]
        if all(f is True for f in flags):
            return True
        return None

    def describe(self):
        if not self.parts:
            return "empty"
        return "union(" + ", ".join(s.describe() for s in self.parts) + ")"


@dataclass(frozen=True, eq=False)
class Intersection(FeasibleSet):
    parts: tuple[FeasibleSet, ...]
    kind = "intersection"

    def __post_init__(self):
        parts = tuple(self.parts)
        if not parts:
            raise InvalidParameterError("intersection needs at least one set")
        if any(s.dim != parts[0].dim for s in parts):
            raise DimensionMismatchError("intersection members must share a dimension")
        object.__setattr__(self, "parts", parts)

    @property
    def dim(self) -> int:
        return self.parts[0].dim

    @property
    def convex(self) -> bool:
        return all(s.convex for s in self.parts)

    @property
    def closed(self) -> bool:
        return all(s.closed for s in self.parts)

    def _contains(self, X):
        out = np.ones(X.shape[0], dtype=bool)
        for s in self.parts:
            out &= s._contains(X)
        return out

    def halfspaces(self):
        reps = [s.halfspaces() for s in self.parts]
        if any(r is None for r in reps):
            return None
        A = np.vstack([r[0] for r in reps]).reshape(-1, self.dim)
        b = np.concatenate([r[1] for r in reps])
        return A, b

    @property
    def bounded(self):
        return True if any(s.bounded is True for s in self.parts) else None

    def describe(self):
        return "intersection(" + ", ".join(s.describe() for s in self.parts) + ")"


@dataclass(frozen=True, eq=False)
class Predicate(FeasibleSet):
    """Set given by a vectorized membership predicate ``fn(X) -> bool array``."""

    fn: Callable[[FloatArray], NDArray[np.bool_]]
    dim: int
    convex: bool = False
    closed: bool = True
    description: str = "predicate"
    kind = "predicate"

    def _contains(self, X):
        return np.asarray(self.fn(X), dtype=bool).reshape(X.shape[0])

    def describe(self):
        return f"predicate({self.description})"


def whole_space(dim: int) -> Polyhedron:
    return Polyhedron(np.zeros((0, dim)), np.zeros(0), dim=dim)


def empty_set(dim: int) -> Union:
    return Union((), dim=dim)


def halfspace_set(A: ArrayLike, b: ArrayLike) -> Polyhedron:
    return Polyhedron(np.asarray(A, dtype=float), np.asarray(b, dtype=float))


def truncate(K: FeasibleSet, n: float, p: float = 2.0) -> Intersection:
    """``K_n = {x in K : ||x|| <= n}``."""
    if not (np.isfinite(n) and n > 0):
        raise InvalidParameterError("truncation radius must be positive", n=n)
    return Intersection((K, Ball(np.zeros(K.dim), float(n), p)))


# --------------------------------------------------------------------------
# Functions and bifunctions
# --------------------------------------------------------------------------

def _probe_points(dim: int) -> FloatArray:
    axis = np.linspace(-4.0, 4.0, 9 if dim <= 2 else 5)
    grids = np.meshgrid(*([axis] * dim), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


@dataclass(frozen=True, eq=False)
class FunctionModel:
    """Extended-real function on R^d, ``+inf`` outside ``domain``.

    ``sublevel`` optionally maps a level to the exact sublevel set; it backs
    the exact recession path of the sublevel route.
    """

    dim: int
    evaluator: Callable[[FloatArray], FloatArray]
    domain: FeasibleSet | None = None
    flags: frozenset[str] = frozenset()
    description: str = ""
    sublevel: Callable[[float], FeasibleSet] | None = None
    check_proper: bool = True

    def __post_init__(self):
        flags = frozenset(self.flags)
        unknown = flags - FUNCTION_FLAGS
        if unknown:
            raise InvalidParameterError(f"unknown function flags {sorted(unknown)}")
        object.__setattr__(self, "flags", flags)
        if self.domain is not None and self.domain.dim != self.dim:
            raise DimensionMismatchError("domain dimension differs from function dimension")
        if self.check_proper:
            pts = _probe_points(self.dim)
            if self.domain is not None:
                inside = self.domain.contains(pts)
                pts = pts[inside] if np.any(inside) else pts[:0]
            vals = self(pts) if len(pts) else np.array([np.inf])
            if not np.any(vals < np.inf):
                raise ImproperFunctionError(
                    "function is identically +inf on its probe sample (not proper)",
                    description=self.description)

    def has(self, flag: str) -> bool:
        return flag in self.flags

    def __call__(self, X: ArrayLike) -> FloatArray | float:
        a = np.asarray(X, dtype=float)
        single = a.ndim == 1
        B = as_batch(a, self.dim)
        with np.errstate(all="ignore"):
            vals = np.asarray(self.evaluator(B), dtype=float)
        vals = np.broadcast_to(vals, (B.shape[0],)).copy()
        if self.domain is not None:
            vals[~self.domain._contains(B)] = np.inf
        if np.any(np.isnan(vals)):
            raise EvaluationError("function evaluated to NaN",
                                  description=self.description)
        return float(vals[0]) if single else vals


@dataclass(frozen=True, eq=False)
class BifunctionModel:
    """Real-valued ``psi(x, y)`` on ``feasible x feasible``.

    ``constant`` and ``difference_of`` record recognizable structure:
    ``psi == constant`` or ``psi(x, y) = g(y) - g(x)`` with ``g = difference_of``.
    """

    dim: int
    evaluator: Callable[[FloatArray, FloatArray], FloatArray]
    feasible: FeasibleSet
    annotations: frozenset[str] = frozenset()
    description: str = ""
    constant: float | None = None
    difference_of: FunctionModel | None = None

    def __post_init__(self):
        ann = frozenset(self.annotations)
        unknown = ann - BIFUNCTION_ANNOTATIONS
        if unknown:
            raise InvalidParameterError(f"unknown bifunction annotations {sorted(unknown)}")
        object.__setattr__(self, "annotations", ann)
        if self.feasible.dim != self.dim:
            raise DimensionMismatchError("feasible set dimension differs from bifunction")

    def __call__(self, X: ArrayLike, Y: ArrayLike) -> FloatArray | float:
        """Evaluate on broadcast-compatible batches (``(..., d)`` arrays)."""
        a = np.asarray(X, dtype=float)
        b = np.asarray(Y, dtype=float)
        if a.shape[-1] != self.dim or b.shape[-1] != self.dim:
            raise DimensionMismatchError(f"expected points of dimension {self.dim}")
        with np.errstate(all="ignore"):
            vals = np.asarray(self.evaluator(a, b), dtype=float)
        shape = np.broadcast_shapes(a.shape[:-1], b.shape[:-1])
        vals = np.broadcast_to(vals, shape)
        if np.any(~np.isfinite(vals)):
            raise EvaluationError("bifunction must be finite on its domain",
                                  description=self.description)
        return float(vals) if vals.ndim == 0 else vals

    def negated_section(self, y: ArrayLike) -> FunctionModel:
        """``x -> -psi(x, y)`` as a function on ``feasible`` (+inf outside)."""
        yy = as_point(y, self.dim)
        psi = self

        def ev(X):
            return -psi.evaluator(X, yy[None, :])

        return FunctionModel(self.dim, ev, domain=self.feasible,
                             description=f"-psi(., {yy.tolist()})", check_proper=False)

    def transpose(self) -> BifunctionModel:
        ev = self.evaluator
        return BifunctionModel(self.dim, lambda X, Y: ev(Y, X), self.feasible,
                               description=f"transpose({self.description})",
                               constant=self.constant)


def evaluate(f: FunctionModel, x: ArrayLike) -> ExtendedReal:
    """``f(x)`` as an extended real; ``+inf`` outside the domain."""
    p = as_point(x)
    if p.size != f.dim:
        raise DimensionMismatchError(f"expected dimension {f.dim}, got {p.size}",
                                     expected=f.dim, got=p.size)
    return ExtendedReal(f(p))


# --------------------------------------------------------------------------
# Grids
# --------------------------------------------------------------------------

def lattice(radius: float, resolution: float, dim: int) -> FloatArray:
    """Points ``resolution * z`` with integer ``z`` in ``[-radius, radius]^d``.

    Rows come out in lexicographic order.
    """
    if not (resolution > 0 and np.isfinite(resolution)):
        raise InvalidParameterError("grid resolution must be positive", resolution=resolution)
    m = int(math.floor(radius / resolution + 1e-9))
    idx = np.arange(-m, m + 1, dtype=float)
    grids = np.meshgrid(*([idx] * dim), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1) * resolution


def stage_grid(K: FeasibleSet, n: float, resolution: float, p: float = 2.0) -> FloatArray:
    """Lattice points of ``K_n`` in lexicographic order."""
    pts = lattice(n, resolution, K.dim)
    keep = truncate(K, n, p).contains(pts)
    return pts[keep]


def sorted_rows(points: ArrayLike) -> list[tuple[float, ...]]:
    return sorted(tuple(float(v) for v in row) for row in np.asarray(points, dtype=float))


@dataclass(frozen=True)
class GridSpec:
    """Box grid used for infimum estimates and base-point searches."""

    radius: float = 4.0
    resolution: float = 0.05

    def points(self, dim: int) -> FloatArray:
        return lattice(self.radius, self.resolution, dim)


def unit_directions(dim: int, count: int, seed: int = 0) -> FloatArray:
    """Deterministic unit directions: angles in 2-D, signs in 1-D, seeded otherwise."""
    if dim == 1:
        return np.array([[-1.0], [1.0]])
    if dim == 2:
        th = 2.0 * np.pi * np.arange(count) / count
        return np.stack([np.cos(th), np.sin(th)], axis=1)
    rng = np.random.default_rng(seed)
    v = rng.normal(size=(count, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


__all__ = [
    "ExtendedReal", "POS_INF", "NEG_INF", "as_point", "as_batch", "norm",
    "FeasibleSet", "Box", "Polyhedron", "Ball", "Union", "Intersection", "Predicate",
    "whole_space", "empty_set", "halfspace_set", "truncate",
    "FunctionModel", "BifunctionModel", "evaluate",
    "lattice", "stage_grid", "sorted_rows", "GridSpec", "unit_directions",
    "QUASI_CONVEX", "LSC", "BOUNDED_BELOW", "RADIAL", "BOUNDARY_TOL",
]
