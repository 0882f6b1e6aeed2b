"""Ready-made functions, bifunctions and random model generators."""

from __future__ import annotations

import math

import numpy as np
from numpy.typing import ArrayLike

from .core import (
    BOUNDED_BELOW,
    LSC,
    QUASI_CONVEX,
    RADIAL,
    Ball,
    BifunctionModel,
    Box,
    FeasibleSet,
    FunctionModel,
    Polyhedron,
    Predicate,
    as_point,
    empty_set,
    whole_space,
)

SQRT3 = math.sqrt(3.0)


def _radii(X) -> np.ndarray:
    return np.linalg.norm(np.asarray(X, dtype=float), axis=-1)


def constant(dim: int, c: float) -> FunctionModel:
    c = float(c)

    def sub(lam):
        return whole_space(dim) if lam >= c else empty_set(dim)

    return FunctionModel(dim, lambda X: np.full(X.shape[0], c),
                         flags={QUASI_CONVEX, LSC, BOUNDED_BELOW},
                         description=f"constant {c}", sublevel=sub)


def euclidean_norm(dim: int) -> FunctionModel:
    def sub(lam):
        return Ball(np.zeros(dim), lam) if lam >= 0 else empty_set(dim)

    return FunctionModel(dim, _radii, flags={QUASI_CONVEX, LSC, BOUNDED_BELOW, RADIAL},
                         description="norm", sublevel=sub)


def linear(c: ArrayLike) -> FunctionModel:
    c = np.asarray(c, dtype=float)
    dim = c.size

    def sub(lam):
        return Polyhedron(c[None, :], np.array([lam]))

    return FunctionModel(dim, lambda X: X @ c, flags={QUASI_CONVEX, LSC},
                         description=f"linear {c.tolist()}", sublevel=sub)


def arctan_norm(dim: int) -> FunctionModel:
    """Bounded radial model ``arctan ||x||``."""
    def sub(lam):
        if lam < 0:
            return empty_set(dim)
        if lam >= math.pi / 2:
            return whole_space(dim)
        return Ball(np.zeros(dim), math.tan(lam))

    return FunctionModel(dim, lambda X: np.arctan(_radii(X)),
                         flags={QUASI_CONVEX, LSC, BOUNDED_BELOW, RADIAL},
                         description="arctan(norm)", sublevel=sub)


def radial_arctan_plateau_profile(r: np.ndarray) -> np.ndarray:
    return np.where(r >= 1.0, np.arctan(r), np.where(r > 0.5, r / 5.0, -1.0))


def radial_arctan_plateau(dim: int = 2) -> FunctionModel:
    """``-1`` on the ball of radius 1/2, ``||x||/5`` up to radius 1, ``arctan ||x||`` beyond.

    Declared lsc so the sublevel route applies; the level sets for levels in
    ``(1/5, pi/4)`` are open balls, which the exact description replaces by
    their closures.
    """
    def sub(lam):
        if lam < -1.0:
            return empty_set(dim)
        if lam >= math.pi / 2:
            return whole_space(dim)
        if lam >= math.pi / 4:
            r = math.tan(lam)
        elif lam >= 0.2:
            r = 1.0
        elif lam >= 0.1:
            r = 5.0 * lam
        else:
            r = 0.5
        return Ball(np.zeros(dim), r)

    return FunctionModel(dim, lambda X: radial_arctan_plateau_profile(_radii(X)),
                         flags={QUASI_CONVEX, LSC, BOUNDED_BELOW, RADIAL},
                         description="radial arctan plateau", sublevel=sub)


def piecewise_arctan_1d_values(x: np.ndarray) -> np.ndarray:
    a, b = SQRT3 / 6.0, SQRT3 / 3.0
    return np.select([x <= 0, x <= a, x < b], [-np.arctan(x), x, -x + b], np.arctan(x))


def piecewise_arctan_1d() -> FunctionModel:
    """Neither quasi-convex nor lsc: it jumps up at ``sqrt(3)/3``; its
    infimum 0 is attained only at the origin."""
    return FunctionModel(1, lambda X: piecewise_arctan_1d_values(X[:, 0]),
                         flags={BOUNDED_BELOW}, description="piecewise arctan 1d")


def lattice_indicator(dim: int, spacing: float = 0.5) -> FunctionModel:
    """0 on the lattice ``spacing * Z^d``, +inf elsewhere; no flags."""
    def ev(X):
        q = X / spacing
        on = np.all(np.abs(q - np.round(q)) <= 1e-12, axis=1)
        return np.where(on, 0.0, np.inf)

    return FunctionModel(dim, ev, description=f"lattice indicator {spacing}")


def radial_profile(dim: int, kind: str, a: float, b: float, c: float) -> FunctionModel:
    """Radial model ``phi(||x||)`` with a nondecreasing profile.

    ``arctan``: ``a*arctan(b r) + c``; ``linear``: ``a r + c``;
    ``capped``: ``min(a r, b) + c``.  All parameters positive except ``c``.
    """
    if kind == "arctan":
        def phi(r):
            return a * np.arctan(b * r) + c

        def radius(lam):
            if lam >= a * math.pi / 2 + c:
                return math.inf
            return math.tan((lam - c) / a) / b
    elif kind == "linear":
        def phi(r):
            return a * r + c

        def radius(lam):
            return (lam - c) / a
    elif kind == "capped":
        def phi(r):
            return np.minimum(a * r, b) + c

        def radius(lam):
            return math.inf if lam >= b + c else (lam - c) / a
    else:
        raise ValueError(f"unknown radial profile {kind!r}")

    def sub(lam):
        if lam < c:
            return empty_set(dim)
        r = radius(lam)
        return whole_space(dim) if r == math.inf else Ball(np.zeros(dim), r)

    return FunctionModel(dim, lambda X: phi(_radii(X)),
                         flags={QUASI_CONVEX, LSC, BOUNDED_BELOW, RADIAL},
                         description=f"radial {kind} a={a:.6g} b={b:.6g} c={c:.6g}",
                         sublevel=sub)


def max_affine(A: ArrayLike, b: ArrayLike, floor: float) -> FunctionModel:
    """``max(floor, max_i a_i.x - b_i)``; sublevel sets are polyhedra."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    floor = float(floor)

    def sub(lam):
        if lam < floor:
            return empty_set(A.shape[1])
        return Polyhedron(A, lam + b)

    return FunctionModel(A.shape[1], lambda X: np.maximum(floor, np.max(X @ A.T - b, axis=1)),
                         flags={QUASI_CONVEX, LSC, BOUNDED_BELOW},
                         description=f"max-affine m={A.shape[0]}", sublevel=sub)


def random_polyhedral_model(rng: np.random.Generator, dim: int = 2,
                            pieces: int | None = None) -> FunctionModel:
    """Random max-affine model whose minimum ``floor`` is attained at the origin."""
    m = int(pieces if pieces is not None else rng.integers(1, 6))
    A = rng.normal(size=(m, dim))
    b = rng.uniform(-1.0, 1.0, size=m)
    floor = float(np.max(-b) + rng.uniform(0.0, 0.5))
    return max_affine(A, b, floor)


def random_radial_model(rng: np.random.Generator, dim: int = 2) -> FunctionModel:
    kind = ("arctan", "linear", "capped")[int(rng.integers(0, 3))]
    a = float(rng.uniform(0.5, 2.0))
    b = float(rng.uniform(0.5, 2.0))
    c = float(rng.uniform(-1.0, 1.0))
    return radial_profile(dim, kind, a, b, c)


def identity_suite(count: int = 24, seed: int = 0) -> list[FunctionModel]:
    """Alternating polyhedral and radial quasi-convex lsc models."""
    rng = np.random.default_rng(seed)
    return [random_polyhedral_model(rng) if i % 2 == 0 else random_radial_model(rng)
            for i in range(count)]


# --------------------------------------------------------------------------
# Bifunctions
# --------------------------------------------------------------------------

def constant_bifunction(K: FeasibleSet, r: float) -> BifunctionModel:
    r = float(r)
    return BifunctionModel(K.dim, lambda X, Y: np.full(np.broadcast_shapes(
        np.shape(X)[:-1], np.shape(Y)[:-1]), r), K, description=f"constant {r}", constant=r)


def difference_bifunction(f: FunctionModel, K: FeasibleSet | None = None) -> BifunctionModel:
    """``f(y) - f(x)``."""
    K = K or whole_space(f.dim)

    def ev(X, Y):
        X = np.asarray(X, float)
        Y = np.asarray(Y, float)
        fx = f(X.reshape(-1, f.dim)).reshape(X.shape[:-1])
        fy = f(Y.reshape(-1, f.dim)).reshape(Y.shape[:-1])
        return fy - fx

    return BifunctionModel(f.dim, ev, K, description=f"difference of {f.description}",
                           difference_of=f)


def box_indicator_ep(lower: ArrayLike = (0.0, 0.0), upper: ArrayLike = (1.0, 2.0),
                     K: FeasibleSet | None = None) -> BifunctionModel:
    """0 when either argument lies in the box ``C``, -1 otherwise."""
    C = Box(as_point(lower), as_point(upper))
    K = K or whole_space(C.dim)

    def ev(X, Y):
        X = np.asarray(X, float)
        Y = np.asarray(Y, float)
        inside_x = np.all((X >= C.lower) & (X <= C.upper), axis=-1)
        inside_y = np.all((Y >= C.lower) & (Y <= C.upper), axis=-1)
        return np.where(inside_x | inside_y, 0.0, -1.0)

    return BifunctionModel(C.dim, ev, K, description=f"box indicator {C.describe()}")


def linear_in_y_ep() -> BifunctionModel:
    """``psi(x, y) = y`` on the real line."""
    return BifunctionModel(1, lambda X, Y: np.broadcast_to(
        np.asarray(Y, float)[..., 0], np.broadcast_shapes(np.shape(X)[:-1], np.shape(Y)[:-1])),
        whole_space(1), description="psi(x, y) = y")


def negative_square_plus_y(dim: int = 1) -> BifunctionModel:
    """``psi(x, y) = -||x||^2 + y_1``."""
    def ev(X, Y):
        X = np.asarray(X, float)
        Y = np.asarray(Y, float)
        return -np.sum(X * X, axis=-1) + Y[..., 0]

    return BifunctionModel(dim, ev, whole_space(dim), description="-|x|^2 + y1")


def parabola_region() -> Predicate:
    """``{x : x_1 >= 0, x_2 <= sqrt(x_1)}``: closed, convex, not polyhedral."""
    def fn(X):
        x1 = X[:, 0]
        with np.errstate(invalid="ignore"):
            return (x1 >= 0) & (X[:, 1] <= np.sqrt(np.maximum(x1, 0.0)))

    return Predicate(fn, 2, convex=True, closed=True, description="x2 <= sqrt(x1), x1 >= 0")


# --------------------------------------------------------------------------
# Random desk-scale instances
# --------------------------------------------------------------------------

DESK_EP_KINDS = ("affine_variational", "difference", "affine_plus_difference",
                 "box_indicator", "constant")


def random_feasible_set(rng: np.random.Generator, dim: int) -> FeasibleSet:
    """Whole space, a box, or a polyhedron; always contains the origin."""
    kind = int(rng.integers(0, 3))
    if kind == 0:
        return whole_space(dim)
    if kind == 1:
        return Box(-rng.uniform(0.5, 3.0, size=dim), rng.uniform(0.5, 3.0, size=dim))
    m = int(rng.integers(1, 4))
    return Polyhedron(rng.normal(size=(m, dim)), rng.uniform(0.2, 2.0, size=m))


def affine_variational(M: ArrayLike, q: ArrayLike, K: FeasibleSet) -> BifunctionModel:
    """``<M x + q, y - x>``, written elementwise so every evaluation order agrees."""
    M = np.asarray(M, dtype=float)
    q = np.asarray(q, dtype=float)
    d = q.size

    def ev(X, Y):
        X = np.asarray(X, float)
        Y = np.asarray(Y, float)
        total = 0.0
        for i in range(d):
            row = q[i]
            for j in range(d):
                row = row + M[i, j] * X[..., j]
            total = total + row * (Y[..., i] - X[..., i])
        return total

    return BifunctionModel(d, ev, K, description=f"affine variational M={M.tolist()}")


def random_desk_ep(rng: np.random.Generator, dim: int | None = None,
                   kind: str | None = None) -> BifunctionModel:
    """Random bifunction on a random feasible set (origin always feasible)."""
    dim = int(rng.integers(1, 3)) if dim is None else dim
    kind = DESK_EP_KINDS[int(rng.integers(0, len(DESK_EP_KINDS)))] if kind is None else kind
    K = random_feasible_set(rng, dim)
    if kind == "affine_variational":
        return affine_variational(rng.normal(size=(dim, dim)), rng.normal(size=dim), K)
    if kind == "difference":
        g = random_polyhedral_model(rng, dim) if rng.uniform() < 0.5 else random_radial_model(rng, dim)
        return difference_bifunction(g, K)
    if kind == "affine_plus_difference":
        a = affine_variational(rng.normal(size=(dim, dim)), rng.normal(size=dim), K)
        g = random_radial_model(rng, dim)
        diff = difference_bifunction(g, K)
        return BifunctionModel(dim, lambda X, Y: a.evaluator(X, Y) + diff.evaluator(X, Y), K,
                               description=f"{a.description} + {diff.description}")
    if kind == "box_indicator":
        lo = rng.uniform(-2.0, 1.0, size=dim)
        return box_indicator_ep(lo, lo + rng.uniform(0.5, 2.0, size=dim), K)
    if kind == "constant":
        return constant_bifunction(K, float(rng.choice([-1.0, 0.0, 0.5])))
    raise ValueError(f"unknown desk instance kind {kind!r}")
