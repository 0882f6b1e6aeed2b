"""Deliberately naive reference implementations.

Nothing here reuses the grid, norm or search code of the solver modules:
grids come from ``itertools``, norms from ``math``, and every loop runs in
the opposite order to its vectorized counterpart.  Models are only used
through their public evaluators and membership tests.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

DEFAULT_T_GRID = tuple(2.0 ** j for j in range(21))


@dataclass(frozen=True)
class OracleConfig:
    lower: float = -4.0
    upper: float = 4.0
    resolution: float = 0.25
    t_grid: tuple[float, ...] = DEFAULT_T_GRID
    seed: int = 0

    def __post_init__(self):
        if not self.resolution > 0:
            raise ValueError("resolution must be > 0")
        if not (math.isfinite(self.lower) and math.isfinite(self.upper)):
            raise ValueError("bounds must be finite")
        if self.lower > self.upper:
            raise ValueError("empty box")


def _axis(lower: float, upper: float, h: float) -> list[float]:
    lo = math.ceil(lower / h - 1e-9)
    hi = math.floor(upper / h + 1e-9)
    return [float(i) * h for i in range(lo, hi + 1)]


def oracle_box_grid(lower: Sequence[float], upper: Sequence[float], h: float) -> list[tuple]:
    """Integer multiples of ``h`` inside the box, in lexicographic order."""
    axes = [_axis(lo, hi, h) for lo, hi in zip(lower, upper)]
    return list(itertools.product(*axes))


def oracle_norm(x: Sequence[float], p: float = 2.0) -> float:
    if p == math.inf:
        return max(abs(v) for v in x)
    if p == 2.0:
        return math.sqrt(math.fsum(v * v for v in x))
    return math.fsum(abs(v) ** p for v in x) ** (1.0 / p)


def oracle_stage_grid(contains: Callable, dim: int, n: float, h: float,
                      p: float = 2.0) -> list[tuple]:
    """Grid points of ``{x in K : ||x|| <= n}``; ``contains`` is K's membership test."""
    limit = n * (1.0 + 1e-12) + 1e-9
    out = []
    for x in oracle_box_grid([-n] * dim, [n] * dim, h):
        if oracle_norm(x, p) <= limit and bool(contains(np.array(x))):
            out.append(x)
    return out


def oracle_grid_argmin(f: Callable, lower: Sequence[float], upper: Sequence[float],
                       resolution: float, tol: float = 1e-12,
                       keep: Callable | None = None) -> tuple[list[tuple], float]:
    """Exhaustive scan: every grid point within ``tol`` of the minimum, and the minimum.

    ``keep`` optionally filters grid points (for example a truncated set).
    """
    best = math.inf
    values = []
    for x in oracle_box_grid(lower, upper, resolution):
        if keep is not None and not keep(x):
            continue
        v = float(f(np.array(x)))
        values.append((x, v))
        if v < best:
            best = v
    return [x for x, v in values if v <= best + tol], best


def oracle_ray_recession(contains: Callable, u: Sequence[float], base: Sequence[float],
                         t_grid: Sequence[float] = DEFAULT_T_GRID) -> list[bool]:
    """Membership bit of ``base + t u`` for each ``t``."""
    bits = []
    for t in t_grid:
        x = np.array([b + t * c for b, c in zip(base, u)], dtype=float)
        bits.append(bool(contains(x)))
    return bits


def oracle_ep_solutions(psi: Callable, grid: Sequence[Sequence[float]],
                        eps: float = 1e-9) -> list[tuple]:
    """Grid points ``x`` with ``psi(x, y) >= -eps`` for every grid ``y``.

    Outer loop over ``y``, inner evaluation over all ``x`` at once; no pruning.
    """
    X = np.array(grid, dtype=float)
    if X.size == 0:
        return []
    worst = np.full(X.shape[0], math.inf)
    for y in X:
        vals = np.asarray(psi(X, y[None, :]), dtype=float).reshape(X.shape[0])
        worst = np.minimum(worst, vals)
    return [tuple(float(c) for c in x) for x, w in zip(X, worst) if w >= -eps]


def oracle_negative_cycle(psi: Callable, points: Sequence[Sequence[float]], max_len: int,
                          tol: float = 1e-9) -> list[tuple] | None:
    """First tuple (lexicographic in point indices, shortest first) whose every
    cyclic edge value is below ``-tol``; None when every tuple has a
    nonnegative edge.  Enumerates all ``N^m`` tuples."""
    pts = [np.array(p, dtype=float) for p in points]

    def value(i, j):
        return float(np.asarray(psi(pts[i][None, :], pts[j][None, :])).reshape(-1)[0])

    table = {(i, j): value(i, j) for i in range(len(pts)) for j in range(len(pts))}
    for m in range(2, max_len + 1):
        for idx in itertools.product(range(len(pts)), repeat=m):
            if all(table[idx[k], idx[(k + 1) % m]] < -tol for k in range(m)):
                return [tuple(float(c) for c in pts[i]) for i in idx]
    return None


def oracle_pseudomonotone_violation(psi: Callable, points: Sequence[Sequence[float]],
                                    tol: float = 1e-9) -> tuple | None:
    """A pair with ``psi(x, y) >= 0`` and ``psi(y, x) > tol``, or None."""
    pts = [np.array(p, dtype=float) for p in points]
    for x, y in itertools.product(pts, repeat=2):
        a = float(np.asarray(psi(x[None, :], y[None, :])).reshape(-1)[0])
        b = float(np.asarray(psi(y[None, :], x[None, :])).reshape(-1)[0])
        if a >= 0 and b > tol:
            return tuple(x.tolist()), tuple(y.tolist())
    return None
