"""Finite-sample refuters for bifunction classes and structural recognizers.

A checker can refute a class annotation with a materialized witness, or
report that the sample is consistent with it.  Consistency on a sample never
upgrades an annotation.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike

from .core import BifunctionModel, FloatArray, as_batch
from .errors import InvalidParameterError, NotConvexError

CONSISTENT = "consistent_on_sample"
REFUTED = "refuted"
UNWITNESSED = "unwitnessed"

DEFAULT_TOL = 1e-9
CHECKS_NEED_CONVEX = frozenset({"transfer_quasi_convex"})


@dataclass(frozen=True)
class SampleDesign:
    points: FloatArray
    tuple_length_max: int = 4
    subset_size_max: int = 3

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise InvalidParameterError("design needs a non-empty (N, d) point array")
        if self.tuple_length_max < 1 or self.subset_size_max < 1:
            raise InvalidParameterError("design bounds must be >= 1")
        object.__setattr__(self, "points", pts)

    def validate(self, psi: BifunctionModel) -> None:
        as_batch(self.points, psi.dim)
        if not np.all(psi.feasible.contains(self.points)):
            raise InvalidParameterError("design points must lie in the feasible set")


@dataclass(frozen=True)
class ClassCheckReport:
    class_name: str
    verdict: str
    tested: int
    witness: dict | None = None
    partial: bool = False
    details: tuple = field(default=(), repr=False)

    @property
    def consistent(self) -> bool:
        return self.verdict == CONSISTENT

    def to_dict(self) -> dict:
        return {"class_name": self.class_name, "verdict": self.verdict,
                "tested": self.tested, "witness": self.witness, "partial": self.partial}


def value_matrix(psi: BifunctionModel, X: FloatArray, Y: FloatArray | None = None) -> FloatArray:
    """``M[i, j] = psi(X[i], Y[j])``."""
    Y = X if Y is None else Y
    return np.asarray(psi(X[:, None, :], Y[None, :, :]), dtype=float)


def _pt(x) -> list[float]:
    return [float(v) for v in x]


def check_pseudomonotone(psi: BifunctionModel, design: SampleDesign,
                         tol: float = DEFAULT_TOL) -> ClassCheckReport:
    """Refuted by a pair with ``psi(x, y) >= 0`` and ``psi(y, x) > tol``."""
    design.validate(psi)
    P = design.points
    M = value_matrix(psi, P)
    bad = (M >= 0) & (M.T > tol)
    n = P.shape[0]
    if np.any(bad):
        i, j = map(int, np.argwhere(bad)[0])
        return ClassCheckReport("pseudomonotone", REFUTED, n * n, {
            "x": _pt(P[i]), "y": _pt(P[j]),
            "psi_xy": float(M[i, j]), "psi_yx": float(M[j, i])})
    return ClassCheckReport("pseudomonotone", CONSISTENT, n * n)


def _cycle_from(neg: np.ndarray, start: int, length: int) -> list[int] | None:
    """Closed walk of exactly ``length`` edges through ``start`` in graph ``neg``."""
    n = neg.shape[0]
    # reach[k][v]: v reaches start in exactly k steps
    reach = [np.zeros(n, dtype=bool) for _ in range(length + 1)]
    reach[0][start] = True
    for k in range(1, length + 1):
        reach[k] = np.any(neg & reach[k - 1][None, :], axis=1)
    if not reach[length][start]:
        return None
    walk, v = [start], start
    for k in range(length - 1, 0, -1):
        nxt = int(np.flatnonzero(neg[v] & reach[k])[0])
        walk.append(nxt)
        v = nxt
    return walk


def check_cyclically_anti_quasimonotone(psi: BifunctionModel, design: SampleDesign,
                                        tol: float = DEFAULT_TOL,
                                        max_points: int = 4096) -> ClassCheckReport:
    """Refuted by a cycle ``x_1..x_m`` (repetitions allowed, ``2 <= m <= bound``)
    whose every edge value ``psi(x_i, x_{i+1})`` is below ``-tol``.

    All tuples up to the bound are covered exactly: such a cycle exists iff
    the digraph of strictly negative edges has a closed walk of that length.
    """
    if design.tuple_length_max < 2:
        raise InvalidParameterError("cyclic check needs tuple_length_max >= 2")
    design.validate(psi)
    P = design.points
    partial = P.shape[0] > max_points
    if partial:
        P = P[:max_points]
    n = P.shape[0]
    L = design.tuple_length_max
    tested = sum(n ** m for m in range(2, L + 1))
    neg = value_matrix(psi, P) < -tol
    if not np.any(neg):
        return ClassCheckReport("cyclically_anti_quasimonotone", CONSISTENT, tested,
                                partial=partial)
    M = neg.copy()
    for m in range(2, L + 1):
        M = (M.astype(np.int64) @ neg.astype(np.int64)) > 0
        diag = np.flatnonzero(np.diag(M))
        if diag.size:
            walk = _cycle_from(neg, int(diag[0]), m)
            pts = [P[i] for i in walk]
            edges = [float(psi(pts[i], pts[(i + 1) % m])) for i in range(m)]
            return ClassCheckReport("cyclically_anti_quasimonotone", REFUTED, tested, {
                "cycle": [_pt(p) for p in pts], "edge_values": edges}, partial)
    return ClassCheckReport("cyclically_anti_quasimonotone", CONSISTENT, tested,
                            partial=partial)


def _subsets(n: int, kmax: int):
    for k in range(1, min(kmax, n) + 1):
        yield from itertools.combinations(range(n), k)


def check_locally_dominated(psi: BifunctionModel, design: SampleDesign,
                            candidate_x: ArrayLike | None = None,
                            tol: float = DEFAULT_TOL) -> ClassCheckReport:
    """For each subset of design points, search a candidate ``x`` with
    ``max_i psi(x, y_i) <= tol``.  A failed search is ``unwitnessed``, never a
    refutation."""
    design.validate(psi)
    Y = design.points
    C = Y if candidate_x is None else as_batch(candidate_x, psi.dim)
    M = value_matrix(psi, C, Y) <= tol
    tested = 0
    for S in _subsets(Y.shape[0], design.subset_size_max):
        tested += 1
        ok = np.all(M[:, list(S)], axis=1)
        if not np.any(ok):
            return ClassCheckReport("locally_dominated", UNWITNESSED, tested, {
                "subset": [_pt(Y[i]) for i in S]})
    return ClassCheckReport("locally_dominated", CONSISTENT, tested)


def _combination_weights(m: int, rng: np.random.Generator, extra: int = 4) -> FloatArray:
    rows = [np.eye(m)]
    if m > 1:
        pairs = [0.5 * (np.eye(m)[i] + np.eye(m)[j])
                 for i, j in itertools.combinations(range(m), 2)]
        rows.append(np.array(pairs))
        rows.append(np.full((1, m), 1.0 / m))
        rows.append(rng.dirichlet(np.ones(m), size=extra))
    return np.vstack(rows)


def _transfer_ok(psi, xs: FloatArray, ys: FloatArray, rng, tol) -> bool:
    m = xs.shape[0]
    for r in range(1, m + 1):
        for L in itertools.combinations(range(m), r):
            W = _combination_weights(r, rng)
            X = W @ xs[list(L)]
            neg = -value_matrix(psi, X, ys[list(L)])
            if np.any(neg.min(axis=1) > tol):
                return False
    return True


def check_transfer_quasi_convex_in_y(psi: BifunctionModel, design: SampleDesign,
                                     pool: ArrayLike | None = None,
                                     tol: float = DEFAULT_TOL, seed: int = 0,
                                     max_search: int = 256) -> ClassCheckReport:
    """Search, per subset ``{y_i}``, for companions ``{x_i}`` such that every
    sampled convex combination ``x`` of any sub-family satisfies
    ``min_i -psi(x, y_i) <= tol``.  Companions ``x_i = y_i`` are tried first,
    then tuples from ``pool`` (default: the design points)."""
    if not psi.feasible.convex:
        raise NotConvexError("transfer check needs a convex feasible set")
    design.validate(psi)
    Y = design.points
    pool_pts = Y if pool is None else as_batch(pool, psi.dim)
    tested = 0
    for S in _subsets(Y.shape[0], design.subset_size_max):
        tested += 1
        ys = Y[list(S)]
        rng = np.random.default_rng([seed, *S])
        if _transfer_ok(psi, ys, ys, rng, tol):
            continue
        found = False
        for count, combo in enumerate(itertools.product(range(pool_pts.shape[0]), repeat=len(S))):
            if count >= max_search:
                break
            if _transfer_ok(psi, pool_pts[list(combo)], ys, rng, tol):
                found = True
                break
        if not found:
            return ClassCheckReport("transfer_quasi_convex", UNWITNESSED, tested, {
                "subset": [_pt(y) for y in ys]})
    return ClassCheckReport("transfer_quasi_convex", CONSISTENT, tested)


AUTOMATIC = "automatic"
STRUCTURAL = "structural"
UNKNOWN = "unknown"

FINITE_DIM_REASON = ("finite-dimensional space with the norm topology: any unbounded "
                     "sequence of truncated solutions has a subsequence whose normalized "
                     "points converge to a nonzero recession direction, so the "
                     "sequence itself supplies the comparison points")


@dataclass(frozen=True)
class KSigmaRecognition:
    status: str
    reason: str
    structural_class: str | None = None

    def to_dict(self) -> dict:
        return {"status": self.status, "reason": self.reason,
                "structural_class": self.structural_class}


def recognize_K_sigma(psi: BifunctionModel) -> KSigmaRecognition:
    """Recognize the truncation transfer condition used by the existence pipeline.

    Always satisfied here (finite dimension, norm topology); constant
    nonnegative and difference-form bifunctions are also named structurally.
    """
    if psi.constant is not None and psi.constant >= 0:
        return KSigmaRecognition(STRUCTURAL, "constant nonnegative bifunction; "
                                 + FINITE_DIM_REASON, "constant")
    if psi.difference_of is not None:
        return KSigmaRecognition(STRUCTURAL, "difference form g(y) - g(x); "
                                 + FINITE_DIM_REASON, "difference")
    return KSigmaRecognition(AUTOMATIC, FINITE_DIM_REASON)
