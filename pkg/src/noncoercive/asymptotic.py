"""Classical and generalized (sublevel-based) asymptotic functions.

The generalized function is estimated two ways:

* sequentially, as an infimum over probe sequences ``x_k = t_k (u + delta_k xi)``
  of the liminf of ``f(x_k)``;
* through sublevel sets, as the least level whose sublevel set recedes in
  direction ``u`` (valid for quasi-convex lsc functions).

The classical function uses the same probe sequences with growth rates
``f(x_k) / t_k``.  Its liminf is read off secant slopes
``(f(x_{k+1}) - f(x_k)) / (t_{k+1} - t_k)``, which share the limit of the
quotients but drop their ``O(1/t)`` offset term.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike
from scipy.optimize import linprog

from .cones import ConeProbe, exact_recession
from .core import (
    LSC,
    QUASI_CONVEX,
    Ball,
    Box,
    ExtendedReal,
    FeasibleSet,
    FloatArray,
    FunctionModel,
    GridSpec,
    Intersection,
    Polyhedron,
    Union,
    as_point,
    unit_directions,
)
from .errors import DimensionMismatchError, InvalidParameterError, MissingAnnotationError

SEQUENTIAL = "sequential_liminf"
SUBLEVEL = "sublevel_recession"
ANALYTIC = "analytic_closed_form"

EXACT = "exact"
UPPER_BOUND = "upper_bound_estimate"

# Tail step-minima that move monotonically by more than this factor times
# (1 + |first|) are reported as diverging to +-inf.
DIVERGENCE_FACTOR = 8.0

COUNTEREXAMPLE_NOTE = (
    "without quasi-convexity and lower semicontinuity a finite generalized "
    "asymptotic function does not imply boundedness: the indicator of a dense "
    "countable set (0 on the set, +inf elsewhere) has the function identically 0")


@dataclass(frozen=True)
class LiminfSchedule:
    """Probe-sequence design for sequential liminf estimates.

    Probe ``j`` is the sequence ``t_k (u + delta_k xi_j)``; ``xi_0 = 0`` and the
    rest are drawn uniformly from the unit ball with ``seed``.  The default
    ``delta_k = 1 / t_k`` keeps every probe within distance 1 of the ray.
    """

    t_sequence: tuple[float, ...] = tuple(2.0 ** k for k in range(21))
    perturbations: tuple[float, ...] | None = None
    probes_per_step: int = 32
    burn_in: int | None = None
    seed: int = 0

    def __post_init__(self):
        t = np.asarray(self.t_sequence, dtype=float)
        if t.size < 3 or t[0] <= 0 or np.any(np.diff(t) <= 0):
            raise InvalidParameterError("t_sequence must be positive, strictly increasing, "
                                        "and have at least 3 entries")
        delta = (1.0 / t) if self.perturbations is None else np.asarray(self.perturbations, float)
        if delta.shape != t.shape or np.any(delta < 0) or np.any(np.diff(delta) > 0):
            raise InvalidParameterError("perturbations must be non-negative, non-increasing, "
                                        "one per step")
        if self.probes_per_step < 1:
            raise InvalidParameterError("probes_per_step must be >= 1")
        burn = t.size // 2 if self.burn_in is None else int(self.burn_in)
        if not 0 <= burn <= t.size - 2:
            raise InvalidParameterError("burn_in must leave at least two tail steps")
        object.__setattr__(self, "t_sequence", tuple(float(v) for v in t))
        object.__setattr__(self, "perturbations", tuple(float(v) for v in delta))
        object.__setattr__(self, "burn_in", burn)

    def offsets(self, dim: int) -> FloatArray:
        rng = np.random.default_rng(self.seed)
        v = rng.normal(size=(self.probes_per_step, dim))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        r = rng.uniform(size=(self.probes_per_step, 1)) ** (1.0 / dim)
        return np.vstack([np.zeros((1, dim)), v * r])

    def probe_points(self, u: FloatArray) -> FloatArray:
        """Array of shape ``(probes + 1, steps, d)``."""
        t = np.asarray(self.t_sequence)[None, :, None]
        delta = np.asarray(self.perturbations)[None, :, None]
        xi = self.offsets(u.size)[:, None, :]
        return t * (u[None, None, :] + delta * xi)


@dataclass(frozen=True)
class AsymptoticEstimate:
    direction: tuple[float, ...]
    value: ExtendedReal
    method: str
    confidence: str
    trend: str = "bounded"
    trace: tuple[tuple[float, float], ...] = field(default=(), repr=False)

    def __float__(self) -> float:
        return float(self.value)

    def to_dict(self) -> dict:
        return {"direction": list(self.direction), "value": str(self.value),
                "method": self.method, "confidence": self.confidence,
                "trend": self.trend,
                "trace": [[t, _fmt(v)] for t, v in self.trace]}


def _fmt(v: float):
    return v if np.isfinite(v) else ("+inf" if v > 0 else "-inf")


def _check_dim(f: FunctionModel, u: ArrayLike) -> FloatArray:
    uu = as_point(u)
    if uu.size != f.dim:
        raise DimensionMismatchError(f"direction has dimension {uu.size}, model {f.dim}")
    return uu


def _tail_liminf(values: FloatArray, ts: FloatArray, burn: int):
    """Tail minimum with monotone-divergence detection.

    ``values`` has shape ``(probes, steps)``; columns before ``burn`` are ignored.
    """
    tail = values[:, burn:]
    step_min = tail.min(axis=0)
    trace = tuple((float(t), float(v)) for t, v in zip(ts[burn:], step_min))
    finite = step_min[np.isfinite(step_min)]
    if finite.size == 0:
        return float(step_min.min()), "bounded", trace
    value = float(tail.min())
    trend = "bounded"
    if finite.size == step_min.size and step_min.size >= 2:
        diffs = np.diff(step_min)
        span = step_min[-1] - step_min[0]
        scale = DIVERGENCE_FACTOR * (1.0 + abs(step_min[0]))
        if np.all(diffs > 0) and span >= scale:
            trend, value = "diverging_up", np.inf
        elif np.all(diffs < 0) and -span >= scale:
            trend, value = "diverging_down", -np.inf
    return value, trend, trace


def sequential_values(f: FunctionModel, u: FloatArray, s: LiminfSchedule) -> FloatArray:
    pts = s.probe_points(u)
    P, K, d = pts.shape
    return np.asarray(f(pts.reshape(-1, d)), dtype=float).reshape(P, K)


def sigma_g_sequential(f: FunctionModel, u: ArrayLike,
                       s: LiminfSchedule | None = None) -> AsymptoticEstimate:
    """Generalized asymptotic value at ``u`` from probe sequences (no division)."""
    s = s or LiminfSchedule()
    uu = _check_dim(f, u)
    vals = sequential_values(f, uu, s)
    value, trend, trace = _tail_liminf(vals, np.asarray(s.t_sequence), s.burn_in)
    return AsymptoticEstimate(tuple(uu.tolist()), ExtendedReal(value), SEQUENTIAL,
                              UPPER_BOUND, trend, trace)


def _secant_slopes(vals: FloatArray, ts: FloatArray) -> FloatArray:
    lo, hi = vals[:, :-1], vals[:, 1:]
    dt = np.diff(ts)[None, :]
    with np.errstate(all="ignore"):
        slopes = (hi - lo) / dt
        quotient = hi / ts[None, 1:]
    slopes = np.where(np.isposinf(hi), np.inf, slopes)
    slopes = np.where(np.isfinite(hi) & np.isposinf(lo), quotient, slopes)
    return slopes


def classic_asymptotic(f: FunctionModel, u: ArrayLike,
                       s: LiminfSchedule | None = None) -> AsymptoticEstimate:
    """Classical asymptotic value (growth rate ``f(t d) / t``) at ``u``."""
    s = s or LiminfSchedule()
    uu = _check_dim(f, u)
    ts = np.asarray(s.t_sequence)
    vals = sequential_values(f, uu, s)
    slopes = _secant_slopes(vals, ts)
    burn = max(s.burn_in - 1, 0)
    value, trend, trace = _tail_liminf(slopes, ts[1:], burn)
    return AsymptoticEstimate(tuple(uu.tolist()), ExtendedReal(value), SEQUENTIAL,
                              UPPER_BOUND, trend, trace)


# --------------------------------------------------------------------------
# Sublevel route
# --------------------------------------------------------------------------

def set_nonempty(A: FeasibleSet) -> bool | None:
    """Exact emptiness test for analytic sets; None when unknown."""
    if isinstance(A, Union):
        if not A.parts:
            return False
        parts = [set_nonempty(p) for p in A.parts]
        if any(p is True for p in parts):
            return True
        return None if any(p is None for p in parts) else False
    if isinstance(A, (Ball, Box)):
        return True
    hs = A.halfspaces()
    if hs is not None:
        M, b = hs
        if M.shape[0] == 0:
            return True
        res = linprog(np.zeros(A.dim), A_ub=M, b_ub=b + 1e-9,
                      bounds=[(None, None)] * A.dim, method="highs")
        return bool(res.status == 0)
    if isinstance(A, Intersection):
        return None
    return None


def default_lambda_grid(f: FunctionModel, grid: GridSpec | None = None,
                        step: float = 0.01) -> list[float]:
    """Uniform levels over the sampled range of ``f`` (+-1), plus its sampled minimum."""
    grid = grid or GridSpec()
    vals = np.asarray(f(grid.points(f.dim)))
    vals = vals[np.isfinite(vals)]
    if vals.size == 0:
        raise InvalidParameterError("no finite sample of f on the level grid box")
    lo, hi = float(vals.min()) - 1.0, float(vals.max()) + 1.0
    count = int(np.floor((hi - lo) / step + 1e-9)) + 1
    levels = lo + step * np.arange(count)
    return sorted(set(levels.tolist()) | {float(vals.min())})


def _sample_base(f: FunctionModel, grid: GridSpec) -> tuple[FloatArray, float]:
    pts = grid.points(f.dim)
    vals = np.asarray(f(pts))
    best = vals.min()
    idx = np.flatnonzero(vals == best)
    norms = np.linalg.norm(pts[idx], axis=1)
    i = idx[int(np.argmin(norms))]
    return pts[i], float(best)


@dataclass(frozen=True)
class SublevelClassifier:
    """Decides ``u in recession([f <= lam])`` for one model.

    Uses ``f.sublevel`` when present (exact), otherwise rays from a sampled
    minimizer (bounded by ``probe.t_grid``).
    """

    f: FunctionModel
    probe: ConeProbe = ConeProbe()
    grid: GridSpec = GridSpec()

    @property
    def exact(self) -> bool:
        return self.f.sublevel is not None

    def admits(self, u: FloatArray, lam: float) -> bool:
        if lam == np.inf:
            return True
        if self.f.sublevel is not None:
            S, ne = self._level(lam)
            if ne is None:
                raise InvalidParameterError("cannot decide emptiness of the sublevel set")
            if not ne:
                return False
            if not np.any(u):
                return True
            res = exact_recession(S, u, self.probe.tolerance)
            if res is None:
                raise InvalidParameterError("sublevel set has no analytic recession test")
            return res
        base, fb = self._base()
        if fb > lam:
            return False
        if not np.any(u):
            return True
        ts = np.asarray(self.probe.t_grid)
        vals = np.asarray(self.f(base[None, :] + ts[:, None] * u[None, :]))
        return bool(np.all(vals <= lam))

    def _level(self, lam: float):
        # nonemptiness costs a linear program for polyhedra; levels repeat a lot
        cache = self.__dict__.setdefault("_levels", {})
        if lam not in cache:
            S = self.f.sublevel(lam)
            cache[lam] = (S, set_nonempty(S))
        return cache[lam]

    def _base(self):
        cached = getattr(self, "_cache", None)
        if cached is None:
            cached = _sample_base(self.f, self.grid)
            object.__setattr__(self, "_cache", cached)
        return cached


def _require_flags(f: FunctionModel, what: str) -> None:
    missing = [fl for fl in (QUASI_CONVEX, LSC) if not f.has(fl)]
    if missing:
        raise MissingAnnotationError(
            f"{what} needs a quasi-convex lsc model; missing flags {missing}; "
            + COUNTEREXAMPLE_NOTE, missing=missing)


def sigma_g_sublevel(f: FunctionModel, u: ArrayLike, lambda_grid: Sequence[float] | None = None,
                     probe: ConeProbe | None = None, grid: GridSpec | None = None,
                     classifier: SublevelClassifier | None = None) -> AsymptoticEstimate:
    """Least grid level whose sublevel set recedes along ``u``; ``+inf`` if none."""
    _require_flags(f, "the sublevel route")
    uu = _check_dim(f, u)
    grid = grid or GridSpec()
    clf = classifier or SublevelClassifier(f, probe or ConeProbe(), grid)
    levels = sorted(float(v) for v in (lambda_grid if lambda_grid is not None
                                       else default_lambda_grid(f, grid)))
    levels = [v for v in levels if v != np.inf]
    d = uu / np.linalg.norm(uu) if np.any(uu) else uu
    # Admissible levels form an up-set: nested sublevel sets have nested cones.
    flags = _LazyAdmits(clf, d, levels)
    i = bisect.bisect_left(flags, True)
    value = levels[i] if i < len(levels) else np.inf
    return AsymptoticEstimate(tuple(uu.tolist()), ExtendedReal(value), SUBLEVEL,
                              EXACT if clf.exact else UPPER_BOUND)


class _LazyAdmits:
    def __init__(self, clf, u, levels):
        self.clf, self.u, self.levels = clf, u, levels

    def __len__(self):
        return len(self.levels)

    def __getitem__(self, i):
        return self.clf.admits(self.u, self.levels[i])


# --------------------------------------------------------------------------
# Identities and diagnostics
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class InfIdentityReport:
    grid_inf: float
    sigma_g_at_zero: float
    min_over_directions: float
    max_gap: float
    argmin_direction: tuple[float, ...]

    def to_dict(self) -> dict:
        return {"grid_inf": _fmt(self.grid_inf), "sigma_g_at_zero": _fmt(self.sigma_g_at_zero),
                "min_over_directions": _fmt(self.min_over_directions),
                "max_gap": _fmt(self.max_gap),
                "argmin_direction": list(self.argmin_direction)}


def grid_infimum(f: FunctionModel, grid: GridSpec) -> float:
    return float(np.min(f(grid.points(f.dim))))


def inf_identity_check(f: FunctionModel, s: LiminfSchedule | None = None,
                       grid: GridSpec | None = None,
                       directions: ArrayLike | None = None) -> InfIdentityReport:
    """Compare the grid infimum of ``f`` with its generalized asymptotic value at 0
    and with the minimum over sampled directions (0 always included)."""
    s = s or LiminfSchedule()
    grid = grid or GridSpec()
    dirs = unit_directions(f.dim, 16) if directions is None else np.asarray(directions, float)
    dirs = np.vstack([np.zeros((1, f.dim)), dirs.reshape(-1, f.dim)])
    g = grid_infimum(f, grid)
    vals = [float(sigma_g_sequential(f, u, s).value) for u in dirs]
    at0 = vals[0]
    i = int(np.argmin(vals))
    trio = np.array([g, at0, vals[i]])
    if np.all(np.isfinite(trio)):
        gap = float(trio.max() - trio.min())
    else:
        gap = 0.0 if len(set(trio.tolist())) == 1 else np.inf
    return InfIdentityReport(g, at0, vals[i], gap, tuple(dirs[i].tolist()))


ALL_FINITE = "all_finite"
FOUND_INFINITE = "found_infinite"


@dataclass(frozen=True)
class BoundednessReport:
    status: str
    witness: tuple[float, ...] | None
    estimates: tuple[AsymptoticEstimate, ...]

    def to_dict(self) -> dict:
        return {"status": self.status,
                "witness": None if self.witness is None else list(self.witness),
                "estimates": [e.to_dict() for e in self.estimates]}


def boundedness_diagnostic(f: FunctionModel, direction_sample: ArrayLike,
                           s: LiminfSchedule | None = None) -> BoundednessReport:
    """Look for a direction where the generalized asymptotic function is infinite.

    For quasi-convex lsc models ``all_finite`` is consistent with ``f`` bounded.
    Exact sublevel descriptions, when present, are consulted as well.
    """
    _require_flags(f, "the boundedness diagnostic")
    s = s or LiminfSchedule()
    dirs = np.asarray(direction_sample, float).reshape(-1, f.dim)
    ests = []
    for u in dirs:
        e = sigma_g_sequential(f, u, s)
        ests.append(e)
        if not e.value.is_finite:
            return BoundednessReport(FOUND_INFINITE, tuple(u.tolist()), tuple(ests))
        if f.sublevel is not None:
            e2 = sigma_g_sublevel(f, u)
            ests.append(e2)
            if not e2.value.is_finite:
                return BoundednessReport(FOUND_INFINITE, tuple(u.tolist()), tuple(ests))
    return BoundednessReport(ALL_FINITE, None, tuple(ests))
