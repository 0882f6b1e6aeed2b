"""Truncation pipeline for equilibrium problems on unbounded sets.

Each stage solves the problem on ``K_n`` by exhaustive grid enumeration.
Representatives either settle (a solution) or run off to infinity, in which
case the escape certificate decides whether escape can persist.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike

from .asymptotic import LiminfSchedule, classic_asymptotic, sequential_values, _tail_liminf
from .bifunctions import AUTOMATIC, STRUCTURAL, KSigmaRecognition, recognize_K_sigma
from .cones import ConeProbe, exact_recession, recession_member
from .core import (
    BifunctionModel,
    FeasibleSet,
    FloatArray,
    as_batch,
    as_point,
    stage_grid,
    unit_directions,
)
from .errors import EmptyGridError, EmptySampleError, EmptyStageError, InvalidParameterError

BLOCK_PAIRS = 4_000_000
DEFAULT_STAGES = (1.0, 2.0, 4.0, 8.0, 16.0)


@dataclass(frozen=True)
class EPInstance:
    psi: BifunctionModel
    K: FeasibleSet
    epsilon_solution: float = 1e-9
    grid_resolution: float = 0.25
    norm_order: float = 2.0

    def __post_init__(self):
        if self.epsilon_solution < 0:
            raise InvalidParameterError("epsilon_solution must be >= 0")
        if not self.grid_resolution > 0:
            raise InvalidParameterError("grid_resolution must be > 0")
        if self.K.dim != self.psi.dim:
            raise InvalidParameterError("feasible set and bifunction dimensions differ")

    @property
    def dim(self) -> int:
        return self.K.dim


@dataclass(frozen=True)
class SolutionSample:
    n: float
    points: FloatArray
    grid_size: int
    worst_values: FloatArray = field(repr=False)

    @property
    def empty(self) -> bool:
        return self.points.shape[0] == 0

    @property
    def representative(self) -> FloatArray:
        return self.points[0]


def min_over_y(psi: BifunctionModel, X: FloatArray, Y: FloatArray) -> FloatArray:
    """``min_j psi(X[i], Y[j])`` for every row of ``X``."""
    if psi.difference_of is not None:
        g = psi.difference_of
        return float(np.min(g(Y))) - np.asarray(g(X))
    out = np.empty(X.shape[0])
    block = max(1, BLOCK_PAIRS // max(1, Y.shape[0]))
    for s in range(0, X.shape[0], block):
        V = psi(X[s:s + block, None, :], Y[None, :, :])
        out[s:s + block] = V.min(axis=1)
    return out


def solve_truncated(inst: EPInstance, n: float) -> SolutionSample:
    """All grid points ``x`` of ``K_n`` with ``min_y psi(x, y) >= -eps`` over the same grid."""
    grid = stage_grid(inst.K, n, inst.grid_resolution, inst.norm_order)
    if grid.shape[0] == 0:
        raise EmptyGridError(f"no grid point of K_n at n={n} and resolution "
                             f"{inst.grid_resolution}", n=n)
    worst = min_over_y(inst.psi, grid, grid)
    keep = worst >= -inst.epsilon_solution
    return SolutionSample(float(n), grid[keep], grid.shape[0], worst[keep])


# --------------------------------------------------------------------------
# Escape certificate
# --------------------------------------------------------------------------

CERTIFIED = "certified"
VIOLATED = "violated"
DIRECT = "direct_sigma_g"
CLASSIC = "classic_sufficient"


@dataclass(frozen=True)
class DirectionRecord:
    direction: tuple[float, ...]
    clearing_value: float
    clearing_y: tuple[float, ...] | None
    cleared: bool

    def to_dict(self) -> dict:
        v = self.clearing_value
        return {"direction": list(self.direction),
                "clearing_value": v if math.isfinite(v) else ("+inf" if v > 0 else "-inf"),
                "clearing_y": None if self.clearing_y is None else list(self.clearing_y),
                "cleared": self.cleared}


@dataclass(frozen=True)
class RECertificate:
    """Sampled evidence that no nonzero asymptotic direction keeps every
    section ``-psi(., y)`` at or below zero at infinity."""

    method: str
    verdict: str
    records: tuple[DirectionRecord, ...]
    witness: tuple[float, ...] | None = None
    tolerance: float = 1e-9
    evidence: str = "sampled"

    @property
    def certified(self) -> bool:
        return self.verdict == CERTIFIED

    def to_dict(self) -> dict:
        return {"method": self.method, "verdict": self.verdict,
                "witness": None if self.witness is None else list(self.witness),
                "tolerance": self.tolerance, "evidence": self.evidence,
                "directions": [r.to_dict() for r in self.records]}


def _section_values(psi: BifunctionModel, y: FloatArray, u: FloatArray,
                    s: LiminfSchedule) -> FloatArray:
    f = psi.negated_section(y)
    return sequential_values(f, u, s)


def _certificate(inst: EPInstance, directions: ArrayLike, y_sample: ArrayLike,
                 s: LiminfSchedule | None, method: str, tol: float) -> RECertificate:
    s = s or LiminfSchedule()
    U = as_batch(directions, inst.dim) if np.size(directions) else np.zeros((0, inst.dim))
    Y = as_batch(y_sample, inst.dim) if np.size(y_sample) else np.zeros((0, inst.dim))
    if U.shape[0] == 0 or Y.shape[0] == 0:
        raise EmptySampleError("certificate needs nonempty direction and y samples")
    if np.any(np.linalg.norm(U, axis=1) == 0):
        raise InvalidParameterError("certificate directions must be nonzero")
    records = []
    witness = None
    for u in U:
        best, best_y = -math.inf, None
        for y in Y:
            if method == DIRECT:
                vals = _section_values(inst.psi, y, u, s)
                v, _, _ = _tail_liminf(vals, np.asarray(s.t_sequence), s.burn_in)
            else:
                v = float(classic_asymptotic(inst.psi.negated_section(y), u, s).value)
            if v > best:
                best, best_y = v, tuple(float(c) for c in y)
        cleared = best > tol
        records.append(DirectionRecord(tuple(float(c) for c in u), float(best), best_y, cleared))
        if not cleared and witness is None:
            witness = tuple(float(c) for c in u)
    verdict = CERTIFIED if witness is None else VIOLATED
    return RECertificate(method, verdict, tuple(records), witness, tol)


def check_RE_direct(inst: EPInstance, directions: ArrayLike, y_sample: ArrayLike,
                    s: LiminfSchedule | None = None, tol: float = 1e-9) -> RECertificate:
    """Clear each direction ``u`` by some ``y`` whose section ``-psi(., y)`` has a
    sequential generalized asymptotic estimate above ``tol`` at ``u``.

    The estimate is a minimum over every probed sequence's tail, so clearing
    is sampled evidence, not a proof.
    """
    return _certificate(inst, directions, y_sample, s, DIRECT, tol)


def check_RE_sufficient_classic(inst: EPInstance, directions: ArrayLike, y_sample: ArrayLike,
                                s: LiminfSchedule | None = None,
                                tol: float = 1e-9) -> RECertificate:
    """Same clearing rule using the classical asymptotic function (growth rate).

    A positive growth rate forces a positive limiting value, so whenever this
    certifies the direct certificate does too; the converse fails.
    """
    return _certificate(inst, directions, y_sample, s, CLASSIC, tol)


def recession_directions(K: FeasibleSet, count: int = 16, seed: int = 0,
                         base: ArrayLike | None = None) -> FloatArray:
    """Unit directions of a sampled sphere that lie in the recession cone of ``K``."""
    U = unit_directions(K.dim, count, seed)
    keep = [bool(recession_member(K, u, base).member) for u in U]
    return U[np.array(keep, dtype=bool)]


def thin(points: FloatArray, limit: int) -> FloatArray:
    if points.shape[0] <= limit:
        return points
    idx = np.unique(np.linspace(0, points.shape[0] - 1, limit).round().astype(int))
    return points[idx]


# --------------------------------------------------------------------------
# Pipeline
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class StageRecord:
    n: float
    sample_size: int
    grid_size: int
    representative: tuple[float, ...]
    representative_norm: float
    worst_value: float
    escaped: bool

    def to_dict(self) -> dict:
        return {"n": self.n, "sample_size": self.sample_size, "grid_size": self.grid_size,
                "representative": list(self.representative),
                "representative_norm": self.representative_norm,
                "worst_value": self.worst_value, "escaped": self.escaped}


@dataclass(frozen=True)
class TruncationTrace:
    stages: tuple[StageRecord, ...]
    escape: bool

    def to_dict(self) -> dict:
        return {"escape": self.escape, "stages": [s.to_dict() for s in self.stages]}


@dataclass(frozen=True)
class RecessionReport:
    nontrivial: bool
    flagged_directions: tuple[tuple[float, ...], ...]
    sample_radius: float
    reference_radius: float
    budget_limited: bool = True

    def to_dict(self) -> dict:
        return {"recession": "nontrivial" if self.nontrivial else "{0}",
                "flagged_directions": [list(d) for d in self.flagged_directions],
                "sample_radius": self.sample_radius,
                "reference_radius": self.reference_radius,
                "budget_limited": self.budget_limited}


@dataclass(frozen=True)
class Solution:
    point: tuple[float, ...]
    verification: float
    sample: FloatArray = field(repr=False)
    recession: RecessionReport | None = None
    kind = "solution"


@dataclass(frozen=True)
class SolutionSet:
    sample: FloatArray = field(repr=False)
    recession: RecessionReport | None = None
    kind = "solution_set"


@dataclass(frozen=True)
class CertificateFailed:
    witness: tuple[float, ...]
    certificate: RECertificate
    kind = "certificate_failed"


@dataclass(frozen=True)
class Inconclusive:
    reason: str
    stages_run: int
    kind = "inconclusive"


@dataclass(frozen=True)
class PipelineResult:
    verdict: Solution | SolutionSet | CertificateFailed | Inconclusive
    trace: TruncationTrace
    recognition: KSigmaRecognition
    certificate: RECertificate | None
    final_sample: SolutionSample


def solution_set_recession(sample: ArrayLike, reference_radius: float | None = None,
                           probe: ConeProbe | None = None,
                           directions: ArrayLike | None = None,
                           fraction: float = 0.9) -> RecessionReport:
    """Budget-limited recession test for a finite solution sample.

    A direction is flagged when the sample contains points far out (beyond
    ``fraction * reference_radius``) whose normalized positions approach it.
    A sample that stays well inside the largest stage has trivial recession.
    """
    P = np.asarray(sample, dtype=float)
    if P.ndim != 2 or P.shape[0] == 0:
        raise EmptySampleError("recession report needs a nonempty sample")
    radius = float(np.max(np.linalg.norm(P, axis=1)))
    ref = radius if reference_radius is None else float(reference_radius)
    if reference_radius is None or radius <= fraction * ref or radius == 0:
        return RecessionReport(False, (), radius, ref)
    U = unit_directions(P.shape[1], 16) if directions is None else as_batch(directions, P.shape[1])
    far = P[np.linalg.norm(P, axis=1) > fraction * ref]
    far_dirs = far / np.linalg.norm(far, axis=1, keepdims=True)
    flagged = []
    for u in U:
        u = u / np.linalg.norm(u)
        if np.any(np.linalg.norm(far_dirs - u, axis=1) <= 0.25):
            flagged.append(tuple(float(c) for c in u))
    return RecessionReport(bool(flagged), tuple(flagged), radius, ref)


def _escape_directions(inst: EPInstance, reps: Sequence[FloatArray], count: int) -> FloatArray:
    U = list(recession_directions(inst.K, count))
    for r in reps:
        nr = np.linalg.norm(r)
        if nr > 0:
            U.append(r / nr)
    return np.array(U).reshape(-1, inst.dim)


def existence_pipeline(inst: EPInstance, stages: Sequence[float] = DEFAULT_STAGES,
                       escape_ratio: float = 0.9, window: int = 3,
                       schedule: LiminfSchedule | None = None,
                       max_stages: int | None = None, direction_count: int = 16,
                       y_limit: int = 64) -> PipelineResult:
    """Run the truncation scheme over an increasing stage schedule.

    Representatives are the lexicographically smallest solution-sample
    point.  They settle when ``window`` consecutive ones differ by at most
    the grid resolution and stay within ``escape_ratio * n``; they escape
    when ``window`` consecutive ones exceed it.  Escape consults the direct
    certificate: a violation ends the run, a certification extends the
    schedule by doubling until ``max_stages``.
    """
    recognition = recognize_K_sigma(inst.psi)
    if recognition.status not in (AUTOMATIC, STRUCTURAL):
        raise InvalidParameterError("truncation transfer condition not recognized")
    stages = [float(n) for n in stages]
    if not stages or any(b <= a for a, b in zip(stages, stages[1:])) or stages[0] <= 0:
        raise InvalidParameterError("stage schedule must be positive and increasing")
    if not 0 < escape_ratio < 1:
        raise InvalidParameterError("escape_ratio must lie in (0, 1)")
    if max_stages is not None:
        if max_stages < 1:
            raise InvalidParameterError("max_stages must be >= 1")
        stages = stages[:max_stages]
    else:
        max_stages = len(stages) + 3
    records: list[StageRecord] = []
    reps: list[FloatArray] = []
    certificate = None
    sample = None
    i = 0
    while i < len(stages):
        n = stages[i]
        sample = solve_truncated(inst, n)
        if sample.empty:
            raise EmptyStageError(f"stage n={n} has no grid solution", n=n)
        x = sample.representative
        nx = float(np.linalg.norm(x, ord=inst.norm_order))
        escaped = nx > escape_ratio * n
        records.append(StageRecord(n, sample.points.shape[0], sample.grid_size,
                                   tuple(float(c) for c in x), nx,
                                   float(sample.worst_values[0]), escaped))
        reps.append(x)
        if len(reps) >= window:
            last = records[-window:]
            steps = [np.linalg.norm(reps[-k] - reps[-k - 1]) for k in range(1, window)]
            if all(not r.escaped for r in last) and max(steps) <= inst.grid_resolution:
                verification = float(min_over_y(inst.psi, x[None, :],
                                                stage_grid(inst.K, n, inst.grid_resolution,
                                                           inst.norm_order))[0])
                rec = solution_set_recession(sample.points, n)
                trace = TruncationTrace(tuple(records), False)
                return PipelineResult(Solution(tuple(float(c) for c in x), verification,
                                               sample.points, rec),
                                      trace, recognition, certificate, sample)
            if all(r.escaped for r in last):
                if certificate is None:
                    ys = thin(stage_grid(inst.K, n, inst.grid_resolution, inst.norm_order),
                              y_limit)
                    certificate = check_RE_direct(inst, _escape_directions(inst, reps[-window:],
                                                                           direction_count),
                                                  ys, schedule)
                if not certificate.certified:
                    trace = TruncationTrace(tuple(records), True)
                    return PipelineResult(CertificateFailed(certificate.witness, certificate),
                                          trace, recognition, certificate, sample)
        if i == len(stages) - 1 and certificate is not None and certificate.certified \
                and len(stages) < max_stages:
            stages.append(2.0 * stages[-1])
        i += 1
    escape = bool(records and records[-1].escaped)
    trace = TruncationTrace(tuple(records), escape)
    return PipelineResult(Inconclusive("stage budget exhausted before representatives "
                                       "settled", len(records)),
                          trace, recognition, certificate, sample)
