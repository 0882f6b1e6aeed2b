"""Minimization through the difference-form equilibrium problem.

``x`` minimizes ``f`` on ``K`` exactly when ``f(y) - f(x) >= 0`` for all
``y in K``, so the truncation pipeline applies unchanged.  Existence is
supported when every recession direction has a generalized asymptotic value
strictly above the infimum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike

from .asymptotic import AsymptoticEstimate, LiminfSchedule, sigma_g_sequential
from .core import (
    BOUNDED_BELOW,
    FeasibleSet,
    FloatArray,
    FunctionModel,
    GridSpec,
    as_batch,
    stage_grid,
    unit_directions,
)
from .cones import recession_member
from .equilibrium import (
    CERTIFIED,
    DEFAULT_STAGES,
    VIOLATED,
    EPInstance,
    PipelineResult,
    RecessionReport,
    existence_pipeline,
    solution_set_recession,
)
from .errors import EmptyGridError, EmptySampleError, InvalidParameterError
from .models import difference_bifunction

KSIGMA_M_NOTE = ("finite-dimensional space with the norm topology: stage-wise argmin "
                 "points that run off to infinity have normalized subsequences "
                 "converging to a nonzero recession direction")
DECLARED = ("bounded below (declared flag)", "transfer lower continuity on each truncation "
            "(declared, not checked)")


@dataclass(frozen=True)
class MPInstance:
    f: FunctionModel
    K: FeasibleSet
    grid_resolution: float = 0.05
    epsilon_value: float | None = None
    norm_order: float = 2.0

    def __post_init__(self):
        if not self.grid_resolution > 0:
            raise InvalidParameterError("grid_resolution must be > 0")
        if self.epsilon_value is not None and self.epsilon_value < 0:
            raise InvalidParameterError("epsilon_value must be >= 0")
        if self.K.dim != self.f.dim:
            raise InvalidParameterError("feasible set and function dimensions differ")

    @property
    def dim(self) -> int:
        return self.f.dim


def lipschitz_estimate(f: FunctionModel, K: FeasibleSet, n: float, h: float,
                       p: float = 2.0) -> float:
    """Median absolute axis difference quotient over the grid of ``K_n``.

    The median ignores the few quotients that straddle jumps.
    """
    G = stage_grid(K, n, h, p)
    if G.shape[0] == 0:
        raise EmptyGridError("no grid point for the Lipschitz estimate", n=n)
    fg = np.asarray(f(G))
    slopes = []
    for i in range(f.dim):
        step = np.zeros(f.dim)
        step[i] = h
        fs = np.asarray(f(G + step))
        ok = np.isfinite(fg) & np.isfinite(fs)
        slopes.append(np.abs(fs[ok] - fg[ok]) / h)
    s = np.concatenate(slopes)
    return float(np.median(s)) if s.size else 0.0


def value_tolerance(inst: MPInstance, n_max: float) -> float:
    if inst.epsilon_value is not None:
        return float(inst.epsilon_value)
    L = lipschitz_estimate(inst.f, inst.K, n_max, inst.grid_resolution, inst.norm_order)
    return max(1e-9, L * inst.grid_resolution)


def reduce_to_ep(inst: MPInstance, n_max: float = DEFAULT_STAGES[-1]) -> EPInstance:
    """Difference-form equilibrium problem ``psi(x, y) = f(y) - f(x)``."""
    psi = difference_bifunction(inst.f, inst.K)
    return EPInstance(psi, inst.K, value_tolerance(inst, n_max), inst.grid_resolution,
                      inst.norm_order)


@dataclass(frozen=True)
class GrowthCertificate:
    directions: tuple[tuple[float, ...], ...]
    estimates: tuple[AsymptoticEstimate, ...]
    baseline: float
    verdict: str
    witness: tuple[float, ...] | None
    tolerance: float

    @property
    def certified(self) -> bool:
        return self.verdict == CERTIFIED

    @property
    def margin(self) -> float:
        """Smallest estimate minus the baseline."""
        return min(float(e.value) for e in self.estimates) - self.baseline

    def to_dict(self) -> dict:
        m = self.margin
        return {"verdict": self.verdict, "baseline": self.baseline,
                "tolerance": self.tolerance,
                "margin": m if math.isfinite(m) else ("+inf" if m > 0 else "-inf"),
                "witness": None if self.witness is None else list(self.witness),
                "estimates": [e.to_dict() for e in self.estimates]}


def recession_sphere_sample(K: FeasibleSet, count: int = 16, seed: int = 0) -> FloatArray:
    U = unit_directions(K.dim, count, seed)
    keep = np.array([recession_member(K, u).member for u in U], dtype=bool)
    return U[keep]


def growth_certificate(inst: MPInstance, directions: ArrayLike | None = None,
                       s: LiminfSchedule | None = None, grid: GridSpec | None = None,
                       tol: float = 1e-9) -> GrowthCertificate:
    """Compare sequential generalized asymptotic estimates with the grid infimum.

    The baseline is the grid infimum of ``f`` on ``K``, which equals the
    generalized asymptotic value at 0.
    """
    s = s or LiminfSchedule()
    grid = grid or GridSpec()
    U = recession_sphere_sample(inst.K) if directions is None else \
        (as_batch(directions, inst.dim) if np.size(directions) else np.zeros((0, inst.dim)))
    if U.shape[0] == 0:
        raise EmptySampleError("growth certificate needs at least one direction")
    if np.any(np.linalg.norm(U, axis=1) == 0):
        raise InvalidParameterError("directions must be nonzero")
    pts = grid.points(inst.dim)
    pts = pts[inst.K.contains(pts)]
    if pts.shape[0] == 0:
        raise EmptyGridError("baseline grid misses the feasible set")
    baseline = float(np.min(inst.f(pts))) + 0.0  # no negative zero
    ests, witness = [], None
    for u in U:
        e = sigma_g_sequential(inst.f, u, s)
        ests.append(e)
        if witness is None and not float(e.value) > baseline + tol:
            witness = tuple(float(c) for c in u)
    verdict = CERTIFIED if witness is None else VIOLATED
    return GrowthCertificate(tuple(tuple(float(c) for c in u) for u in U), tuple(ests),
                             baseline, verdict, witness, tol)


@dataclass(frozen=True)
class MinimizeResult:
    argmin_sample: FloatArray = field(repr=False)
    min_value: float
    epsilon_value: float
    recession: RecessionReport
    growth: GrowthCertificate
    supported: bool
    pipeline: PipelineResult = field(repr=False)
    hypotheses: tuple[str, ...] = ()

    @property
    def verdict(self):
        return self.pipeline.verdict


def minimize(inst: MPInstance, stages: Sequence[float] = DEFAULT_STAGES,
             escape_ratio: float = 0.9, directions: ArrayLike | None = None,
             schedule: LiminfSchedule | None = None, max_stages: int | None = None,
             growth: GrowthCertificate | None = None) -> MinimizeResult:
    """Run the truncation pipeline on the difference form.

    The argmin sample is every grid point within ``epsilon_value`` of the
    final stage minimum.  A run without a certified growth condition (or
    without the bounded-below flag) still proceeds but is tagged unsupported.
    """
    growth = growth or growth_certificate(inst, directions, schedule)
    ep = reduce_to_ep(inst, max(stages))
    result = existence_pipeline(ep, stages, escape_ratio, schedule=schedule,
                                max_stages=max_stages)
    sample = result.final_sample
    min_value = float(np.min(inst.f(sample.points))) + 0.0  # no negative zero
    recession = solution_set_recession(sample.points, sample.n)
    supported = growth.certified and inst.f.has(BOUNDED_BELOW)
    hyps = [f"condition K_sigma^m: automatic ({KSIGMA_M_NOTE})"]
    hyps.append(DECLARED[0] if inst.f.has(BOUNDED_BELOW) else "bounded below: NOT declared")
    hyps.append(DECLARED[1])
    return MinimizeResult(sample.points, min_value, ep.epsilon_solution, recession, growth,
                          supported, result, tuple(hyps))
