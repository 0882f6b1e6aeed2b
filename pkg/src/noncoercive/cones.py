"""Recession (asymptotic) cone membership.

Two tiers: an exact analytic test for sets with a polyhedral or ball
description, and bounded ray probes or sampled shells otherwise.  Every
report says which tier produced it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike

from .core import (
    BOUNDARY_TOL,
    Ball,
    FeasibleSet,
    FloatArray,
    Intersection,
    Union,
    as_point,
)
from .errors import (
    BaseNotInSetError,
    DimensionMismatchError,
    EmptyScheduleError,
    InvalidParameterError,
    NotConvexError,
)

IN_CONE = "in_cone_up_to_t_max"
EXCLUDED = "excluded"


@dataclass(frozen=True)
class ConeProbe:
    """Discretization of "for all t > 0" along a ray."""

    t_grid: tuple[float, ...] = tuple(2.0 ** j for j in range(21))
    tolerance: float = BOUNDARY_TOL

    def __post_init__(self):
        t = np.asarray(self.t_grid, dtype=float)
        if t.size == 0 or t[0] <= 0 or np.any(np.diff(t) <= 0):
            raise InvalidParameterError("t_grid must be positive and strictly increasing")
        if self.tolerance < 0:
            raise InvalidParameterError("tolerance must be >= 0")
        object.__setattr__(self, "t_grid", tuple(float(v) for v in t))

    @property
    def t_max(self) -> float:
        return self.t_grid[-1]


@dataclass(frozen=True)
class ConeMembershipReport:
    direction: tuple[float, ...]
    verdict: str
    exact: bool
    method: str
    witness_t: float | None = None
    witnesses: tuple[tuple[float, bool], ...] = ()

    @property
    def member(self) -> bool:
        return self.verdict == IN_CONE

    def to_dict(self) -> dict:
        return {"direction": list(self.direction), "verdict": self.verdict,
                "exact": self.exact, "method": self.method,
                "witness_t": self.witness_t,
                "witnesses": [[t, b] for t, b in self.witnesses]}


def _unit(u: FloatArray) -> FloatArray:
    n = np.linalg.norm(u)
    return u / n if n > 0 else u


def exact_recession(A: FeasibleSet, u: ArrayLike, tol: float = BOUNDARY_TOL) -> bool | None:
    """Exact membership of ``u`` in the recession cone of a nonempty closed convex set.

    Returns None when no analytic description is available.  Directions are
    normalized first, so the answer is invariant under positive scaling.
    """
    d = _unit(np.asarray(u, dtype=float))
    if not np.any(d):
        return True
    hs = A.halfspaces()
    if hs is not None:
        M, _ = hs
        return bool(M.shape[0] == 0 or np.all(M @ d <= tol))
    if isinstance(A, Ball):
        return False
    if isinstance(A, Intersection):
        parts = [exact_recession(s, d, tol) for s in A.parts]
        if any(p is None for p in parts):
            return None
        return all(parts)
    if isinstance(A, Union):
        if not A.parts:
            return False
        parts = [exact_recession(s, d, tol) for s in A.parts]
        if any(p is None for p in parts):
            return None
        return any(parts)
    return None


def _exit_parameter(A: FeasibleSet, base: FloatArray, u: FloatArray) -> float | None:
    t = 1.0
    for _ in range(1100):
        if not A.contains(base + t * u):
            return t
        t *= 2.0
        if not np.isfinite(t):
            break
    return None


def ray_probe(A: FeasibleSet, u: FloatArray, base: FloatArray,
              probe: ConeProbe) -> ConeMembershipReport:
    """Bounded ray test ``base + t u in A`` over ``probe.t_grid``."""
    ts = np.asarray(probe.t_grid)
    bits = A.contains(base[None, :] + ts[:, None] * u[None, :])
    witnesses = tuple((float(t), bool(b)) for t, b in zip(ts, bits))
    if np.all(bits):
        return ConeMembershipReport(tuple(u.tolist()), IN_CONE, False, "ray_probe",
                                    None, witnesses)
    first = float(ts[np.argmin(bits)])
    return ConeMembershipReport(tuple(u.tolist()), EXCLUDED, True, "ray_probe",
                                first, witnesses)


def recession_membership_convex(A: FeasibleSet, u: ArrayLike, base: ArrayLike,
                                probe: ConeProbe | None = None) -> ConeMembershipReport:
    """Membership of ``u`` in the recession cone of a closed convex set.

    An ``excluded`` verdict always carries a verified exit parameter.  For
    sets with an analytic description the verdict is exact; otherwise an
    ``in_cone_up_to_t_max`` verdict only covers the probed rays.
    """
    probe = probe or ConeProbe()
    if not (A.convex and A.closed):
        raise NotConvexError("set is not flagged closed and convex; "
                             "use asymptotic_membership_sampled instead",
                             kind=A.kind)
    uu = as_point(u, A.dim)
    x0 = as_point(base, A.dim)
    if not A.contains(x0):
        raise BaseNotInSetError("base point is not a member of the set", base=x0)
    exact = exact_recession(A, uu, probe.tolerance)
    if exact is None:
        return ray_probe(A, uu, x0, probe)
    if exact:
        return ConeMembershipReport(tuple(uu.tolist()), IN_CONE, True, "analytic")
    t = _exit_parameter(A, x0, uu)
    return ConeMembershipReport(tuple(uu.tolist()), EXCLUDED, True, "analytic", t,
                                ((t, False),) if t is not None else ())


def default_shells(count: int = 12) -> list[tuple[float, float]]:
    """Shells ``t_k = k``, ``delta_k = 1/k`` for ``k = 1..count``."""
    return [(float(k), 1.0 / k) for k in range(1, count + 1)]


def _shell_offsets(dim: int, probes: int, rng: np.random.Generator) -> FloatArray:
    det = [np.zeros(dim)]
    for i in range(dim):
        for s in (0.25, 0.5, 0.75, 1.0):
            e = np.zeros(dim)
            e[i] = s
            det.extend([e, -e])
    v = rng.normal(size=(probes, dim))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    r = rng.uniform(size=(probes, 1)) ** (1.0 / dim)
    return np.vstack([np.array(det), v * r])


def asymptotic_membership_sampled(A: FeasibleSet, u: ArrayLike,
                                  schedule: Sequence[tuple[float, float]],
                                  probes_per_shell: int = 64,
                                  seed: int = 0) -> ConeMembershipReport:
    """Search each shell for ``x in A`` with ``||x / t_k - u|| <= delta_k``.

    Positive evidence only: ``in_cone_up_to_t_max`` means every shell was
    witnessed; ``excluded`` names the first shell where the search failed.
    """
    if not schedule:
        raise EmptyScheduleError("shell schedule is empty")
    uu = as_point(u, A.dim)
    ts = [float(t) for t, _ in schedule]
    if any(b <= a for a, b in zip(ts, ts[1:])) or ts[0] <= 0:
        raise InvalidParameterError("shell parameters must be positive and increasing")
    witnesses = []
    for k, (t, delta) in enumerate(schedule):
        if delta < 0:
            raise InvalidParameterError("shell radius must be >= 0", delta=delta)
        rng = np.random.default_rng([seed, k])
        cand = float(t) * (uu[None, :] + float(delta) * _shell_offsets(A.dim, probes_per_shell, rng))
        hit = bool(np.any(A.contains(cand)))
        witnesses.append((float(t), hit))
        if not hit:
            return ConeMembershipReport(tuple(uu.tolist()), EXCLUDED, False, "sampled_shells",
                                        float(t), tuple(witnesses))
    return ConeMembershipReport(tuple(uu.tolist()), IN_CONE, False, "sampled_shells",
                                None, tuple(witnesses))


def recession_member(A: FeasibleSet, u: ArrayLike, base: ArrayLike | None = None,
                     probe: ConeProbe | None = None) -> ConeMembershipReport:
    """Best available membership test: analytic, ray probe, or sampled shells."""
    probe = probe or ConeProbe()
    uu = as_point(u, A.dim)
    exact = exact_recession(A, uu, probe.tolerance) if A.convex and A.closed else None
    if exact is not None:
        return ConeMembershipReport(tuple(uu.tolist()), IN_CONE if exact else EXCLUDED,
                                    True, "analytic")
    if base is not None and A.convex and A.closed:
        return recession_membership_convex(A, uu, base, probe)
    return asymptotic_membership_sampled(A, uu, default_shells())


@dataclass(frozen=True)
class ConeIntersectionReport:
    direction: tuple[float, ...]
    left: ConeMembershipReport
    right: tuple[ConeMembershipReport, ...]
    inclusion_holds: bool
    equality_expected: bool
    equality_holds: bool
    discrepancies: tuple[str, ...] = field(default=())

    @property
    def right_member(self) -> bool:
        return all(r.member for r in self.right)

    def to_dict(self) -> dict:
        return {"direction": list(self.direction), "left": self.left.to_dict(),
                "right": [r.to_dict() for r in self.right],
                "inclusion_holds": self.inclusion_holds,
                "equality_expected": self.equality_expected,
                "equality_holds": self.equality_holds,
                "discrepancies": list(self.discrepancies)}


def cone_intersection_check(sets: Sequence[FeasibleSet], u: ArrayLike,
                            probe: ConeProbe | None = None,
                            base: ArrayLike | None = None) -> ConeIntersectionReport:
    """Compare the recession cone of an intersection with the intersection of cones.

    The left side is probed along rays from ``base`` on the intersection
    itself; the right side uses each set's own best test.  Inclusion is
    always checked; equality only when every set is closed and convex.
    """
    if not sets:
        raise InvalidParameterError("need at least one set")
    dim = sets[0].dim
    if any(s.dim != dim for s in sets):
        raise DimensionMismatchError("sets must share a dimension")
    probe = probe or ConeProbe()
    uu = as_point(u, dim)
    all_convex = all(s.convex and s.closed for s in sets)
    if all_convex and base is None:
        raise BaseNotInSetError("closed convex sets need a common base point "
                                "to compare both sides")
    x0 = None if base is None else as_point(base, dim)
    inter = Intersection(tuple(sets))
    if x0 is not None and not inter.contains(x0):
        raise BaseNotInSetError("base point is not in the intersection", base=x0)
    if all_convex:
        left = ray_probe(inter, uu, x0, probe)
    else:
        left = asymptotic_membership_sampled(inter, uu, default_shells())
    right = tuple(recession_member(s, uu, x0 if (x0 is not None and s.contains(x0)) else None,
                                   probe) for s in sets)
    right_in = all(r.member for r in right)
    inclusion = (not left.member) or right_in
    equality = left.member == right_in
    notes = []
    if not inclusion:
        notes.append("left side member but some right-side cone excludes the direction")
    if all_convex and not equality:
        notes.append("closed convex sets but the two sides disagree")
    return ConeIntersectionReport(tuple(uu.tolist()), left, right, inclusion, all_convex,
                                  equality, tuple(notes))
