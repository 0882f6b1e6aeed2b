"""Execute the task block of a parsed problem and build a JSON-ready report."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .asymptotic import (
    LiminfSchedule,
    boundedness_diagnostic,
    classic_asymptotic,
    inf_identity_check,
    sigma_g_sequential,
    sigma_g_sublevel,
)
from .bifunctions import (
    CHECKS_NEED_CONVEX,
    SampleDesign,
    check_cyclically_anti_quasimonotone,
    check_locally_dominated,
    check_pseudomonotone,
    check_transfer_quasi_convex_in_y,
    recognize_K_sigma,
)
from .cones import cone_intersection_check, recession_member
from .core import LSC, QUASI_CONVEX, as_batch, stage_grid, unit_directions, whole_space
from .equilibrium import (
    DEFAULT_STAGES,
    EPInstance,
    Inconclusive,
    check_RE_direct,
    check_RE_sufficient_classic,
    existence_pipeline,
    recession_directions,
    thin,
)
from .errors import MissingAnnotationError, NoncoerciveError, ParseError
from .minimize import MPInstance, growth_certificate, minimize
from .oracles import oracle_ep_solutions, oracle_grid_argmin, oracle_stage_grid
from .problem import REQUIRED, ProblemFile

REPORT_FORMAT = "noncoercive-report v1"
EXIT_OK, EXIT_PARSE, EXIT_HYPOTHESIS, EXIT_BUDGET = 0, 2, 3, 4
ORACLE_GRID_LIMIT = 10_000


@dataclass
class RunOutcome:
    report: dict
    exit_code: int
    tables: dict[str, list[list[float]]] = field(default_factory=dict)


def jsonable(v):
    """Convert to plain JSON types; infinities become ``"+inf"``/``"-inf"``."""
    if isinstance(v, dict):
        return {str(k): jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return jsonable(v.tolist())
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        f = float(v)
        if math.isnan(f):
            return "nan"
        if math.isinf(f):
            return "+inf" if f > 0 else "-inf"
        return f
    if v is None or isinstance(v, str):
        return v
    if hasattr(v, "to_dict"):
        return jsonable(v.to_dict())
    return str(v)


def _hyp(name: str, status: str, detail: str = "") -> dict:
    return {"hypothesis": name, "status": status, "detail": detail}


class _Run:
    def __init__(self, p: ProblemFile, kind: str, seed: int, budget: int | None,
                 tol: float | None):
        self.p = p
        self.kind = kind
        self.seed = seed
        self.budget = budget
        self.tol = tol if tol is not None else p.task_value("tol", 1e-9)
        self.schedule = LiminfSchedule(seed=seed)
        self.hypotheses: list[dict] = []
        self.tables: dict[str, list[list[float]]] = {}

    def get(self, key, default=None):
        return self.p.task_value(key, default)

    def directions(self, dim: int, K=None) -> np.ndarray:
        given = self.get("direction_list")
        if given is not None:
            return as_batch(np.array(given, float), dim)
        U = unit_directions(dim, int(self.get("directions", 16)), self.seed)
        if K is not None:
            U = U[np.array([recession_member(K, u).member for u in U], dtype=bool)]
        return U

    def feasible(self, default):
        name = self.get("set")
        return self.p.set(name) if name else default

    def stages(self) -> list[float]:
        return [float(v) for v in self.get("stages", DEFAULT_STAGES)]

    # -- tasks ----------------------------------------------------------------
    def analyze(self) -> tuple[dict, int]:
        f = self.p.function(self.get("function"))
        U = self.directions(f.dim)
        qc = f.has(QUASI_CONVEX) and f.has(LSC)
        self.hypotheses += [
            _hyp("quasi-convexity", "declared" if f.has(QUASI_CONVEX) else "absent"),
            _hyp("lower semicontinuity", "declared" if f.has(LSC) else "absent"),
        ]
        rows = []
        for u in U:
            row = {"direction": u,
                   "sigma_g_sequential": sigma_g_sequential(f, u, self.schedule),
                   "classic": classic_asymptotic(f, u, self.schedule)}
            row["sigma_g_sublevel"] = sigma_g_sublevel(f, u) if qc else None
            rows.append(row)
        ident = inf_identity_check(f, self.schedule, directions=U)
        self.hypotheses.append(_hyp("infimum identity", "checked",
                                    f"gap {ident.max_gap:.3g} between grid infimum and "
                                    "generalized value at 0"))
        try:
            bound = boundedness_diagnostic(f, U, self.schedule).to_dict()
        except MissingAnnotationError as e:
            bound = {"error": e.to_dict()}
        self.tables["directions"] = [list(u) for u in U]
        return {"function": f.description, "directions": rows, "inf_identity": ident,
                "boundedness": bound}, EXIT_OK

    def cone(self) -> tuple[dict, int]:
        K = self.p.set(self.get("set"))
        U = self.directions(K.dim)
        base = self.get("base")
        inter = self.get("intersect")
        self.hypotheses.append(_hyp("closed convex set", "declared" if K.convex and K.closed
                                    else "absent", K.describe()))
        rows = []
        for u in U:
            if inter:
                sets = [self.p.set(n) for n in inter]
                rows.append(cone_intersection_check(sets, u, base=base))
            else:
                rows.append(recession_member(K, u, base))
        self.tables["directions"] = [list(u) for u in U]
        return {"set": K.describe(), "intersect": list(inter or ()), "results": rows}, EXIT_OK

    def _ep_common(self, psi, K, eps, resolution) -> tuple[EPInstance, dict]:
        inst = EPInstance(psi, K, eps, resolution, self.p.norm)
        recog = recognize_K_sigma(psi)
        self.hypotheses.append(_hyp("truncation transfer condition", recog.status,
                                    recog.reason))
        for a in sorted(psi.annotations):
            self.hypotheses.append(_hyp(a, "declared", "annotation, not verified"))
        return inst, {"recognition": recog}

    def solve_ep(self) -> tuple[dict, int]:
        psi = self.p.bifunction(self.get("bifunction"))
        K = self.feasible(psi.feasible)
        stages = self.stages()
        inst, out = self._ep_common(psi, K, float(self.get("eps", 1e-9)),
                                    float(self.get("resolution", 0.25)))
        U = self.get("direction_list")
        U = as_batch(np.array(U, float), K.dim) if U is not None else \
            recession_directions(K, int(self.get("directions", 16)), self.seed)
        Y = self.get("y_sample")
        Y = np.array(Y, float) if Y is not None else \
            thin(stage_grid(K, stages[-1], inst.grid_resolution, inst.norm_order), 64)
        if U.shape[0]:
            direct = check_RE_direct(inst, U, Y, self.schedule, self.tol)
            classic = check_RE_sufficient_classic(inst, U, Y, self.schedule, self.tol)
            out["certificates"] = {"direct_sigma_g": direct, "classic_sufficient": classic}
            self.hypotheses.append(_hyp("escape certificate (direct)", direct.verdict,
                                        "sampled evidence"))
        else:
            out["certificates"] = {"note": "recession cone sample is {0}: nothing to certify"}
        try:
            res = existence_pipeline(inst, stages, max_stages=self.budget,
                                     schedule=self.schedule)
        except NoncoerciveError as e:
            self.hypotheses.append(_hyp("nonempty truncated solution sets", "violated",
                                        e.message))
            out["error"] = e.to_dict()
            return out, EXIT_HYPOTHESIS
        self.hypotheses.append(_hyp("nonempty truncated solution sets", "checked",
                                    f"{len(res.trace.stages)} stage(s)"))
        out["trace"] = res.trace
        out["verdict"] = _verdict(res.verdict)
        pts = res.final_sample.points
        out["final_sample"] = {"n": res.final_sample.n, "size": int(pts.shape[0]),
                               "points": pts}
        out["oracle_cross_check"] = self._ep_oracle(inst, res.final_sample)
        self.tables["solution_sample"] = pts.tolist()
        return out, EXIT_BUDGET if isinstance(res.verdict, Inconclusive) else EXIT_OK

    def _ep_oracle(self, inst: EPInstance, sample) -> dict:
        grid = oracle_stage_grid(inst.K.contains, inst.dim, sample.n, inst.grid_resolution,
                                 inst.norm_order)
        if len(grid) > ORACLE_GRID_LIMIT:
            return {"status": "skipped", "grid_size": len(grid)}
        ref = sorted(oracle_ep_solutions(inst.psi, grid, inst.epsilon_solution))
        got = sorted(tuple(float(c) for c in x) for x in sample.points)
        return {"status": "agree" if ref == got else "DISAGREE", "grid_size": len(grid),
                "oracle_size": len(ref)}

    def minimize(self) -> tuple[dict, int]:
        f = self.p.function(self.get("function"))
        K = self.feasible(f.domain if f.domain is not None else whole_space(f.dim))
        inst = MPInstance(f, K, float(self.get("resolution", 0.05)), self.get("eps"),
                          self.p.norm)
        U = self.directions(f.dim, K)
        growth = growth_certificate(inst, U, self.schedule, tol=self.tol)
        self.hypotheses += [
            _hyp("growth condition", growth.verdict, "sampled directions vs grid infimum"),
            _hyp("bounded below", "declared" if f.has("bounded_below") else "absent"),
            _hyp("transfer lower continuity on truncations", "declared",
                 "not machine-checkable"),
            _hyp("truncation transfer condition (minimization)", "automatic",
                 "finite dimension, norm topology"),
        ]
        try:
            res = minimize(inst, self.stages(), float(self.get("escape_ratio", 0.9)),
                           schedule=self.schedule, max_stages=self.budget, growth=growth)
        except NoncoerciveError as e:
            out = {"growth": growth, "error": e.to_dict()}
            return out, EXIT_HYPOTHESIS
        pts = res.argmin_sample
        out = {"function": f.description, "growth": growth, "supported": res.supported,
               "verdict": _verdict(res.verdict), "trace": res.pipeline.trace,
               "argmin_sample": {"size": int(pts.shape[0]), "points": pts},
               "min_value": res.min_value, "epsilon_value": res.epsilon_value,
               "recession": res.recession}
        n = res.pipeline.final_sample.n
        if pts.shape[0] and res.pipeline.final_sample.grid_size <= ORACLE_GRID_LIMIT:
            limit = n * (1.0 + 1e-12) + 1e-9
            ref, _ = oracle_grid_argmin(
                f, [-n] * f.dim, [n] * f.dim, inst.grid_resolution, res.epsilon_value,
                keep=lambda x: math.sqrt(math.fsum(c * c for c in x)) <= limit
                and bool(K.contains(np.array(x)))) if self.p.norm == 2.0 else (None, None)
            if ref is not None:
                got = sorted(tuple(float(c) for c in x) for x in pts)
                out["oracle_cross_check"] = {"status": "agree" if sorted(ref) == got
                                             else "DISAGREE", "oracle_size": len(ref)}
        self.tables["argmin_sample"] = pts.tolist()
        code = EXIT_BUDGET if isinstance(res.verdict, Inconclusive) else EXIT_OK
        return out, code

    def check(self) -> tuple[dict, int]:
        psi = self.p.bifunction(self.get("bifunction"))
        K = self.feasible(psi.feasible)
        pts = stage_grid(K, float(self.get("grid_radius", 1.0)),
                         float(self.get("resolution", 0.5)), self.p.norm)
        if self.get("points") is not None:
            pts = pts[: int(self.get("points"))]
        design = SampleDesign(pts, int(self.get("tuple_length", 4)),
                              int(self.get("subset_size", 3)))
        classes = self.get("classes") or ("cyclic", "pseudomonotone", "locally_dominated",
                                          "transfer_quasi_convex")
        reports = {}
        for c in classes:
            if c in CHECKS_NEED_CONVEX and not K.convex:
                reports[c] = {"status": "not_applicable", "reason": "feasible set not convex"}
                continue
            fn = {"cyclic": check_cyclically_anti_quasimonotone,
                  "pseudomonotone": check_pseudomonotone,
                  "locally_dominated": check_locally_dominated,
                  "transfer_quasi_convex": check_transfer_quasi_convex_in_y}[c]
            reports[c] = fn(psi, design, tol=self.tol)
        for a in sorted(psi.annotations):
            self.hypotheses.append(_hyp(a, "declared", "annotation, sampled checks never "
                                        "upgrade it"))
        recog = recognize_K_sigma(psi)
        self.tables["design"] = pts.tolist()
        return {"bifunction": psi.description, "design_size": int(pts.shape[0]),
                "recognition": recog, "checks": reports}, EXIT_OK


def _verdict(v) -> dict:
    d = {"kind": v.kind}
    if v.kind == "solution":
        d.update(point=v.point, verification=v.verification, recession=v.recession)
    elif v.kind == "solution_set":
        d.update(size=int(v.sample.shape[0]), recession=v.recession)
    elif v.kind == "certificate_failed":
        d.update(witness=v.witness)
    else:
        d.update(reason=v.reason, stages_run=v.stages_run)
    return d


TASKS = {"analyze": _Run.analyze, "cone": _Run.cone, "solve-ep": _Run.solve_ep,
         "minimize": _Run.minimize, "check": _Run.check}


def run_task(p: ProblemFile, kind: str | None = None, seed: int | None = None,
             budget: int | None = None, tol: float | None = None) -> RunOutcome:
    """Run the problem's task (or ``kind``); errors are folded into the report."""
    kind = kind or p.kind
    if kind is None:
        raise ParseError("E105", "no task kind given in the file or on the command line",
                         0, 0, tuple(TASKS))
    for key in REQUIRED[kind]:
        if p.task_value(key) is None:
            raise ParseError("E105", f"task {kind} needs key {key!r}", 0, 0, (key,))
    seed = int(seed if seed is not None else p.task_value("seed", 0))
    run = _Run(p, kind, seed, budget, tol)
    try:
        result, code = TASKS[kind](run)
    except ParseError:
        raise
    except NoncoerciveError as e:
        result, code = {"error": e.to_dict()}, EXIT_HYPOTHESIS
    report = {"format": REPORT_FORMAT, "version": __version__, "task": kind, "seed": seed,
              "config": {"budget": budget, "tol": run.tol, "task": dict(p.task),
                         "dim": p.dim, "norm": p.norm},
              "hypotheses": run.hypotheses, "result": result, "exit_code": code}
    return RunOutcome(jsonable(report), code, run.tables)
