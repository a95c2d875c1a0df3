"""Branch and bound over IlpModel with interchangeable relaxation backends.

Backends:
  "bnb"   internal branch and bound; LP relaxations via scipy's HiGHS
          (lp_backend="highs") or the bundled simplex (lp_backend="simplex").
  "milp"  hand the whole model to scipy.optimize.milp.

The internal search dives first (rounding-nearest child) to find an incumbent,
then switches to best-first on the node bound. Branching picks the most
fractional binary, then the most fractional general integer; all ties break
on the lowest column, so runs are reproducible. When every objective
coefficient sits on integer-valued variables and is itself integral, node
bounds are rounded up, which prunes hard for makespan-style objectives.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .ilp import IlpModel
from .model import InfeasibleError, UnboundedError
from . import simplex

try:
    from scipy.optimize import linprog, milp, LinearConstraint, Bounds
    from scipy import sparse
    _HAVE_SCIPY = True
except ImportError:  # pragma: no cover
    _HAVE_SCIPY = False


@dataclass
class SolverConfig:
    backend: str = "auto"          # "auto" | "bnb" | "milp"
    lp_backend: str = "auto"       # "auto" | "highs" | "simplex"
    bound_mode: str = "lp"         # "lp" | "callback"
    bound_callback: object = None  # fixings dict -> float, used at interior nodes
    time_limit_s: float | None = None
    node_limit: int | None = None
    gap_tolerance: float = 0.0
    integrality_tol: float = 1e-6
    log: bool = False


@dataclass
class SolverResult:
    status: str  # "optimal" | "infeasible" | "limit" | "unbounded"
    objective: float | None
    values: np.ndarray | None
    bound: float
    nodes: int
    wall_clock_s: float
    extra: dict = field(default_factory=dict)

    def value(self, model: IlpModel, name: str) -> float:
        return float(self.values[model.index.col(name)])


def _matrix_form(model: IlpModel):
    n = len(model.variables)
    c = np.zeros(n)
    for col, v in model.objective.coeffs:
        c[col] += v
    rows, cols, vals, rels, rhs = [], [], [], [], []
    for k, cn in enumerate(model.constraints):
        for col, v in cn.coeffs:
            rows.append(k)
            cols.append(col)
            vals.append(v)
        rels.append(cn.relation)
        rhs.append(cn.rhs)
    lb = np.array([v.lower for v in model.variables], dtype=float)
    ub = np.array([v.upper for v in model.variables], dtype=float)
    return c, (rows, cols, vals), rels, np.array(rhs, dtype=float), lb, ub


def _integral_objective(model: IlpModel) -> bool:
    if abs(model.objective.offset - round(model.objective.offset)) > 1e-12:
        return False
    for col, v in model.objective.coeffs:
        if abs(v - round(v)) > 1e-12:
            return False
        if model.variables[col].kind == "continuous":
            return False
    return True


class _Relaxation:
    """LP relaxation of a model with per-node bound overrides."""

    def __init__(self, model: IlpModel, lp_backend: str):
        self.model = model
        (self.c, (r, cc, vv), self.rels, self.rhs,
         self.lb0, self.ub0) = _matrix_form(model)
        self.m = len(model.constraints)
        self.n = len(model.variables)
        if lp_backend == "auto":
            lp_backend = "highs" if _HAVE_SCIPY else "simplex"
        if lp_backend == "highs" and not _HAVE_SCIPY:
            raise RuntimeError("scipy is not available for lp_backend='highs'")
        self.lp_backend = lp_backend
        if lp_backend == "highs":
            data = (np.array(vv), (np.array(r, dtype=int), np.array(cc, dtype=int)))
            mat = sparse.csr_matrix(data, shape=(self.m, self.n))
            le = np.array([k for k, rel in enumerate(self.rels) if rel == "<="], dtype=int)
            ge = np.array([k for k, rel in enumerate(self.rels) if rel == ">="], dtype=int)
            eq = np.array([k for k, rel in enumerate(self.rels) if rel == "="], dtype=int)
            self.A_ub = sparse.vstack([mat[le], -mat[ge]]) if len(le) + len(ge) else None
            self.b_ub = np.concatenate([self.rhs[le], -self.rhs[ge]]) if self.A_ub is not None else None
            self.A_eq = mat[eq] if len(eq) else None
            self.b_eq = self.rhs[eq] if len(eq) else None
        else:
            self.A_dense = np.zeros((self.m, self.n))
            for rk, ck, vk in zip(r, cc, vv):
                self.A_dense[rk, ck] += vk

    def solve(self, fixings: dict) -> tuple[str, np.ndarray | None, float | None]:
        lb = self.lb0.copy()
        ub = self.ub0.copy()
        for col, (lo, hi) in fixings.items():
            lb[col] = max(lb[col], lo)
            ub[col] = min(ub[col], hi)
        if np.any(lb > ub):
            return "infeasible", None, None
        if self.lp_backend == "highs":
            res = linprog(self.c, A_ub=self.A_ub, b_ub=self.b_ub,
                          A_eq=self.A_eq, b_eq=self.b_eq,
                          bounds=np.stack([lb, ub], axis=1), method="highs")
            if res.status == 2:
                return "infeasible", None, None
            if res.status == 3:
                return "unbounded", None, None
            if not res.success:
                return "error", None, None
            return "optimal", res.x, float(res.fun)
        out = simplex.solve_lp(self.c, self.A_dense, self.rels, self.rhs, lb, ub)
        if out.status == "optimal":
            return "optimal", out.x, out.objective
        if out.status in ("infeasible", "unbounded"):
            return out.status, None, None
        return "error", None, None


def lp_bound(model: IlpModel, lp_backend: str = "auto") -> float:
    """Objective value of the continuous relaxation, offset included."""
    status, _, obj = _Relaxation(model, lp_backend).solve({})
    if status == "infeasible":
        raise InfeasibleError("relaxation is infeasible")
    if status == "unbounded":
        raise UnboundedError("relaxation is unbounded")
    if status != "optimal":
        raise RuntimeError("relaxation failed")
    return obj + model.objective.offset


def _fractional_col(model, x, tol):
    best_bin, best_bin_score = -1, tol
    best_int, best_int_score = -1, tol
    for col, v in enumerate(model.variables):
        if v.kind == "continuous":
            continue
        frac = abs(x[col] - round(x[col]))
        score = min(x[col] - math.floor(x[col]), math.ceil(x[col]) - x[col])
        if frac <= tol:
            continue
        if v.kind == "binary":
            if score > best_bin_score:
                best_bin, best_bin_score = col, score
        elif score > best_int_score:
            best_int, best_int_score = col, score
    return best_bin if best_bin >= 0 else best_int


def _solve_bnb(model: IlpModel, cfg: SolverConfig) -> SolverResult:
    start = time.monotonic()
    relax = _Relaxation(model, cfg.lp_backend)
    round_up = _integral_objective(model)
    offset = model.objective.offset
    tol = cfg.integrality_tol

    def tighten(v):
        return math.ceil(v - 1e-6) if round_up else v

    incumbent = None
    inc_val = math.inf
    nodes = 0
    counter = 0
    heap = []  # (bound, counter, fixings)
    infeasible_root = False

    def out_of_budget():
        if cfg.node_limit is not None and nodes >= cfg.node_limit:
            return True
        if cfg.time_limit_s is not None and time.monotonic() - start > cfg.time_limit_s:
            return True
        return False

    def node_bound(fixings):
        if cfg.bound_mode == "callback" and cfg.bound_callback is not None:
            return float(cfg.bound_callback(fixings))
        return -math.inf

    def evaluate(fixings):
        """LP-evaluate a node; update incumbent or expand children."""
        nonlocal incumbent, inc_val, nodes, counter, infeasible_root
        nodes += 1
        if cfg.bound_mode == "callback" and cfg.bound_callback is not None:
            cheap = node_bound(fixings)
            if math.isfinite(cheap):
                cheap = tighten(cheap)
            if incumbent is not None and cheap >= inc_val - 1e-9:
                return None
        status, x, obj = relax.solve(fixings)
        if status == "infeasible":
            if not fixings:
                infeasible_root = True
            return None
        if status == "unbounded":
            raise UnboundedError("relaxation is unbounded")
        if status == "error":
            raise RuntimeError("relaxation backend failed")
        val = tighten(obj + offset)
        if val >= inc_val - 1e-9 and incumbent is not None:
            return None
        col = _fractional_col(model, x, tol)
        if col < 0:
            xi = x.copy()
            for kcol, v in enumerate(model.variables):
                if v.kind != "continuous":
                    xi[kcol] = round(xi[kcol])
            true_val = float(relax.c @ xi) + offset
            if true_val < inc_val - 1e-9:
                incumbent, inc_val = xi, true_val
            return None
        return val, col, x[col]

    # dive for a first incumbent, stacking siblings
    fixings = {}
    while True:
        if out_of_budget():
            break
        got = evaluate(fixings)
        if got is None:
            break
        val, col, xval = got
        lo = math.floor(xval)
        near = round(xval)
        if model.variables[col].kind == "binary":
            first = {**fixings, col: (near, near)}
            other = {**fixings, col: (1 - near, 1 - near)}
        else:
            if near <= lo:
                first = {**fixings, col: (relax.lb0[col], lo)}
                other = {**fixings, col: (lo + 1, relax.ub0[col])}
            else:
                first = {**fixings, col: (lo + 1, relax.ub0[col])}
                other = {**fixings, col: (relax.lb0[col], lo)}
        heapq.heappush(heap, (max(val, node_bound(other)), counter, other))
        counter += 1
        fixings = first

    # best-first on remaining nodes
    gap_ok = False
    gap_floor = math.inf  # lowest bound discarded by the gap test
    while heap:
        if out_of_budget():
            break
        bound, _, fixings = heapq.heappop(heap)
        if incumbent is not None and bound >= inc_val - 1e-9:
            continue
        if incumbent is not None and inc_val - bound <= cfg.gap_tolerance * max(1.0, abs(inc_val)):
            gap_ok = True
            gap_floor = min(gap_floor, bound)
            continue
        got = evaluate(fixings)
        if got is None:
            continue
        val, col, xval = got
        lo = math.floor(xval)
        if model.variables[col].kind == "binary":
            children = [{**fixings, col: (0, 0)}, {**fixings, col: (1, 1)}]
        else:
            children = [{**fixings, col: (relax.lb0[col], lo)},
                        {**fixings, col: (lo + 1, relax.ub0[col])}]
        for ch in children:
            heapq.heappush(heap, (max(val, node_bound(ch)), counter, ch))
            counter += 1

    wall = time.monotonic() - start
    remaining = min((bnd for bnd, _, _ in heap), default=math.inf)
    remaining = min(remaining, gap_floor)
    if incumbent is not None:
        global_bound = min(inc_val, remaining)
        closed = not heap or remaining >= inc_val - 1e-9 or gap_ok
        status = "optimal" if closed else "limit"
        return SolverResult(status, inc_val, incumbent, global_bound, nodes, wall)
    if infeasible_root or (not heap and nodes > 0):
        return SolverResult("infeasible", None, None, math.inf, nodes, wall)
    return SolverResult("limit", None, None,
                        remaining if heap else -math.inf, nodes, wall)


def _solve_milp(model: IlpModel, cfg: SolverConfig) -> SolverResult:
    if not _HAVE_SCIPY:
        raise RuntimeError("scipy is not available for backend='milp'")
    start = time.monotonic()
    c, (r, cc, vv), rels, rhs, lb, ub = _matrix_form(model)
    n = len(model.variables)
    mat = sparse.csr_matrix((np.array(vv), (np.array(r, dtype=int), np.array(cc, dtype=int))),
                            shape=(len(model.constraints), n))
    lo = np.where(np.array([rel != "<=" for rel in rels]), rhs, -np.inf)
    hi = np.where(np.array([rel != ">=" for rel in rels]), rhs, np.inf)
    integrality = np.array([0 if v.kind == "continuous" else 1
                            for v in model.variables])
    options = {"presolve": True}
    if cfg.time_limit_s is not None:
        options["time_limit"] = cfg.time_limit_s
    if cfg.node_limit is not None:
        options["node_limit"] = cfg.node_limit
    if cfg.gap_tolerance:
        options["mip_rel_gap"] = cfg.gap_tolerance
    res = milp(c=c, constraints=LinearConstraint(mat, lo, hi),
               integrality=integrality, bounds=Bounds(lb, ub), options=options)
    wall = time.monotonic() - start
    offset = model.objective.offset
    dual = res.mip_dual_bound + offset if res.mip_dual_bound is not None else -math.inf
    if res.status == 0:
        vals = np.array(res.x)
        return SolverResult("optimal", float(res.fun) + offset, vals, dual,
                            int(res.mip_node_count or 0), wall)
    if res.status == 2:
        return SolverResult("infeasible", None, None, math.inf, 0, wall)
    if res.status == 3:
        return SolverResult("unbounded", None, None, -math.inf, 0, wall)
    if res.x is not None:
        return SolverResult("limit", float(res.fun) + offset, np.array(res.x),
                            dual, int(res.mip_node_count or 0), wall)
    return SolverResult("limit", None, None, dual, int(res.mip_node_count or 0), wall)


def solve(model: IlpModel, config: SolverConfig | None = None) -> SolverResult:
    cfg = config or SolverConfig()
    backend = cfg.backend
    if backend == "auto":
        backend = "milp" if _HAVE_SCIPY else "bnb"
    if backend == "milp":
        return _solve_milp(model, cfg)
    if backend == "bnb":
        return _solve_bnb(model, cfg)
    raise ValueError(f"unknown backend {cfg.backend!r}")


def solve_exact(instance, config: SolverConfig | None = None) -> "SolveOutcome":
    """Build the joint model, solve it, and decode a full outcome.

    Returns an optimal outcome, or a feasible one flagged non-optimal when the
    solver stopped on a limit with an incumbent. Raises InfeasibleError when
    the model is proven infeasible and SchedulingError when limits ran out
    before any incumbent appeared.
    """
    from .ilp import add_switching_cost, build_full, decode_assignment, decode_slots
    from .model import Schedule, SchedulingError, SolveOutcome, SolveStats, \
        completion_from_schedule

    start = time.monotonic()
    model = add_switching_cost(build_full(instance), instance)
    res = solve(model, config)
    if res.status == "infeasible":
        raise InfeasibleError("no feasible assignment and schedule exist")
    if res.values is None:
        raise SchedulingError(f"solver stopped ({res.status}) without a schedule")
    assignment = decode_assignment(model, res.values)
    schedule = Schedule(fwd=decode_slots(model, res.values, "x"),
                        bwd=decode_slots(model, res.values, "z"))
    comp = completion_from_schedule(instance, assignment, schedule)
    if res.status == "optimal" and abs(comp.makespan - res.objective) > 1e-6:
        raise SchedulingError("decoded schedule does not reproduce the optimum")
    stats = SolveStats(method="exact_ilp", status=res.status,
                       wall_clock_s=time.monotonic() - start,
                       iterations=res.nodes, optimal=res.status == "optimal",
                       lower_bound=res.bound if math.isfinite(res.bound) else None,
                       extra={"backend": (config or SolverConfig()).backend})
    return SolveOutcome(assignment=assignment, schedule=schedule,
                        phi_f=comp.phi_f, c_f=comp.c_f, phi=comp.phi, c=comp.c,
                        makespan=comp.makespan, stats=stats)


def makespan_release_bound(model: IlpModel, instance) -> object:
    """Assignment-aware combinatorial bound for callback bound mode.

    For each client, the cheapest end-to-end chain (release, forward, round
    trip, backward, tail) over helpers its assignment variable is not fixed
    away from; the bound is the max over clients.
    """
    ycols = {}
    for col in model.var_cols("y"):
        _, i, j = model.index.key(col)
        ycols[(i, j)] = col

    def chain(e):
        return e.r + e.p + e.l + e.l_prime + e.p_prime + e.r_prime

    def callback(fixings):
        worst = 0
        for j in sorted(instance.clients):
            best = math.inf
            for i in instance.helpers_of(j):
                col = ycols[(i, j)]
                lo, hi = fixings.get(col, (0, 1))
                if hi < 0.5:
                    continue
                e = instance.edges[(i, j)]
                val = chain(e)
                if lo > 0.5:
                    best = val
                    break
                best = min(best, val)
            if best is math.inf:
                return math.inf
            worst = max(worst, best)
        return float(worst)

    return callback
