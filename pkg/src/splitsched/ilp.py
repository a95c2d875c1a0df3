"""Time-indexed integer programs for batch makespan minimization.

Builders produce a backend-neutral IlpModel: sparse rows over named columns.
Variable families (i = helper, j = client, t = slot):

    x[i,j,t]   forward slot occupancy        z[i,j,t]  backward occupancy
    y[i,j]     assignment                    phi/c     backward finish / completion
    phif/cf    forward finish / completion   xi        makespan (min-max epigraph)
    sp/sm      l1 residual slack pair        swp/swm   switch-count slack pair

Slot variables are trimmed to the slots where the task can actually run: x
starts at the release r, z at r + p + l + l' (forward work plus the client's
round trip must precede it). Constraint rows carry names so that later
augmentation (switching costs) can find the completion equalities.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .model import (Assignment, InfeasibleError, ProblemInstance,
                    compute_fwd_horizon)


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str  # "binary" | "integer" | "continuous"
    lower: float
    upper: float


@dataclass(frozen=True)
class Constraint:
    name: str
    coeffs: tuple  # ((col, coefficient), ...)
    relation: str  # "<=" | ">=" | "="
    rhs: float


@dataclass(frozen=True)
class Objective:
    coeffs: tuple = ()
    offset: float = 0.0
    sense: str = "min"


class VarIndex:
    """Bijection between structured variable keys, names, and columns."""

    def __init__(self):
        self._cols = {}
        self._names = []
        self._keys = []

    def add(self, key: tuple) -> int:
        name = key[0] + "[" + ",".join(str(k) for k in key[1:]) + "]" \
            if len(key) > 1 else key[0]
        if name in self._cols:
            raise ValueError(f"duplicate variable {name}")
        self._cols[name] = len(self._names)
        self._names.append(name)
        self._keys.append(key)
        return self._cols[name]

    def col(self, name: str) -> int:
        return self._cols[name]

    def col_of(self, *key) -> int:
        name = key[0] + "[" + ",".join(str(k) for k in key[1:]) + "]" \
            if len(key) > 1 else key[0]
        return self._cols[name]

    def __contains__(self, name: str) -> bool:
        return name in self._cols

    def name(self, col: int) -> str:
        return self._names[col]

    def key(self, col: int) -> tuple:
        return self._keys[col]

    def __len__(self) -> int:
        return len(self._names)

    def names(self):
        return list(self._names)


@dataclass(frozen=True)
class IlpModel:
    kind: str  # "full" | "fwd" | "w" | "y" | "correction"
    variables: tuple
    constraints: tuple
    objective: Objective
    index: VarIndex
    meta: dict = field(default_factory=dict)

    def var_cols(self, family: str) -> list[int]:
        return [c for c in range(len(self.variables))
                if self.index.key(c)[0] == family]


class _Builder:
    def __init__(self, kind, meta):
        self.kind = kind
        self.meta = meta
        self.index = VarIndex()
        self.variables = []
        self.constraints = []

    def var(self, key, kind, lower, upper):
        col = self.index.add(key)
        self.variables.append(Variable(self.index.name(col), kind, lower, upper))
        return col

    def row(self, name, coeffs, relation, rhs):
        coeffs = tuple((c, v) for c, v in coeffs if v != 0)
        self.constraints.append(Constraint(name, coeffs, relation, rhs))

    def finish(self, objective):
        return IlpModel(kind=self.kind, variables=tuple(self.variables),
                        constraints=tuple(self.constraints),
                        objective=objective, index=self.index, meta=self.meta)


def _x_slots(e, horizon):
    return range(min(e.r, horizon), horizon)


def _z_slots(e, horizon):
    return range(min(e.r + e.p + e.l + e.l_prime, horizon), horizon)


def _add_fwd_slot_vars(b, instance, horizon):
    xcols = {}
    for (i, j) in instance.sorted_edges():
        e = instance.edges[(i, j)]
        for t in _x_slots(e, horizon):
            xcols[(i, j, t)] = b.var(("x", i, j, t), "binary", 0, 1)
    return xcols


def _capacity_rows(b, instance, horizon, xcols, zcols=None):
    # one task per helper per slot
    for i in sorted(instance.helpers):
        for t in range(horizon):
            coeffs = [(xcols[(i, j, t)], 1.0) for j in instance.clients_of(i)
                      if (i, j, t) in xcols]
            if zcols:
                coeffs += [(zcols[(i, j, t)], 1.0) for j in instance.clients_of(i)
                           if (i, j, t) in zcols]
            if len(coeffs) > 1:
                b.row(f"cap[{i},{t}]", coeffs, "<=", 1.0)


def _assignment_rows(b, instance, ycols):
    for j in sorted(instance.clients):
        coeffs = [(ycols[(i, j)], 1.0) for i in instance.helpers_of(j)]
        b.row(f"assign[{j}]", coeffs, "=", 1.0)
    for i in sorted(instance.helpers):
        coeffs = [(ycols[(i, j)], instance.memory_demand[j])
                  for j in instance.clients_of(i)]
        if coeffs:
            b.row(f"mem[{i}]", coeffs, "<=", instance.memory_capacity[i])


def build_full(instance: ProblemInstance) -> IlpModel:
    """Joint assignment + forward + backward model; objective is the makespan.

    min xi
    s.t. forward before backward per edge (precedence with the client round
         trip l + l' in between), one task per helper-slot, one helper per
         client, helper memory, slot quotas tied to the assignment,
         completion accounting phi >= (t+1) z and c = phi + r'.
    """
    T = instance.horizon
    b = _Builder("full", {"horizon": T, "edges": instance.sorted_edges()})
    xcols = _add_fwd_slot_vars(b, instance, T)
    zcols = {}
    for (i, j) in instance.sorted_edges():
        e = instance.edges[(i, j)]
        for t in _z_slots(e, T):
            zcols[(i, j, t)] = b.var(("z", i, j, t), "binary", 0, 1)
    ycols = {(i, j): b.var(("y", i, j), "binary", 0, 1)
             for (i, j) in instance.sorted_edges()}
    phi = {j: b.var(("phi", j), "integer", 0, T) for j in sorted(instance.clients)}
    c = {j: b.var(("c", j), "integer", 0, T) for j in sorted(instance.clients)}
    xi = b.var(("xi",), "integer", 0, T)

    for (i, j) in instance.sorted_edges():
        e = instance.edges[(i, j)]
        lag = e.l + e.l_prime
        for u in _z_slots(e, T):
            # z at u only after all p forward slots cleared by u - lag - 1
            coeffs = [(zcols[(i, j, u)], float(e.p))]
            coeffs += [(xcols[(i, j, tau)], -1.0)
                       for tau in _x_slots(e, T) if tau < u - lag]
            b.row(f"prec[{i},{j},{u}]", coeffs, "<=", 0.0)
    _capacity_rows(b, instance, T, xcols, zcols)
    _assignment_rows(b, instance, ycols)
    for (i, j) in instance.sorted_edges():
        e = instance.edges[(i, j)]
        b.row(f"fquota[{i},{j}]",
              [(xcols[(i, j, t)], 1.0) for t in _x_slots(e, T)]
              + [(ycols[(i, j)], -float(e.p))], "=", 0.0)
        b.row(f"bquota[{i},{j}]",
              [(zcols[(i, j, t)], 1.0) for t in _z_slots(e, T)]
              + [(ycols[(i, j)], -float(e.p_prime))], "=", 0.0)
        for t in _z_slots(e, T):
            b.row(f"fin[{i},{j},{t}]",
                  [(zcols[(i, j, t)], float(t + 1)), (phi[j], -1.0)], "<=", 0.0)
    for j in sorted(instance.clients):
        coeffs = [(c[j], 1.0), (phi[j], -1.0)]
        coeffs += [(ycols[(i, j)], -float(instance.edges[(i, j)].r_prime))
                   for i in instance.helpers_of(j)]
        b.row(f"ctail[{j}]", coeffs, "=", 0.0)
        b.row(f"peak[{j}]", [(c[j], 1.0), (xi, -1.0)], "<=", 0.0)
    return b.finish(Objective(coeffs=((xi, 1.0),)))


def build_fwd(instance: ProblemInstance) -> IlpModel:
    """Forward-phase-only model: min-max forward completion c_f."""
    Tf = compute_fwd_horizon(instance)
    b = _Builder("fwd", {"horizon": Tf, "edges": instance.sorted_edges()})
    xcols = _add_fwd_slot_vars(b, instance, Tf)
    ycols = {(i, j): b.var(("y", i, j), "binary", 0, 1)
             for (i, j) in instance.sorted_edges()}
    phif = {j: b.var(("phif", j), "integer", 0, Tf) for j in sorted(instance.clients)}
    cf = {j: b.var(("cf", j), "integer", 0, Tf) for j in sorted(instance.clients)}
    xi = b.var(("xi",), "integer", 0, Tf)

    _capacity_rows(b, instance, Tf, xcols)
    _assignment_rows(b, instance, ycols)
    for (i, j) in instance.sorted_edges():
        e = instance.edges[(i, j)]
        b.row(f"fquota[{i},{j}]",
              [(xcols[(i, j, t)], 1.0) for t in _x_slots(e, Tf)]
              + [(ycols[(i, j)], -float(e.p))], "=", 0.0)
        for t in _x_slots(e, Tf):
            b.row(f"ffin[{i},{j},{t}]",
                  [(xcols[(i, j, t)], float(t + 1)), (phif[j], -1.0)], "<=", 0.0)
    for j in sorted(instance.clients):
        coeffs = [(cf[j], 1.0), (phif[j], -1.0)]
        coeffs += [(ycols[(i, j)], -float(instance.edges[(i, j)].l))
                   for i in instance.helpers_of(j)]
        b.row(f"cftail[{j}]", coeffs, "=", 0.0)
        b.row(f"fpeak[{j}]", [(cf[j], 1.0), (xi, -1.0)], "<=", 0.0)
    return b.finish(Objective(coeffs=((xi, 1.0),)))


def _w_core(b, instance, Tf, y_fixed):
    """Shared rows of the forward subproblem under a fixed assignment."""
    xcols = _add_fwd_slot_vars(b, instance, Tf)
    phif = {j: b.var(("phif", j), "integer", 0, Tf) for j in sorted(instance.clients)}
    cf = {j: b.var(("cf", j), "integer", 0, Tf) for j in sorted(instance.clients)}
    xi = b.var(("xi",), "integer", 0, Tf)
    _capacity_rows(b, instance, Tf, xcols)
    for (i, j) in instance.sorted_edges():
        e = instance.edges[(i, j)]
        for t in _x_slots(e, Tf):
            b.row(f"ffin[{i},{j},{t}]",
                  [(xcols[(i, j, t)], float(t + 1)), (phif[j], -1.0)], "<=", 0.0)
    for j in sorted(instance.clients):
        tail = sum(instance.edges[(i, j)].l * y_fixed.get((i, j), 0)
                   for i in instance.helpers_of(j))
        b.row(f"cftail[{j}]", [(cf[j], 1.0), (phif[j], -1.0)], "=", float(tail))
        b.row(f"fpeak[{j}]", [(cf[j], 1.0), (xi, -1.0)], "<=", 0.0)
        # every client's forward work adds up to one task somewhere
        coeffs = []
        for i in instance.helpers_of(j):
            e = instance.edges[(i, j)]
            coeffs += [(xcols[(i, j, t)], 1.0 / e.p) for t in _x_slots(e, Tf)]
        b.row(f"split[{j}]", coeffs, "=", 1.0)
    return xcols, phif, cf, xi


def build_w_subproblem(instance: ProblemInstance, y_fixed: dict, lam: dict,
                       rho: float) -> IlpModel:
    """Schedule step of the splitting iteration: optimize slots, dualized
    assignment coupling.

    Objective: xi + sum lam_ij * (sum_t x_ijt - y_ij p_ij)
                  + (rho/2) * sum |sum_t x_ijt - y_ij p_ij|,
    the absolute values linearized with slack pairs sp/sm. Constant terms go
    into the objective offset.
    """
    if rho <= 0:
        raise ValueError("rho must be positive")
    Tf = compute_fwd_horizon(instance)
    b = _Builder("w", {"horizon": Tf, "edges": instance.sorted_edges()})
    xcols, phif, cf, xi = _w_core(b, instance, Tf, y_fixed)
    obj = [(xi, 1.0)]
    offset = 0.0
    slack_ub = float(Tf + max(e.p for e in instance.edges.values()))
    for (i, j) in instance.sorted_edges():
        e = instance.edges[(i, j)]
        yp = y_fixed.get((i, j), 0) * e.p
        sp = b.var(("sp", i, j), "integer", 0, slack_ub)
        sm = b.var(("sm", i, j), "integer", 0, slack_ub)
        coeffs = [(xcols[(i, j, t)], 1.0) for t in _x_slots(e, Tf)]
        coeffs += [(sp, -1.0), (sm, 1.0)]
        b.row(f"res[{i},{j}]", coeffs, "=", float(yp))
        lam_ij = lam.get((i, j), 0.0)
        for t in _x_slots(e, Tf):
            obj.append((xcols[(i, j, t)], lam_ij))
        offset -= lam_ij * yp
        obj.append((sp, rho / 2.0))
        obj.append((sm, rho / 2.0))
    return b.finish(Objective(coeffs=_merge(obj), offset=offset))


def build_y_subproblem(instance: ProblemInstance, x_sums: dict, lam: dict,
                       rho: float) -> IlpModel:
    """Assignment step: totality + memory, dual and penalty terms only.

    The forward completion term of the augmented objective is constant here
    (schedule variables are frozen) and is not part of the model; offsets
    cover the constant dual term sum lam_ij * x_sums_ij.
    """
    if rho <= 0:
        raise ValueError("rho must be positive")
    b = _Builder("y", {"edges": instance.sorted_edges()})
    ycols = {(i, j): b.var(("y", i, j), "binary", 0, 1)
             for (i, j) in instance.sorted_edges()}
    obj = []
    offset = 0.0
    slack_ub = float(max(x_sums.values(), default=0)
                     + max(e.p for e in instance.edges.values()))
    for (i, j) in instance.sorted_edges():
        e = instance.edges[(i, j)]
        xs = float(x_sums.get((i, j), 0))
        sp = b.var(("sp", i, j), "integer", 0, slack_ub)
        sm = b.var(("sm", i, j), "integer", 0, slack_ub)
        # residual xs - p*y = sp - sm
        b.row(f"res[{i},{j}]",
              [(ycols[(i, j)], float(e.p)), (sp, 1.0), (sm, -1.0)], "=", xs)
        lam_ij = lam.get((i, j), 0.0)
        obj.append((ycols[(i, j)], -lam_ij * e.p))
        offset += lam_ij * xs
        obj.append((sp, rho / 2.0))
        obj.append((sm, rho / 2.0))
    _assignment_rows(b, instance, ycols)
    return b.finish(Objective(coeffs=_merge(obj), offset=offset))


def build_feasibility_correction(instance: ProblemInstance, y_star: dict,
                                 lam_star: dict | None = None) -> IlpModel:
    """Final schedule repair: forward subproblem with the slot quota hard.

    With sum_t x_ijt = y*_ij p_ij enforced, every dual and penalty term of the
    augmented objective vanishes, so this is exactly min-max forward
    completion under the fixed assignment. lam_star is accepted for signature
    symmetry; it only shifts the objective by zero.
    """
    assigned = {j: [i for i in instance.helpers_of(j) if y_star.get((i, j), 0)]
                for j in instance.clients}
    for j, hs in assigned.items():
        if len(hs) != 1:
            raise InfeasibleError(f"correction needs a total assignment; client {j} "
                                  f"has {len(hs)} helpers")
    for i in instance.helpers:
        load = sum(instance.memory_demand[j] for j, hs in assigned.items()
                   if hs[0] == i)
        if load > instance.memory_capacity[i] + 1e-9:
            raise InfeasibleError(f"correction assignment overloads helper {i}")

    Tf = compute_fwd_horizon(instance)
    b = _Builder("correction", {"horizon": Tf, "edges": instance.sorted_edges()})
    xcols, phif, cf, xi = _w_core(b, instance, Tf, y_star)
    for (i, j) in instance.sorted_edges():
        e = instance.edges[(i, j)]
        b.row(f"fquota[{i},{j}]",
              [(xcols[(i, j, t)], 1.0) for t in _x_slots(e, Tf)],
              "=", float(y_star.get((i, j), 0) * e.p))
    return b.finish(Objective(coeffs=((xi, 1.0),)))


def _merge(coeffs):
    acc = {}
    for col, v in coeffs:
        acc[col] = acc.get(col, 0.0) + v
    return tuple((col, v) for col, v in sorted(acc.items()) if v != 0.0)


def add_switching_cost(model: IlpModel, instance: ProblemInstance) -> IlpModel:
    """Fold per-helper switching delays into the completion equalities.

    For every edge on a helper with mu > 0 and every adjacent in-horizon slot
    pair (t, t+1), a slack pair swp/swm captures |x_t - x_{t+1}| (and
    |z_t - z_{t+1}| in the joint model); mu times their sum is added to the
    client's completion. Pairs where one side is a slot the task can never
    occupy contribute the surviving variable directly. With all mu zero the
    model is returned unchanged.
    """
    if all(instance.switching_cost.get(i, 0) == 0 for i in instance.helpers):
        return model
    T = model.meta["horizon"]
    # A task occupying k slots flips at most 2k pair boundaries, so the
    # penalty added to client j's completion is bounded by mu * 2k summed
    # over the penalised families; completions may exceed the slot horizon
    # by that much and their bounds must grow with it.
    pad = {}
    for (i, j) in model.meta["edges"]:
        mu = float(instance.switching_cost.get(i, 0))
        e = instance.edges[(i, j)]
        k = e.p + (e.p_prime if model.kind == "full" else 0)
        pad[j] = max(pad.get(j, 0.0), mu * 2 * k)
    pad_max = max(pad.values())
    b = _Builder(model.kind, dict(model.meta, switching=True))
    for v, key in zip(model.variables, (model.index.key(c) for c in range(len(model.variables)))):
        up = v.upper
        if key[0] in ("c", "cf"):
            up += pad[key[1]]
        elif key[0] == "xi":
            up += pad_max
        b.var(key, v.kind, v.lower, up)
    extra = {}  # completion row name -> additional coeffs

    comp_row = "ctail" if model.kind == "full" else "cftail"
    families = ("x", "z") if model.kind == "full" else ("x",)
    for (i, j) in model.meta["edges"]:
        mu = float(instance.switching_cost.get(i, 0))
        if mu == 0:
            continue
        e = instance.edges[(i, j)]
        for fam in families:
            first = e.r if fam == "x" else e.r + e.p + e.l + e.l_prime
            first = min(first, T)
            add = extra.setdefault(f"{comp_row}[{j}]", [])
            for t in range(T - 1):
                left = f"{fam}[{i},{j},{t}]"
                right = f"{fam}[{i},{j},{t + 1}]"
                has_l, has_r = t >= first, t + 1 >= first
                if not has_r:
                    continue
                if not has_l:
                    # |0 - v| = v for a binary v
                    add.append((model.index.col(right), -mu))
                    continue
                swp = b.var((f"swp{fam}", i, j, t), "integer", 0, 1)
                swm = b.var((f"swm{fam}", i, j, t), "integer", 0, 1)
                b.row(f"sw{fam}[{i},{j},{t}]",
                      [(model.index.col(left), 1.0), (model.index.col(right), -1.0),
                       (swp, -1.0), (swm, 1.0)], "=", 0.0)
                add.append((swp, -mu))
                add.append((swm, -mu))
    for cn in model.constraints:
        if cn.name in extra:
            b.row(cn.name, list(cn.coeffs) + extra[cn.name], cn.relation, cn.rhs)
        else:
            b.constraints.append(cn)
    return b.finish(model.objective)


# ---------------------------------------------------------------------------
# decoding and export

def solution_values(model: IlpModel, values) -> dict:
    return {model.index.name(c): values[c] for c in range(len(model.variables))}


def decode_assignment(model: IlpModel, values) -> Assignment:
    by_client = {}
    for col in model.var_cols("y"):
        if values[col] > 0.5:
            _, i, j = model.index.key(col)
            by_client[j] = i
    return Assignment(by_client)


def decode_slots(model: IlpModel, values, family: str) -> frozenset:
    out = []
    for col in model.var_cols(family):
        if values[col] > 0.5:
            _, i, j, t = model.index.key(col)
            out.append((i, j, t))
    return frozenset(out)


def _lp_name(name: str) -> str:
    return name.replace("[", "_").replace("]", "").replace(",", "_")


def to_lp_format(model: IlpModel) -> str:
    """CPLEX-style LP text; layout follows column order, so output is stable
    for a fixed model. The objective offset, which the format cannot carry,
    is recorded in a leading comment."""

    def term(v, name, first):
        sign = "-" if v < 0 else ("" if first else "+")
        mag = abs(v)
        coef = "" if mag == 1 else f"{mag:.12g} "
        return f"{sign} {coef}{name}" if not first else f"{sign}{coef}{name}"

    lines = [f"\\ kind: {model.kind}", f"\\ objective offset: {model.objective.offset:.12g}"]
    lines.append("Minimize" if model.objective.sense == "min" else "Maximize")
    if model.objective.coeffs:
        parts = []
        for k, (col, v) in enumerate(model.objective.coeffs):
            parts.append(term(v, _lp_name(model.index.name(col)), k == 0))
        lines.append(" obj: " + " ".join(parts))
    else:
        lines.append(f" obj: 0 {_lp_name(model.index.name(0))}")
    lines.append("Subject To")
    for cn in model.constraints:
        parts = []
        for k, (col, v) in enumerate(cn.coeffs):
            parts.append(term(v, _lp_name(model.index.name(col)), k == 0))
        rel = {"<=": "<=", ">=": ">=", "=": "="}[cn.relation]
        lines.append(f" {_lp_name(cn.name)}: " + " ".join(parts) + f" {rel} {cn.rhs:.12g}")
    lines.append("Bounds")
    for col, v in enumerate(model.variables):
        lines.append(f" {v.lower:.12g} <= {_lp_name(v.name)} <= {v.upper:.12g}")
    bins = [v.name for v in model.variables if v.kind == "binary"]
    gens = [v.name for v in model.variables if v.kind == "integer"]
    if bins:
        lines.append("Binaries")
        lines.append(" " + " ".join(_lp_name(n) for n in bins))
    if gens:
        lines.append("Generals")
        lines.append(" " + " ".join(_lp_name(n) for n in gens))
    lines.append("End")
    return "\n".join(lines) + "\n"
