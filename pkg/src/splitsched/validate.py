"""Schedule validation against the slot model, plus an exhaustive oracle.

validate() re-checks every constraint family of the scheduling model on a
concrete (assignment, schedule) pair and reports violations with the tag of
the constraint family that failed. brute_force_optimum() searches all
memory-feasible assignments and all work-conserving slot schedules of a tiny
instance and returns a provably optimal outcome; it exists as an independent
reference for the exact solver and is capped to desk-size inputs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .model import (Assignment, InfeasibleError, ProblemInstance,
                    Schedule, SchedulingError, SolveOutcome, SolveStats,
                    completion_from_schedule)


@dataclass(frozen=True)
class Violation:
    tag: str  # eq1..eq7 or "domain"
    helper: int | None
    client: int | None
    slot: int | None
    message: str


def _sorted(violations):
    def key(v):
        return (v.tag, v.helper if v.helper is not None else -1,
                v.client if v.client is not None else -1,
                v.slot if v.slot is not None else -1, v.message)
    return sorted(violations, key=key)


def validate(instance: ProblemInstance, assignment: Assignment,
             schedule: Schedule) -> list[Violation]:
    """All constraint violations of (assignment, schedule), empty if clean.

    Tags: eq1 release times, eq2 forward-before-backward precedence, eq3
    helper slot capacity, eq4 assignment totality, eq5 helper memory, eq6
    forward slot quota, eq7 backward slot quota, domain for triples that
    reference unknown ids, missing edges, or out-of-horizon slots.
    """
    out = []
    t_hor = instance.horizon
    helpers = set(instance.helpers)
    clients = set(instance.clients)

    # eq4: exactly one eligible helper per client
    amap = assignment.by_client
    for j in instance.clients:
        if j not in amap:
            out.append(Violation("eq4", None, j, None, f"client {j} unassigned"))
        elif amap[j] not in helpers:
            out.append(Violation("domain", amap[j], j, None,
                                 f"client {j} assigned to unknown helper {amap[j]}"))
        elif (amap[j], j) not in instance.edges:
            out.append(Violation("eq4", amap[j], j, None,
                                 f"client {j} assigned to ineligible helper {amap[j]}"))
    for j in amap:
        if j not in clients:
            out.append(Violation("domain", None, j, None, f"unknown client {j} in assignment"))

    # eq5: helper memory
    for i in instance.helpers:
        load = sum(instance.memory_demand[j] for j, h in amap.items()
                   if h == i and j in clients)
        cap = instance.memory_capacity[i]
        if load > cap + 1e-9:
            out.append(Violation("eq5", i, None, None,
                                 f"helper {i} memory {load:g} GB exceeds {cap:g} GB"))

    # domain checks on triples
    def domain_ok(i, j, t, kind):
        if i not in helpers or j not in clients:
            out.append(Violation("domain", i, j, t, f"{kind} triple references unknown ids"))
            return False
        if (i, j) not in instance.edges:
            out.append(Violation("domain", i, j, t, f"{kind} triple on missing edge ({i}, {j})"))
            return False
        if not 0 <= t < t_hor:
            out.append(Violation("domain", i, j, t, f"{kind} slot {t} outside [0, {t_hor})"))
            return False
        return True

    fwd = [tr for tr in schedule.fwd if domain_ok(*tr, "fwd")]
    bwd = [tr for tr in schedule.bwd if domain_ok(*tr, "bwd")]

    # eq1: forward work only after the activation upload lands
    for (i, j, t) in fwd:
        if t < instance.edges[(i, j)].r:
            out.append(Violation("eq1", i, j, t,
                                 f"fwd slot {t} precedes release {instance.edges[(i, j)].r}"))

    # eq2: a backward slot u needs the forward task finished by u - l - l' - 1
    fwd_slots = {}
    for (i, j, t) in fwd:
        fwd_slots.setdefault((i, j), []).append(t)
    for (i, j, u) in bwd:
        e = instance.edges[(i, j)]
        gate = u - e.l - e.l_prime
        done = sum(1 for t in fwd_slots.get((i, j), []) if t < gate)
        if done < e.p:
            out.append(Violation("eq2", i, j, u,
                                 f"bwd slot {u} before forward work cleared ({done}/{e.p} "
                                 f"slots done by {gate - 1})"))

    # eq3: one task per helper per slot
    occupancy = {}
    for (i, j, t) in fwd + bwd:
        occupancy.setdefault((i, t), []).append(j)
    for (i, t), js in sorted(occupancy.items()):
        if len(js) > 1:
            out.append(Violation("eq3", i, None, t,
                                 f"helper {i} slot {t} holds {len(js)} tasks"))

    # eq6/eq7: slot quotas tied to the assignment
    fwd_count, bwd_count = {}, {}
    for (i, j, t) in fwd:
        fwd_count[(i, j)] = fwd_count.get((i, j), 0) + 1
    for (i, j, t) in bwd:
        bwd_count[(i, j)] = bwd_count.get((i, j), 0) + 1
    for (i, j) in sorted(set(fwd_count) | set(bwd_count)):
        assigned = amap.get(j) == i
        e = instance.edges[(i, j)]
        nf, nb = fwd_count.get((i, j), 0), bwd_count.get((i, j), 0)
        if not assigned:
            if nf:
                out.append(Violation("eq6", i, j, None,
                                     f"{nf} fwd slots on unassigned edge ({i}, {j})"))
            if nb:
                out.append(Violation("eq7", i, j, None,
                                     f"{nb} bwd slots on unassigned edge ({i}, {j})"))
    for j, i in sorted(amap.items()):
        if j not in clients or (i, j) not in instance.edges:
            continue
        e = instance.edges[(i, j)]
        nf, nb = fwd_count.get((i, j), 0), bwd_count.get((i, j), 0)
        if nf != e.p:
            out.append(Violation("eq6", i, j, None,
                                 f"client {j} holds {nf} fwd slots, needs {e.p}"))
        if nb != e.p_prime:
            out.append(Violation("eq7", i, j, None,
                                 f"client {j} holds {nb} bwd slots, needs {e.p_prime}"))

    return _sorted(out)


def violations_to_jsonl(violations) -> str:
    """One JSON object per line, stable field order."""
    lines = []
    for v in violations:
        lines.append(json.dumps({
            "tag": v.tag, "helper": v.helper, "client": v.client,
            "slot": v.slot, "message": v.message}, sort_keys=True))
    return "\n".join(lines) + ("\n" if lines else "")


# ---------------------------------------------------------------------------
# Exhaustive oracle

_ORACLE_MAX_CLIENTS = 4
_ORACLE_MAX_HELPERS = 2
_ORACLE_MAX_HORIZON = 40


class OracleCapError(SchedulingError):
    """Instance exceeds the sizes the exhaustive oracle is meant for."""


def _helper_optimum(instance, i, js, best_cap):
    """Minimal max completion for clients js pinned to helper i.

    Depth-first search over work-conserving schedules: at each decision slot
    run one available task or jump to the next enabling time. Idling while a
    task is available can never improve any completion (swapping the idle
    slot with the task's next slot only moves work earlier), so the search is
    exact. Backward availability follows the model's precedence gate
    phi_f + l + l'. Returns (value, fwd_triples, bwd_triples) or (None, ...)
    if nothing beats best_cap.
    """
    edges = {j: instance.edges[(i, j)] for j in js}
    order = sorted(js)
    n = len(order)
    best = [best_cap, None]
    seen = {}

    def bound(t, frem, brem, phif, cmax):
        lb = cmax
        total = 0
        min_tail = None
        for k, j in enumerate(order):
            e = edges[j]
            if frem[k] == 0 and brem[k] == 0:
                continue
            total += frem[k] + brem[k]
            tail = e.r_prime
            min_tail = tail if min_tail is None else min(min_tail, tail)
            if frem[k] > 0:
                phif_min = max(t, e.r + (e.p - frem[k])) + frem[k]
                cj = phif_min + e.l + e.l_prime + e.p_prime + e.r_prime
            else:
                gate = phif[k] + e.l + e.l_prime
                cj = max(t, gate) + brem[k] + e.r_prime
            lb = max(lb, cj)
        if total:
            lb = max(lb, t + total + min_tail)
        return lb

    def collect(t, frem, brem, phif):
        actions = []
        next_event = None
        for k, j in enumerate(order):
            e = edges[j]
            if frem[k] > 0:
                if t >= e.r:
                    actions.append(("f", k))
                elif next_event is None or e.r < next_event:
                    next_event = e.r
            elif brem[k] > 0:
                gate = phif[k] + e.l + e.l_prime
                if t >= gate:
                    actions.append(("b", k))
                elif next_event is None or gate < next_event:
                    next_event = gate
        return actions, next_event

    def dfs(t, frem, brem, phif, cmax, fsched, bsched):
        if all(v == 0 for v in frem) and all(v == 0 for v in brem):
            if cmax < best[0]:
                best[0] = cmax
                best[1] = (list(fsched), list(bsched))
            return
        # work-conserving: idle jumps straight to the next enabling time
        actions, next_event = collect(t, frem, brem, phif)
        while not actions:
            t = next_event
            actions, next_event = collect(t, frem, brem, phif)
        if bound(t, frem, brem, phif, cmax) >= best[0]:
            return
        key = (frem, brem, phif)
        prev = seen.get(key)
        if prev is not None and prev <= t:
            return
        seen[key] = t

        for kind, k in actions:
            j = order[k]
            e = edges[j]
            if kind == "f":
                nf = list(frem)
                nf[k] -= 1
                nphi = list(phif)
                if nf[k] == 0:
                    nphi[k] = t + 1
                fsched.append((i, j, t))
                dfs(t + 1, tuple(nf), brem, tuple(nphi), cmax, fsched, bsched)
                fsched.pop()
            else:
                nb = list(brem)
                nb[k] -= 1
                nc = cmax
                if nb[k] == 0:
                    nc = max(cmax, t + 1 + e.r_prime)
                bsched.append((i, j, t))
                dfs(t + 1, frem, tuple(nb), phif, nc, fsched, bsched)
                bsched.pop()

    frem0 = tuple(edges[j].p for j in order)
    brem0 = tuple(edges[j].p_prime for j in order)
    phif0 = tuple(0 for _ in order)
    dfs(0, frem0, brem0, phif0, 0, [], [])
    return best[0] if best[1] is not None else None, best[1]


def brute_force_optimum(instance: ProblemInstance,
                        max_clients: int = _ORACLE_MAX_CLIENTS,
                        max_helpers: int = _ORACLE_MAX_HELPERS,
                        max_horizon: int = _ORACLE_MAX_HORIZON) -> SolveOutcome:
    """Provably optimal outcome of a tiny instance by exhaustive search.

    Enumerates every memory-feasible total assignment; helpers are
    independent once the assignment is fixed, so each helper's schedule is
    searched separately. Raises OracleCapError beyond the size caps and
    InfeasibleError when no memory-feasible assignment exists. Switching
    costs are out of scope here (the oracle predates them by design).
    """
    if len(instance.clients) > max_clients or len(instance.helpers) > max_helpers \
            or instance.horizon > max_horizon:
        raise OracleCapError(
            f"instance exceeds oracle caps ({len(instance.clients)} clients, "
            f"{len(instance.helpers)} helpers, horizon {instance.horizon})")
    if any(instance.switching_cost.get(i, 0) for i in instance.helpers):
        raise OracleCapError("oracle does not model switching costs")

    clients = sorted(instance.clients)
    options = {j: instance.helpers_of(j) for j in clients}
    for j, opts in options.items():
        if not opts:
            raise InfeasibleError(f"client {j} has no eligible helper")

    best = [None, None]  # makespan, (assignment map, fwd, bwd)
    helper_cache = {}

    def assignment_dfs(idx, amap, loads):
        if idx == len(clients):
            evaluate(dict(amap))
            return
        j = clients[idx]
        for i in options[j]:
            d = instance.memory_demand[j]
            if loads.get(i, 0.0) + d > instance.memory_capacity[i] + 1e-9:
                continue
            amap[j] = i
            loads[i] = loads.get(i, 0.0) + d
            assignment_dfs(idx + 1, amap, loads)
            del amap[j]
            loads[i] -= d

    def evaluate(amap):
        groups = {}
        for j, i in amap.items():
            groups.setdefault(i, []).append(j)
        cap = best[0] if best[0] is not None else instance.horizon + 1
        value = 0
        triples = []
        for i in sorted(groups):
            key = (i, tuple(sorted(groups[i])))
            if key in helper_cache:
                v, sched = helper_cache[key]
            else:
                v, sched = _helper_optimum(instance, i, groups[i], instance.horizon + 1)
                helper_cache[key] = (v, sched)
            if v is None:
                return
            value = max(value, v)
            if value >= cap:
                return
            triples.append(sched)
        if best[0] is None or value < best[0]:
            fwd = [t for s in triples for t in s[0]]
            bwd = [t for s in triples for t in s[1]]
            best[0] = value
            best[1] = (dict(amap), fwd, bwd)

    assignment_dfs(0, {}, {})
    if best[0] is None:
        raise InfeasibleError("no memory-feasible assignment")

    amap, fwd, bwd = best[1]
    assignment = Assignment(amap)
    schedule = Schedule(frozenset(fwd), frozenset(bwd))
    comp = completion_from_schedule(instance, assignment, schedule)
    assert comp.makespan == best[0]
    return SolveOutcome(
        assignment=assignment, schedule=schedule,
        phi_f=comp.phi_f, c_f=comp.c_f, phi=comp.phi, c=comp.c,
        makespan=comp.makespan,
        stats=SolveStats(method="brute_force", status="optimal", optimal=True,
                         lower_bound=float(best[0])))
