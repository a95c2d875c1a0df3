"""Optimal preemptive backward-pass scheduling on each helper.

Once the assignment and forward slots are fixed, each helper independently
schedules its clients' backward tasks. A task becomes available once the
client's forward result has made the round trip (forward completion plus
uplink and downlink latency) and, after its last backward slot, still needs
the client-side tail (gradient download plus first-part backward) before the
client finishes. Maximum completion is minimized exactly by a recursive block
decomposition: pack tasks first-come-first-served, split at idle gaps into
blocks, and inside each block run the task whose block-end finish plus tail
is smallest exactly in the slots the remaining tasks leave free.

Helpers' busy forward slots are handled by scheduling on the virtual timeline
of eligible (free) slots, which preserves order and completion comparisons.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass

from .model import (Assignment, IncompleteScheduleError, ProblemInstance,
                    Schedule, SchedulingError, SolveOutcome, SolveStats,
                    completion_from_schedule)
from .validate import validate


@dataclass(frozen=True)
class BwdTask:
    client: int
    release: int     # first slot the task may occupy
    processing: int  # helper slots needed
    tail: int        # client-side work after the last slot


@dataclass(frozen=True)
class BlockRecord:
    """One block of the decomposition, in absolute slot coordinates."""
    depth: int
    members: tuple       # client ids ordered by release (ties by id)
    start: int
    end: int             # one past the last busy slot
    last_scheduled: int  # client chosen to fill the block's leftover slots


class NotEnoughSlotsError(SchedulingError):
    """The eligible timeline cannot hold the tasks after their releases."""


def eligible_slots(instance: ProblemInstance, helper: int, fwd_slots) -> list[int]:
    """Slots of [0, horizon) where the helper is not doing forward work."""
    busy = {t for (i, _, t) in fwd_slots if i == helper}
    return [t for t in range(instance.horizon) if t not in busy]


def schedule_tasks(tasks: list[BwdTask], slots: list[int]) -> tuple[dict, list[BlockRecord]]:
    """Place tasks into the given eligible slots; minimize max finish + tail.

    Returns per-client slot lists and the block decomposition trace. Raises
    NotEnoughSlotsError when some task cannot fit after its release.
    """
    slots = sorted(slots)
    if len(set(slots)) != len(slots):
        raise ValueError("duplicate eligible slots")
    for k, task in enumerate(tasks):
        if task.processing <= 0:
            raise ValueError(f"task for client {task.client} has no work")
    if len({t.client for t in tasks}) != len(tasks):
        raise ValueError("duplicate client in task list")

    # virtual position of the first eligible slot at or after the release
    virt = {}
    for task in tasks:
        v = bisect_left(slots, task.release)
        if v + task.processing > len(slots):
            raise NotEnoughSlotsError(
                f"horizon exhausted: client {task.client} needs "
                f"{task.processing} slots from {task.release}, eligible "
                f"timeline has {len(slots) - v}")
        virt[task.client] = v
    jobs = sorted(((virt[t.client], t.client, t.processing) for t in tasks))
    tails = {t.client: t.tail for t in tasks}

    alloc: dict[int, list[int]] = {}
    records: list[BlockRecord] = []

    def fcfs(members, start_v):
        blocks = []
        cur, cur_start, t = [], 0, start_v
        for (v, cid, p) in members:
            s = max(t, v)
            if cur and s > t:
                blocks.append((cur, cur_start, t))
                cur = []
            if not cur:
                cur_start = s
            cur.append((v, cid, p))
            t = s + p
        if cur:
            blocks.append((cur, cur_start, t))
        return blocks

    def solve_block(members, s, e, depth):
        if e > len(slots):
            raise NotEnoughSlotsError(
                "horizon exhausted: block runs past the eligible timeline")
        if len(members) == 1:
            v, cid, p = members[0]
            alloc[cid] = list(range(s, e))
            records.append(BlockRecord(depth, (cid,),
                                       slots[s], slots[e - 1] + 1, cid))
            return
        end_abs = slots[e - 1] + 1
        pick = min(members, key=lambda m: (end_abs + tails[m[1]], m[1]))
        records.append(BlockRecord(depth, tuple(cid for _, cid, _ in members),
                                   slots[s], end_abs, pick[1]))
        rest = [m for m in members if m[1] != pick[1]]
        used = []
        for sub, ss, se in fcfs(rest, s):
            solve_block(sub, ss, se, depth + 1)
            used.extend(range(ss, se))
        free = sorted(set(range(s, e)) - set(used))
        # the leftover slots always start at or after the picked release
        assert len(free) == pick[2] and (not free or free[0] >= pick[0])
        alloc[pick[1]] = free

    for members, s, e in fcfs(jobs, 0):
        solve_block(members, s, e, 0)

    return ({cid: [slots[v] for v in vs] for cid, vs in alloc.items()}, records)


def schedule_tasks_exact(tasks: list[BwdTask], slots: list[int], horizon: int,
                         mu: float = 0.0, switch_offset: dict | None = None,
                         solver_config=None) -> tuple[dict, list[BlockRecord]]:
    """Place tasks into the eligible slots by solving a small ILP.

    Minimizes the largest finish + tail, plus mu per occupancy boundary when
    the helper charges switching delays; the block decomposition does not
    guarantee optimality in that regime. switch_offset carries each client's
    already-incurred forward boundary count so the maximum is taken over true
    completions. Returns the same shape as schedule_tasks, with no block
    trace.
    """
    from .ilp import Objective, _Builder
    from .model import InfeasibleError
    from .solver import solve

    slots = sorted(slots)
    if len(set(slots)) != len(slots):
        raise ValueError("duplicate eligible slots")
    for task in tasks:
        if task.processing <= 0:
            raise ValueError(f"task for client {task.client} has no work")
    if len({t.client for t in tasks}) != len(tasks):
        raise ValueError("duplicate client in task list")
    if not tasks:
        return ({}, [])
    for task in tasks:
        v = bisect_left(slots, task.release)
        if v + task.processing > len(slots):
            raise NotEnoughSlotsError(
                f"horizon exhausted: client {task.client} needs "
                f"{task.processing} slots from {task.release}, eligible "
                f"timeline has {len(slots) - v}")

    mu = float(mu)
    offs = switch_offset or {}
    slot_set = set(slots)
    phi_ub = slots[-1] + 1
    b = _Builder("bwd", {"horizon": horizon,
                         "clients": tuple(sorted(t.client for t in tasks))})
    zcols = {}
    for task in tasks:
        for t in slots:
            if t >= task.release:
                zcols[(task.client, t)] = b.var(("z", task.client, t),
                                                "binary", 0, 1)
    phi, c = {}, {}
    xi_ub = 0.0
    for task in tasks:
        j = task.client
        pen = mu * (offs.get(j, 0) + 2 * task.processing)
        phi[j] = b.var(("phi", j), "integer", 0, phi_ub)
        c[j] = b.var(("c", j), "integer", 0, phi_ub + task.tail + pen)
        xi_ub = max(xi_ub, phi_ub + task.tail + pen)
    xi = b.var(("xi",), "integer", 0, xi_ub)

    for t in slots:
        coeffs = [(zcols[(task.client, t)], 1.0) for task in tasks
                  if (task.client, t) in zcols]
        if len(coeffs) > 1:
            b.row(f"cap[{t}]", coeffs, "<=", 1.0)
    for task in tasks:
        j = task.client
        b.row(f"quota[{j}]",
              [(zcols[(j, t)], 1.0) for t in slots if (j, t) in zcols],
              "=", float(task.processing))
        for t in slots:
            if (j, t) in zcols:
                b.row(f"fin[{j},{t}]",
                      [(zcols[(j, t)], float(t + 1)), (phi[j], -1.0)],
                      "<=", 0.0)
        ctail = [(c[j], 1.0), (phi[j], -1.0)]
        if mu:
            for t in range(horizon - 1):
                has_l = t in slot_set and t >= task.release
                has_r = t + 1 in slot_set and t + 1 >= task.release
                if not (has_l or has_r):
                    continue
                if not (has_l and has_r):
                    # the absent side is never occupied, |0 - v| = v
                    ctail.append((zcols[(j, t if has_l else t + 1)], -mu))
                    continue
                swp = b.var(("swp", j, t), "integer", 0, 1)
                swm = b.var(("swm", j, t), "integer", 0, 1)
                b.row(f"sw[{j},{t}]",
                      [(zcols[(j, t)], 1.0), (zcols[(j, t + 1)], -1.0),
                       (swp, -1.0), (swm, 1.0)], "=", 0.0)
                ctail.append((swp, -mu))
                ctail.append((swm, -mu))
        b.row(f"ctail[{j}]", ctail, "=",
              float(task.tail) + mu * offs.get(j, 0))
        b.row(f"peak[{j}]", [(c[j], 1.0), (xi, -1.0)], "<=", 0.0)
    model = b.finish(Objective(coeffs=((xi, 1.0),)))

    res = solve(model, solver_config)
    if res.status == "infeasible":
        raise NotEnoughSlotsError(
            "horizon exhausted: backward tasks cannot fit the eligible timeline")
    if res.values is None:
        raise InfeasibleError(
            f"backward subproblem solver stopped ({res.status}) without a schedule")
    alloc = {task.client: sorted(t for t in slots
                                 if (task.client, t) in zcols
                                 and res.values[zcols[(task.client, t)]] > 0.5)
             for task in tasks}
    return (alloc, [])


@dataclass(frozen=True)
class BwdResult:
    bwd: frozenset   # (helper, client, slot) triples
    phi: dict        # backward finish per client
    c: dict          # completion per client
    blocks: dict     # helper -> list[BlockRecord]


def schedule_bwd(instance: ProblemInstance, assignment: Assignment,
                 fwd_slots, c_f: dict, exact_when_switching: bool = False,
                 solver_config=None) -> BwdResult:
    """Run the block decomposition on every helper.

    A client's backward task is released l' slots after its forward
    completion c_f: the client runs its own backward part and uploads the
    gradient, then the helper may start. The decomposition is optimal only
    for switch-free helpers; with exact_when_switching every helper charging
    a switching delay is routed through the ILP solver instead (and loses
    its block trace).
    """
    from .model import count_switches

    triples = []
    phi, c = {}, {}
    blocks: dict[int, list[BlockRecord]] = {}
    for i in sorted(instance.helpers):
        mine = sorted(assignment.clients_of(i))
        if not mine:
            blocks[i] = []
            continue
        tasks = []
        for j in mine:
            e = instance.edges[(i, j)]
            tasks.append(BwdTask(client=j, release=c_f[j] + e.l_prime,
                                 processing=e.p_prime, tail=e.r_prime))
        slots = eligible_slots(instance, i, fwd_slots)
        mu = instance.switching_cost.get(i, 0)
        if exact_when_switching and mu:
            offs = {j: count_switches(
                        sorted(t for (ii, jj, t) in fwd_slots
                               if ii == i and jj == j), instance.horizon)
                    for j in mine}
            alloc, recs = schedule_tasks_exact(
                tasks, slots, instance.horizon, mu=mu, switch_offset=offs,
                solver_config=solver_config)
        else:
            alloc, recs = schedule_tasks(tasks, slots)
        blocks[i] = recs
        for j in mine:
            e = instance.edges[(i, j)]
            triples.extend((i, j, t) for t in alloc[j])
            phi[j] = max(alloc[j]) + 1
            c[j] = phi[j] + e.r_prime
    return BwdResult(bwd=frozenset(triples), phi=phi, c=c, blocks=blocks)


def assemble_outcome(instance: ProblemInstance, assignment: Assignment,
                     fwd_slots, bwd_slots, method: str,
                     stats_extra: dict | None = None,
                     wall_clock_s: float = 0.0,
                     lower_bound: float | None = None,
                     iterations: int = 0) -> SolveOutcome:
    """Combine forward and backward slots into a validated outcome."""
    schedule = Schedule(fwd=frozenset(fwd_slots), bwd=frozenset(bwd_slots))
    comp = completion_from_schedule(instance, assignment, schedule)
    bad = validate(instance, assignment, schedule)
    if bad:
        raise IncompleteScheduleError(
            f"assembled schedule is invalid: {bad[0].tag}: {bad[0].message}")
    stats = SolveStats(method=method, status="feasible",
                       wall_clock_s=wall_clock_s, iterations=iterations,
                       optimal=False, lower_bound=lower_bound,
                       extra=stats_extra or {})
    return SolveOutcome(assignment=assignment, schedule=schedule,
                        phi_f=comp.phi_f, c_f=comp.c_f, phi=comp.phi, c=comp.c,
                        makespan=comp.makespan, stats=stats)
