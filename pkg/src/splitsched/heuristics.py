"""Assignment heuristics with a shared FCFS slot placer.

balanced_greedy assigns clients to the least-loaded memory-feasible helper
(load = number of clients) and schedules each helper's queue first-come
first-served. baseline_random_fcfs draws assignments uniformly at random
among memory-feasible helpers, restarting on dead ends, and uses the same
placer; it is the reference point everything else is measured against.
"""

from __future__ import annotations

import heapq
import random
import time
from bisect import bisect_left

from .model import (Assignment, InfeasibleError, ProblemInstance,
                    SchedulingError)
from .bwd import assemble_outcome


def _fcfs_place(instance: ProblemInstance, assignment: Assignment):
    """Event-ordered first-come-first-served placement per helper.

    Tasks queue by (arrival, forward-before-backward, client id). Placement is
    non-preemptive: a task takes the earliest run of consecutive free slots
    starting at or after its arrival. Backward tasks arrive a full client
    round trip after the forward completion (c_f + l + l').
    """
    T = instance.horizon
    fwd, bwd = [], []
    for i in sorted(instance.helpers):
        mine = sorted(assignment.clients_of(i))
        if not mine:
            continue
        free = list(range(T))
        events = []
        for j in mine:
            heapq.heappush(events, (instance.edges[(i, j)].r, 0, j))
        while events:
            arrival, kind, j = heapq.heappop(events)
            e = instance.edges[(i, j)]
            need = e.p if kind == 0 else e.p_prime
            # earliest window of `need` consecutive free slots, not before arrival
            lo = bisect_left(free, arrival)
            while lo + need <= len(free) and free[lo + need - 1] != free[lo] + need - 1:
                lo += 1
            if lo + need > len(free):
                raise SchedulingError(
                    f"horizon exhausted: helper {i} has no free window of "
                    f"{need} slots for client {j} after slot {arrival}")
            taken = free[lo:lo + need]
            del free[lo:lo + need]
            if kind == 0:
                fwd.extend((i, j, t) for t in taken)
                # client forward completion, then its backward leg and upload
                c_f = taken[-1] + 1 + e.l
                heapq.heappush(events, (c_f + e.l_prime, 1, j))
            else:
                bwd.extend((i, j, t) for t in taken)
    return frozenset(fwd), frozenset(bwd)


def balanced_greedy(instance: ProblemInstance, client_order=None,
                    method: str = "balanced_greedy"):
    """Least-loaded feasible helper per client, then FCFS slots."""
    start = time.monotonic()
    order = list(client_order) if client_order is not None else sorted(instance.clients)
    if set(order) != set(instance.clients):
        raise ValueError("client_order must cover exactly the clients")
    load = {i: 0 for i in instance.helpers}
    used = {i: 0.0 for i in instance.helpers}
    by_client = {}
    for j in order:
        feasible = [i for i in sorted(instance.helpers_of(j))
                    if used[i] + instance.memory_demand[j]
                    <= instance.memory_capacity[i] + 1e-9]
        if not feasible:
            raise InfeasibleError(f"no memory-feasible helper left for client {j}")
        pick = min(feasible, key=lambda i: (load[i], i))
        by_client[j] = pick
        load[pick] += 1
        used[pick] += instance.memory_demand[j]
    assignment = Assignment(by_client)
    fwd, bwd = _fcfs_place(instance, assignment)
    return assemble_outcome(instance, assignment, fwd, bwd, method=method,
                            wall_clock_s=time.monotonic() - start)


def baseline_random_fcfs(instance: ProblemInstance, seed: int = 0,
                         max_restarts: int = 100):
    """Uniform random memory-feasible assignment, FCFS slots."""
    start = time.monotonic()
    rng = random.Random(seed)
    clients = sorted(instance.clients)
    for _ in range(max_restarts):
        order = clients[:]
        rng.shuffle(order)
        used = {i: 0.0 for i in instance.helpers}
        by_client = {}
        ok = True
        for j in order:
            feasible = [i for i in sorted(instance.helpers_of(j))
                        if used[i] + instance.memory_demand[j]
                        <= instance.memory_capacity[i] + 1e-9]
            if not feasible:
                ok = False
                break
            pick = rng.choice(feasible)
            by_client[j] = pick
            used[pick] += instance.memory_demand[j]
        if ok:
            assignment = Assignment(by_client)
            fwd, bwd = _fcfs_place(instance, assignment)
            return assemble_outcome(instance, assignment, fwd, bwd,
                                    method="baseline_random_fcfs",
                                    stats_extra={"seed": seed},
                                    wall_clock_s=time.monotonic() - start)
    raise InfeasibleError(
        f"random assignment dead-ended {max_restarts} times in a row")
