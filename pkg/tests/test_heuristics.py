"""Greedy and baseline heuristics: assignments, placement, failure modes."""

import pytest

from oracles import random_toy
from splitsched.heuristics import balanced_greedy, baseline_random_fcfs
from splitsched.model import (EdgeTiming, InfeasibleError, ProblemInstance,
                              SchedulingError)
from splitsched.solver import SolverConfig, solve_exact
from splitsched.validate import validate


def _runs(slots):
    out = []
    for t in sorted(slots):
        if out and t == out[-1][1]:
            out[-1][1] = t + 1
        else:
            out.append([t, t + 1])
    return out


def test_balanced_loads(two_helper_instance):
    out = balanced_greedy(two_helper_instance)
    got = {i: len(out.assignment.clients_of(i)) for i in (0, 1)}
    assert got == {0: 2, 1: 1}
    assert out.assignment.by_client == {0: 0, 1: 1, 2: 0}
    assert validate(two_helper_instance, out.assignment, out.schedule) == []


def test_client_order_changes_membership(two_helper_instance):
    out = balanced_greedy(two_helper_instance, client_order=[2, 1, 0])
    assert out.assignment.by_client == {2: 0, 1: 1, 0: 0}
    with pytest.raises(ValueError, match="client_order"):
        balanced_greedy(two_helper_instance, client_order=[0, 1])


def test_memory_overrides_load_balance():
    # helper 0 is lighter but cannot hold the second client
    inst = ProblemInstance(
        clients=(0, 1), helpers=(0, 1),
        edges={(i, j): EdgeTiming(0, 1, 0, 0, 1, 0)
               for i in (0, 1) for j in (0, 1)},
        memory_demand={0: 2.0, 1: 2.0},
        memory_capacity={0: 2.0, 1: 4.0}, slot_length_ms=100.0)
    out = balanced_greedy(inst)
    assert out.assignment.by_client == {0: 0, 1: 1}
    inst2 = ProblemInstance(
        clients=(0, 1), helpers=(0,),
        edges={(0, j): EdgeTiming(0, 1, 0, 0, 1, 0) for j in (0, 1)},
        memory_demand={0: 2.0, 1: 2.0}, memory_capacity={0: 3.0},
        slot_length_ms=100.0)
    with pytest.raises(InfeasibleError, match="memory-feasible"):
        balanced_greedy(inst2)


def test_placement_is_nonpreemptive():
    for seed in (2, 9, 14, 33, 47):
        toy = random_toy(seed, max_clients=3, max_helpers=2, safe_tails=True)
        out = balanced_greedy(toy)
        for j in toy.clients:
            i = out.assignment.helper_of(j)
            for kind in ("fwd", "bwd"):
                assert len(_runs(out.schedule.slots(i, j, kind))) == 1, (seed, j)


def test_greedy_feasible_and_above_optimum():
    for seed in (1, 6, 11, 23, 38):
        toy = random_toy(seed, max_clients=3, max_helpers=2, safe_tails=True)
        out = balanced_greedy(toy)
        assert validate(toy, out.assignment, out.schedule) == []
        exact = solve_exact(toy, SolverConfig(backend="milp"))
        assert out.makespan >= exact.makespan, seed


def test_lone_client_long_downlink_exhausts_horizon():
    # backward arrival c_f + l + l' lands beyond every remaining window
    inst = ProblemInstance(
        clients=(0,), helpers=(0,),
        edges={(0, 0): EdgeTiming(0, 1, 2, 0, 1, 0)},
        memory_demand={0: 1.0}, memory_capacity={0: 2.0},
        slot_length_ms=100.0)
    with pytest.raises(SchedulingError, match="horizon exhausted"):
        balanced_greedy(inst)


def test_greedy_with_switching_cost_validates():
    inst = ProblemInstance(
        clients=(0, 1), helpers=(0,),
        edges={(0, 0): EdgeTiming(1, 2, 1, 1, 2, 2),
               (0, 1): EdgeTiming(1, 1, 1, 1, 1, 5)},
        memory_demand={0: 1.0, 1: 1.0}, memory_capacity={0: 4.0},
        slot_length_ms=100.0, switching_cost={0: 1})
    out = balanced_greedy(inst)
    assert validate(inst, out.assignment, out.schedule) == []
    # switch penalties price completions but never delay backward releases
    for j in (0, 1):
        e = inst.edges[(0, j)]
        xs = out.schedule.slots(0, j, "fwd")
        zs = out.schedule.slots(0, j, "bwd")
        assert min(zs) >= max(xs) + 1 + 2 * e.l + e.l_prime


def test_greedy_stats(single_edge_instance):
    out = balanced_greedy(single_edge_instance)
    assert out.stats.method == "balanced_greedy"
    assert not out.stats.optimal
    assert out.stats.status == "feasible"


def test_baseline_deterministic_per_seed(two_helper_instance):
    a = baseline_random_fcfs(two_helper_instance, seed=5)
    b = baseline_random_fcfs(two_helper_instance, seed=5)
    assert a.assignment.by_client == b.assignment.by_client
    assert a.schedule == b.schedule
    assert a.stats.extra == {"seed": 5}
    assert a.stats.method == "baseline_random_fcfs"


def test_baseline_seeds_explore(two_helper_instance):
    picks = {tuple(sorted(baseline_random_fcfs(two_helper_instance, seed=s)
                          .assignment.by_client.items()))
             for s in range(8)}
    assert len(picks) > 1


def test_baseline_validates(two_helper_instance):
    for s in range(4):
        out = baseline_random_fcfs(two_helper_instance, seed=s)
        assert validate(two_helper_instance, out.assignment, out.schedule) == []


def test_baseline_gives_up_after_dead_ends():
    inst = ProblemInstance(
        clients=(0, 1), helpers=(0,),
        edges={(0, j): EdgeTiming(0, 1, 0, 0, 1, 0) for j in (0, 1)},
        memory_demand={0: 2.0, 1: 2.0}, memory_capacity={0: 3.0},
        slot_length_ms=100.0)
    with pytest.raises(InfeasibleError, match="dead-ended"):
        baseline_random_fcfs(inst, seed=0, max_restarts=7)
