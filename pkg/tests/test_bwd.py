"""Backward scheduler: block decomposition, oracle parity, exact route."""

import pytest

from oracles import exhaustive_min_max_completion, random_bwd_tasks
from splitsched.bwd import (BwdTask, NotEnoughSlotsError, assemble_outcome,
                            eligible_slots, schedule_bwd, schedule_tasks,
                            schedule_tasks_exact)
from splitsched.model import (Assignment, EdgeTiming, IncompleteScheduleError,
                              ProblemInstance, Schedule, count_switches,
                              completion_from_schedule)
from splitsched.validate import validate


def _cost(alloc, tasks):
    return max(max(alloc[t.client]) + 1 + t.tail for t in tasks)


# ---------------------------------------------------------------------------
# the five-client single-helper regression fixture

FIVE_TASKS = [BwdTask(client=1, release=0, processing=2, tail=5),
              BwdTask(client=4, release=1, processing=2, tail=1),
              BwdTask(client=2, release=3, processing=2, tail=3),
              BwdTask(client=3, release=4, processing=2, tail=8),
              BwdTask(client=5, release=9, processing=1, tail=2)]


def test_five_client_blocks_and_makespan():
    alloc, recs = schedule_tasks(FIVE_TASKS, list(range(20)))
    assert _cost(alloc, FIVE_TASKS) == 14
    top = [r for r in recs if r.depth == 0]
    assert [(r.members, r.start, r.end) for r in top] == \
        [((1, 4, 2, 3), 0, 8), ((5,), 9, 10)]
    assert top[0].last_scheduled == 4  # smallest end + tail in the block
    inner = [r for r in recs if r.depth == 1 and len(r.members) > 1]
    assert [(r.members, r.start, r.end, r.last_scheduled) for r in inner] == \
        [((2, 3), 3, 7, 2)]


def test_five_client_allocation_details():
    alloc, _ = schedule_tasks(FIVE_TASKS, list(range(20)))
    assert {k: sorted(v) for k, v in alloc.items()} == {
        1: [0, 1], 2: [3, 6], 3: [4, 5], 4: [2, 7], 5: [9]}


def test_blocks_leave_no_internal_idle_slot():
    alloc, recs = schedule_tasks(FIVE_TASKS, list(range(20)))
    busy = {t for v in alloc.values() for t in v}
    for r in recs:
        if r.depth == 0:
            assert set(range(r.start, r.end)) <= busy


def test_single_task_contiguous_at_release():
    alloc, recs = schedule_tasks(
        [BwdTask(client=0, release=3, processing=4, tail=2)], list(range(12)))
    assert sorted(alloc[0]) == [3, 4, 5, 6]
    assert len(recs) == 1 and recs[0].depth == 0


# ---------------------------------------------------------------------------
# exhaustive optimality

def test_matches_exhaustive_optimum_on_random_sets():
    horizon = 20
    for seed in range(80):
        plain = random_bwd_tasks(seed, horizon=horizon)
        tasks = [BwdTask(*row) for row in plain]
        want = exhaustive_min_max_completion(plain, list(range(horizon)))
        if want is None:
            with pytest.raises(NotEnoughSlotsError):
                schedule_tasks(tasks, list(range(horizon)))
            continue
        alloc, _ = schedule_tasks(tasks, list(range(horizon)))
        assert _cost(alloc, tasks) == want, seed


def test_matches_exhaustive_optimum_with_holes():
    horizon = 20
    for seed in range(40):
        plain = random_bwd_tasks(seed, max_tasks=3, horizon=horizon)
        tasks = [BwdTask(*row) for row in plain]
        slots = [t for t in range(horizon) if (t * 7 + seed) % 3]
        want = exhaustive_min_max_completion(plain, slots)
        if want is None:
            with pytest.raises(NotEnoughSlotsError):
                schedule_tasks(tasks, slots)
            continue
        alloc, _ = schedule_tasks(tasks, slots)
        assert _cost(alloc, tasks) == want, seed


# ---------------------------------------------------------------------------
# input validation and exhaustion

def test_release_past_timeline_exhausts():
    with pytest.raises(NotEnoughSlotsError, match="horizon exhausted"):
        schedule_tasks([BwdTask(client=0, release=10, processing=1, tail=0)],
                       list(range(10)))


def test_too_much_work_exhausts():
    with pytest.raises(NotEnoughSlotsError, match="horizon exhausted"):
        schedule_tasks([BwdTask(client=0, release=0, processing=5, tail=0),
                        BwdTask(client=1, release=0, processing=5, tail=0)],
                       list(range(8)))


def test_rejects_bad_inputs():
    with pytest.raises(ValueError, match="duplicate eligible"):
        schedule_tasks([BwdTask(0, 0, 1, 0)], [1, 1, 2])
    with pytest.raises(ValueError, match="no work"):
        schedule_tasks([BwdTask(0, 0, 0, 0)], [0, 1])
    with pytest.raises(ValueError, match="duplicate client"):
        schedule_tasks([BwdTask(0, 0, 1, 0), BwdTask(0, 1, 1, 0)], [0, 1, 2])


def test_eligible_slots_skips_forward_work(single_edge_instance):
    fwd = {(0, 0, 2), (0, 0, 3), (0, 0, 4), (1, 0, 5)}
    got = eligible_slots(single_edge_instance, 0, fwd)
    assert got == [0, 1, 5, 6, 7, 8, 9]  # other helpers' slots don't block


# ---------------------------------------------------------------------------
# ILP route for priced switches

def test_exact_route_waits_for_contiguous_window():
    # FCFS fragments the task across holes; waiting two slots saves a boundary
    task = [BwdTask(client=0, release=3, processing=2, tail=1)]
    slots = [0, 2, 4, 7, 8, 9]
    blk, _ = schedule_tasks(task, slots)
    assert sorted(blk[0]) == [4, 7]
    ex, recs = schedule_tasks_exact(task, slots, 12, mu=1.0,
                                    switch_offset={0: 1})
    assert sorted(ex[0]) == [7, 8]
    assert recs == []

    def cost(alloc):
        ts = sorted(alloc[0])
        return ts[-1] + 1 + 1 + 1 * (1 + count_switches(ts, 12))

    assert cost(blk) == 14
    assert cost(ex) == 13


def test_exact_route_agrees_with_blocks_when_free():
    horizon = 20
    for seed in range(30):
        tasks = [BwdTask(*row)
                 for row in random_bwd_tasks(seed, max_tasks=4, horizon=horizon)]
        try:
            alloc, _ = schedule_tasks(tasks, list(range(horizon)))
        except NotEnoughSlotsError:
            continue
        ex, _ = schedule_tasks_exact(tasks, list(range(horizon)), horizon)
        assert _cost(ex, tasks) == _cost(alloc, tasks), seed


def test_exact_route_exhaustion_and_validation():
    with pytest.raises(NotEnoughSlotsError, match="horizon exhausted"):
        schedule_tasks_exact([BwdTask(0, 9, 2, 0)], list(range(10)), 10)
    with pytest.raises(ValueError, match="duplicate client"):
        schedule_tasks_exact([BwdTask(0, 0, 1, 0), BwdTask(0, 1, 1, 0)],
                             [0, 1, 2], 5)


def test_schedule_bwd_exact_flag_end_to_end():
    inst = ProblemInstance(
        clients=(0, 1), helpers=(0,),
        edges={(0, 0): EdgeTiming(1, 2, 1, 1, 2, 0),
               (0, 1): EdgeTiming(1, 1, 1, 1, 1, 5)},
        memory_demand={0: 1.0, 1: 1.0}, memory_capacity={0: 4.0},
        slot_length_ms=100.0, switching_cost={0: 1})
    asg = Assignment(by_client={0: 0, 1: 0})
    fwd = frozenset({(0, 0, 1), (0, 0, 2), (0, 1, 3)})
    comp = completion_from_schedule(inst, asg, Schedule(fwd=fwd, bwd=frozenset()),
                                    require_bwd=False)
    plain = schedule_bwd(inst, asg, fwd, comp.c_f)
    exact = schedule_bwd(inst, asg, fwd, comp.c_f, exact_when_switching=True)
    for res in (plain, exact):
        sched = Schedule(fwd=fwd, bwd=res.bwd)
        assert validate(inst, asg, sched) == []
    span = lambda res: completion_from_schedule(
        inst, asg, Schedule(fwd=fwd, bwd=res.bwd)).makespan
    assert span(exact) <= span(plain)
    assert exact.blocks[0] == []


# ---------------------------------------------------------------------------
# per-helper independence and assembly

def test_helpers_schedule_independently(two_helper_instance):
    inst = two_helper_instance
    asg = Assignment(by_client={0: 0, 1: 1, 2: 0})
    fwd = frozenset({(0, 0, 0), (1, 1, 1), (0, 2, 1), (0, 2, 2)})
    c_f = completion_from_schedule(inst, asg, Schedule(fwd=fwd, bwd=frozenset()),
                                   require_bwd=False).c_f
    both = schedule_bwd(inst, asg, fwd, c_f)
    for keep in (0, 1):
        mine = [j for j, i in asg.by_client.items() if i == keep]
        solo_asg = Assignment(by_client={j: keep for j in mine})
        solo_fwd = frozenset(t for t in fwd if t[0] == keep)
        solo = schedule_bwd(inst, solo_asg, solo_fwd,
                            {j: c_f[j] for j in mine})
        assert {t for t in both.bwd if t[0] == keep} == set(solo.bwd)


def test_assemble_outcome_validates_and_reports(single_edge_instance):
    inst = single_edge_instance
    asg = Assignment(by_client={0: 0})
    fwd = {(0, 0, 2), (0, 0, 3), (0, 0, 4)}
    c_f = completion_from_schedule(inst, asg, Schedule(fwd=frozenset(fwd),
                                                       bwd=frozenset()),
                                   require_bwd=False).c_f
    back = schedule_bwd(inst, asg, fwd, c_f)
    out = assemble_outcome(inst, asg, fwd, back.bwd, method="exact_bwd",
                           stats_extra={"tag": 1}, lower_bound=9.0)
    # bwd released at c_f + l' = 8, finishing the closed-form chain in 10
    assert out.makespan == 10
    assert out.stats.method == "exact_bwd"
    assert out.stats.extra["tag"] == 1
    assert out.stats.lower_bound == 9.0


def test_assemble_outcome_rejects_broken_parts(single_edge_instance):
    inst = single_edge_instance
    asg = Assignment(by_client={0: 0})
    fwd = {(0, 0, 2), (0, 0, 3), (0, 0, 4)}
    with pytest.raises(IncompleteScheduleError, match="invalid"):
        assemble_outcome(inst, asg, fwd, {(0, 0, 5)}, method="exact_bwd")
