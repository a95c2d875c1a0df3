"""The reference oracles are themselves pinned to hand-worked cases."""

from oracles import exhaustive_min_max_completion


def test_single_task_by_hand():
    # release 3, two slots of work, tail 4: finishes slot 4, done at 5, +4
    assert exhaustive_min_max_completion([(0, 3, 2, 4)], range(10)) == 9


def test_tail_aware_ordering():
    # the big-tail unit task must go first: max(1+5, 2+0) = 6
    tasks = [(0, 0, 1, 0), (1, 0, 1, 5)]
    assert exhaustive_min_max_completion(tasks, range(4)) == 6


def test_infeasible_returns_none():
    assert exhaustive_min_max_completion([(0, 0, 3, 0)], range(2)) is None


def test_release_beyond_timeline_is_infeasible():
    assert exhaustive_min_max_completion([(0, 9, 1, 0)], range(5)) is None


def test_holes_in_timeline():
    # slots {0, 5} only: two units finish in slot 5, completion 6, +1 tail
    assert exhaustive_min_max_completion([(0, 0, 2, 1)], [0, 5]) == 7


def test_interleaved_optimum():
    # the big-tail task runs at its release inside the other task's window:
    # 0 at {0,2}, 1 at {1} gives max(3, 2+9) = 11; running 0 back to back
    # without yielding slot 1 would give 12
    tasks = [(0, 0, 2, 0), (1, 1, 1, 9)]
    assert exhaustive_min_max_completion(tasks, range(4)) == 11
