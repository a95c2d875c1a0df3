import random

import numpy as np
import pytest
from scipy.optimize import linprog

from splitsched.simplex import solve_lp


def _random_feasible_lp(seed):
    """Bounded LP with a known interior-ish feasible point."""
    rng = random.Random(seed)
    n = rng.randint(2, 6)
    m = rng.randint(1, 5)
    lower = [rng.choice([0.0, -2.0]) for _ in range(n)]
    upper = [lo + rng.randint(1, 8) for lo in lower]
    x0 = [rng.uniform(lo, up) for lo, up in zip(lower, upper)]
    A, rel, b = [], [], []
    for _ in range(m):
        row = [rng.randint(-3, 3) for _ in range(n)]
        val = sum(a * x for a, x in zip(row, x0))
        kind = rng.choice(["<=", ">=", "=="])
        pad = rng.uniform(0.0, 2.0)
        A.append(row)
        rel.append(kind)
        b.append(val + pad if kind == "<=" else val - pad if kind == ">=" else val)
    c = [rng.randint(-4, 4) for _ in range(n)]
    return c, A, rel, b, lower, upper


def _scipy_value(c, A, rel, b, lower, upper):
    A_ub, b_ub, A_eq, b_eq = [], [], [], []
    for row, k, rhs in zip(A, rel, b):
        if k == "<=":
            A_ub.append(row); b_ub.append(rhs)
        elif k == ">=":
            A_ub.append([-a for a in row]); b_ub.append(-rhs)
        else:
            A_eq.append(row); b_eq.append(rhs)
    res = linprog(c, A_ub=A_ub or None, b_ub=b_ub or None,
                  A_eq=A_eq or None, b_eq=b_eq or None,
                  bounds=list(zip(lower, upper)), method="highs")
    return res


@pytest.mark.parametrize("seed", range(60))
def test_matches_reference_solver_on_random_lps(seed):
    c, A, rel, b, lower, upper = _random_feasible_lp(seed)
    mine = solve_lp(c, A, rel, b, lower, upper)
    ref = _scipy_value(c, A, rel, b, lower, upper)
    assert ref.status == 0
    assert mine.status == "optimal"
    assert mine.objective == pytest.approx(ref.fun, abs=1e-6)
    # the reported point must itself be feasible and achieve the objective
    x = np.asarray(mine.x)
    assert np.all(x >= np.asarray(lower) - 1e-7)
    assert np.all(x <= np.asarray(upper) + 1e-7)
    for row, k, rhs in zip(A, rel, b):
        lhs = float(np.dot(row, x))
        if k == "<=":
            assert lhs <= rhs + 1e-6
        elif k == ">=":
            assert lhs >= rhs - 1e-6
        else:
            assert lhs == pytest.approx(rhs, abs=1e-6)
    assert float(np.dot(c, x)) == pytest.approx(mine.objective, abs=1e-6)


def test_detects_infeasible():
    res = solve_lp([1.0], [[1.0]], ["<="], [-1.0], [0.0], [10.0])
    assert res.status == "infeasible"


def test_detects_unbounded():
    res = solve_lp([-1.0], [], [], [], [0.0], [float("inf")])
    assert res.status == "unbounded"


def test_iteration_limit_status():
    c, A, rel, b, lower, upper = _random_feasible_lp(7)
    res = solve_lp(c, A, rel, b, lower, upper, max_iterations=1)
    assert res.status in ("iteration_limit", "optimal")


def test_equality_only_system():
    # x + y == 4, x - y == 2 -> (3, 1); minimize x
    res = solve_lp([1.0, 0.0], [[1, 1], [1, -1]], ["==", "=="], [4.0, 2.0],
                   [0.0, 0.0], [10.0, 10.0])
    assert res.status == "optimal"
    assert res.x[0] == pytest.approx(3.0, abs=1e-8)
    assert res.x[1] == pytest.approx(1.0, abs=1e-8)


def test_degenerate_cycling_guard():
    # classic cycling construction for the steepest-decrease pivot rule;
    # Bland fallback must still terminate at the optimum
    c = [-0.75, 150.0, -0.02, 6.0]
    A = [[0.25, -60.0, -1.0 / 25.0, 9.0],
         [0.5, -90.0, -1.0 / 50.0, 3.0],
         [0.0, 0.0, 1.0, 0.0]]
    rel = ["<=", "<=", "<="]
    b = [0.0, 0.0, 1.0]
    lower = [0.0] * 4
    upper = [float("inf")] * 4
    mine = solve_lp(c, A, rel, b, lower, upper)
    ref = _scipy_value(c, A, rel, b, lower, upper)
    assert mine.status == "optimal"
    assert mine.objective == pytest.approx(ref.fun, abs=1e-9)


def test_negative_lower_bounds():
    # minimize x + y with x >= -3, y >= -1, x + y >= -2
    res = solve_lp([1.0, 1.0], [[1, 1]], [">="], [-2.0], [-3.0, -1.0],
                   [5.0, 5.0])
    assert res.status == "optimal"
    assert res.objective == pytest.approx(-2.0, abs=1e-8)
