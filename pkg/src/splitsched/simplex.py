"""Dense bounded-variable primal simplex, two phases.

Solves  min c.x  s.t.  A x (<=,>=,=) b,  lower <= x <= upper.

Revised simplex with an explicit basis inverse, Dantzig pricing with a Bland
fallback under degeneracy, bound flips for nonbasic variables hitting their
opposite bound, and periodic refactorization. Dense linear algebra keeps the
implementation small; it is intended for models up to a few thousand rows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_AT_LB, _AT_UB, _BASIC = 0, 1, 2


@dataclass
class LpResult:
    status: str  # "optimal" | "infeasible" | "unbounded" | "iteration_limit"
    x: np.ndarray | None
    objective: float | None
    iterations: int


def solve_lp(c, A, relations, b, lower, upper, tol: float = 1e-7,
             max_iterations: int | None = None) -> LpResult:
    c = np.asarray(c, dtype=float)
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        A = np.zeros((0, c.size))
    if A.ndim != 2:
        raise ValueError("A must be a matrix")
    m, n = A.shape
    relations = ["=" if r in ("=", "==") else r for r in relations]
    if any(r not in ("<=", ">=", "=") for r in relations):
        raise ValueError("relations must be <=, >= or ==")
    b = np.asarray(b, dtype=float)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if np.any(lower > upper + 1e-12):
        return LpResult("infeasible", None, None, 0)
    if np.any(np.isinf(lower) & np.isinf(upper)):
        raise ValueError("free variables are not supported")

    slack_rows = [k for k in range(m) if relations[k] != "="]
    ns = len(slack_rows)
    N = n + ns + m  # structurals, slacks, artificials
    full = np.zeros((m, N))
    full[:, :n] = A
    for idx, k in enumerate(slack_rows):
        full[k, n + idx] = 1.0 if relations[k] == "<=" else -1.0
    lb = np.concatenate([lower, np.zeros(ns), np.zeros(m)])
    ub = np.concatenate([upper, np.full(ns, np.inf), np.full(m, np.inf)])

    # nonbasic start point at finite bounds
    stat = np.full(N, _AT_LB, dtype=np.int8)
    stat[np.isinf(lb)] = _AT_UB
    val = np.where(stat == _AT_LB, lb, ub)
    resid = b - full[:, :n + ns] @ val[:n + ns]
    art = np.arange(n + ns, N)
    for k in range(m):
        full[k, n + ns + k] = 1.0 if resid[k] >= 0 else -1.0
    stat[art] = _BASIC
    basis = list(art)
    # each artificial column is +-1, so the starting basis inverse is the
    # diagonal of those signs (not the identity)
    binv = np.diag(np.where(resid >= 0, 1.0, -1.0))
    xb = np.abs(resid)
    it_count = 0
    if max_iterations is None:
        max_iterations = 2000 + 60 * (m + N)

    def recompute():
        nonlocal binv, xb
        binv = np.linalg.inv(full[:, basis])
        nb_val = np.where(stat == _AT_LB, lb, np.where(np.isinf(ub), 0.0, ub))
        nb_val[basis] = 0.0
        xb = binv @ (b - full @ nb_val)

    def run_phase(cvec):
        nonlocal it_count, binv, xb
        bland_left = 0
        stall = 0
        since_factor = 0
        while True:
            if it_count >= max_iterations:
                return "iteration_limit"
            it_count += 1
            since_factor += 1
            if since_factor >= 120:
                recompute()
                since_factor = 0
            y = cvec[basis] @ binv
            d = cvec - y @ full
            enter = -1
            best = tol
            if bland_left > 0:
                for jcol in range(N):
                    if stat[jcol] == _AT_LB and d[jcol] < -tol:
                        enter, sigma = jcol, 1.0
                        break
                    if stat[jcol] == _AT_UB and d[jcol] > tol:
                        enter, sigma = jcol, -1.0
                        break
            else:
                lb_mask = (stat == _AT_LB) & (d < -tol)
                ub_mask = (stat == _AT_UB) & (d > tol)
                score = np.where(lb_mask | ub_mask, np.abs(d), 0.0)
                jcol = int(np.argmax(score))
                if score[jcol] > best:
                    enter = jcol
                    sigma = 1.0 if lb_mask[jcol] else -1.0
            if enter < 0:
                return "optimal"
            w = binv @ full[:, enter]
            # x_B moves by -sigma*theta*w; entering moves by sigma*theta
            theta = ub[enter] - lb[enter]
            leave_pos = -1
            for k in range(m):
                g = sigma * w[k]
                if g > 1e-9:
                    room = (xb[k] - lb[basis[k]]) / g
                elif g < -1e-9:
                    room = (ub[basis[k]] - xb[k]) / (-g)
                else:
                    continue
                if room < theta - 1e-10 or (leave_pos >= 0 and abs(room - theta) <= 1e-10
                                            and abs(w[k]) > abs(w[leave_pos])):
                    theta = room
                    leave_pos = k
            if np.isinf(theta):
                return "unbounded"
            theta = max(theta, 0.0)
            if theta <= 1e-10:
                stall += 1
                if stall > 40 and bland_left == 0:
                    bland_left = 2000
            else:
                stall = 0
                if bland_left > 0:
                    bland_left -= 1
            if leave_pos < 0:
                # entering variable runs to its other bound
                xb -= sigma * theta * w
                stat[enter] = _AT_UB if stat[enter] == _AT_LB else _AT_LB
                continue
            out = basis[leave_pos]
            xb -= sigma * theta * w
            enter_val = (lb[enter] if stat[enter] == _AT_LB else ub[enter]) + sigma * theta
            g = sigma * w[leave_pos]
            stat[out] = _AT_LB if g > 0 else _AT_UB
            if np.isinf(ub[out]) and stat[out] == _AT_UB:
                stat[out] = _AT_LB  # numerically pinned; value irrelevant at 0 room
            stat[enter] = _BASIC
            basis[leave_pos] = enter
            piv = w[leave_pos]
            if abs(piv) < 1e-11:
                recompute()
                continue
            binv[leave_pos, :] /= piv
            for k in range(m):
                if k != leave_pos and abs(w[k]) > 1e-13:
                    binv[k, :] -= w[k] * binv[leave_pos, :]
            xb[leave_pos] = enter_val

    c1 = np.zeros(N)
    c1[art] = 1.0
    status = run_phase(c1)
    if status == "iteration_limit":
        return LpResult("iteration_limit", None, None, it_count)
    recompute()
    if float(c1[basis] @ xb) > 1e-6:
        return LpResult("infeasible", None, None, it_count)

    # pin artificials at zero; pivot basic ones out where possible
    for k in range(m):
        if basis[k] >= n + ns:
            row = binv[k] @ full[:, :n + ns]
            cand = np.flatnonzero(np.abs(row) > 1e-7)
            cand = [jc for jc in cand if stat[jc] != _BASIC]
            if cand:
                jc = int(cand[0])
                w = binv @ full[:, jc]
                piv = w[k]
                stat[basis[k]] = _AT_LB
                stat[jc] = _BASIC
                basis[k] = jc
                binv[k, :] /= piv
                for r in range(m):
                    if r != k and abs(w[r]) > 1e-13:
                        binv[r, :] -= w[r] * binv[k, :]
    ub[art] = 0.0
    recompute()

    c2 = np.concatenate([c, np.zeros(ns + m)])
    status = run_phase(c2)
    if status != "optimal":
        return LpResult(status, None, None, it_count)
    recompute()
    x = np.where(stat == _AT_LB, lb, np.where(np.isinf(ub), 0.0, ub))
    x[basis] = xb
    xs = x[:n].copy()
    return LpResult("optimal", xs, float(c @ xs), it_count)
