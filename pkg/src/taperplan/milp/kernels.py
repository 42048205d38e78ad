"""Pivoting kernels for the bounded-variable primal simplex.

Both implementations work on the compact dense tableau ``T = B^-1 N``, where
``N`` holds the nonbasic columns of ``[A | -I]`` in the order given by
``nonbasic``. They run until optimality, infeasibility, unboundedness, or
``max_pivots`` pivots (after which the driver reinverts the basis and calls
again). They follow the same rules, so they visit the same vertices up to
floating-point ties:

* Dantzig pricing (largest |reduced cost|, lowest variable index on ties),
  switching to Bland's rule after ``bland_after`` consecutive degenerate
  pivots;
* phase 1 minimises the sum of bound infeasibilities, stopping at the first
  breakpoint;
* two-pass Harris ratio test in Dantzig mode, exact smallest-index ratio test
  in Bland mode.

Status codes returned: 0 optimal, 1 infeasible, 2 unbounded, 5 pivot budget
exhausted, 6 numerical trouble.
"""

import numpy as np

from .._accel import njit

AT_LOWER = 1
AT_UPPER = 2
FREE = 3
BASIC = 0

OPTIMAL = 0
INFEASIBLE = 1
UNBOUNDED = 2
PIVOT_BUDGET = 5
NUMERICAL = 6

_DEGEN_STEP = 1e-12


def _simplex_loops(T, c, lo, hi, x, basis, nonbasic, status, max_pivots, ptol, dtol, pivtol, bland_after):
    m, n = T.shape
    cb = np.zeros(m)
    d = np.zeros(n)
    alpha = np.zeros(m)
    pivots = 0
    streak = 0
    phase = 0
    while True:
        # phase bookkeeping
        infeasible = False
        for i in range(m):
            j = basis[i]
            if x[j] < lo[j] - ptol:
                cb[i] = -1.0
                infeasible = True
            elif x[j] > hi[j] + ptol:
                cb[i] = 1.0
                infeasible = True
            else:
                cb[i] = 0.0
        if infeasible:
            phase = 1
            for k in range(n):
                d[k] = 0.0
            for i in range(m):
                if cb[i] != 0.0:
                    w = cb[i]
                    for k in range(n):
                        d[k] -= w * T[i, k]
        elif phase != 2:
            phase = 2
            for k in range(n):
                d[k] = c[nonbasic[k]]
            for i in range(m):
                w = c[basis[i]]
                if w != 0.0:
                    for k in range(n):
                        d[k] -= w * T[i, k]

        bland = streak >= bland_after
        q = -1
        best = 0.0
        for k in range(n):
            j = nonbasic[k]
            st = status[j]
            dk = d[k]
            ok = False
            if st == AT_LOWER:
                ok = dk < -dtol and hi[j] > lo[j]
            elif st == AT_UPPER:
                ok = dk > dtol and hi[j] > lo[j]
            elif st == FREE:
                ok = dk < -dtol or dk > dtol
            if ok:
                if bland:
                    if q < 0 or j < nonbasic[q]:
                        q = k
                else:
                    a = abs(dk)
                    if a > best or (a == best and j < nonbasic[q]):
                        best = a
                        q = k
        if q < 0:
            if phase == 1:
                return INFEASIBLE, pivots
            return OPTIMAL, pivots
        jq = nonbasic[q]
        direction = 1.0 if d[q] < 0.0 else -1.0
        for i in range(m):
            alpha[i] = T[i, q] * direction

        # ratio test; basic i moves by -alpha[i] * theta
        r = -1
        r_side = 0
        theta = np.inf
        if bland:
            best_var = -1
            for i in range(m):
                a = alpha[i]
                j = basis[i]
                xv = x[j]
                t = np.inf
                side = 0
                if a > pivtol:
                    if phase == 1 and xv > hi[j] + ptol:
                        t = (xv - hi[j]) / a
                        side = AT_UPPER
                    elif xv >= lo[j] - ptol and lo[j] > -np.inf:
                        t = max(xv - lo[j], 0.0) / a
                        side = AT_LOWER
                elif a < -pivtol:
                    if phase == 1 and xv < lo[j] - ptol:
                        t = (lo[j] - xv) / -a
                        side = AT_LOWER
                    elif xv <= hi[j] + ptol and hi[j] < np.inf:
                        t = max(hi[j] - xv, 0.0) / -a
                        side = AT_UPPER
                if side != 0:
                    if t < theta - _DEGEN_STEP or (t <= theta + _DEGEN_STEP and (best_var < 0 or j < best_var)):
                        theta = t
                        r = i
                        r_side = side
                        best_var = j
        else:
            theta_max = np.inf
            for i in range(m):
                a = alpha[i]
                j = basis[i]
                xv = x[j]
                if a > pivtol:
                    if phase == 1 and xv > hi[j] + ptol:
                        t = (xv - hi[j] + ptol) / a
                    elif xv >= lo[j] - ptol and lo[j] > -np.inf:
                        t = (xv - lo[j] + ptol) / a
                    else:
                        continue
                elif a < -pivtol:
                    if phase == 1 and xv < lo[j] - ptol:
                        t = (lo[j] - xv + ptol) / -a
                    elif xv <= hi[j] + ptol and hi[j] < np.inf:
                        t = (hi[j] - xv + ptol) / -a
                    else:
                        continue
                else:
                    continue
                if t < theta_max:
                    theta_max = t
            if theta_max < np.inf:
                best_piv = 0.0
                for i in range(m):
                    a = alpha[i]
                    j = basis[i]
                    xv = x[j]
                    side = 0
                    t = np.inf
                    if a > pivtol:
                        if phase == 1 and xv > hi[j] + ptol:
                            t = (xv - hi[j]) / a
                            side = AT_UPPER
                        elif xv >= lo[j] - ptol and lo[j] > -np.inf:
                            t = max(xv - lo[j], 0.0) / a
                            side = AT_LOWER
                    elif a < -pivtol:
                        if phase == 1 and xv < lo[j] - ptol:
                            t = (lo[j] - xv) / -a
                            side = AT_LOWER
                        elif xv <= hi[j] + ptol and hi[j] < np.inf:
                            t = max(hi[j] - xv, 0.0) / -a
                            side = AT_UPPER
                    if side != 0 and t <= theta_max and abs(a) > best_piv:
                        best_piv = abs(a)
                        theta = t
                        r = i
                        r_side = side

        span = hi[jq] - lo[jq]
        if status[jq] == FREE:
            span = np.inf
        if span <= theta:
            theta = span
            r = -1
        if theta == np.inf:
            if phase == 1:
                return NUMERICAL, pivots
            return UNBOUNDED, pivots

        # primal update
        if theta > 0.0:
            for i in range(m):
                j = basis[i]
                x[j] -= alpha[i] * theta
        if r < 0:
            if direction > 0:
                x[jq] = hi[jq]
                status[jq] = AT_UPPER
            else:
                x[jq] = lo[jq]
                status[jq] = AT_LOWER
        else:
            x[jq] += direction * theta
            leave = basis[r]
            if r_side == AT_LOWER:
                x[leave] = lo[leave]
            else:
                x[leave] = hi[leave]
            status[leave] = r_side
            status[jq] = BASIC
            basis[r] = jq
            nonbasic[q] = leave
            piv = T[r, q]
            inv = 1.0 / piv
            for k in range(n):
                T[r, k] *= inv
            T[r, q] = inv
            for i in range(m):
                if i != r:
                    f = T[i, q]
                    if f != 0.0:
                        for k in range(n):
                            T[i, k] -= f * T[r, k]
                        T[i, q] = -f * inv
            if phase == 2:
                dq = d[q]
                for k in range(n):
                    d[k] -= dq * T[r, k]
                d[q] = -dq * inv
            pivots += 1

        if theta <= _DEGEN_STEP:
            streak += 1
        else:
            streak = 0
        if r >= 0 and pivots >= max_pivots:
            return PIVOT_BUDGET, pivots


simplex_nb = njit(_simplex_loops)


def simplex_np(T, c, lo, hi, x, basis, nonbasic, status, max_pivots, ptol, dtol, pivtol, bland_after):
    """Vectorized counterpart of the compiled kernel (same rules, same codes)."""
    m, n = T.shape
    pivots = 0
    streak = 0
    phase = 0
    d = np.zeros(n)
    with np.errstate(divide="ignore", invalid="ignore"):
        while True:
            xb = x[basis]
            lob = lo[basis]
            hib = hi[basis]
            below = xb < lob - ptol
            above = xb > hib + ptol
            if below.any() or above.any():
                phase = 1
                cb = above.astype(float) - below.astype(float)
                d = -(cb @ T)
            elif phase != 2:
                phase = 2
                d = c[nonbasic] - c[basis] @ T

            bland = streak >= bland_after
            st = status[nonbasic]
            movable = hi[nonbasic] > lo[nonbasic]
            elig = ((st == AT_LOWER) & (d < -dtol) & movable) | (
                (st == AT_UPPER) & (d > dtol) & movable
            ) | ((st == FREE) & (np.abs(d) > dtol))
            if not elig.any():
                return (INFEASIBLE if phase == 1 else OPTIMAL), pivots
            cand_k = np.flatnonzero(elig)
            if not bland:
                score = np.abs(d[cand_k])
                cand_k = cand_k[score == score.max()]
            q = int(cand_k[np.argmin(nonbasic[cand_k])])
            jq = nonbasic[q]
            direction = 1.0 if d[q] < 0.0 else -1.0
            alpha = T[:, q] * direction

            dec = alpha > pivtol
            inc = alpha < -pivtol
            p1 = phase == 1
            a_over = dec & p1 & (xb > hib + ptol)
            a_low = dec & ~a_over & (xb >= lob - ptol) & np.isfinite(lob)
            a_under = inc & p1 & (xb < lob - ptol)
            a_up = inc & ~a_under & (xb <= hib + ptol) & np.isfinite(hib)
            absa = np.abs(alpha)
            t = np.full(m, np.inf)
            t[a_over] = (xb - hib)[a_over] / absa[a_over]
            t[a_low] = np.maximum(xb - lob, 0.0)[a_low] / absa[a_low]
            t[a_under] = (lob - xb)[a_under] / absa[a_under]
            t[a_up] = np.maximum(hib - xb, 0.0)[a_up] / absa[a_up]
            side = np.zeros(m, dtype=np.int64)
            side[a_over | a_up] = AT_UPPER
            side[a_low | a_under] = AT_LOWER
            cand = side != 0

            r = -1
            theta = np.inf
            if cand.any():
                if bland:
                    # running-minimum scan, same tie rule as the compiled kernel
                    best_var = -1
                    run = np.inf
                    for i in np.flatnonzero(cand):
                        ti = t[i]
                        if ti < run - _DEGEN_STEP or (ti <= run + _DEGEN_STEP and (best_var < 0 or basis[i] < best_var)):
                            run = ti
                            r = int(i)
                            best_var = basis[i]
                    theta = run
                else:
                    th = np.full(m, np.inf)
                    th[a_over] = (xb - hib + ptol)[a_over] / absa[a_over]
                    th[a_low] = (xb - lob + ptol)[a_low] / absa[a_low]
                    th[a_under] = (lob - xb + ptol)[a_under] / absa[a_under]
                    th[a_up] = (hib - xb + ptol)[a_up] / absa[a_up]
                    theta_max = th.min()
                    ok = cand & (t <= theta_max)
                    if ok.any():
                        score = np.where(ok, absa, 0.0)
                        r = int(np.argmax(score))
                        if score[r] <= 0.0:
                            r = -1
                        else:
                            theta = t[r]

            span = np.inf if status[jq] == FREE else hi[jq] - lo[jq]
            if span <= theta:
                theta = span
                r = -1
            if theta == np.inf:
                return (NUMERICAL if phase == 1 else UNBOUNDED), pivots

            if theta > 0.0:
                x[basis] -= alpha * theta
            if r < 0:
                if direction > 0:
                    x[jq] = hi[jq]
                    status[jq] = AT_UPPER
                else:
                    x[jq] = lo[jq]
                    status[jq] = AT_LOWER
            else:
                x[jq] += direction * theta
                leave = basis[r]
                x[leave] = lo[leave] if side[r] == AT_LOWER else hi[leave]
                status[leave] = side[r]
                status[jq] = BASIC
                basis[r] = jq
                nonbasic[q] = leave
                inv = 1.0 / T[r, q]
                f = T[:, q].copy()
                f[r] = 0.0
                T[r] *= inv
                T[r, q] = inv
                nz = np.flatnonzero(f)
                if nz.size:
                    T[nz] -= np.outer(f[nz], T[r])
                    T[nz, q] = -f[nz] * inv
                if phase == 2:
                    dq = d[q]
                    d = d - dq * T[r]
                    d[q] = -dq * inv
                pivots += 1
            streak = streak + 1 if theta <= _DEGEN_STEP else 0
            if r >= 0 and pivots >= max_pivots:
                return PIVOT_BUDGET, pivots
