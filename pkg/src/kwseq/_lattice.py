"""Jitted recursions on the triangular success-count lattice.

Layout: stage n (1-based) occupies the flat slice [row_offset(n),
row_offset(n) + n], so a table truncated at horizon H holds
H * (H + 3) / 2 entries.

Mirror discipline: several callers rely on exact swap symmetry of the
computed tables when the two success probabilities are float complements
(theta1 == 1 - theta0) and the multipliers are equal.  Every expression
below that combines per-state terms is therefore written so that the
mirrored state evaluates a bit-identical float expression: binomial rows
for a probability above one half are built from the complementary row and
reversed, two-term sums are grouped before any third operand is added,
and log-binomial prefactors subtract the pair of log-factorials as a
grouped sum.  Do not "simplify" these groupings.
"""

import math

import numpy as np
from numba import njit

CONTINUE = 0
ACCEPT_H0 = 1
REJECT_H0 = 2


def row_offset(n: int) -> int:
    """Flat index of state (n, 0)."""
    return (n - 1) * (n + 2) // 2


def table_size(horizon: int) -> int:
    return horizon * (horizon + 3) // 2


@njit(cache=True, inline="always")
def _offset(n):
    return (n - 1) * (n + 2) // 2


@njit(cache=True)
def _fill_row_native(n, t, m, lt, lm, logfact, out):
    # Binomial point masses for success probability t < m, built outward
    # from the mode so tails may underflow to zero harmlessly.
    k0 = int((n + 1) * t)
    if k0 > n:
        k0 = n
    lg = logfact[n] - (logfact[k0] + logfact[n - k0])
    out[k0] = math.exp(lg + (k0 * lt + (n - k0) * lm))
    up = k0
    dn = k0
    while up < n or dn > 0:
        if up < n:
            out[up + 1] = ((out[up] * t) * (n - up)) / (m * (up + 1))
            up += 1
        if dn > 0:
            out[dn - 1] = ((out[dn] * m) * dn) / (t * (n - dn + 1))
            dn -= 1


@njit(cache=True)
def _fill_row(n, t, m, lt, lm, logfact, out, scratch):
    """out[0..n] := C(n,s) t^s m^(n-s), with m the caller's complement of t."""
    if t > m:
        _fill_row_native(n, m, t, lm, lt, logfact, scratch)
        for s in range(n + 1):
            out[s] = scratch[n - s]
    elif t == m:
        # enforce an exactly palindromic row
        h = n // 2
        lg = logfact[n] - (logfact[h] + logfact[n - h])
        out[h] = math.exp(lg + (h * lt + (n - h) * lm))
        for s in range(h, 0, -1):
            out[s - 1] = ((out[s] * m) * s) / (t * (n - s + 1))
        for s in range(h + 1):
            out[n - s] = out[s]
    else:
        _fill_row_native(n, t, m, lt, lm, logfact, out)


@njit(cache=True)
def fill_triangle(h_lo, h_hi, t, m, logfact, tri):
    """Fill rows h_lo..h_hi of the flat triangle with binomial masses."""
    lt = math.log(t)
    lm = math.log(m)
    scratch = np.empty(h_hi + 1, np.float64)
    row = np.empty(h_hi + 1, np.float64)
    for n in range(h_lo, h_hi + 1):
        _fill_row(n, t, m, lt, lm, logfact, row, scratch)
        off = _offset(n)
        for s in range(n + 1):
            tri[off + s] = row[s]


@njit(cache=True)
def build_plan_kernel(H, t0, m0, t1, m1, ts, ms, lam0, lam1, logfact,
                      g0tri, use0, g1tri, use1):
    """Backward value recursion; returns (action table, attained objective).

    Stopping beats continuing on ties, and accepting beats rejecting;
    both comparisons are exact float equality of costs computed in the
    scaled (binomial-weighted) form.
    """
    lt0 = math.log(t0)
    lm0 = math.log(m0)
    lt1 = math.log(t1)
    lm1 = math.log(m1)
    lts = math.log(ts)
    lms = math.log(ms)

    actions = np.empty(H * (H + 3) // 2, np.int8)
    g0 = np.empty(H + 1, np.float64)
    g1 = np.empty(H + 1, np.float64)
    gs = np.empty(H + 1, np.float64)
    scratch = np.empty(H + 1, np.float64)
    u_next = np.empty(H + 1, np.float64)
    u_cur = np.empty(H + 1, np.float64)

    # forced-stop stage
    off = _offset(H)
    if use0:
        for s in range(H + 1):
            g0[s] = g0tri[off + s]
    else:
        _fill_row(H, t0, m0, lt0, lm0, logfact, g0, scratch)
    if use1:
        for s in range(H + 1):
            g1[s] = g1tri[off + s]
    else:
        _fill_row(H, t1, m1, lt1, lm1, logfact, g1, scratch)
    for s in range(H + 1):
        cost_r = lam0 * g0[s]
        cost_a = lam1 * g1[s]
        u_next[s] = cost_a if cost_a < cost_r else cost_r
        actions[off + s] = ACCEPT_H0 if cost_r >= cost_a else REJECT_H0

    for n in range(H - 1, 0, -1):
        off = _offset(n)
        if use0:
            for s in range(n + 1):
                g0[s] = g0tri[off + s]
        else:
            _fill_row(n, t0, m0, lt0, lm0, logfact, g0, scratch)
        if use1:
            for s in range(n + 1):
                g1[s] = g1tri[off + s]
        else:
            _fill_row(n, t1, m1, lt1, lm1, logfact, g1, scratch)
        _fill_row(n, ts, ms, lts, lms, logfact, gs, scratch)
        inv = 1.0 / (n + 1)
        for s in range(n + 1):
            cost_a = lam1 * g1[s]
            cost_r = lam0 * g0[s]
            cont = gs[s] + (u_next[s + 1] * ((s + 1) * inv)
                            + u_next[s] * ((n + 1 - s) * inv))
            u = cost_a if cost_a < cost_r else cost_r
            if cont < u:
                u = cont
            if cost_a == u:
                actions[off + s] = ACCEPT_H0
            elif cost_r == u:
                actions[off + s] = REJECT_H0
            else:
                actions[off + s] = CONTINUE
            u_cur[s] = u
        tmp = u_next
        u_next = u_cur
        u_cur = tmp

    value = 1.0 + u_next[0] + u_next[1]
    return actions, value


@njit(cache=True)
def oc_kernel(actions, H, t, m, logfact, gtri, use_tri):
    """Acceptance probability under success probability t (backward pass)."""
    lt = math.log(t)
    lm = math.log(m)
    g = np.empty(H + 1, np.float64)
    scratch = np.empty(H + 1, np.float64)
    a_next = np.empty(H + 1, np.float64)
    a_cur = np.empty(H + 1, np.float64)

    off = _offset(H)
    if use_tri:
        for s in range(H + 1):
            g[s] = gtri[off + s]
    else:
        _fill_row(H, t, m, lt, lm, logfact, g, scratch)
    for s in range(H + 1):
        a_next[s] = g[s] if actions[off + s] == ACCEPT_H0 else 0.0

    for n in range(H - 1, 0, -1):
        off = _offset(n)
        if use_tri:
            for s in range(n + 1):
                g[s] = gtri[off + s]
        else:
            _fill_row(n, t, m, lt, lm, logfact, g, scratch)
        inv = 1.0 / (n + 1)
        for s in range(n + 1):
            act = actions[off + s]
            if act == CONTINUE:
                a_cur[s] = (a_next[s] * ((n + 1 - s) * inv)
                            + a_next[s + 1] * ((s + 1) * inv))
            elif act == ACCEPT_H0:
                a_cur[s] = g[s]
            else:
                a_cur[s] = 0.0
        tmp = a_next
        a_next = a_cur
        a_cur = tmp

    return a_next[0] + a_next[1]


@njit(cache=True)
def asn_kernel(actions, H, t, m, logfact, gtri, use_tri):
    """Expected sample number under success probability t (backward pass)."""
    lt = math.log(t)
    lm = math.log(m)
    g = np.empty(H + 1, np.float64)
    scratch = np.empty(H + 1, np.float64)
    b_next = np.zeros(H + 1, np.float64)
    b_cur = np.empty(H + 1, np.float64)

    for n in range(H - 1, 0, -1):
        off = _offset(n)
        if use_tri:
            for s in range(n + 1):
                g[s] = gtri[off + s]
        else:
            _fill_row(n, t, m, lt, lm, logfact, g, scratch)
        inv = 1.0 / (n + 1)
        for s in range(n + 1):
            if actions[off + s] == CONTINUE:
                b_cur[s] = g[s] + (b_next[s] * ((n + 1 - s) * inv)
                                   + b_next[s + 1] * ((s + 1) * inv))
            else:
                b_cur[s] = 0.0
        tmp = b_next
        b_next = b_cur
        b_cur = tmp

    return 1.0 + (b_next[0] + b_next[1])


@njit(cache=True)
def stop_dist_kernel(actions, H, theta):
    """Forward reach-mass recursion; p[n] = P(stop at stage n), 1-based."""
    m = 1.0 - theta
    reach = np.zeros(H + 2, np.float64)
    nxt = np.zeros(H + 2, np.float64)
    p = np.zeros(H + 1, np.float64)
    reach[0] = m
    reach[1] = theta
    for n in range(1, H + 1):
        off = _offset(n)
        stopped = 0.0
        living = 0.0
        for s in range(n + 1):
            w = reach[s]
            if w == 0.0:
                continue
            if actions[off + s] == CONTINUE:
                living += w
                nxt[s] += w * m
                nxt[s + 1] += w * theta
            else:
                stopped += w
        p[n] = stopped
        if living == 0.0:
            break
        for s in range(n + 2):
            reach[s] = nxt[s]
            nxt[s] = 0.0
    return p


@njit(cache=True)
def reach_kernel(actions, H):
    """Positive-probability reachability; returns (effective horizon, mask)."""
    mask = np.zeros(actions.shape[0], np.bool_)
    reach = np.zeros(H + 2, np.bool_)
    nxt = np.zeros(H + 2, np.bool_)
    reach[0] = True
    reach[1] = True
    h_eff = 1
    for n in range(1, H + 1):
        off = _offset(n)
        any_cont = False
        for s in range(n + 1):
            if reach[s]:
                mask[off + s] = True
                if actions[off + s] == CONTINUE:
                    any_cont = True
                    nxt[s] = True
                    nxt[s + 1] = True
        if any_cont:
            h_eff = n + 1
        else:
            break
        for s in range(n + 2):
            reach[s] = nxt[s]
            nxt[s] = False
    return h_eff, mask


@njit(cache=True)
def sprt_absorb_kernel(d0, d1, log_b, log_a, theta, q_level,
                       residual_tol, stage_cap):
    """Forward absorption of the likelihood-ratio walk on the count lattice.

    Continuation requires log_b < s*d1 + (n-s)*d0 < log_a strictly; mass
    touching either endpoint is absorbed.  Runs until the un-absorbed mass
    drops below residual_tol.

    Returns (accept_mass, reject_mass, asn, q_stage, residual, n_last,
    asn_error_bound, ok) where ok is False when stage_cap was hit first.
    """
    m = 1.0 - theta
    spread = d1 - d0
    width = int((log_a - log_b) / spread) + 8

    cur = np.zeros(width, np.float64)
    nxt = np.zeros(width, np.float64)
    # stage 0: all mass at s = 0, log-likelihood ratio 0
    cur[0] = 1.0
    cur_lo = 0

    accept_mass = 0.0
    reject_mass = 0.0
    asn = 0.0
    cum = 0.0
    q_stage = 0
    residual = 1.0
    n_last = 0
    res_hist = np.zeros(16, np.float64)

    for n in range(1, stage_cap + 1):
        # continue band at stage n: states strictly inside both endpoints
        lo_f = (log_b - n * d0) / spread
        new_lo = int(math.floor(lo_f)) + 1
        if new_lo < 0:
            new_lo = 0
        stopped = 0.0
        for i in range(width):
            w = cur[i]
            if w == 0.0:
                continue
            s = cur_lo + i
            # child keeping s (failure drawn)
            w0 = w * m
            llr = s * d1 + (n - s) * d0
            if llr >= log_a:
                reject_mass += w0
                stopped += w0
            elif llr <= log_b:
                accept_mass += w0
                stopped += w0
            else:
                nxt[s - new_lo] += w0
            # child moving to s + 1 (success drawn)
            w1 = w * theta
            s1 = s + 1
            llr = s1 * d1 + (n - s1) * d0
            if llr >= log_a:
                reject_mass += w1
                stopped += w1
            elif llr <= log_b:
                accept_mass += w1
                stopped += w1
            else:
                nxt[s1 - new_lo] += w1
        asn += n * stopped
        cum += stopped
        if q_stage == 0 and cum >= q_level:
            q_stage = n
        residual = 0.0
        for i in range(width):
            cur[i] = nxt[i]
            nxt[i] = 0.0
            residual += cur[i]
        cur_lo = new_lo
        n_last = n
        res_hist[n % 16] = residual
        if residual < residual_tol:
            # geometric tail estimate for the truncation error on the mean
            prev = res_hist[(n - 15) % 16]
            if n >= 16 and prev > 0.0 and residual < prev:
                rho = (residual / prev) ** (1.0 / 15.0)
                bound = residual * (n + 1.0 / (1.0 - rho))
            else:
                bound = residual * (n + 16.0)
            return (accept_mass, reject_mass, asn, q_stage, residual,
                    n_last, bound, True)
        if residual == 0.0:
            return (accept_mass, reject_mass, asn, q_stage, 0.0,
                    n_last, 0.0, True)

    return (accept_mass, reject_mass, asn, q_stage, residual,
            n_last, residual * stage_cap, False)
