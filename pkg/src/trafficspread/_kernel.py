"""Slot-level simulation kernel.

One jitted function advances the system slot by slot: Poisson arrivals are
enqueued at the first slot boundary at or after their exact timestamps (the
timestamps themselves are kept for delay accounting), the channel states are
redrawn (or held, under correlated fading), the scheduler picks one queue,
and its head-of-line files drain at the instantaneous rate, completing at
interpolated within-slot times.  Queue contents live in per-user ring
buffers (remaining bits, owner, request time).  The queue-length integral is
kept exact: each file contributes from its request timestamp to its
interpolated completion.

All randomness uses numba's np.random state, reseeded per run, so equal
seeds give bit-identical runs.  The kernel returns control to Python when a
dispatcher decision must be computed externally (DISP_EXTERNAL), when the
mini-batch slot budget is exhausted, or on ring-buffer overflow.
"""

from __future__ import annotations

import numpy as np
from numba import njit

# dispatcher kinds
DISP_NONE = 0
DISP_JSQ = 1
DISP_TABLE = 2
DISP_EXTERNAL = 3

# scheduler kinds
SCHED_GREEDY = 0
SCHED_LOG = 1
SCHED_LCQ = 2

# kernel exit status
ST_BUDGET = 0
ST_ARRIVAL = 1
ST_OVERFLOW = 2

# accumulator slots
ACC_QINT = 0
ACC_DELAY = 1
ACC_NCOMP = 2
ACC_ENERGY = 3
ACC_BUSY = 4
ACC_NARR = 5
ACC_LEN = 6


@njit(cache=True)
def seed_kernel(seed):
    np.random.seed(seed)


@njit(cache=True)
def init_arrivals(next_arr, arr_scale):
    for u in range(next_arr.shape[0]):
        if np.isfinite(arr_scale[u]):
            next_arr[u] = np.random.exponential(arr_scale[u])
        else:
            next_arr[u] = np.inf


@njit(cache=True)
def _enqueue(owner, target, treq, t0,
             theta_bits, arr_scale, phi,
             q_rem, q_owner, q_treq, q_head, q_count, rem_tally,
             next_arr, acc, out_reroutes, out_arr_by_owner):
    cap = q_rem.shape[1]
    if q_count[target] >= cap:
        return False
    size = np.random.exponential(theta_bits[owner])
    if np.isfinite(arr_scale[owner]):
        next_arr[owner] = treq + np.random.exponential(arr_scale[owner])
    else:
        next_arr[owner] = np.inf
    slot = (q_head[target] + q_count[target]) % cap
    q_rem[target, slot] = size
    q_owner[target, slot] = owner
    q_treq[target, slot] = treq
    q_count[target] += 1
    rem_tally[target] += size
    acc[ACC_NARR] += 1.0
    out_arr_by_owner[owner] += 1.0
    acc[ACC_QINT] += t0 - treq  # presence before the covering slot sums start
    if target != owner:
        acc[ACC_ENERGY] += phi[owner, target]
        out_reroutes[owner, target] += 1.0
    return True


@njit(cache=True)
def _decide(owner, disp_kind, cluster_of, members, msize,
            tables, tbl_off, tbl_cap,
            q_count, rem_tally, solo_rate):
    if disp_kind == DISP_NONE:
        return owner
    l = cluster_of[owner]
    m = msize[l]
    if m == 1:
        return owner
    if disp_kind == DISP_JSQ:
        # least remaining work, self first then lowest index
        best = rem_tally[owner] / solo_rate[owner]
        tgt = owner
        for k in range(m):
            u = members[l, k]
            if u == owner:
                continue
            wl = rem_tally[u] / solo_rate[u]
            if wl < best:
                best = wl
                tgt = u
        return tgt
    # DISP_TABLE: flat index over the clamped member queue vector
    idx = 0
    local_owner = 0
    for k in range(m):
        u = members[l, k]
        qc = q_count[u]
        if qc > tbl_cap:
            qc = tbl_cap
        idx = idx * (tbl_cap + 1) + qc
        if u == owner:
            local_owner = k
    tgt_local = tables[tbl_off[l] + idx * m + local_owner]
    return members[l, tgt_local]


@njit(cache=True)
def run_slots(
    end_slot,                     # run until slot_counter reaches this
    slot_s, n,
    cum_probs, rates,             # (N, K)
    stay_prob,
    sched_kind, sched_sign, log_b, log_a,   # log rule parameters
    lcq_coef,                     # (N,) theta/solo workload coefficient
    theta_bits, arr_scale,        # (N,)
    eta, phi,                     # (N, N)
    disp_kind, solo_rate,
    cluster_of, members, msize,
    tables, tbl_off, tbl_cap,
    lb_enabled,
    # mutable state
    chan, q_rem, q_owner, q_treq, q_head, q_count, rem_tally,
    next_arr, theta_bs, slot_counter,
    pending, pending_t,           # int64[2]: owner, target; float64[1]: treq
    # per-call accumulators
    acc, out_reroutes, out_served, out_arr_by_owner, out_comp_by_owner,
):
    cap = q_rem.shape[1]
    k_states = rates.shape[1]

    if pending[0] >= 0:
        t0 = slot_counter[0] * slot_s
        ok = _enqueue(pending[0], pending[1], pending_t[0], t0,
                      theta_bits, arr_scale, phi,
                      q_rem, q_owner, q_treq, q_head, q_count, rem_tally,
                      next_arr, acc, out_reroutes, out_arr_by_owner)
        pending[0] = -1
        if not ok:
            return ST_OVERFLOW

    while slot_counter[0] < end_slot:
        t0 = slot_counter[0] * slot_s
        t1 = t0 + slot_s

        # arrivals due at or before this slot boundary, in time order
        while True:
            amin = np.inf
            owner = -1
            for u in range(n):
                if next_arr[u] < amin:
                    amin = next_arr[u]
                    owner = u
            if owner < 0 or amin > t0:
                break
            if disp_kind == DISP_EXTERNAL:
                pending[0] = owner
                pending[1] = -1
                pending_t[0] = amin
                return ST_ARRIVAL
            target = _decide(owner, disp_kind, cluster_of, members, msize,
                             tables, tbl_off, tbl_cap, q_count, rem_tally, solo_rate)
            ok = _enqueue(owner, target, amin, t0,
                          theta_bits, arr_scale, phi,
                          q_rem, q_owner, q_treq, q_head, q_count, rem_tally,
                          next_arr, acc, out_reroutes, out_arr_by_owner)
            if not ok:
                return ST_OVERFLOW

        # exact queue-length integral: full-slot presence, corrected at
        # completions below and at enqueue above
        tot = 0
        for u in range(n):
            tot += q_count[u]
        acc[ACC_QINT] += tot * slot_s

        # channel evolution
        for u in range(n):
            if stay_prob > 0.0 and np.random.random() < stay_prob:
                continue
            r = np.random.random()
            s = 0
            while s < k_states - 1 and cum_probs[u, s] <= r:
                s += 1
            chan[u] = s

        # scheduling: optional bound override first, then the base policy
        sel = -1
        rate_user = -1
        lb_case = 0
        if lb_enabled:
            best_r = -1.0
            j = 0
            for u in range(n):
                r = rates[u, chan[u]]
                if r > best_r:
                    best_r = r
                    j = u
            if q_count[j] == 0:
                for u in range(n):
                    if q_count[u] > 0 and q_owner[u, q_head[u]] == j:
                        sel = u
                        lb_case = 1
                        break
                if sel < 0:
                    for u in range(n):
                        if q_count[u] > 0 and q_owner[u, q_head[u]] != u:
                            sel = u
                            lb_case = 2
                            break
                if sel < 0 and theta_bs[0] < 0.0:
                    best_c = 0
                    for u in range(n):
                        if q_count[u] > best_c:
                            best_c = q_count[u]
                            sel = u
                    if sel >= 0:
                        lb_case = 3
                if sel >= 0:
                    rate_user = j  # recouped opportunistic slot: best channel carries
        if sel < 0:
            lb_case = 0
            best_s = -np.inf
            nt = 0
            for u in range(n):
                if q_count[u] == 0:
                    continue
                r = rates[u, chan[u]]
                if sched_kind == SCHED_GREEDY:
                    score = r
                elif sched_kind == SCHED_LOG:
                    score = sched_sign * (r / solo_rate[u]) * np.log(log_b + log_a[u] * q_count[u])
                else:
                    if r <= 0.0:
                        continue
                    score = q_count[u] * lcq_coef[u]
                if score > best_s:
                    best_s = score
                    sel = u
                    nt = 1
                elif score == best_s:
                    nt += 1
                    if np.random.random() * nt < 1.0:
                        sel = u
            rate_user = sel

        # drain the selected queue at the carrying user's instantaneous rate
        if sel >= 0:
            out_served[sel] += 1.0
            acc[ACC_BUSY] += 1.0
            rate = rates[rate_user, chan[rate_user]]
            if rate > 0.0:
                capacity = rate * slot_s
                drained = 0.0
                tcur = t0
                while capacity > 0.0 and q_count[sel] > 0:
                    hd = q_head[sel]
                    need = q_rem[sel, hd]
                    if need <= capacity:
                        tc = tcur + need / rate
                        ow = q_owner[sel, hd]
                        acc[ACC_DELAY] += tc - q_treq[sel, hd] + eta[ow, sel]
                        acc[ACC_NCOMP] += 1.0
                        out_comp_by_owner[ow] += 1.0
                        acc[ACC_QINT] -= t1 - tc
                        capacity -= need
                        drained += need
                        rem_tally[sel] -= need
                        tcur = tc
                        q_head[sel] = (hd + 1) % cap
                        q_count[sel] -= 1
                    else:
                        q_rem[sel, hd] = need - capacity
                        rem_tally[sel] -= capacity
                        drained += capacity
                        capacity = 0.0
                if lb_case == 1:
                    theta_bs[0] -= drained
                elif lb_case == 3:
                    theta_bs[0] += drained

        slot_counter[0] += 1

    return ST_BUDGET
