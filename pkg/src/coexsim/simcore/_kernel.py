"""Event-driven simulation kernel.

Advances one agent decision interval of microsecond-resolution MAC/PHY
dynamics.  The machines are the tick-level ones defined in ``coexsim.mac``;
instead of stepping every microsecond, the loop jumps between the instants
at which anything can change: MAC timer expiries, emission starts/ends,
arrivals, deadline expiries, and the one-tick-delayed sensing updates that
follow each emission boundary (a device cannot sense an emission that
starts in the tick it decides).

Everything here is numba-njit compatible and is compiled by default; the
``COEXSIM_NUMBA=0`` environment flag selects the identical pure-Python
path.  State lives in caller-owned flat arrays so it persists across
interval calls; gains and ED thresholds are fixed within one call.

Time convention: an emission spanning [start, end) is active at tick t iff
start <= t < end, and is sensed by other devices during [start+1, end].
"""

import math

import numpy as np

from .._accel import maybe_njit

INF = 1 << 60

# device phases
PH_IDLE = 0
PH_CONT = 1      # waiting for DIFS (WiFi) / Defer (NR-U) of continuous idle
PH_BO = 2        # backoff countdown (frozen while channel busy)
PH_RS = 3        # emitting reserved signal until the mini-slot boundary
PH_TX = 4        # emitting data (or PDCCH for a gNB)
PH_ACKWAIT = 5   # STA waiting out SIFS + ACK after its data burst
PH_GWAIT = 6     # gNB waiting on its scheduled UE / feedback burst
PH_UPWAIT = 7    # UE holding a Cat2 grant, waiting for pusch_start
PH_UFB = 8       # UE waiting for the ACK/NACK resolution instant

# emission kinds
K_NONE = 0
K_DATA = 1
K_RS = 2
K_ACK = 3
K_PDCCH = 4

# roles (match coexsim.scenario)
R_STA = 0
R_UE = 1
R_AP = 2
R_GNB = 3

# job states
J_PEND = 0
J_DONE = 1
J_DROP = 2

# int parameter vector layout
IP_N = 0
IP_SLOT = 1
IP_DIFS = 2
IP_SIFS = 3
IP_ACK = 4
IP_DEFER = 5
IP_CAT2 = 6
IP_MINI = 7
IP_TXOP = 8
IP_MCOT = 9
IP_CWMIN = 10
IP_CWMAX = 11
IP_PDCCH = 12
IP_GDELAY = 13
IP_DEADLINE = 14
IP_UECAT4 = 15
IP_COUNT_AP = 16
IP_CAT1GAP = 17
IP_LEN = 18

# float parameter vector layout
FP_RATE_W = 0
FP_RATE_N = 1
FP_NOISE = 2
FP_CS_MW = 3
FP_ETA_W = 4
FP_ETA_N = 5
FP_FILEBITS = 6
FP_LEN = 7

# interval counter layout
CNT_NW = 0
CNT_NN = 1
CNT_DROPW = 2
CNT_DROPN = 3
CNT_SEGTX_W = 4
CNT_SEGOK_W = 5
CNT_SEGTX_N = 6
CNT_SEGOK_N = 7
CNT_LEN = 8

_SM_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_SM_MUL1 = np.uint64(0xBF58476D1CE4E5B9)
_SM_MUL2 = np.uint64(0x94D049BB133111EB)
_U32 = np.uint64(32)


def rng_next_u64(state):
    # splitmix64: the backoff stream must be bit-identical under numba and
    # pure Python, which numpy's own generators do not guarantee here
    state[0] = state[0] + _SM_GAMMA
    z = state[0]
    z = (z ^ (z >> np.uint64(30))) * _SM_MUL1
    z = (z ^ (z >> np.uint64(27))) * _SM_MUL2
    return z ^ (z >> np.uint64(31))


def rng_draw(state, hi):
    # uniform integer in [0, hi], scaling the high 32 bits
    r = rng_next_u64(state) >> _U32
    return np.int64((r * np.uint64(hi + 1)) >> _U32)


def next_ssb(t, mini):
    r = t % mini
    if r == 0:
        return t
    return t + (mini - r)


def _recompute_sums(n, roles, ptx_mw, gains, em_kind, cs_sum, ed_sum, ap_sum):
    # rebuild received-power sums from scratch: exact, no float drift
    for i in range(n):
        cs_sum[i] = 0.0
        ed_sum[i] = 0.0
        ap_sum[i] = 0.0
    for k in range(n):
        if em_kind[k] == K_NONE:
            continue
        pk = ptx_mw[k]
        rk = roles[k]
        for i in range(n):
            if i == k:
                continue
            p = pk * gains[k, i]
            if rk == R_AP:
                ap_sum[i] += p
            else:
                ed_sum[i] += p
                if rk == R_STA:
                    cs_sum[i] += p


def _update_decodes(n, roles, ptx_mw, gains, em_kind, em_rx, em_ok, fp):
    # fail any active data burst whose instantaneous SINR dips below eta
    noise = fp[FP_NOISE]
    for i in range(n):
        if em_kind[i] != K_DATA or em_ok[i] == 0:
            continue
        r = em_rx[i]
        interf = noise
        for k in range(n):
            if k != i and em_kind[k] != K_NONE:
                interf += ptx_mw[k] * gains[k, r]
        eta = fp[FP_ETA_W] if roles[i] == R_STA else fp[FP_ETA_N]
        if ptx_mw[i] * gains[i, r] < eta * interf:
            em_ok[i] = 0


def _idle_verdict(i, role, ip, fp, ed_w_mw, ed_n_mw, cs_sum, ed_sum, ap_sum):
    if role == R_STA:
        extra = ap_sum[i] if ip[IP_COUNT_AP] != 0 else 0.0
        return (cs_sum[i] + extra) < fp[FP_CS_MW] and (ed_sum[i] + extra) < ed_w_mw
    return ed_sum[i] < ed_n_mw


def _apply_cca(now, ip, fp, ed_w_mw, ed_n_mw, roles, cs_sum, ed_sum, ap_sum,
               cca_idle, cca_since, phase, t_fire, bk_n, bk_anchor):
    # refresh idle/busy verdicts; reshape countdown timers on each flip
    n = ip[IP_N]
    slot = ip[IP_SLOT]
    for i in range(n):
        role = roles[i]
        if role == R_AP:
            continue
        idle = _idle_verdict(i, role, ip, fp, ed_w_mw, ed_n_mw, cs_sum, ed_sum, ap_sum)
        was = cca_idle[i] != 0
        if idle == was:
            continue
        cca_idle[i] = 1 if idle else 0
        cca_since[i] = now
        ph = phase[i]
        if ph == PH_CONT:
            t_fire[i] = now + _req_idle(role, ip) if idle else INF
        elif ph == PH_BO:
            if idle:
                bk_anchor[i] = now + _req_idle(role, ip)
                t_fire[i] = bk_anchor[i] + slot * bk_n[i]
            else:
                if now > bk_anchor[i]:
                    done = (now - bk_anchor[i]) // slot
                    bk_n[i] -= done
                    if bk_n[i] < 0:
                        bk_n[i] = 0
                t_fire[i] = INF


def _req_idle(role, ip):
    return ip[IP_DIFS] if role == R_STA else ip[IP_DEFER]


def _enter_cont(i, now, ip, roles, cca_idle, cca_since, phase, t_fire):
    phase[i] = PH_CONT
    if cca_idle[i] != 0:
        fire = cca_since[i] + _req_idle(roles[i], ip)
        t_fire[i] = fire if fire > now else now
    else:
        t_fire[i] = INF


def _start_emission(i, kind, start, end, rx, job, bits, ok,
                    em_kind, em_start, em_end, em_rx, em_job, em_bits, em_ok):
    if em_kind[i] != K_NONE:
        raise ValueError("device already has an active emission")
    if end <= start:
        raise ValueError("emission must have positive duration")
    em_kind[i] = kind
    em_start[i] = start
    em_end[i] = end
    em_rx[i] = rx
    em_job[i] = job
    em_bits[i] = bits
    em_ok[i] = ok


def _log_emission(i, start, end, kind, ok,
                  el_on, el_t0, el_t1, el_dev, el_kind, el_ok, el_n):
    if el_on == 0:
        return
    idx = el_n[0]
    if idx >= el_t0.shape[0]:
        el_n[1] = 1  # overflowed; recording stops
        return
    el_t0[idx] = start
    el_t1[idx] = end
    el_dev[idx] = i
    el_kind[idx] = kind
    el_ok[idx] = ok
    el_n[0] = idx + 1


def _clear_emission(i, now, em_kind, em_start, em_end, em_rx, em_job, em_bits,
                    em_ok, el_on, el_t0, el_t1, el_dev, el_kind, el_ok, el_n):
    _log_emission(i, em_start[i], now, em_kind[i], em_ok[i],
                  el_on, el_t0, el_t1, el_dev, el_kind, el_ok, el_n)
    em_kind[i] = K_NONE


def _advance_head(i, now, ip, roles, j_arr, j_status, head, joff, jcnt, cnt):
    # move to the next pending job, dropping queued jobs already past deadline
    deadline = ip[IP_DEADLINE]
    end = joff[i] + jcnt[i]
    h = head[i]
    if h < 0:
        return
    while True:
        while h < end and j_status[h] != J_PEND:
            h += 1
        if h >= end:
            head[i] = -1
            return
        if j_arr[h] <= now and now > j_arr[h] + deadline:
            j_status[h] = J_DROP
            if roles[i] == R_STA:
                cnt[CNT_DROPW] += 1
            else:
                cnt[CNT_DROPN] += 1
            h += 1
            continue
        head[i] = h
        return


def _backlogged(i, now, j_arr, head):
    h = head[i]
    return h >= 0 and j_arr[h] <= now


def _select_ue(g, now, ip, roles, base_of, j_arr, head, grant_ps):
    # earliest head-of-queue arrival among this gNB's backlogged UEs,
    # ties to the lowest device id
    n = ip[IP_N]
    best = -1
    best_arr = INF
    for u in range(n):
        if roles[u] != R_UE or base_of[u] != g or grant_ps[u] != -1:
            continue
        if not _backlogged(u, now, j_arr, head):
            continue
        a = j_arr[head[u]]
        if a < best_arr:
            best_arr = a
            best = u
    return best


def _maybe_start_gnb(g, now, ip, roles, base_of, j_arr, head, grant_ps,
                     cca_idle, cca_since, phase, t_fire):
    if phase[g] != PH_IDLE:
        return
    if _select_ue(g, now, ip, roles, base_of, j_arr, head, grant_ps) >= 0:
        _enter_cont(g, now, ip, roles, cca_idle, cca_since, phase, t_fire)


def _seg_airtime(remaining, rate, budget):
    # whole-microsecond airtime for the next segment of a file
    us = int(math.ceil(remaining / rate))
    if us > budget:
        us = budget
    return us


def run_interval(
        t0, t_end, ip, fp, ed_w_mw, ed_n_mw,
        roles, base_of, ptx_mw, gains,
        j_arr, j_served, j_status, j_dep, joff, jcnt, arr_ptr, head,
        phase, t_fire, bk_n, bk_anchor, cw,
        cca_idle, cca_since,
        em_kind, em_start, em_end, em_rx, em_job, em_bits, em_ok,
        pend_kind, pend_start, pend_end, pend_rx, pend_job, pend_bits, pend_ok,
        last_ok, last_bits, last_job,
        grant_ps, grant_dur, g_txn,
        rng_state, cs_sum, ed_sum, ap_sum, cnt,
        el_on, el_t0, el_t1, el_dev, el_kind, el_ok, el_n):
    """Run the simulation from t0 to t_end under one ED-threshold pair."""
    n = ip[IP_N]
    slot = ip[IP_SLOT]
    mini = ip[IP_MINI]
    deadline = ip[IP_DEADLINE]
    ue_cat4 = ip[IP_UECAT4] != 0
    filebits = fp[FP_FILEBITS]

    # thresholds or gains may have changed between intervals: refresh the
    # sums and verdicts before any event is processed
    _recompute_sums(n, roles, ptx_mw, gains, em_kind, cs_sum, ed_sum, ap_sum)
    _apply_cca(t0, ip, fp, ed_w_mw, ed_n_mw, roles, cs_sum, ed_sum, ap_sum,
               cca_idle, cca_since, phase, t_fire, bk_n, bk_anchor)
    _update_decodes(n, roles, ptx_mw, gains, em_kind, em_rx, em_ok, fp)
    cca_dirty = np.int64(-1)

    while True:
        # ---- next event time ------------------------------------------------
        t_next = t_end
        if cca_dirty >= 0 and cca_dirty < t_next:
            t_next = cca_dirty
        for i in range(n):
            if t_fire[i] < t_next:
                t_next = t_fire[i]
            if em_kind[i] != K_NONE and em_end[i] < t_next:
                t_next = em_end[i]
            if pend_kind[i] != K_NONE and pend_start[i] < t_next:
                t_next = pend_start[i]
            nxt = arr_ptr[i]
            if nxt < joff[i] + jcnt[i] and j_arr[nxt] < t_next:
                t_next = j_arr[nxt]
            h = head[i]
            if h >= 0:
                dl = j_arr[h] + deadline + 1
                if dl < t_next:
                    t_next = dl
        if t_next >= t_end:
            break
        now = t_next
        changed = False

        # ---- (a) delayed sensing update -------------------------------------
        if cca_dirty == now:
            _apply_cca(now, ip, fp, ed_w_mw, ed_n_mw, roles, cs_sum, ed_sum,
                       ap_sum, cca_idle, cca_since, phase, t_fire, bk_n, bk_anchor)
            cca_dirty = -1

        # ---- (b) deadline drops (drop wins ties with completion) ------------
        for i in range(n):
            h = head[i]
            if h < 0 or j_arr[h] > now or now <= j_arr[h] + deadline:
                continue
            role = roles[i]
            j_status[h] = J_DROP
            if role == R_STA:
                cnt[CNT_DROPW] += 1
            else:
                cnt[CNT_DROPN] += 1
            # abort the in-flight burst (STA/UE only ever emit for their head)
            if em_kind[i] != K_NONE:
                _clear_emission(i, now, em_kind, em_start, em_end, em_rx,
                                em_job, em_bits, em_ok, el_on, el_t0, el_t1,
                                el_dev, el_kind, el_ok, el_n)
                changed = True
            if role == R_UE:
                if grant_ps[i] != -1:
                    grant_ps[i] = -1
                    g = base_of[i]
                    if g_txn[g] == i:
                        g_txn[g] = -1
                        if phase[g] == PH_GWAIT:
                            phase[g] = PH_IDLE
                            t_fire[g] = INF
                if phase[i] != PH_UFB:
                    phase[i] = PH_IDLE
                    t_fire[i] = INF
                cw[i] = ip[IP_CWMIN]
                if phase[i] != PH_BO:
                    bk_n[i] = -1
            elif role == R_STA:
                cw[i] = ip[IP_CWMIN]
                if phase[i] != PH_BO and phase[i] != PH_CONT:
                    bk_n[i] = -1
            _advance_head(i, now, ip, roles, j_arr, j_status, head, joff, jcnt, cnt)
            # re-route the device toward its next job
            if role == R_STA:
                if phase[i] == PH_TX:  # burst was aborted above
                    if _backlogged(i, now, j_arr, head):
                        _enter_cont(i, now, ip, roles, cca_idle, cca_since, phase, t_fire)
                    else:
                        phase[i] = PH_IDLE
                        t_fire[i] = INF
                elif (phase[i] == PH_CONT or phase[i] == PH_BO) and \
                        not _backlogged(i, now, j_arr, head):
                    phase[i] = PH_IDLE
                    t_fire[i] = INF
            else:
                _maybe_start_gnb(base_of[i], now, ip, roles, base_of, j_arr,
                                 head, grant_ps, cca_idle, cca_since, phase, t_fire)

        # ---- (c) emission ends ----------------------------------------------
        for i in range(n):
            if em_kind[i] == K_NONE or em_end[i] != now:
                continue
            kind = em_kind[i]
            ok = em_ok[i]
            start = em_start[i]
            job = em_job[i]
            bits = em_bits[i]
            rx = em_rx[i]
            _clear_emission(i, now, em_kind, em_start, em_end, em_rx, em_job,
                            em_bits, em_ok, el_on, el_t0, el_t1, el_dev,
                            el_kind, el_ok, el_n)
            changed = True
            role = roles[i]

            if kind == K_DATA and role == R_STA:
                if ok == 1:
                    cnt[CNT_SEGOK_W] += 1
                ap = rx
                acked = 0
                if ok == 1 and pend_kind[ap] == K_NONE and em_kind[ap] == K_NONE:
                    pend_kind[ap] = K_ACK
                    pend_start[ap] = now + ip[IP_SIFS]
                    pend_end[ap] = now + ip[IP_SIFS] + ip[IP_ACK]
                    pend_rx[ap] = i
                    pend_job[ap] = -1
                    pend_bits[ap] = 0.0
                    pend_ok[ap] = 1
                    acked = 1
                last_ok[i] = acked
                last_bits[i] = bits
                last_job[i] = job
                phase[i] = PH_ACKWAIT
                t_fire[i] = now + ip[IP_SIFS] + ip[IP_ACK]

            elif kind == K_DATA and role == R_UE:
                if ok == 1:
                    cnt[CNT_SEGOK_N] += 1
                g = base_of[i]
                if pend_kind[g] != K_NONE or em_kind[g] != K_NONE:
                    raise ValueError("gNB busy at feedback time")
                pend_kind[g] = K_ACK
                pend_start[g] = now + ip[IP_CAT1GAP]
                pend_end[g] = now + ip[IP_CAT1GAP] + ip[IP_ACK]
                pend_rx[g] = i
                pend_job[g] = job
                pend_bits[g] = bits
                pend_ok[g] = ok
                last_ok[i] = ok
                phase[i] = PH_UFB
                t_fire[i] = now + ip[IP_CAT1GAP] + ip[IP_ACK]

            elif kind == K_RS and role == R_GNB:
                # occupancy held to the boundary: transmit the PDCCH
                _gnb_pdcch_start(i, now, ip, fp, roles, base_of, j_arr, j_served,
                                 j_status, head, grant_ps, grant_dur, g_txn,
                                 phase, t_fire, cca_idle, cca_since,
                                 em_kind, em_start, em_end, em_rx, em_job,
                                 em_bits, em_ok)

            elif kind == K_RS and role == R_UE:
                # reserved signal ran to the boundary: transmit the PUSCH
                h = head[i]
                if grant_ps[i] == -2 and h >= 0 and j_status[h] == J_PEND:
                    rs_len = now - start
                    budget = ip[IP_MCOT] - rs_len
                    rem = filebits - j_served[h]
                    dur = _seg_airtime(rem, fp[FP_RATE_N], budget)
                    if dur > 0:
                        segbits = rem if rem < dur * fp[FP_RATE_N] else dur * fp[FP_RATE_N]
                        _start_emission(i, K_DATA, now, now + dur, base_of[i], h,
                                        segbits, 1, em_kind, em_start, em_end,
                                        em_rx, em_job, em_bits, em_ok)
                        cnt[CNT_SEGTX_N] += 1
                        phase[i] = PH_TX
                        t_fire[i] = INF
                    else:
                        phase[i] = PH_IDLE
                        t_fire[i] = INF
                else:
                    phase[i] = PH_IDLE
                    t_fire[i] = INF

            elif kind == K_PDCCH:
                # grant delivery instant
                ue = g_txn[i]
                valid = ue >= 0 and _backlogged(ue, now, j_arr, head)
                if valid:
                    if ue_cat4:
                        grant_ps[ue] = -2
                        bk_n[ue] = -1
                        _enter_cont(ue, now, ip, roles, cca_idle, cca_since,
                                    phase, t_fire)
                    else:
                        phase[ue] = PH_UPWAIT
                        t_fire[ue] = grant_ps[ue]
                    phase[i] = PH_GWAIT
                    t_fire[i] = INF
                else:
                    if ue >= 0:
                        grant_ps[ue] = -1
                    g_txn[i] = -1
                    phase[i] = PH_IDLE
                    t_fire[i] = INF
                    _maybe_start_gnb(i, now, ip, roles, base_of, j_arr, head,
                                     grant_ps, cca_idle, cca_since, phase, t_fire)

            elif kind == K_ACK and role == R_GNB:
                # ACK/NACK burst over: resolve the transaction on the gNB side
                ue = rx
                if ok == 1 and job >= 0 and j_status[job] == J_PEND:
                    j_served[job] += bits
                    if j_served[job] >= filebits - 1e-6:
                        j_status[job] = J_DONE
                        j_dep[job] = now
                        cnt[CNT_NN] += 1
                        _advance_head(ue, now, ip, roles, j_arr, j_status,
                                      head, joff, jcnt, cnt)
                if g_txn[i] == ue:
                    g_txn[i] = -1
                    grant_ps[ue] = -1
                if phase[i] == PH_GWAIT:
                    phase[i] = PH_IDLE
                    t_fire[i] = INF
                _maybe_start_gnb(i, now, ip, roles, base_of, j_arr, head,
                                 grant_ps, cca_idle, cca_since, phase, t_fire)
            # K_ACK from an AP needs no follow-up: the STA's own timer resolves

        # ---- (d) arrivals -----------------------------------------------------
        for i in range(n):
            stop = joff[i] + jcnt[i]
            while arr_ptr[i] < stop and j_arr[arr_ptr[i]] == now:
                j = arr_ptr[i]
                arr_ptr[i] += 1
                role = roles[i]
                if role == R_STA and phase[i] == PH_IDLE and head[i] == j:
                    if cca_idle[i] != 0 and now - cca_since[i] >= ip[IP_DIFS]:
                        # idle for a full DIFS already: transmit immediately
                        rem = filebits - j_served[j]
                        dur = _seg_airtime(rem, fp[FP_RATE_W], ip[IP_TXOP])
                        segbits = rem if rem < dur * fp[FP_RATE_W] else dur * fp[FP_RATE_W]
                        _start_emission(i, K_DATA, now, now + dur, base_of[i], j,
                                        segbits, 1, em_kind, em_start, em_end,
                                        em_rx, em_job, em_bits, em_ok)
                        cnt[CNT_SEGTX_W] += 1
                        phase[i] = PH_TX
                        t_fire[i] = INF
                        changed = True
                    else:
                        _enter_cont(i, now, ip, roles, cca_idle, cca_since,
                                    phase, t_fire)
                elif role == R_UE:
                    _maybe_start_gnb(base_of[i], now, ip, roles, base_of, j_arr,
                                     head, grant_ps, cca_idle, cca_since,
                                     phase, t_fire)

        # ---- (e) scheduled bursts start (AP ACKs, gNB feedback) ---------------
        for i in range(n):
            if pend_kind[i] != K_NONE and pend_start[i] == now:
                _start_emission(i, pend_kind[i], now, pend_end[i], pend_rx[i],
                                pend_job[i], pend_bits[i], pend_ok[i],
                                em_kind, em_start, em_end, em_rx, em_job,
                                em_bits, em_ok)
                pend_kind[i] = K_NONE
                changed = True

        # ---- (f) MAC timers ----------------------------------------------------
        for i in range(n):
            while t_fire[i] == now:
                ph = phase[i]
                role = roles[i]

                if ph == PH_CONT:
                    phase[i] = PH_BO
                    if bk_n[i] < 0:
                        bk_n[i] = rng_draw(rng_state, cw[i])
                    bk_anchor[i] = now
                    t_fire[i] = now + slot * bk_n[i]

                elif ph == PH_BO:
                    # backoff complete (cca is idle, else the flip parked us)
                    if role == R_STA:
                        h = head[i]
                        if h < 0 or j_status[h] != J_PEND or j_arr[h] > now:
                            phase[i] = PH_IDLE
                            t_fire[i] = INF
                        else:
                            rem = filebits - j_served[h]
                            dur = _seg_airtime(rem, fp[FP_RATE_W], ip[IP_TXOP])
                            segbits = rem if rem < dur * fp[FP_RATE_W] else dur * fp[FP_RATE_W]
                            _start_emission(i, K_DATA, now, now + dur, base_of[i],
                                            h, segbits, 1, em_kind, em_start,
                                            em_end, em_rx, em_job, em_bits, em_ok)
                            cnt[CNT_SEGTX_W] += 1
                            phase[i] = PH_TX
                            t_fire[i] = INF
                            changed = True
                    elif role == R_GNB:
                        ssb = next_ssb(now, mini)
                        if ssb > now:
                            _start_emission(i, K_RS, now, ssb, -1, -1, 0.0, 1,
                                            em_kind, em_start, em_end, em_rx,
                                            em_job, em_bits, em_ok)
                            phase[i] = PH_RS
                            t_fire[i] = INF
                            changed = True
                        else:
                            _gnb_pdcch_start(i, now, ip, fp, roles, base_of,
                                             j_arr, j_served, j_status, head,
                                             grant_ps, grant_dur, g_txn, phase,
                                             t_fire, cca_idle, cca_since,
                                             em_kind, em_start, em_end, em_rx,
                                             em_job, em_bits, em_ok)
                            if em_kind[i] != K_NONE:
                                changed = True
                    else:  # UE with a Cat4 grant
                        h = head[i]
                        if grant_ps[i] != -2 or h < 0 or j_status[h] != J_PEND:
                            phase[i] = PH_IDLE
                            t_fire[i] = INF
                        else:
                            ssb = next_ssb(now, mini)
                            if ssb > now:
                                _start_emission(i, K_RS, now, ssb, -1, -1, 0.0, 1,
                                                em_kind, em_start, em_end, em_rx,
                                                em_job, em_bits, em_ok)
                                phase[i] = PH_RS
                                t_fire[i] = INF
                            else:
                                rem = filebits - j_served[h]
                                dur = _seg_airtime(rem, fp[FP_RATE_N], ip[IP_MCOT])
                                segbits = rem if rem < dur * fp[FP_RATE_N] else dur * fp[FP_RATE_N]
                                _start_emission(i, K_DATA, now, now + dur,
                                                base_of[i], h, segbits, 1,
                                                em_kind, em_start, em_end, em_rx,
                                                em_job, em_bits, em_ok)
                                cnt[CNT_SEGTX_N] += 1
                                phase[i] = PH_TX
                                t_fire[i] = INF
                            changed = True

                elif ph == PH_ACKWAIT:
                    j = last_job[i]
                    if j >= 0 and j_status[j] == J_PEND:
                        if last_ok[i] == 1:
                            j_served[j] += last_bits[i]
                            cw[i] = ip[IP_CWMIN]
                            if j_served[j] >= filebits - 1e-6:
                                j_status[j] = J_DONE
                                j_dep[j] = now
                                cnt[CNT_NW] += 1
                                _advance_head(i, now, ip, roles, j_arr, j_status,
                                              head, joff, jcnt, cnt)
                        else:
                            cw[i] = 2 * cw[i]
                            if cw[i] > ip[IP_CWMAX]:
                                cw[i] = ip[IP_CWMAX]
                    else:
                        cw[i] = ip[IP_CWMIN]
                    bk_n[i] = -1
                    if _backlogged(i, now, j_arr, head):
                        _enter_cont(i, now, ip, roles, cca_idle, cca_since,
                                    phase, t_fire)
                    else:
                        phase[i] = PH_IDLE
                        t_fire[i] = INF

                elif ph == PH_UPWAIT:
                    # Cat2 gate at pusch_start: trailing 25 us must be idle
                    h = head[i]
                    ok2 = cca_idle[i] != 0 and now - cca_since[i] >= ip[IP_CAT2]
                    valid = h >= 0 and j_status[h] == J_PEND and grant_ps[i] == now
                    if ok2 and valid:
                        rem = filebits - j_served[h]
                        dur = grant_dur[i]
                        if dur > 0:
                            segbits = rem if rem < dur * fp[FP_RATE_N] else dur * fp[FP_RATE_N]
                            _start_emission(i, K_DATA, now, now + dur, base_of[i],
                                            h, segbits, 1, em_kind, em_start,
                                            em_end, em_rx, em_job, em_bits, em_ok)
                            cnt[CNT_SEGTX_N] += 1
                            phase[i] = PH_TX
                            t_fire[i] = INF
                            changed = True
                        else:
                            valid = False
                    if not (ok2 and valid):
                        # grant void: the gNB must re-contend and reschedule
                        grant_ps[i] = -1
                        phase[i] = PH_IDLE
                        t_fire[i] = INF
                        g = base_of[i]
                        if g_txn[g] == i:
                            g_txn[g] = -1
                            if phase[g] == PH_GWAIT:
                                phase[g] = PH_IDLE
                                t_fire[g] = INF
                            _maybe_start_gnb(g, now, ip, roles, base_of, j_arr,
                                             head, grant_ps, cca_idle, cca_since,
                                             phase, t_fire)

                elif ph == PH_UFB:
                    if ue_cat4:
                        if last_ok[i] == 1:
                            cw[i] = ip[IP_CWMIN]
                        else:
                            cw[i] = 2 * cw[i]
                            if cw[i] > ip[IP_CWMAX]:
                                cw[i] = ip[IP_CWMAX]
                        bk_n[i] = -1
                    phase[i] = PH_IDLE
                    t_fire[i] = INF

                else:
                    raise ValueError("timer fired in an unexpected phase")

        # ---- (g) sensing/decoding refresh --------------------------------------
        if changed:
            _recompute_sums(n, roles, ptx_mw, gains, em_kind, cs_sum, ed_sum, ap_sum)
            _update_decodes(n, roles, ptx_mw, gains, em_kind, em_rx, em_ok, fp)
            cca_dirty = now + 1


def _gnb_pdcch_start(g, now, ip, fp, roles, base_of, j_arr, j_served, j_status,
                     head, grant_ps, grant_dur, g_txn, phase, t_fire,
                     cca_idle, cca_since, em_kind, em_start, em_end, em_rx,
                     em_job, em_bits, em_ok):
    """The gNB holds the channel at a boundary: pick a UE and send its grant."""
    ue = _select_ue(g, now, ip, roles, base_of, j_arr, head, grant_ps)
    if ue < 0:
        g_txn[g] = -1
        phase[g] = PH_IDLE
        t_fire[g] = INF
        return
    g_txn[g] = ue
    pdcch_end = now + ip[IP_PDCCH]
    if ip[IP_UECAT4] == 0:
        h = head[ue]
        grant_ps[ue] = next_ssb(pdcch_end + ip[IP_GDELAY], ip[IP_MINI])
        rem = fp[FP_FILEBITS] - j_served[h]
        grant_dur[ue] = _seg_airtime(rem, fp[FP_RATE_N], ip[IP_MCOT])
    else:
        grant_ps[ue] = -2
    _start_emission(g, K_PDCCH, now, pdcch_end, ue, -1, 0.0, 1,
                    em_kind, em_start, em_end, em_rx, em_job, em_bits, em_ok)
    phase[g] = PH_TX
    t_fire[g] = INF


# jit-compiled clones (module-level so helpers resolve to compiled versions)
rng_next_u64 = maybe_njit(rng_next_u64)
rng_draw = maybe_njit(rng_draw)
next_ssb = maybe_njit(next_ssb)
_recompute_sums = maybe_njit(_recompute_sums)
_update_decodes = maybe_njit(_update_decodes)
_idle_verdict = maybe_njit(_idle_verdict)
_req_idle = maybe_njit(_req_idle)
_apply_cca = maybe_njit(_apply_cca)
_enter_cont = maybe_njit(_enter_cont)
_start_emission = maybe_njit(_start_emission)
_log_emission = maybe_njit(_log_emission)
_clear_emission = maybe_njit(_clear_emission)
_advance_head = maybe_njit(_advance_head)
_backlogged = maybe_njit(_backlogged)
_select_ue = maybe_njit(_select_ue)
_maybe_start_gnb = maybe_njit(_maybe_start_gnb)
_seg_airtime = maybe_njit(_seg_airtime)
_gnb_pdcch_start = maybe_njit(_gnb_pdcch_start)
run_interval = maybe_njit(run_interval)
