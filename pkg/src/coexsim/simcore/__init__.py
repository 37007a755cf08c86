"""Deterministic simulation core.

``Simulator`` owns the flat state arrays consumed by the event-driven
kernel, rebuilds fading at coherence boundaries, and advances one agent
decision interval per :meth:`step_interval` call under the ED-threshold
pair chosen for that interval.  One simulator = one logical thread; run
many instances with distinct seeds for parallel experiments.

Random streams (topology, fading, traffic, backoff) are independent
children of the run seed, so replacing one consumer never perturbs the
others.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..channel import LinkGainTable, dbm_to_mw
from ..config import RunConfig
from ..metrics import TtiCounters
from ..scenario import ROLE_STA, Topology, build_topology
from ..traffic import DONE, DROPPED, IN_SERVICE, QUEUED, FileJob, build_episode_traffic
from . import _kernel as K


@dataclass
class EmissionRecord:
    start_us: int
    end_us: int
    device: int
    kind: int
    ok: bool


class Simulator:
    """Event simulator exposing the (reset, step_interval) environment core."""

    def __init__(self, cfg: RunConfig, seed: int, topology: Topology | None = None,
                 record_events: bool = False, event_capacity: int = 200_000):
        self.cfg = cfg
        self.seed = int(seed)
        self.topology = topology if topology is not None else build_topology(
            cfg, self._spawn_seed(0))
        self.gain_table = LinkGainTable(self.topology, cfg)

        self.n = len(self.topology.devices)
        self.roles = self.topology.roles().astype(np.int64)
        self.base_of = self.topology.base_of()
        self.ptx_mw = dbm_to_mw(self.topology.tx_power_dbm()).astype(np.float64)

        self.record_events = record_events or cfg.record_trace
        self._el_cap = int(event_capacity)

        self.ip = np.zeros(K.IP_LEN, dtype=np.int64)
        self.ip[K.IP_N] = self.n
        self.ip[K.IP_SLOT] = cfg.slot_us
        self.ip[K.IP_DIFS] = cfg.difs_us
        self.ip[K.IP_SIFS] = cfg.sifs_us
        self.ip[K.IP_ACK] = cfg.ack_us
        self.ip[K.IP_DEFER] = cfg.defer_us
        self.ip[K.IP_CAT2] = cfg.cat2_idle_us
        self.ip[K.IP_MINI] = cfg.mini_slot_us
        self.ip[K.IP_TXOP] = cfg.wifi_txop_us
        self.ip[K.IP_MCOT] = cfg.nru_mcot_us
        self.ip[K.IP_CWMIN] = cfg.cw_min
        self.ip[K.IP_CWMAX] = cfg.cw_max
        self.ip[K.IP_PDCCH] = cfg.pdcch_us
        self.ip[K.IP_GDELAY] = cfg.grant_delay_us
        self.ip[K.IP_DEADLINE] = int(round(cfg.deadline_s * 1e6))
        self.ip[K.IP_UECAT4] = 1 if cfg.ue_lbt == "cat4" else 0
        self.ip[K.IP_COUNT_AP] = 1 if cfg.count_ap_emissions else 0
        self.ip[K.IP_CAT1GAP] = cfg.cat1_gap_us

        self.fp = np.zeros(K.FP_LEN, dtype=np.float64)
        self.fp[K.FP_RATE_W] = cfg.wifi_rate_mbps      # bits per microsecond
        self.fp[K.FP_RATE_N] = cfg.nru_rate_mbps
        self.fp[K.FP_NOISE] = dbm_to_mw(cfg.noise_dbm)
        self.fp[K.FP_CS_MW] = dbm_to_mw(cfg.cs_wifi_dbm)
        self.fp[K.FP_ETA_W] = 10.0 ** (cfg.eta_wifi_db / 10.0)
        self.fp[K.FP_ETA_N] = 10.0 ** (cfg.eta_nru_db / 10.0)
        self.fp[K.FP_FILEBITS] = cfg.file_bits

        self.tti_us = cfg.tti_us
        self._coh_every = max(1, int(round(cfg.coherence_ms * 1000.0)) // cfg.tti_us)
        self._alloc_state()
        self._episode_ready = False

    # -- seeding -------------------------------------------------------------
    def _spawn_seed(self, stream: int, episode: int = 0) -> np.random.SeedSequence:
        return np.random.SeedSequence([self.seed, stream, episode])

    # -- state ----------------------------------------------------------------
    def _alloc_state(self) -> None:
        n = self.n
        i64 = lambda fill=0: np.full(n, fill, dtype=np.int64)
        f64 = lambda: np.zeros(n, dtype=np.float64)
        self.phase = i64()
        self.t_fire = i64(K.INF)
        self.bk_n = i64(-1)
        self.bk_anchor = i64()
        self.cw = i64(self.cfg.cw_min)
        self.cca_idle = i64(1)
        self.cca_since = i64()
        self.em_kind = i64()
        self.em_start = i64()
        self.em_end = i64()
        self.em_rx = i64(-1)
        self.em_job = i64(-1)
        self.em_bits = f64()
        self.em_ok = i64(1)
        self.pend_kind = i64()
        self.pend_start = i64(-1)
        self.pend_end = i64(-1)
        self.pend_rx = i64(-1)
        self.pend_job = i64(-1)
        self.pend_bits = f64()
        self.pend_ok = i64()
        self.last_ok = i64()
        self.last_bits = f64()
        self.last_job = i64(-1)
        self.grant_ps = i64(-1)
        self.grant_dur = i64()
        self.g_txn = i64(-1)
        self.cs_sum = f64()
        self.ed_sum = f64()
        self.ap_sum = f64()
        self.rng_state = np.zeros(1, dtype=np.uint64)
        self.cnt = np.zeros(K.CNT_LEN, dtype=np.int64)
        cap = self._el_cap if self.record_events else 1
        self.el_t0 = np.zeros(cap, dtype=np.int64)
        self.el_t1 = np.zeros(cap, dtype=np.int64)
        self.el_dev = np.zeros(cap, dtype=np.int64)
        self.el_kind = np.zeros(cap, dtype=np.int64)
        self.el_ok = np.zeros(cap, dtype=np.int64)
        self.el_n = np.zeros(2, dtype=np.int64)

    def reset(self, episode_seed: int, horizon_s: float) -> None:
        """Fresh traffic, MAC contexts and fading streams for one episode."""
        cfg = self.cfg
        self._traffic_rng = np.random.default_rng(self._spawn_seed(1, episode_seed))
        self._fading_rng = np.random.default_rng(self._spawn_seed(2, episode_seed))
        kern_seed = self._spawn_seed(3, episode_seed).generate_state(1, dtype=np.uint64)

        plan = build_episode_traffic(self.roles, horizon_s, cfg, self._traffic_rng)
        self.plan = plan
        nj = plan.n_jobs
        self.j_arr = plan.arrival_us.copy()
        self.j_served = np.zeros(nj, dtype=np.float64)
        self.j_status = np.zeros(nj, dtype=np.int64)
        self.j_dep = np.full(nj, -1, dtype=np.int64)
        self.joff = plan.offsets.copy()
        self.jcnt = plan.counts.copy()
        self.arr_ptr = plan.offsets.copy()
        self.head = np.where(self.jcnt > 0, self.joff, -1).astype(np.int64)

        self._alloc_state()
        self.rng_state[0] = kern_seed[0]
        self.t_now = 0
        self.interval_idx = 0
        self._episode_ready = True

    def step_interval(self, ed_wifi_dbm: float, ed_nru_dbm: float) -> TtiCounters:
        """Apply the threshold pair for one decision interval and run it."""
        if not self._episode_ready:
            raise RuntimeError("reset() must be called before step_interval()")
        if self.interval_idx % self._coh_every == 0:
            self.gain_table.refresh(self._fading_rng)
        t0 = self.t_now
        t1 = t0 + self.tti_us
        self.cnt[:] = 0
        with np.errstate(over="ignore"):  # splitmix64 wraps by design
            K.run_interval(
                t0, t1, self.ip, self.fp,
                float(dbm_to_mw(ed_wifi_dbm)), float(dbm_to_mw(ed_nru_dbm)),
                self.roles, self.base_of, self.ptx_mw, self.gain_table.gain,
                self.j_arr, self.j_served, self.j_status, self.j_dep,
                self.joff, self.jcnt, self.arr_ptr, self.head,
                self.phase, self.t_fire, self.bk_n, self.bk_anchor, self.cw,
                self.cca_idle, self.cca_since,
                self.em_kind, self.em_start, self.em_end, self.em_rx,
                self.em_job, self.em_bits, self.em_ok,
                self.pend_kind, self.pend_start, self.pend_end, self.pend_rx,
                self.pend_job, self.pend_bits, self.pend_ok,
                self.last_ok, self.last_bits, self.last_job,
                self.grant_ps, self.grant_dur, self.g_txn,
                self.rng_state, self.cs_sum, self.ed_sum, self.ap_sum, self.cnt,
                1 if self.record_events else 0,
                self.el_t0, self.el_t1, self.el_dev, self.el_kind, self.el_ok,
                self.el_n)
        self.t_now = t1
        self.interval_idx += 1
        c = self.cnt
        return TtiCounters(
            t=self.interval_idx - 1,
            n_w=int(c[K.CNT_NW]), n_n=int(c[K.CNT_NN]),
            drops_w=int(c[K.CNT_DROPW]), drops_n=int(c[K.CNT_DROPN]),
            seg_tx_w=int(c[K.CNT_SEGTX_W]), seg_ok_w=int(c[K.CNT_SEGOK_W]),
            seg_tx_n=int(c[K.CNT_SEGTX_N]), seg_ok_n=int(c[K.CNT_SEGOK_N]))

    # -- inspection -------------------------------------------------------------
    def emissions(self) -> list:
        """Completed/aborted emission records (requires record_events)."""
        if self.el_n[1]:
            raise RuntimeError("event log overflowed; raise event_capacity")
        m = int(self.el_n[0])
        return [EmissionRecord(int(self.el_t0[i]), int(self.el_t1[i]),
                               int(self.el_dev[i]), int(self.el_kind[i]),
                               bool(self.el_ok[i])) for i in range(m)]

    def trajectory_hash(self) -> int:
        """Order-sensitive hash of the emission log (determinism checks)."""
        m = int(self.el_n[0])
        blob = np.concatenate([self.el_t0[:m], self.el_t1[:m], self.el_dev[:m],
                               self.el_kind[:m], self.el_ok[:m]]).tobytes()
        import hashlib

        return int.from_bytes(hashlib.sha256(blob).digest()[:8], "big")

    def job_records(self, t_end_s: float) -> list:
        """Materialise FileJob records for UPT/conservation accounting."""
        out = []
        arrived = self.j_arr <= int(round(t_end_s * 1e6))
        for j in np.nonzero(arrived)[0]:
            dev = int(self.plan.device_of[j])
            state = {K.J_PEND: QUEUED, K.J_DONE: DONE, K.J_DROP: DROPPED}[int(self.j_status[j])]
            if state == QUEUED and self.j_served[j] > 0:
                state = IN_SERVICE
            job = FileJob(device_id=dev, size_bits=self.cfg.file_bits,
                          arrival_s=self.j_arr[j] / 1e6,
                          served_bits=float(self.j_served[j]), state=state)
            if state == DONE:
                job.departure_s = self.j_dep[j] / 1e6
            out.append(job)
        return out

    def wifi_jobs(self, t_end_s: float) -> list:
        return [j for j in self.job_records(t_end_s)
                if self.roles[j.device_id] == ROLE_STA]

    def nru_jobs(self, t_end_s: float) -> list:
        return [j for j in self.job_records(t_end_s)
                if self.roles[j.device_id] != ROLE_STA]
