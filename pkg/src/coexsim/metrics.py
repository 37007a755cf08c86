"""Throughput accounting: per-interval success counters, cell/system
throughput over sliding windows, and user-perceived throughput (UPT).

A file counts toward the interval counters exactly once, when its transfer
completes.  UPT averages per-file throughput over every file that arrived,
with dropped files contributing zero.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field

from .traffic import DONE, DROPPED, FileJob

OUTCOME_DONE = "Done"
OUTCOME_UNFINISHED = "Unfinished"
OUTCOME_DROPPED = "Dropped"


@dataclass
class TtiCounters:
    """Successful transfers per decision interval, per network."""
    t: int = 0
    n_w: int = 0
    n_n: int = 0
    drops_w: int = 0
    drops_n: int = 0
    seg_tx_w: int = 0
    seg_ok_w: int = 0
    seg_tx_n: int = 0
    seg_ok_n: int = 0


def record_completion(counters: TtiCounters, job: FileJob, now_s: float,
                      is_wifi: bool) -> TtiCounters:
    """Mark ``job`` complete: stamp its departure and bump the network count."""
    job.state = DONE
    job.departure_s = now_s
    if is_wifi:
        counters.n_w += 1
    else:
        counters.n_n += 1
    return counters


@dataclass(frozen=True)
class UptRecord:
    throughput_mbps: float
    outcome: str


def upt_record(job: FileJob, t_end_s: float) -> UptRecord:
    """Per-file throughput: size over sojourn for finished files, served
    bits over elapsed time for unfinished ones, zero for drops."""
    if job.state == DROPPED:
        return UptRecord(0.0, OUTCOME_DROPPED)
    if job.state == DONE:
        mbps = job.size_bits / 1e6 / (job.departure_s - job.arrival_s)
        return UptRecord(mbps, OUTCOME_DONE)
    elapsed = t_end_s - job.arrival_s
    mbps = 0.0 if elapsed <= 0 else job.served_bits / 1e6 / elapsed
    return UptRecord(mbps, OUTCOME_UNFINISHED)


def upt(records) -> float | None:
    """Mean per-file throughput in Mbps; None when no file ever arrived."""
    records = list(records)
    if not records:
        return None
    return sum(r.throughput_mbps for r in records) / len(records)


def throughput(counters, file_mbit: float, window_s: float) -> tuple:
    """(wifi, nru, system) Mbps over a sequence of interval counters."""
    if window_s <= 0:
        raise ValueError("window must be positive")
    wifi = sum(c.n_w for c in counters) * file_mbit / window_s
    nru = sum(c.n_n for c in counters) * file_mbit / window_s
    return wifi, nru, wifi + nru


@dataclass
class RunSeries:
    """Per-interval time series accumulated during a test run."""
    tti_s: float
    file_mbit: float
    window_s: float = 1.0
    counters: list = field(default_factory=list)
    ed_wifi_dbm: list = field(default_factory=list)
    ed_nru_dbm: list = field(default_factory=list)

    def append(self, c: TtiCounters, ed_w: float, ed_n: float) -> None:
        self.counters.append(c)
        self.ed_wifi_dbm.append(ed_w)
        self.ed_nru_dbm.append(ed_n)

    def rows(self) -> list:
        """Sliding-window rows: time, throughputs, thresholds, drops."""
        win = max(1, int(round(self.window_s / self.tti_s)))
        out = []
        for i, c in enumerate(self.counters):
            lo = max(0, i + 1 - win)
            span = (i + 1 - lo) * self.tti_s
            chunk = self.counters[lo:i + 1]
            w, n, s = throughput(chunk, self.file_mbit, span)
            out.append((
                f"{(i + 1) * self.tti_s:.3f}", f"{w:.6f}", f"{n:.6f}", f"{s:.6f}",
                f"{self.ed_wifi_dbm[i]:.1f}", f"{self.ed_nru_dbm[i]:.1f}",
                sum(x.drops_w for x in chunk), sum(x.drops_n for x in chunk),
            ))
        return out

    def totals(self) -> dict:
        span = len(self.counters) * self.tti_s
        w, n, s = throughput(self.counters, self.file_mbit, span) if span else (0.0, 0.0, 0.0)
        return {
            "wifi_tput_mbps": w,
            "nru_tput_mbps": n,
            "sys_tput_mbps": s,
            "drops_wifi": sum(c.drops_w for c in self.counters),
            "drops_nru": sum(c.drops_n for c in self.counters),
        }


TIMESERIES_HEADER = ["time_s", "wifi_tput_mbps", "nru_tput_mbps", "sys_tput_mbps",
                     "ed_wifi_dbm", "ed_nru_dbm", "drops_wifi", "drops_nru"]
SUMMARY_HEADER = ["wifi_tput_mbps", "nru_tput_mbps", "sys_tput_mbps",
                  "wifi_upt_mbps", "nru_upt_mbps", "drops_wifi", "drops_nru"]
TRAINING_HEADER = ["episode", "mean_reward", "mean_sys_tput_mbps", "epsilon"]
ROUNDS_HEADER = ["round", "agent", "mean_reward", "param_l2_delta"]
TOPOLOGY_HEADER = ["device_id", "role", "x", "y", "z", "base_id"]


def write_csv(path: str, header: list, rows) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def write_summary(path: str, totals: dict, wifi_upt: float | None,
                  nru_upt: float | None) -> None:
    def fmt(v):
        return "" if v is None else f"{v:.6f}"

    row = [f"{totals['wifi_tput_mbps']:.6f}", f"{totals['nru_tput_mbps']:.6f}",
           f"{totals['sys_tput_mbps']:.6f}", fmt(wifi_upt), fmt(nru_upt),
           totals["drops_wifi"], totals["drops_nru"]]
    write_csv(path, SUMMARY_HEADER, [row])


def read_summary(path: str) -> dict:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if len(rows) != 1:
        raise ValueError(f"{path}: expected exactly one summary row")
    out = {}
    for key, raw in rows[0].items():
        out[key] = None if raw == "" else float(raw)
    return out
