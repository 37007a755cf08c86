"""Uplink file traffic: FTP-3 Poisson arrivals, Beta-modulated arrivals,
FCFS queues and deadline drops.

A FileJob is the unit of both service and throughput accounting: fixed
size, one arrival time, served bits accumulated across possibly many
channel occupancies, and a hard deadline after which it is dropped (even
mid-transmission).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import ConfigurationError

QUEUED = 0
IN_SERVICE = 1
DONE = 2
DROPPED = 3


@dataclass
class FileJob:
    device_id: int
    size_bits: float
    arrival_s: float
    served_bits: float = 0.0
    departure_s: float | None = None
    state: int = QUEUED

    @property
    def remaining_bits(self) -> float:
        return self.size_bits - self.served_bits


@dataclass
class DeviceQueue:
    """FCFS queue; the head is the only job that may be in service."""
    device_id: int
    jobs: list = field(default_factory=list)

    def push(self, job: FileJob) -> None:
        if self.jobs and job.arrival_s < self.jobs[-1].arrival_s:
            raise ValueError("arrivals must be pushed in time order")
        self.jobs.append(job)

    def head(self) -> FileJob | None:
        return self.jobs[0] if self.jobs else None


def generate_ftp3(lam: float, horizon_s: float, rng: np.random.Generator) -> np.ndarray:
    """Poisson arrival times over [0, horizon): i.i.d. exponential gaps."""
    if lam <= 0:
        raise ConfigurationError("FTP-3 arrival rate must be positive")
    if horizon_s < 0:
        raise ConfigurationError("horizon must be non-negative")
    if horizon_s == 0:
        return np.empty(0)
    times = []
    t = rng.exponential(1.0 / lam)
    while t < horizon_s:
        times.append(t)
        t += rng.exponential(1.0 / lam)
    return np.asarray(times)


def generate_beta(base_lam: float, horizon_s: float, rng: np.random.Generator,
                  a: float = 3.0, b: float = 4.0) -> np.ndarray:
    """Inhomogeneous Poisson arrivals with a Beta(a, b) intensity profile.

    The intensity is base_lam * Beta_pdf(t / horizon; a, b), which keeps the
    expected total count equal to the FTP-3 count for the same base rate
    while concentrating load around the Beta mode.
    """
    if base_lam <= 0:
        raise ConfigurationError("Beta traffic base rate must be positive")
    if horizon_s < 0:
        raise ConfigurationError("horizon must be non-negative")
    if horizon_s == 0:
        return np.empty(0)
    count = rng.poisson(base_lam * horizon_s)
    return np.sort(horizon_s * rng.beta(a, b, size=count))


def advance_queues(now_s: float, queues: list, deadline_s: float = 8.0) -> list:
    """Drop every queued or in-service job past its deadline.

    A job is dropped once ``now - arrival`` strictly exceeds the deadline;
    at exactly the deadline it is still alive.  Returns the dropped jobs.
    """
    dropped = []
    for q in queues:
        keep = []
        for job in q.jobs:
            if job.state in (QUEUED, IN_SERVICE) and now_s - job.arrival_s > deadline_s:
                job.state = DROPPED
                dropped.append(job)
            else:
                keep.append(job)
        q.jobs = keep
    return dropped


@dataclass
class EpisodeTraffic:
    """Flattened per-episode arrival plan consumed by the simulation kernel.

    Jobs are stored in one flat block per device (CSR layout): device ``i``
    owns job indices ``offsets[i] : offsets[i] + counts[i]``, sorted by
    arrival time.
    """
    arrival_us: np.ndarray     # int64, per job
    offsets: np.ndarray        # int64, per device
    counts: np.ndarray         # int64, per device
    device_of: np.ndarray      # int64, per job

    @property
    def n_jobs(self) -> int:
        return len(self.arrival_us)


def build_episode_traffic(roles: np.ndarray, horizon_s: float, cfg,
                          rng: np.random.Generator) -> EpisodeTraffic:
    """Draw arrivals for every STA/UE over the episode horizon.

    Devices are visited in id order with one spawned substream each, so the
    plan is deterministic per seed and independent of how other modules
    consume randomness.
    """
    from .scenario import ROLE_STA, ROLE_UE

    n = len(roles)
    per_dev = []
    streams = rng.spawn(n)
    for i in range(n):
        lam = cfg.lambda_wifi if roles[i] == ROLE_STA else \
            cfg.lambda_nru if roles[i] == ROLE_UE else 0.0
        if lam <= 0:
            per_dev.append(np.empty(0))
            continue
        if cfg.traffic_model == "beta":
            t = generate_beta(lam, horizon_s, streams[i], cfg.beta_a, cfg.beta_b)
        else:
            t = generate_ftp3(lam, horizon_s, streams[i])
        per_dev.append(t)

    counts = np.array([len(t) for t in per_dev], dtype=np.int64)
    offsets = np.zeros(n, dtype=np.int64)
    np.cumsum(counts[:-1], out=offsets[1:])
    total = int(counts.sum())
    arrival_us = np.zeros(total, dtype=np.int64)
    device_of = np.zeros(total, dtype=np.int64)
    for i, t in enumerate(per_dev):
        lo = offsets[i]
        # quantise to the next whole microsecond tick
        arrival_us[lo:lo + counts[i]] = np.ceil(t * 1e6).astype(np.int64)
        device_of[lo:lo + counts[i]] = i
    return EpisodeTraffic(arrival_us, offsets, counts, device_of)
