"""Channel-access state machines at 1 us tick resolution.

Two machines share the same deferral/backoff skeleton:

* WiFi CSMA/CA: DIFS sensing, uniform backoff over [0, CW] decremented one
  per 9 us idle slot, CW doubling on failure up to CW_max, full-TXOP data
  burst followed by SIFS + ACK.
* NR-U LBT Cat4: the same skeleton with the 79 us Defer interval, plus the
  spectrum-slot constraint: data may start only on a mini-slot boundary, so
  a reserved signal pads from backoff completion to the next boundary.
  Cat2 is a plain trailing-25 us idle check; Cat1 is a gap test.

The step functions here are the tick-level semantic reference (and the unit
test surface).  The production event loop in ``simcore._kernel`` advances
the same machines with analytic time skips; the invariants it must match
are defined by these functions.  Tick convention: the ``cca_idle`` fed to a
step at tick t is the verdict computed from emissions active at t-1, and
phase transitions whose conditions were met by previous ticks are taken
before the current tick's idleness is accumulated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .traffic import FileJob

SLOT_US = 9
DIFS_US = 34
SIFS_US = 16
ACK_US = 32
DEFER_US = 79
CAT2_IDLE_US = 25
CAT1_GAP_US = 16
MINI_SLOT_US = 36
TXOP_US = 2528
MCOT_US = 6000
CW_MIN = 16
CW_MAX = 1024
PDCCH_US = 36
GRANT_DELAY_US = 36


class Action(IntEnum):
    NONE = 0
    START_TX = 1
    START_ACK = 2
    START_RS = 3


class Phase(IntEnum):
    IDLE = 0
    CONTEND = 1      # waiting for DIFS/Defer worth of continuous idle
    BACKOFF = 2
    RS = 3
    TX = 4
    AWAIT_ACK = 5
    ACK_PENDING = 6  # responder counting down SIFS before its ACK


@dataclass
class SlotClock:
    """Microsecond clock with the NR-U mini-slot grid."""
    now_us: int = 0
    mini_slot_us: int = MINI_SLOT_US

    def next_ssb(self, t: int | None = None) -> int:
        t = self.now_us if t is None else t
        rem = t % self.mini_slot_us
        return t if rem == 0 else t + (self.mini_slot_us - rem)

    def tick(self, dt: int = 1) -> None:
        self.now_us += dt


def draw_backoff(rng: np.random.Generator, cw: int) -> int:
    """Uniform integer backoff in [0, cw], inclusive."""
    return int(rng.integers(0, cw + 1))


@dataclass
class CsmaContext:
    cw: int = CW_MIN
    cw_min: int = CW_MIN
    cw_max: int = CW_MAX
    n: int = -1                  # -1 = fresh draw needed on backoff entry
    phase: Phase = Phase.IDLE
    idle_run: int = 0            # continuous sensed-idle microseconds
    slot_acc: int = 0
    has_packet: bool = False
    difs_us: int = DIFS_US
    slot_us: int = SLOT_US
    sifs_acc: int = 0

    def on_arrival(self) -> Action:
        """A packet reaches an empty queue: transmit at once if the channel
        has already been idle for a full DIFS, otherwise contend."""
        self.has_packet = True
        if self.phase != Phase.IDLE:
            return Action.NONE
        if self.idle_run >= self.difs_us:
            self.phase = Phase.TX
            return Action.START_TX
        self.phase = Phase.CONTEND
        return Action.NONE

    def on_tx_result(self, success: bool) -> None:
        """Doubling on failure, reset to the minimum on success."""
        if success:
            self.cw = self.cw_min
        else:
            self.cw = min(2 * self.cw, self.cw_max)
        self.n = -1


def csma_step(ctx: CsmaContext, cca_idle: bool, dt: int = 1,
              rng: np.random.Generator | None = None) -> Action:
    """Advance the CSMA/CA machine by one tick; returns the action taken."""
    if dt != 1:
        raise ValueError("the reference machine is defined at 1 us ticks")
    action = Action.NONE

    if ctx.phase == Phase.CONTEND and cca_idle and ctx.idle_run >= ctx.difs_us:
        # DIFS satisfied by previous ticks: enter (or resume) backoff now
        ctx.phase = Phase.BACKOFF
        ctx.slot_acc = 0
        if ctx.n < 0:
            ctx.n = draw_backoff(rng, ctx.cw)

    if ctx.phase == Phase.BACKOFF:
        if not cca_idle:
            # freeze: discard partial-slot progress, re-sense a full DIFS
            ctx.phase = Phase.CONTEND
            ctx.slot_acc = 0
        elif ctx.n == 0:
            ctx.phase = Phase.TX
            action = Action.START_TX
        else:
            ctx.slot_acc += 1
            if ctx.slot_acc >= ctx.slot_us:
                ctx.slot_acc = 0
                ctx.n -= 1

    if ctx.phase == Phase.ACK_PENDING:
        ctx.sifs_acc += 1
        if ctx.sifs_acc >= SIFS_US:
            ctx.sifs_acc = 0
            ctx.phase = Phase.IDLE
            action = Action.START_ACK

    ctx.idle_run = ctx.idle_run + 1 if cca_idle else 0
    return action


@dataclass
class LbtContext:
    """NR-U listen-before-talk context (Cat4 backoff or Cat2/Cat1 gating)."""
    category: int = 4
    cw: int = CW_MIN
    cw_min: int = CW_MIN
    cw_max: int = CW_MAX
    n: int = -1
    phase: Phase = Phase.IDLE
    idle_run: int = 0
    slot_acc: int = 0
    defer_us: int = DEFER_US
    slot_us: int = SLOT_US
    mini_slot_us: int = MINI_SLOT_US
    mcot_budget_us: int = MCOT_US
    rs_until: int = -1

    def begin(self) -> None:
        if self.phase == Phase.IDLE:
            self.phase = Phase.CONTEND

    def on_tx_result(self, success: bool) -> None:
        if success:
            self.cw = self.cw_min
        else:
            self.cw = min(2 * self.cw, self.cw_max)
        self.n = -1


def lbt_cat4_step(ctx: LbtContext, cca_idle: bool, dt: int = 1,
                  rng: np.random.Generator | None = None,
                  clock: SlotClock | None = None) -> Action:
    """One tick of Cat4 LBT: Defer, backoff, then RS-pad to the mini-slot.

    Returns START_RS when backoff completes off-boundary (the reserved
    signal then runs until the boundary) and START_TX at the boundary
    itself.
    """
    if dt != 1:
        raise ValueError("the reference machine is defined at 1 us ticks")
    now = clock.now_us
    action = Action.NONE

    if ctx.phase == Phase.RS and now >= ctx.rs_until:
        ctx.phase = Phase.TX
        ctx.idle_run = 0
        return Action.START_TX

    if ctx.phase == Phase.CONTEND and cca_idle and ctx.idle_run >= ctx.defer_us:
        ctx.phase = Phase.BACKOFF
        ctx.slot_acc = 0
        if ctx.n < 0:
            ctx.n = draw_backoff(rng, ctx.cw)

    if ctx.phase == Phase.BACKOFF:
        if not cca_idle:
            ctx.phase = Phase.CONTEND
            ctx.slot_acc = 0
        elif ctx.n == 0:
            ssb = clock.next_ssb(now)
            if ssb == now:
                ctx.phase = Phase.TX
                action = Action.START_TX
            else:
                ctx.phase = Phase.RS
                ctx.rs_until = ssb
                action = Action.START_RS
        else:
            ctx.slot_acc += 1
            if ctx.slot_acc >= ctx.slot_us:
                ctx.slot_acc = 0
                ctx.n -= 1

    ctx.idle_run = ctx.idle_run + 1 if cca_idle else 0
    return action


def lbt_cat2_check(idle_history) -> bool:
    """Cat2 gate: the trailing 25 us must all be idle (False if the history
    is too short to tell)."""
    hist = list(idle_history)
    if len(hist) < CAT2_IDLE_US:
        return False
    return all(hist[-CAT2_IDLE_US:])


def cat1_allowed(gap_us: float) -> bool:
    """Cat1 ("no LBT") applies when the switching gap is at most 16 us."""
    if gap_us < 0:
        raise ValueError("gap must be non-negative")
    return gap_us <= CAT1_GAP_US


def transmission_length(job: FileJob, rate_mbps: float, cot_budget_us: int) -> int:
    """Airtime in whole microseconds for the next segment of ``job``.

    The file is segmented across channel occupancies: each grab carries
    min(remaining, budget * rate) bits, rounded up to the 1 us tick.
    """
    if cot_budget_us <= 0:
        raise ValueError("channel-occupancy budget must be positive")
    if rate_mbps <= 0:
        raise ValueError("rate must be positive")
    remaining = job.remaining_bits
    if remaining <= 0:
        return 0
    return min(int(math.ceil(remaining / rate_mbps)), int(cot_budget_us))


@dataclass(frozen=True)
class Grant:
    ue_id: int
    pusch_start_us: int
    pusch_duration_us: int
    issue_time_us: int
    lbt_category: int  # 2 or 4


def gnb_schedule(gnb_id: int, queues: dict, mode: str, clock: SlotClock,
                 rate_mbps: float = 25.2, mcot_us: int = MCOT_US,
                 pdcch_us: int = PDCCH_US,
                 grant_delay_us: int = GRANT_DELAY_US) -> Grant | None:
    """Pick the UE whose head-of-queue file arrived first and build its grant.

    Called when the gNB's own Cat4 LBT has succeeded and it is about to hold
    the channel for the PDCCH.  Ties break to the lowest UE id.  Returns
    None when no UE is backlogged.
    """
    if mode not in ("UE-Cat2", "UE-Cat4"):
        raise ValueError(f"unknown scheduling mode {mode!r}")
    best = None
    for ue_id in sorted(queues):
        head = queues[ue_id].head()
        if head is None or head.remaining_bits <= 0:
            continue
        if best is None or head.arrival_s < best[1]:
            best = (ue_id, head.arrival_s, head)
    if best is None:
        return None
    ue_id, _, head = best
    pdcch_end = clock.now_us + pdcch_us
    pusch_start = clock.next_ssb(pdcch_end + grant_delay_us)
    duration = transmission_length(head, rate_mbps, mcot_us)
    return Grant(ue_id, pusch_start, duration, clock.now_us,
                 2 if mode == "UE-Cat2" else 4)


def saturated_wifi_throughput_mbps(rate_mbps: float = 21.7, cw_min: int = CW_MIN,
                                   txop_us: int = TXOP_US) -> float:
    """Closed-form cycle rate of a lone saturated STA on a clean channel:
    payload / (DIFS + E[N] slots + TXOP + SIFS + ACK)."""
    cycle = DIFS_US + (cw_min / 2.0) * SLOT_US + txop_us + SIFS_US + ACK_US
    return txop_us * rate_mbps / cycle


def saturated_nru_throughput_mbps(rate_mbps: float = 25.2, cw_min: int = CW_MIN,
                                  mcot_us: int = MCOT_US,
                                  pdcch_us: int = PDCCH_US) -> float:
    """Closed-form cycle rate of a lone saturated UE under gNB-Cat4/UE-Cat4.

    One cycle: gNB defer + backoff + RS + PDCCH, then UE defer + backoff +
    RS + PUSCH; the ACK/NACK feedback rides inside the next defer (its 16 us
    gap + 32 us burst end before the 79 us defer completes).  Mean RS pad is
    half a mini-slot, and the PUSCH fills the occupancy budget MCOT - RS.
    The +1 terms mirror the one-tick sensing latency after a burst ends.
    """
    mean_rs = MINI_SLOT_US / 2.0
    mean_bo = (cw_min / 2.0) * SLOT_US
    gnb_part = (DEFER_US + 1) + mean_bo + mean_rs + pdcch_us
    ue_part = (DEFER_US + 1) + mean_bo + mean_rs
    pusch = mcot_us - mean_rs
    return pusch * rate_mbps / (gnb_part + ue_part + pusch)
