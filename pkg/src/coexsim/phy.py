"""Sensing and decoding physics.

Carrier sense sums WiFi preamble energy (STA emissions, plus AP control
bursts unless the literal mode is selected); energy detection sums the
in-band power of every STA, UE and gNB emission.  A channel is idle only
when every applicable sum is strictly below its threshold (equality is
busy).  Data packets decode when the SINR at the receiver stays at or above
the network's threshold at every microsecond of the airtime, which is what
makes mid-packet hidden-node collisions fatal.

All sums are computed in linear milliwatts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import db_to_linear, dbm_to_mw
from .scenario import ROLE_AP, ROLE_GNB, ROLE_STA, ROLE_UE

KIND_DATA = 1
KIND_RS = 2
KIND_ACK = 3
KIND_PDCCH = 4


@dataclass(frozen=True)
class TransmissionEvent:
    """One on-air emission; the substrate of every sensing and SINR sum."""
    source: int
    power_dbm: float
    start_us: int
    end_us: int
    kind: int = KIND_DATA
    receiver: int = -1
    job: int = -1

    def __post_init__(self):
        if self.end_us <= self.start_us:
            raise ValueError("emission must have positive duration")

    def active_at(self, t_us: int) -> bool:
        return self.start_us <= t_us < self.end_us


@dataclass
class Thresholds:
    """Sensing and decoding thresholds; the ED pair is the agent's action."""
    cs_wifi_dbm: float = -82.0
    ed_wifi_dbm: float = -62.0
    ed_nru_dbm: float = -72.0
    eta_wifi_db: float = 9.0
    eta_nru_db: float = 5.5
    noise_dbm: float = -104.0

    @property
    def noise_mw(self) -> float:
        return float(dbm_to_mw(self.noise_dbm))


def _rx_mw(ev: TransmissionEvent, listener: int, gains: np.ndarray) -> float:
    return float(dbm_to_mw(ev.power_dbm)) * gains[ev.source, listener]


def cs_level_wifi(listener: int, active, roles: np.ndarray, gains: np.ndarray,
                  count_ap: bool = True) -> float:
    """WiFi carrier-sense level at ``listener`` in mW.

    Sums transmitting STAs other than the listener; AP bursts (ACKs) are
    included unless ``count_ap`` is False, which restores the literal
    STA-only sum.
    """
    total = 0.0
    for ev in active:
        if ev.source == listener:
            continue
        r = roles[ev.source]
        if r == ROLE_STA or (count_ap and r == ROLE_AP):
            total += _rx_mw(ev, listener, gains)
    return total


def ed_level_wifi(listener: int, active, roles: np.ndarray, gains: np.ndarray,
                  count_ap: bool = True) -> float:
    """WiFi energy-detection level in mW: all STA, UE and gNB emissions
    (and AP bursts unless literal mode), excluding the listener itself."""
    total = 0.0
    for ev in active:
        if ev.source == listener:
            continue
        r = roles[ev.source]
        if r in (ROLE_STA, ROLE_UE, ROLE_GNB) or (count_ap and r == ROLE_AP):
            total += _rx_mw(ev, listener, gains)
    return total


def ed_level_nru(listener: int, active, roles: np.ndarray, gains: np.ndarray) -> float:
    """NR-U energy-detection level in mW: STA, UE and gNB emissions other
    than the listener's own."""
    total = 0.0
    for ev in active:
        if ev.source == listener:
            continue
        if roles[ev.source] in (ROLE_STA, ROLE_UE, ROLE_GNB):
            total += _rx_mw(ev, listener, gains)
    return total


def cca_wifi(listener: int, active, roles, gains, thr: Thresholds,
             count_ap: bool = True) -> bool:
    """Idle iff both CS and ED are strictly below their thresholds."""
    cs = cs_level_wifi(listener, active, roles, gains, count_ap)
    ed = ed_level_wifi(listener, active, roles, gains, count_ap)
    return cs < dbm_to_mw(thr.cs_wifi_dbm) and ed < dbm_to_mw(thr.ed_wifi_dbm)


def cca_nru(listener: int, active, roles, gains, thr: Thresholds) -> bool:
    """Idle iff the ED sum is strictly below the NR-U threshold."""
    return ed_level_nru(listener, active, roles, gains) < dbm_to_mw(thr.ed_nru_dbm)


def sinr(tx: int, rx: int, active, ptx_dbm: np.ndarray, gains: np.ndarray,
         noise_dbm: float = -104.0) -> float:
    """SINR in dB of the tx -> rx link against every other active emission."""
    sig = float(dbm_to_mw(ptx_dbm[tx])) * gains[tx, rx]
    interference = float(dbm_to_mw(noise_dbm))
    for ev in active:
        if ev.source != tx:
            interference += _rx_mw(ev, rx, gains)
    return 10.0 * np.log10(sig / interference)


def decode(data: TransmissionEvent, events, ptx_dbm: np.ndarray,
           gains: np.ndarray, thr: Thresholds, eta_db: float | None = None) -> bool:
    """Worst-tick decoding: success iff SINR >= eta at every tick of airtime.

    ``events`` is the full emission set around the data burst; interference
    is piecewise constant between emission boundaries, so only boundary
    segments are evaluated.
    """
    if eta_db is None:
        eta_db = thr.eta_wifi_db  # caller picks the network threshold
    eta = float(db_to_linear(eta_db))
    sig = float(dbm_to_mw(data.power_dbm)) * gains[data.source, data.receiver]
    noise = thr.noise_mw

    cuts = {data.start_us, data.end_us}
    for ev in events:
        if ev is data:
            continue
        if ev.end_us > data.start_us and ev.start_us < data.end_us:
            cuts.add(max(ev.start_us, data.start_us))
            cuts.add(min(ev.end_us, data.end_us))
    marks = sorted(cuts)
    for t in marks[:-1]:
        interference = noise
        for ev in events:
            if ev is not data and ev.source != data.source and ev.active_at(t):
                interference += _rx_mw(ev, data.receiver, gains)
        if sig < eta * interference:
            return False
    return True
