"""Indoor coexistence topology: bases on a fixed row, devices dropped at random.

Roles follow the uplink scenario: STAs transmit to their AP, UEs to their
gNB.  Bases sit at 3 m, devices at 1 m.  Each STA/UE associates with the
geometrically closest base of its own network (ties broken by lowest base
id), which makes association a pure function of positions and ids.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from .config import ConfigurationError, RunConfig

ROLE_STA = 0
ROLE_UE = 1
ROLE_AP = 2
ROLE_GNB = 3

ROLE_NAMES = {ROLE_STA: "STA", ROLE_UE: "UE", ROLE_AP: "AP", ROLE_GNB: "GNB"}


@dataclass(frozen=True)
class Position:
    x: float
    y: float
    z: float

    def dist3d(self, other: "Position") -> float:
        return math.sqrt((self.x - other.x) ** 2 + (self.y - other.y) ** 2
                         + (self.z - other.z) ** 2)

    def dist2d(self, other: "Position") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class Device:
    id: int
    role: int
    position: Position
    tx_power_dbm: float
    associated_base: int | None = None  # absent for AP/gNB

    @property
    def is_base(self) -> bool:
        return self.role in (ROLE_AP, ROLE_GNB)


@dataclass
class Topology:
    devices: list = field(default_factory=list)
    floor: tuple = (120.0, 50.0)
    rng_seed: int = 0

    def by_role(self, role: int) -> list:
        return [d for d in self.devices if d.role == role]

    def positions(self) -> np.ndarray:
        return np.array([[d.position.x, d.position.y, d.position.z] for d in self.devices])

    def roles(self) -> np.ndarray:
        return np.array([d.role for d in self.devices], dtype=np.int8)

    def tx_power_dbm(self) -> np.ndarray:
        return np.array([d.tx_power_dbm for d in self.devices])

    def base_of(self) -> np.ndarray:
        return np.array([-1 if d.associated_base is None else d.associated_base
                         for d in self.devices], dtype=np.int64)


def associate(dev: Device, bases: list) -> int:
    """Return the id of the closest base (3D distance, ties to lowest id)."""
    if not bases:
        raise ValueError("cannot associate against an empty base list")
    want = ROLE_AP if dev.role == ROLE_STA else ROLE_GNB if dev.role == ROLE_UE else None
    if want is None:
        raise ValueError(f"device {dev.id} has role {ROLE_NAMES[dev.role]}, not associable")
    for b in bases:
        if b.role != want:
            raise ValueError(
                f"role mismatch: {ROLE_NAMES[dev.role]} offered a {ROLE_NAMES[b.role]} base")
    best = min(bases, key=lambda b: (dev.position.dist3d(b.position), b.id))
    return best.id


def _base_xs(spec: str, count: int, width: float) -> list:
    if spec.strip():
        xs = [float(v) for v in spec.replace(";", ",").split(",") if v.strip()]
        if len(xs) != count:
            raise ConfigurationError(
                f"{len(xs)} base x-positions given for {count} bases")
        return xs
    # evenly spaced cell centres: width * (2k+1) / 2n
    return [width * (2 * k + 1) / (2 * count) for k in range(count)]


def _check_on_floor(x: float, y: float, cfg: RunConfig, what: str) -> None:
    if not (0.0 <= x <= cfg.floor_w and 0.0 <= y <= cfg.floor_d):
        raise ConfigurationError(f"{what} at ({x:.1f}, {y:.1f}) is outside the floor")


def _drop_device(rng, cfg: RunConfig, anchor: Position | None):
    """Uniform drop over the floor, or over a disc around ``anchor``."""
    if anchor is None or cfg.cluster_radius <= 0:
        return rng.uniform(0.0, cfg.floor_w), rng.uniform(0.0, cfg.floor_d)
    for _ in range(1000):
        r = cfg.cluster_radius * math.sqrt(rng.uniform())
        th = rng.uniform(0.0, 2.0 * math.pi)
        x, y = anchor.x + r * math.cos(th), anchor.y + r * math.sin(th)
        if 0.0 <= x <= cfg.floor_w and 0.0 <= y <= cfg.floor_d:
            return x, y
    raise ConfigurationError("cluster_radius leaves no room on the floor")


def build_topology(cfg: RunConfig, seed: int) -> Topology:
    """Deterministically build the topology for a given seed.

    Device ids are assigned in the order gNBs, APs, UEs, STAs; the MAC is
    stepped in ascending id order, so this ordering is part of the
    reproducible trajectory.
    """
    if cfg.n_gnb < 1 or cfg.n_ap < 1:
        raise ConfigurationError("need at least one base of each network")
    rng = np.random.default_rng(seed)
    devices: list = []

    gnb_xs = _base_xs(cfg.gnb_x, cfg.n_gnb, cfg.floor_w)
    ap_xs = _base_xs(cfg.ap_x, cfg.n_ap, cfg.floor_w)
    for x in gnb_xs:
        _check_on_floor(x, cfg.gnb_y, cfg, "gNB")
        devices.append(Device(len(devices), ROLE_GNB,
                              Position(x, cfg.gnb_y, cfg.base_z), cfg.tx_base_dbm))
    for x in ap_xs:
        _check_on_floor(x, cfg.ap_y, cfg, "AP")
        devices.append(Device(len(devices), ROLE_AP,
                              Position(x, cfg.ap_y, cfg.base_z), cfg.tx_base_dbm))

    gnbs = [d for d in devices if d.role == ROLE_GNB]
    aps = [d for d in devices if d.role == ROLE_AP]

    def drop(role, bases, per_cell):
        for base in bases:
            for _ in range(per_cell):
                x, y = _drop_device(rng, cfg, base.position if cfg.cluster_radius > 0 else None)
                dev = Device(len(devices), role, Position(x, y, cfg.dev_z), cfg.tx_dev_dbm)
                devices.append(dataclasses.replace(dev, associated_base=associate(dev, bases)))

    drop(ROLE_UE, gnbs, cfg.ue_per_gnb)
    drop(ROLE_STA, aps, cfg.sta_per_ap)
    return Topology(devices=devices, floor=(cfg.floor_w, cfg.floor_d), rng_seed=seed)


def topology_rows(topo: Topology) -> list:
    """Rows for the topology CSV: device id, role, x, y, z, base id."""
    rows = []
    for d in topo.devices:
        rows.append((d.id, ROLE_NAMES[d.role], f"{d.position.x:.3f}", f"{d.position.y:.3f}",
                     f"{d.position.z:.3f}", "" if d.associated_base is None else d.associated_base))
    return rows
