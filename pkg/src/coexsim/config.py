"""Run configuration: a flat parameter set with file + command-line overrides.

Every parameter has a default (Table-II-style constants or a documented
choice) so an empty config runs.  The config file format is flat
``key = value`` lines; ``#`` starts a comment.  Command-line ``--key value``
pairs override file values.
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field


class ConfigurationError(ValueError):
    """Invalid or inconsistent run configuration."""


MODES = ("baseline-fixed", "tabular", "centralized-ddqn", "federated-ddqn")

# Default ED grid: 3 dB steps from the -82 dBm regulatory floor up to -52 dBm.
DEFAULT_ED_GRID = (-82.0, -79.0, -76.0, -73.0, -70.0, -67.0, -64.0, -61.0,
                   -58.0, -55.0, -52.0)


@dataclass
class RunConfig:
    # -- experiment ---------------------------------------------------------
    mode: str = "baseline-fixed"
    seed: int = 0
    episodes: int = 200
    episode_s: float = 30.0
    test_s: float = 30.0            # frozen-policy test episode length
    out_dir: str = "out"
    ue_lbt: str = "cat4"            # cat2 | cat4 (gNB always Cat4)
    fairness: bool = False
    fairness_t_wifi_mbit: float = -1.0   # per decision interval; <0 = measure from baseline run
    record_trace: bool = False      # per-emission event log during test runs

    # -- scenario -----------------------------------------------------------
    floor_w: float = 120.0
    floor_d: float = 50.0
    n_gnb: int = 3
    n_ap: int = 3
    ue_per_gnb: int = 5
    sta_per_ap: int = 5
    gnb_x: str = ""                 # comma list; empty = evenly spaced
    ap_x: str = ""
    gnb_y: float = 20.0
    ap_y: float = 30.0
    base_z: float = 3.0
    dev_z: float = 1.0
    cluster_radius: float = 0.0     # 0 = uniform drop over the floor; >0 = disc around serving base

    # -- channel ------------------------------------------------------------
    carrier_ghz: float = 5.0
    coherence_ms: float = 100.0     # fading refresh period; multiple of tti_ms
    min_dist_m: float = 0.5         # clamp for near-coincident devices
    fading: bool = True             # False pins beta = 1 on every link
    los_mode: str = "mixture"       # mixture (probability-weighted) | bernoulli (persistent draw)

    # -- traffic ------------------------------------------------------------
    traffic_model: str = "ftp3"     # ftp3 | beta
    lambda_wifi: float = 2.0        # files/s per STA (0 silences the network)
    lambda_nru: float = 2.0         # files/s per UE
    file_mbit: float = 4.0          # 0.5 Mbytes
    deadline_s: float = 8.0
    beta_a: float = 3.0
    beta_b: float = 4.0

    # -- mac ----------------------------------------------------------------
    slot_us: int = 9
    sifs_us: int = 16
    difs_us: int = 34               # SIFS + 2 slots
    ack_us: int = 32
    defer_us: int = 79
    cat2_idle_us: int = 25
    cat1_gap_us: int = 16
    mini_slot_us: int = 36
    wifi_txop_us: int = 2528
    nru_mcot_us: int = 6000
    cw_min: int = 16
    cw_max: int = 1024
    pdcch_us: int = 36
    grant_delay_us: int = 36        # PDCCH end -> earliest PUSCH SSB
    wifi_rate_mbps: float = 21.7
    nru_rate_mbps: float = 25.2

    # -- phy ----------------------------------------------------------------
    noise_dbm: float = -104.0
    cs_wifi_dbm: float = -82.0      # fixed preamble-detection threshold
    ed_wifi_dbm: float = -62.0      # fixed-threshold baseline values
    ed_nru_dbm: float = -72.0
    eta_wifi_db: float = 9.0
    eta_nru_db: float = 5.5
    tx_dev_dbm: float = 18.0        # UE and STA
    tx_base_dbm: float = 23.0       # gNB and AP
    count_ap_emissions: bool = True  # sense AP ACKs on the WiFi side (off = literal sums)

    # -- rl -----------------------------------------------------------------
    tti_ms: float = 100.0           # agent decision interval
    ed_grid_dbm: tuple = DEFAULT_ED_GRID
    history: int = 8                # observation window length H
    net: str = "gru"                # gru | mlp
    gru_hidden: int = 64
    mlp_hidden: str = "64,64"
    gamma: float = 0.9
    lr: float = 1e-4
    rms_rho: float = 0.99
    rms_eps: float = 1e-8
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_frac: float = 0.5           # fraction of training steps over which epsilon anneals
    replay: int = 100_000
    batch: int = 32
    target_sync: int = 500
    qtable_lr: float = 0.01
    qtable_bins: int = 8
    target_mode: str = "double"     # double | paper-literal

    # -- federated ----------------------------------------------------------
    fed_reward: str = "system"      # system | local
    fed_period_episodes: int = 1    # aggregation period

    # derived, filled by validate()
    tti_us: int = field(default=0, repr=False)

    def validate(self) -> "RunConfig":
        if self.mode not in MODES:
            raise ConfigurationError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if self.ue_lbt not in ("cat2", "cat4"):
            raise ConfigurationError(f"ue_lbt must be cat2 or cat4, got {self.ue_lbt!r}")
        if self.mode != "baseline-fixed" and self.episodes < 1:
            raise ConfigurationError("learning modes require episodes >= 1")
        if self.episode_s <= 0 or self.test_s <= 0:
            raise ConfigurationError("episode_s and test_s must be positive")
        if self.n_gnb < 1 or self.n_ap < 1:
            raise ConfigurationError("need at least one gNB and one AP")
        if self.ue_per_gnb < 1 or self.sta_per_ap < 1:
            raise ConfigurationError("need at least one device per cell")
        if self.lambda_wifi < 0 or self.lambda_nru < 0:
            raise ConfigurationError("arrival rates cannot be negative")
        grid = tuple(float(v) for v in self.ed_grid_dbm)
        if len(grid) < 2 or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigurationError("ed_grid_dbm must be a strictly increasing list of >= 2 values")
        self.ed_grid_dbm = grid
        if self.net not in ("gru", "mlp"):
            raise ConfigurationError(f"net must be gru or mlp, got {self.net!r}")
        if self.target_mode not in ("double", "paper-literal"):
            raise ConfigurationError("target_mode must be double or paper-literal")
        if self.fed_reward not in ("system", "local"):
            raise ConfigurationError("fed_reward must be system or local")
        if self.los_mode not in ("mixture", "bernoulli"):
            raise ConfigurationError("los_mode must be mixture or bernoulli")
        if self.traffic_model not in ("ftp3", "beta"):
            raise ConfigurationError("traffic_model must be ftp3 or beta")
        self.tti_us = int(round(self.tti_ms * 1000.0))
        if self.tti_us <= 0:
            raise ConfigurationError("tti_ms must be positive")
        coh_us = self.coherence_ms * 1000.0
        if coh_us <= 0 or round(coh_us / self.tti_us) * self.tti_us != coh_us:
            raise ConfigurationError("coherence_ms must be a positive multiple of tti_ms")
        if self.history < 1:
            raise ConfigurationError("history must be >= 1")
        if self.batch < 1 or self.replay < self.batch:
            raise ConfigurationError("replay capacity must be >= batch size")
        if self.cw_min < 1 or self.cw_max < self.cw_min:
            raise ConfigurationError("invalid contention window bounds")
        return self

    @property
    def file_bits(self) -> float:
        return self.file_mbit * 1e6

    @property
    def mlp_hidden_sizes(self) -> tuple:
        return tuple(int(x) for x in str(self.mlp_hidden).split(",") if str(x).strip())


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig) if f.name != "tti_us"}


def _coerce(name: str, raw, current):
    """Parse a raw string (or pass a typed value through) for field ``name``."""
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    if isinstance(current, bool):
        if text.lower() in ("1", "true", "yes", "on"):
            return True
        if text.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigurationError(f"{name}: expected a boolean, got {raw!r}")
    if isinstance(current, int) and not isinstance(current, bool):
        try:
            return int(text)
        except ValueError as exc:
            raise ConfigurationError(f"{name}: expected an integer, got {raw!r}") from exc
    if isinstance(current, float):
        try:
            return float(text)
        except ValueError as exc:
            raise ConfigurationError(f"{name}: expected a number, got {raw!r}") from exc
    if isinstance(current, tuple):
        try:
            return tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())
        except ValueError as exc:
            raise ConfigurationError(f"{name}: expected a comma list, got {raw!r}") from exc
    return text


def apply_overrides(cfg: RunConfig, overrides: dict) -> RunConfig:
    for key, raw in overrides.items():
        name = key.replace("-", "_")
        if name not in _FIELDS:
            raise ConfigurationError(f"unknown config key {key!r}")
        setattr(cfg, name, _coerce(name, raw, getattr(cfg, name)))
    return cfg


def load_config_file(path: str) -> dict:
    """Parse a flat ``key = value`` file into a raw override dict."""
    if not os.path.exists(path):
        raise ConfigurationError(f"config file not found: {path}")
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            if "=" not in body:
                raise ConfigurationError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = body.partition("=")
            out[key.strip()] = value.strip()
    return out


# The desk preset is the reduced scale at which the acceptance suite runs:
# one cell per network with clustered drops around bases that are ~49 m
# apart, so that cross-network coupling sits between the -82 dBm floor and
# the upper grid values.  Fading is pinned so the exposed-node contrast is
# driven by geometry rather than per-seed fading luck at 4-device scale.
PRESETS = {
    "desk": {
        "n_gnb": 1, "n_ap": 1, "ue_per_gnb": 2, "sta_per_ap": 2,
        "episodes": 200, "episode_s": 30.0, "test_s": 30.0,
        "gnb_x": "35", "ap_x": "83", "cluster_radius": 6.0,
        "fading": False, "gru_hidden": 32,
    },
    "paper": {},  # Table II defaults
}


def build_config(preset: str = "", config_file: str = "", overrides: dict | None = None) -> RunConfig:
    cfg = RunConfig()
    if preset:
        if preset not in PRESETS:
            raise ConfigurationError(f"unknown preset {preset!r}; available: {sorted(PRESETS)}")
        apply_overrides(cfg, PRESETS[preset])
    if config_file:
        apply_overrides(cfg, load_config_file(config_file))
    if overrides:
        apply_overrides(cfg, overrides)
    return cfg.validate()
