"""Indoor mixed-office channel model.

Link gains combine distance-dependent pathloss (separate LoS / NLoS curves),
a distance-dependent LoS probability, and flat Rayleigh fading modelled as
unit-mean exponential power draws.  All gains are kept in linear units; dB
conversion happens at the edges.

The published LoS-probability curve is used in its standard decaying form:
the exponents are negative and the far branch carries the continuity
constant exp(-5.3/4.7) ~= 0.3238 so the curve is continuous at 6.5 m.
"""

from __future__ import annotations

import numpy as np

from .config import RunConfig
from .scenario import Topology

# Continuity constant for the far LoS-probability branch.
_P65 = float(np.exp(-5.3 / 4.7))


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def linear_to_db(lin):
    return 10.0 * np.log10(np.asarray(lin, dtype=float))


def dbm_to_mw(dbm):
    return 10.0 ** (np.asarray(dbm, dtype=float) / 10.0)


def mw_to_dbm(mw):
    return 10.0 * np.log10(np.asarray(mw, dtype=float))


def pathloss_los(d_3d, f_c_ghz) -> np.ndarray:
    """LoS pathloss in dB: 32.4 + 17.3 log10(d) + 20 log10(f_c)."""
    d = np.asarray(d_3d, dtype=float)
    f = np.asarray(f_c_ghz, dtype=float)
    if np.any(d <= 0):
        raise ValueError("pathloss requires d_3D > 0")
    if np.any(f <= 0):
        raise ValueError("pathloss requires f_c > 0")
    return 32.4 + 17.3 * np.log10(d) + 20.0 * np.log10(f)


def pathloss_nlos(d_3d, f_c_ghz) -> np.ndarray:
    """NLoS pathloss in dB: 32.4 + 31.9 log10(d) + 20 log10(f_c)."""
    d = np.asarray(d_3d, dtype=float)
    f = np.asarray(f_c_ghz, dtype=float)
    if np.any(d <= 0):
        raise ValueError("pathloss requires d_3D > 0")
    if np.any(f <= 0):
        raise ValueError("pathloss requires f_c > 0")
    return 32.4 + 31.9 * np.log10(d) + 20.0 * np.log10(f)


def los_probability(d_2d) -> np.ndarray:
    """LoS probability vs horizontal distance; in [0, 1], non-increasing."""
    d = np.asarray(d_2d, dtype=float)
    if np.any(d < 0):
        raise ValueError("los_probability requires d_2D >= 0")
    near = np.exp(-(d - 1.2) / 4.7)
    far = _P65 * np.exp(-(d - 6.5) / 32.6)
    out = np.where(d < 1.2, 1.0, np.where(d <= 6.5, near, far))
    return out if out.ndim else float(out)


def sample_fading(rng: np.random.Generator, size=None):
    """Rayleigh power fading: exponential draws with unit mean."""
    return rng.exponential(1.0, size=size)


def mean_gain(d_3d, d_2d, f_c_ghz):
    """Probability-weighted mean channel power gain (no fading), linear."""
    p_los = los_probability(d_2d)
    g_los = 10.0 ** (-pathloss_los(d_3d, f_c_ghz) / 10.0)
    g_nlos = 10.0 ** (-pathloss_nlos(d_3d, f_c_ghz) / 10.0)
    return g_los * p_los + g_nlos * (1.0 - p_los)


def link_gain(d_3d, d_2d, f_c_ghz, beta) -> float:
    """Instantaneous linear link gain: mixture pathloss scaled by fading."""
    return mean_gain(d_3d, d_2d, f_c_ghz) * beta


class LinkGainTable:
    """Pairwise linear gain matrix for a fixed topology.

    The pathloss component is computed once (it is symmetric); fading is
    resampled via :meth:`refresh` at each coherence interval.  ``gain[i, j]``
    is the power gain from transmitter i to listener j; the diagonal is 0
    and must never be read.
    """

    def __init__(self, topo: Topology, cfg: RunConfig):
        pos = topo.positions()
        n = len(pos)
        diff = pos[:, None, :] - pos[None, :, :]
        d3 = np.sqrt((diff ** 2).sum(axis=2))
        d2 = np.sqrt((diff[:, :, :2] ** 2).sum(axis=2))
        np.fill_diagonal(d3, cfg.min_dist_m)  # placeholder, diagonal unused
        d3 = np.maximum(d3, cfg.min_dist_m)   # log-singularity clamp

        if cfg.los_mode == "bernoulli":
            # persistent per-link LoS state, symmetric across directions
            rng = np.random.default_rng(np.random.SeedSequence([topo.rng_seed, 0x10F]))
            draw = rng.uniform(size=(n, n))
            draw = np.triu(draw, 1) + np.triu(draw, 1).T
            is_los = draw < los_probability(d2)
            pl = np.where(is_los, pathloss_los(d3, cfg.carrier_ghz),
                          pathloss_nlos(d3, cfg.carrier_ghz))
            self._mean = 10.0 ** (-pl / 10.0)
        else:
            self._mean = mean_gain(d3, d2, cfg.carrier_ghz)
        np.fill_diagonal(self._mean, 0.0)

        self._n = n
        self._fading_on = cfg.fading
        self.coherence_us = int(round(cfg.coherence_ms * 1000.0))
        self.carrier_ghz = cfg.carrier_ghz
        self.gain = self._mean.copy()

    def refresh(self, rng: np.random.Generator) -> np.ndarray:
        """Resample fading (symmetric across link directions) and rebuild gains."""
        if self._fading_on:
            beta = sample_fading(rng, size=(self._n, self._n))
            beta = np.triu(beta, 1)
            beta = beta + beta.T
            self.gain = self._mean * beta
        else:
            self.gain = self._mean.copy()
        return self.gain
