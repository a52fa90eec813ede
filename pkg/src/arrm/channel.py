"""Radio propagation: link budget, path loss, per-PRB rate, prediction error.

All gains and losses are carried in dB; rates in bits/s.  A user's channel
at slot t is summarized by a single gain figure (path loss plus fixed
margins), from which the achievable per-PRB rate follows via the
Shannon-gap formula.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LinkBudget:
    """Radio constants; defaults reproduce a two-cell LTE metro deployment.

    ``tx_power_dbm`` is the total BS transmit power; it is shared equally
    across ``power_share_prbs`` resource blocks, so the per-PRB SINR uses
    the per-PRB power share.
    """

    tx_power_dbm: float = 46.0
    antenna_gain_dbi: float = 18.0
    prb_bandwidth_hz: float = 180e3
    noise_density_dbm_hz: float = -174.0
    noise_figure_db: float = 10.0
    interference_margin_db: float = 6.0
    shadow_margin_db: float = 10.0
    ber: float = 1e-6
    power_share_prbs: int = 50

    def __post_init__(self):
        if not (0.0 < self.ber < 0.2):
            raise ValueError("ber must lie in (0, 0.2) so the SINR gap is positive")
        for name in ("noise_figure_db", "interference_margin_db", "shadow_margin_db"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.prb_bandwidth_hz <= 0:
            raise ValueError("prb_bandwidth_hz must be positive")
        if self.power_share_prbs < 1:
            raise ValueError("power_share_prbs must be at least 1")

    @property
    def sinr_gap_linear(self) -> float:
        """Gap between Shannon capacity and practical modulation at this BER."""
        return -math.log(5.0 * self.ber) / 1.5

    @property
    def per_prb_power_dbm(self) -> float:
        """Transmit power falling on one PRB."""
        return self.tx_power_dbm - 10.0 * math.log10(self.power_share_prbs)

    @property
    def noise_power_dbm(self) -> float:
        """Thermal noise over one PRB, receiver noise figure included."""
        return (
            self.noise_density_dbm_hz
            + 10.0 * math.log10(self.prb_bandwidth_hz)
            + self.noise_figure_db
        )


@dataclass(frozen=True)
class ChannelGainTrace:
    """Per-slot true and predicted channel gain (dB) over a user's lifetime."""

    true_gain_db: np.ndarray
    predicted_gain_db: np.ndarray

    def __post_init__(self):
        if len(self.true_gain_db) != len(self.predicted_gain_db):
            raise ValueError("true and predicted gain series differ in length")

    def __len__(self):
        return len(self.true_gain_db)


def path_loss_db(distance_km):
    """Empirical urban-macro path loss, shadowing excluded (caller adds it).

    Accepts a scalar or array of distances in km; all must be positive.
    """
    d = np.asarray(distance_km, dtype=float)
    if np.any(d <= 0.0):
        raise ValueError("distance must be positive")
    out = 128.1 + 37.6 * np.log10(d)
    return float(out) if np.isscalar(distance_km) else out


def achievable_rate_per_prb(gain_db, budget: LinkBudget):
    """Bits/s on one PRB at the given channel gain.

    ``gain_db`` is relative to the transmit side and already includes path
    loss and the shadow margin (as a negative number).  The interference
    margin is charged here, and the SINR is divided by the BER-dependent gap
    before the log.
    """
    sinr_db = (
        budget.per_prb_power_dbm
        + budget.antenna_gain_dbi
        + np.asarray(gain_db, dtype=float)
        - budget.noise_power_dbm
        - budget.interference_margin_db
    )
    sinr_eff = 10.0 ** (sinr_db / 10.0) / budget.sinr_gap_linear
    rate = budget.prb_bandwidth_hz * np.log2(1.0 + sinr_eff)
    return float(rate) if np.isscalar(gain_db) else rate


def apply_prediction_error(true_gain_db, t, horizon, sigma_db, rng):
    """Predicted gain for a slot ``t`` steps ahead within a horizon.

    The error is zero-mean Gaussian in dB with standard deviation growing
    linearly in the lookahead: sigma_t = (t / horizon) * sigma.  ``t`` may be
    a scalar or an array aligned with ``true_gain_db``.
    """
    t_arr = np.asarray(t)
    if np.any(t_arr < 1) or np.any(t_arr > horizon):
        raise ValueError(f"slot offset must lie in [1, {horizon}]")
    if sigma_db < 0:
        raise ValueError("sigma must be nonnegative")
    true = np.asarray(true_gain_db, dtype=float)
    if sigma_db == 0.0:
        out = true.copy() if true.ndim else float(true)
        return out
    sigma_t = (t_arr / float(horizon)) * sigma_db
    noise = rng.normal(0.0, 1.0, size=np.broadcast(true, sigma_t).shape)
    out = true + sigma_t * noise
    if np.isscalar(true_gain_db) and np.isscalar(t):
        return float(out)
    return out
