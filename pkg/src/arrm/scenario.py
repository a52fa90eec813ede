"""Two-cell topology, user arrivals, mobility, and channel-gain traces.

Users arrive by a Poisson process and drive in a straight line from the
first base station toward the last at constant speed, the canonical
highway-segment situation.  Geometry is one-dimensional along the BS line.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelGainTrace, LinkBudget, apply_prediction_error, path_loss_db


@dataclass(frozen=True)
class Topology:
    num_bs: int = 2
    inter_site_distance_m: float = 500.0
    prbs_per_bs: int = 50
    bs_positions_m: tuple[float, ...] = ()
    # The empirical path-loss law diverges at zero distance; positions are
    # clamped to this radius around a BS.
    min_distance_m: float = 10.0

    def __post_init__(self):
        if self.num_bs < 1:
            raise ValueError("need at least one base station")
        if self.prbs_per_bs <= 0:
            raise ValueError("prbs_per_bs must be positive")
        if not self.bs_positions_m:
            positions = tuple(
                i * self.inter_site_distance_m for i in range(self.num_bs)
            )
            object.__setattr__(self, "bs_positions_m", positions)
        if len(self.bs_positions_m) != self.num_bs:
            raise ValueError("bs_positions_m length must equal num_bs")
        if any(
            b <= a for a, b in zip(self.bs_positions_m, self.bs_positions_m[1:])
        ):
            raise ValueError("bs positions must be strictly increasing")

    @property
    def line_end_m(self) -> float:
        return self.bs_positions_m[-1]


@dataclass(frozen=True)
class UserSpec:
    user_id: int
    arrival_slot: int
    speed_mps: float = 30.0
    lifetime_slots: int = 100
    video_rate_bps: float = 1.5e6
    buffer_cap_bits: float = 20e6
    initial_buffer_bits: float = 0.0

    def __post_init__(self):
        if self.speed_mps <= 0:
            raise ValueError("speed must be positive")
        if self.lifetime_slots < 1:
            raise ValueError("lifetime must be at least one slot")
        if not (0.0 <= self.initial_buffer_bits <= self.buffer_cap_bits):
            raise ValueError("initial buffer must lie in [0, buffer_cap]")
        if np.any(np.asarray(self.video_rate_bps) <= 0):
            raise ValueError("video rate must be positive")

    @property
    def departure_slot(self) -> int:
        return self.arrival_slot + self.lifetime_slots

    def video_rate_at(self, local_slot: int) -> float:
        """Play-out rate at a slot index within the lifetime; supports a
        scalar rate or a per-slot sequence (adaptive streaming input)."""
        rate = self.video_rate_bps
        if np.ndim(rate) == 0:
            return float(rate)
        return float(np.asarray(rate)[local_slot])


@dataclass(frozen=True)
class ScenarioConfig:
    """Root of a simulation run; defaults reproduce the reference scenario."""

    num_users: int = 20
    slot_duration_s: float = 0.167
    horizon_slots: int = 100
    reopt_step_slots: int = 20
    lifetime_slots: int = 100
    prediction_sigma_db: float = 0.0
    gamma: float | str = "auto"  # "auto" = 10x the stall-price threshold
    seed: int = 1
    speed_mps: float = 30.0
    video_rate_bps: float = 1.5e6
    buffer_cap_bits: float = 20e6
    initial_buffer_bits: float = 0.0
    baseline_policy: str = "proportional"
    topology: Topology = field(default_factory=Topology)
    link_budget: LinkBudget = field(default_factory=LinkBudget)

    def __post_init__(self):
        if self.slot_duration_s <= 0:
            raise ValueError("slot duration must be positive")
        if not (1 <= self.reopt_step_slots <= self.horizon_slots):
            raise ValueError("need 1 <= reopt_step <= horizon")
        if self.horizon_slots > self.lifetime_slots:
            raise ValueError("horizon cannot exceed the user lifetime")
        if self.num_users < 0:
            raise ValueError("num_users must be nonnegative")
        if isinstance(self.gamma, str):
            if self.gamma != "auto":
                raise ValueError("gamma must be a number or 'auto'")
        elif self.gamma < 0:
            raise ValueError("gamma must be nonnegative")
        if self.baseline_policy not in ("proportional", "greedy"):
            raise ValueError("baseline_policy must be 'proportional' or 'greedy'")
        if self.prediction_sigma_db < 0:
            raise ValueError("prediction sigma must be nonnegative")

    def make_user(self, user_id: int, arrival_slot: int) -> UserSpec:
        return UserSpec(
            user_id=user_id,
            arrival_slot=arrival_slot,
            speed_mps=self.speed_mps,
            lifetime_slots=self.lifetime_slots,
            video_rate_bps=self.video_rate_bps,
            buffer_cap_bits=self.buffer_cap_bits,
            initial_buffer_bits=self.initial_buffer_bits,
        )


def generate_arrivals(num_users, lifetime_slots, slot_duration_s, rng) -> np.ndarray:
    """Arrival slot per user from a Poisson process with rate K/(T_N * T_d).

    Inter-arrival times are exponential; arrival instants are quantized to
    slot indices by floor.  Users are indexed in arrival order.
    """
    if num_users < 1:
        return np.zeros(0, dtype=int)
    rate = num_users / (lifetime_slots * slot_duration_s)
    gaps = rng.exponential(1.0 / rate, size=num_users)
    times = np.cumsum(gaps)
    return np.floor(times / slot_duration_s).astype(int)


def user_position_m(user: UserSpec, slot: int, topology: Topology, slot_duration_s: float) -> float:
    """Distance travelled along the BS line at the given absolute slot,
    clamped to the line segment (users hold position at the far end)."""
    if not (user.arrival_slot <= slot < user.departure_slot):
        raise ValueError(
            f"slot {slot} outside user {user.user_id} lifetime "
            f"[{user.arrival_slot}, {user.departure_slot})"
        )
    pos = user.speed_mps * slot_duration_s * (slot - user.arrival_slot)
    return float(min(max(pos, 0.0), topology.line_end_m))


def bs_assignment(position_m: float, topology: Topology) -> int:
    """Index of the nearest base station; ties go to the lowest index."""
    dists = np.abs(np.asarray(topology.bs_positions_m) - position_m)
    return int(np.argmin(dists))


def positions_over_lifetime(user: UserSpec, topology: Topology, slot_duration_s: float) -> np.ndarray:
    steps = np.arange(user.lifetime_slots, dtype=float)
    pos = user.speed_mps * slot_duration_s * steps
    return np.clip(pos, 0.0, topology.line_end_m)


def true_gain_series(user: UserSpec, topology: Topology, budget: LinkBudget, slot_duration_s: float) -> np.ndarray:
    """True channel gain (dB) toward the serving BS for each lifetime slot."""
    pos = positions_over_lifetime(user, topology, slot_duration_s)
    bs_pos = np.asarray(topology.bs_positions_m)
    dists = np.abs(pos[:, None] - bs_pos[None, :])
    serving = np.argmin(dists, axis=1)
    d = dists[np.arange(len(pos)), serving]
    d = np.maximum(d, topology.min_distance_m) / 1000.0
    return -(path_loss_db(d) + budget.shadow_margin_db)


def serving_bs_series(user: UserSpec, topology: Topology, slot_duration_s: float) -> np.ndarray:
    pos = positions_over_lifetime(user, topology, slot_duration_s)
    bs_pos = np.asarray(topology.bs_positions_m)
    return np.argmin(np.abs(pos[:, None] - bs_pos[None, :]), axis=1)


def gain_trace(user, topology, budget, sigma_db, horizon, rng, slot_duration_s=0.167) -> ChannelGainTrace:
    """True and predicted gains over the user's lifetime.

    Predictions use each slot's lookahead offset from the trace start; for
    slots beyond the horizon the error deviation saturates at sigma.
    """
    true = true_gain_series(user, topology, budget, slot_duration_s)
    offsets = np.minimum(np.arange(1, len(true) + 1), horizon)
    predicted = apply_prediction_error(true, offsets, horizon, sigma_db, rng)
    return ChannelGainTrace(true, np.asarray(predicted, dtype=float))
