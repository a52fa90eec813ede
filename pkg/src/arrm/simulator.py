"""Rolling-horizon episode engine.

Drives arrivals, re-optimization events, plan application against the true
channel, buffer evolution, and trace recording.  A new optimization runs
when a user arrives or when the fixed re-optimization step has elapsed; the
most recent plan wins for every future slot it covers.  Plans are built
from predicted channel gains while realized buffers always evolve on the
true gains, which is what makes prediction-error robustness measurable.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import achievable_rate_per_prb, apply_prediction_error
from .lp import LpStatus, solve_lp
from .planning import (
    ProblemInstance,
    baseline_allocate,
    build_lp_with_stalls,
    extract_plan,
    gamma_threshold,
)
from .scenario import ScenarioConfig, UserSpec, generate_arrivals, serving_bs_series, true_gain_series

GAMMA_RANGE = (1.0, 1e4)


class SimulationError(RuntimeError):
    """An episode could not complete (solver failure is a test failure)."""


@dataclass
class _UserRuntime:
    spec: UserSpec
    true_gain_db: np.ndarray  # per lifetime slot
    serving_bs: np.ndarray  # per lifetime slot
    bits_per_prb_true: np.ndarray  # S^d on the true channel, per slot
    playout_bits: np.ndarray  # V^d per slot
    buffer_bits: float
    stall_slots: float = 0.0  # accumulated realized stall time
    plan_omega: np.ndarray = field(default=None)  # indexed by local slot

    def __post_init__(self):
        if self.plan_omega is None:
            self.plan_omega = np.zeros(self.spec.lifetime_slots)

    def local(self, slot: int) -> int:
        return slot - self.spec.arrival_slot

    def position_m(self, slot: int, topology, slot_duration_s: float) -> float:
        pos = self.spec.speed_mps * slot_duration_s * self.local(slot)
        return float(min(max(pos, 0.0), topology.line_end_m))


@dataclass
class SimulatorState:
    """Mutable rolling state: the clock, the users currently in the system
    (with their channel series and buffer levels), and their latest plans."""

    slot: int
    active: list[_UserRuntime]
    config: ScenarioConfig


@dataclass
class OptimizationEvent:
    slot: int
    trigger: str  # "arrival" | "timer"
    active_users: int
    num_vars: int
    num_constraints: int
    status: str
    iterations: int
    solve_time_s: float
    gamma: float


@dataclass
class EpisodeTrace:
    """Per user-slot records plus per-optimization event records.

    Parallel arrays, one entry per (user, slot) pair in simulation order.
    ``delivered_bits`` is the raw transmitted amount omega * S_true; bits
    that would overflow the play-out buffer are counted in
    ``discarded_bits`` so conservation is exact.
    """

    num_users: int
    num_cells: int
    prb_bandwidth_hz: float
    slot_duration_s: float
    user: list[int] = field(default_factory=list)
    slot: list[int] = field(default_factory=list)
    serving_bs: list[int] = field(default_factory=list)
    omega: list[float] = field(default_factory=list)
    rate_true_bps: list[float] = field(default_factory=list)
    delivered_bits: list[float] = field(default_factory=list)
    buffer_bits: list[float] = field(default_factory=list)
    stall_frac: list[float] = field(default_factory=list)
    discarded_bits: list[float] = field(default_factory=list)
    playout_bits: list[float] = field(default_factory=list)
    events: list[OptimizationEvent] = field(default_factory=list)
    lifetimes: dict[int, int] = field(default_factory=dict)
    initial_buffers: dict[int, float] = field(default_factory=dict)
    last_slot: int = -1

    def add_row(self, user, slot, bs, omega, rate, delivered, buffer_bits,
                stall, discarded, playout):
        self.user.append(user)
        self.slot.append(slot)
        self.serving_bs.append(bs)
        self.omega.append(omega)
        self.rate_true_bps.append(rate)
        self.delivered_bits.append(delivered)
        self.buffer_bits.append(buffer_bits)
        self.stall_frac.append(stall)
        self.discarded_bits.append(discarded)
        self.playout_bits.append(playout)
        self.last_slot = max(self.last_slot, slot)

    @property
    def served_horizon_slots(self) -> int:
        """Number of slots until every user has left the system."""
        return self.last_slot + 1

    def user_rows(self, user_id: int) -> np.ndarray:
        return np.flatnonzero(np.asarray(self.user) == user_id)

    def conservation_residual(self, user_id: int) -> float:
        """Relative gap in: delivered + initial = played + final + discarded."""
        rows = self.user_rows(user_id)
        if rows.size == 0:
            raise ValueError(f"user {user_id} not in trace")
        delivered = np.asarray(self.delivered_bits)[rows].sum()
        discarded = np.asarray(self.discarded_bits)[rows].sum()
        played = (
            np.asarray(self.playout_bits)[rows]
            * (1.0 - np.asarray(self.stall_frac)[rows])
        ).sum()
        final_buffer = np.asarray(self.buffer_bits)[rows][-1]
        zeta = self.initial_buffers[user_id]
        lhs = delivered + zeta
        rhs = played + final_buffer + discarded
        return abs(lhs - rhs) / max(1.0, abs(lhs))


def step_buffer(z_prev: float, omega: float, bits_per_prb_true: float,
                playout: float, cap: float) -> tuple[float, float]:
    """One slot of play-out buffer evolution on the true channel.

    Returns the end-of-slot buffer level and the stall fraction.  Delivered
    bits beyond what the buffer can absorb after playing are discarded.
    """
    delivered = omega * bits_per_prb_true
    usable = delivered + z_prev
    stall = max(playout - usable, 0.0) / playout
    z = min(max(usable - playout, 0.0), cap)
    return z, stall


def _resolve_gamma(config: ScenarioConfig, instance: ProblemInstance) -> float:
    if config.gamma != "auto":
        return float(config.gamma)
    try:
        g = 10.0 * gamma_threshold(instance)
    except ValueError:
        g = GAMMA_RANGE[1]
    return float(min(max(g, GAMMA_RANGE[0]), GAMMA_RANGE[1]))


def _build_instance(state: SimulatorState, rng) -> ProblemInstance:
    """Optimization inputs for the active users over the next horizon.

    Per-user horizons stop at departure; predicted rates are drawn fresh
    with the error deviation growing with lookahead from the current slot.
    """
    config = state.config
    users = state.active
    horizon = config.horizon_slots
    sigma = config.prediction_sigma_db
    lengths = np.array(
        [min(horizon, u.spec.lifetime_slots - u.local(state.slot)) for u in users],
        dtype=int,
    )
    t_max = int(lengths.max())
    k = len(users)
    s_pred = np.zeros((k, t_max))
    v_bits = np.ones((k, t_max))
    serving = np.zeros((k, t_max), dtype=int)
    zeta = np.zeros(k)
    cap = np.zeros(k)
    budget = config.link_budget
    for i, u in enumerate(users):
        n = lengths[i]
        loc = u.local(state.slot)
        true = u.true_gain_db[loc : loc + n]
        offsets = np.arange(1, n + 1)
        predicted = apply_prediction_error(true, offsets, horizon, sigma, rng)
        s_pred[i, :n] = (
            achievable_rate_per_prb(np.asarray(predicted), budget)
            * config.slot_duration_s
        )
        v_bits[i, :n] = u.playout_bits[loc : loc + n]
        serving[i, :n] = u.serving_bs[loc : loc + n]
        zeta[i] = u.buffer_bits
        cap[i] = u.spec.buffer_cap_bits

    prbs = np.full(config.topology.num_bs, float(config.topology.prbs_per_bs))
    base = ProblemInstance(
        bits_per_prb=s_pred,
        playout_bits=v_bits,
        initial_buffer=zeta,
        buffer_cap=cap,
        serving_bs=serving,
        prbs_per_bs=prbs,
        gamma=0.0,
        horizon_lengths=lengths,
    )
    gamma = _resolve_gamma(config, base)
    return ProblemInstance(
        bits_per_prb=s_pred,
        playout_bits=v_bits,
        initial_buffer=zeta,
        buffer_cap=cap,
        serving_bs=serving,
        prbs_per_bs=prbs,
        gamma=gamma,
        horizon_lengths=lengths,
    )


def reoptimize(state: SimulatorState, rng, trigger: str = "timer"):
    """Solve the stall-aware LP for the current state and install the plan.

    Returns the (plan, event record); the plan overwrites each active
    user's allocations for every future slot it covers.
    """
    instance = _build_instance(state, rng)
    lp = build_lp_with_stalls(instance)
    solution = solve_lp(lp)
    event = OptimizationEvent(
        slot=state.slot,
        trigger=trigger,
        active_users=len(state.active),
        num_vars=lp.num_vars,
        num_constraints=lp.num_constraints,
        status=solution.status.value,
        iterations=solution.iteration_count,
        solve_time_s=solution.solve_time,
        gamma=instance.gamma,
    )
    if solution.status is not LpStatus.OPTIMAL:
        raise SimulationError(
            f"optimization at slot {state.slot} failed: {solution.status.value}"
        )
    plan = extract_plan(solution, instance)
    for i, u in enumerate(state.active):
        n = instance.horizon_lengths[i]
        loc = u.local(state.slot)
        u.plan_omega[loc : loc + n] = plan.omega[i, :n]
    return plan, event


def _make_runtime(spec: UserSpec, config: ScenarioConfig) -> _UserRuntime:
    gains = true_gain_series(spec, config.topology, config.link_budget, config.slot_duration_s)
    serving = serving_bs_series(spec, config.topology, config.slot_duration_s)
    rates = achievable_rate_per_prb(gains, config.link_budget)
    playout = np.array(
        [spec.video_rate_at(t) * config.slot_duration_s for t in range(spec.lifetime_slots)]
    )
    return _UserRuntime(
        spec=spec,
        true_gain_db=gains,
        serving_bs=serving,
        bits_per_prb_true=rates * config.slot_duration_s,
        playout_bits=playout,
        buffer_bits=spec.initial_buffer_bits,
    )


def run_episode(config: ScenarioConfig, rng, policy: str = "arrm") -> EpisodeTrace:
    """Simulate until every user has departed; returns the full trace.

    ``policy`` is "arrm" (rolling-horizon LP) or "baseline" (per-slot
    deficit allocation with no prediction).  The trace is a deterministic
    function of (config, rng state).
    """
    if policy not in ("arrm", "baseline"):
        raise ValueError("policy must be 'arrm' or 'baseline'")
    trace = EpisodeTrace(
        num_users=config.num_users,
        num_cells=config.topology.num_bs,
        prb_bandwidth_hz=config.link_budget.prb_bandwidth_hz,
        slot_duration_s=config.slot_duration_s,
    )
    if config.num_users == 0:
        return trace

    arrivals = generate_arrivals(
        config.num_users, config.lifetime_slots, config.slot_duration_s, rng
    )
    pending = [
        _make_runtime(config.make_user(k, int(arrivals[k])), config)
        for k in range(config.num_users)
    ]
    for u in pending:
        trace.lifetimes[u.spec.user_id] = u.spec.lifetime_slots
        trace.initial_buffers[u.spec.user_id] = u.spec.initial_buffer_bits
    pending.sort(key=lambda u: u.spec.arrival_slot)

    state = SimulatorState(slot=int(arrivals.min()), active=[], config=config)
    next_pending = 0
    last_opt_slot = None

    while next_pending < len(pending) or state.active:
        s = state.slot
        arrived = False
        while (
            next_pending < len(pending)
            and pending[next_pending].spec.arrival_slot == s
        ):
            state.active.append(pending[next_pending])
            next_pending += 1
            arrived = True

        if policy == "arrm" and state.active:
            timer_due = (
                last_opt_slot is None
                or s - last_opt_slot >= config.reopt_step_slots
            )
            if arrived or timer_due:
                trigger = "arrival" if arrived else "timer"
                _, event = reoptimize(state, rng, trigger)
                trace.events.append(event)
                last_opt_slot = s

        if policy == "baseline" and state.active:
            loc = [u.local(s) for u in state.active]
            grants = baseline_allocate(
                [u.bits_per_prb_true[loc[i]] for i, u in enumerate(state.active)],
                [u.playout_bits[loc[i]] for i, u in enumerate(state.active)],
                [u.buffer_bits for u in state.active],
                [u.serving_bs[loc[i]] for i, u in enumerate(state.active)],
                np.full(config.topology.num_bs, float(config.topology.prbs_per_bs)),
                policy=config.baseline_policy,
            )
            for i, u in enumerate(state.active):
                u.plan_omega[loc[i]] = grants[i]

        departed = []
        for u in state.active:
            loc = u.local(s)
            omega = float(u.plan_omega[loc])
            s_true = u.bits_per_prb_true[loc]
            v = u.playout_bits[loc]
            z_prev = u.buffer_bits
            z, stall = step_buffer(z_prev, omega, s_true, v, u.spec.buffer_cap_bits)
            delivered = omega * s_true
            discarded = max(delivered + z_prev - v, 0.0) - z
            u.buffer_bits = z
            u.stall_slots += stall
            # A realized stall can only happen with an empty buffer.
            assert not (stall > 1e-6 and z > 1e-6 * u.spec.buffer_cap_bits)
            trace.add_row(
                u.spec.user_id, s, int(u.serving_bs[loc]), omega,
                s_true / config.slot_duration_s, delivered, z, stall,
                discarded, v,
            )
            if loc + 1 >= u.spec.lifetime_slots:
                departed.append(u)
        for u in departed:
            state.active.remove(u)
        state.slot += 1

    for k in trace.lifetimes:
        residual = trace.conservation_residual(k)
        if residual > 1e-6:
            raise SimulationError(
                f"bit conservation violated for user {k}: residual {residual}"
            )
    return trace
