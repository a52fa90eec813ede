"""The anticipatory allocation problems and the non-anticipatory baseline.

Two LP formulations over a prediction horizon:

- stall-free: minimize total allocated PRBs subject to the play-out buffer
  never under-running (infeasible when coverage cannot sustain the stream);
- stall-aware: stall fractions become variables priced at ``gamma`` in the
  objective, so the problem is always feasible and trades spectral
  efficiency against stalling time.

Buffer states are not LP variables: the per-slot recursion telescopes into
cumulative-sum constraints, so the stall-aware LP has exactly 2*T*K
variables and T*(2K + M) constraints for K users sharing a full horizon T.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lp import GREATER_EQUAL, LESS_EQUAL, LinearProgram, LpSolution, LpStatus


class PlanExtractionError(RuntimeError):
    """Raised when a plan is requested from a solve that did not succeed."""

    def __init__(self, status, message=None):
        self.status = status
        super().__init__(message or f"no plan available: solver status {status}")


@dataclass(frozen=True)
class ProblemInstance:
    """Inputs of one optimization over a prediction horizon.

    Arrays are (K, T) with T the longest per-user horizon; ``horizon_lengths``
    gives each user's number of valid columns (users nearing departure have
    shorter horizons).  ``bits_per_prb`` and ``playout_bits`` are per-slot
    bit quantities (rates already multiplied by the slot duration).
    """

    bits_per_prb: np.ndarray  # predicted deliverable bits per PRB, (K, T)
    playout_bits: np.ndarray  # play-out demand per slot, (K, T)
    initial_buffer: np.ndarray  # (K,)
    buffer_cap: np.ndarray  # (K,)
    serving_bs: np.ndarray  # (K, T) int
    prbs_per_bs: np.ndarray  # (M,)
    gamma: float
    horizon_lengths: np.ndarray | None = None  # (K,) valid columns; None = full

    def __post_init__(self):
        s = np.asarray(self.bits_per_prb, dtype=float)
        v = np.asarray(self.playout_bits, dtype=float)
        if s.ndim != 2 or v.shape != s.shape:
            raise ValueError("bits_per_prb and playout_bits must be equal (K, T) arrays")
        k, t = s.shape
        object.__setattr__(self, "bits_per_prb", s)
        object.__setattr__(self, "playout_bits", v)
        object.__setattr__(self, "initial_buffer", np.asarray(self.initial_buffer, dtype=float))
        object.__setattr__(self, "buffer_cap", np.asarray(self.buffer_cap, dtype=float))
        object.__setattr__(self, "serving_bs", np.asarray(self.serving_bs, dtype=int))
        object.__setattr__(self, "prbs_per_bs", np.atleast_1d(np.asarray(self.prbs_per_bs, dtype=float)))
        if self.horizon_lengths is None:
            object.__setattr__(self, "horizon_lengths", np.full(k, t, dtype=int))
        else:
            object.__setattr__(self, "horizon_lengths", np.asarray(self.horizon_lengths, dtype=int))
        hl = self.horizon_lengths
        if hl.shape != (k,) or np.any(hl < 1) or np.any(hl > t):
            raise ValueError("horizon_lengths must lie in [1, T] per user")
        if self.initial_buffer.shape != (k,) or self.buffer_cap.shape != (k,):
            raise ValueError("initial_buffer and buffer_cap must be (K,)")
        if self.serving_bs.shape != (k, t):
            raise ValueError("serving_bs must be (K, T)")
        mask = self.valid_mask
        if np.any(s[mask] < 0):
            raise ValueError("bits_per_prb must be nonnegative")
        if np.any(v[mask] <= 0):
            raise ValueError("playout_bits must be positive on valid slots")
        if np.any(self.initial_buffer < 0) or np.any(self.initial_buffer > self.buffer_cap):
            raise ValueError("initial buffer must lie in [0, buffer_cap]")
        if np.any((self.serving_bs[mask] < 0) | (self.serving_bs[mask] >= self.num_bs)):
            raise ValueError("serving_bs out of range")
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")

    @property
    def num_users(self) -> int:
        return self.bits_per_prb.shape[0]

    @property
    def horizon(self) -> int:
        return self.bits_per_prb.shape[1]

    @property
    def num_bs(self) -> int:
        return len(self.prbs_per_bs)

    @property
    def valid_mask(self) -> np.ndarray:
        """(K, T) bool: which user-slot pairs exist in this instance."""
        t_idx = np.arange(self.horizon)
        return t_idx[None, :] < self.horizon_lengths[:, None]

    @property
    def num_alloc_vars(self) -> int:
        return int(self.horizon_lengths.sum())

    def var_offsets(self) -> np.ndarray:
        """Start index of each user's allocation-variable block."""
        return np.concatenate([[0], np.cumsum(self.horizon_lengths)[:-1]])


@dataclass(frozen=True)
class AllocationPlan:
    """Solved allocation over the horizon: PRB shares, stall fractions, and
    the implied buffer trajectory.  Entries beyond a user's horizon are 0."""

    omega: np.ndarray  # (K, T) PRB units
    stall: np.ndarray  # (K, T) slot fractions
    buffer: np.ndarray  # (K, T) bits at end of each slot
    feasible: bool
    objective: float
    horizon_lengths: np.ndarray


def _capacity_rows(instance, a, row, offsets, horizon_lengths):
    """Fill the per-(slot, BS) capacity rows; returns the next free row."""
    k_users = instance.num_users
    for t in range(instance.horizon):
        for m in range(instance.num_bs):
            for k in range(k_users):
                if t < horizon_lengths[k] and instance.serving_bs[k, t] == m:
                    a[row, offsets[k] + t] = 1.0
            row += 1
    return row


def build_lp_no_stalls(instance: ProblemInstance) -> LinearProgram:
    """Stall-free formulation: minimize total PRBs, buffer kept in [0, Z].

    Variables are the allocations only; the buffer recursion enters as
    two-sided cumulative constraints per user-slot.  Infeasibility is a
    legitimate solver outcome, not a build error.
    """
    offsets = instance.var_offsets()
    hl = instance.horizon_lengths
    num_w = instance.num_alloc_vars
    n_rows = 2 * num_w + instance.horizon * instance.num_bs

    a = np.zeros((n_rows, num_w))
    senses = np.empty(n_rows, dtype=object)
    rhs = np.zeros(n_rows)

    row = 0
    for k in range(instance.num_users):
        s = instance.bits_per_prb[k, : hl[k]]
        v = instance.playout_bits[k, : hl[k]]
        v_cum = np.cumsum(v)
        base = offsets[k]
        for t in range(hl[k]):
            # 0 <= sum_{i<=t} (omega_i S_i - V_i) + zeta <= Z
            a[row, base : base + t + 1] = s[: t + 1]
            senses[row] = GREATER_EQUAL
            rhs[row] = v_cum[t] - instance.initial_buffer[k]
            a[row + 1, base : base + t + 1] = s[: t + 1]
            senses[row + 1] = LESS_EQUAL
            rhs[row + 1] = v_cum[t] - instance.initial_buffer[k] + instance.buffer_cap[k]
            row += 2

    senses[row:] = LESS_EQUAL
    rhs[row:] = np.tile(instance.prbs_per_bs, instance.horizon)
    row = _capacity_rows(instance, a, row, offsets, hl)
    assert row == n_rows

    return LinearProgram.from_arrays(np.ones(num_w), a, senses, rhs)


def build_lp_with_stalls(instance: ProblemInstance) -> LinearProgram:
    """Stall-aware formulation: allocations plus stall fractions, the latter
    priced at gamma.  Always feasible (zero allocation with full stalling
    satisfies every constraint when the initial buffer is within bounds)."""
    offsets = instance.var_offsets()
    hl = instance.horizon_lengths
    num_w = instance.num_alloc_vars
    n_rows = 2 * num_w + instance.horizon * instance.num_bs

    a = np.zeros((n_rows, 2 * num_w))
    senses = np.empty(n_rows, dtype=object)
    rhs = np.zeros(n_rows)

    row = 0
    for k in range(instance.num_users):
        s = instance.bits_per_prb[k, : hl[k]]
        v = instance.playout_bits[k, : hl[k]]
        v_cum = np.cumsum(v)
        base = offsets[k]
        stall_base = num_w + offsets[k]
        for t in range(hl[k]):
            # 0 <= sum_{i<=t} (V_i l_i + omega_i S_i - V_i) + zeta <= Z
            a[row, base : base + t + 1] = s[: t + 1]
            a[row, stall_base : stall_base + t + 1] = v[: t + 1]
            senses[row] = GREATER_EQUAL
            rhs[row] = v_cum[t] - instance.initial_buffer[k]
            a[row + 1] = a[row]
            senses[row + 1] = LESS_EQUAL
            rhs[row + 1] = v_cum[t] - instance.initial_buffer[k] + instance.buffer_cap[k]
            row += 2

    senses[row:] = LESS_EQUAL
    rhs[row:] = np.tile(instance.prbs_per_bs, instance.horizon)
    row = _capacity_rows(instance, a, row, offsets, hl)
    assert row == n_rows

    objective = np.concatenate([np.ones(num_w), np.full(num_w, instance.gamma)])
    # Stall fractions are slot fractions: bounded by 1 natively, not by rows.
    # (Left unbounded, a time-varying play-out rate would let the LP buy
    # buffer credit with nonphysical multi-slot stalls in high-rate slots.)
    lower = np.zeros(2 * num_w)
    upper = np.concatenate([np.full(num_w, np.inf), np.ones(num_w)])
    return LinearProgram.from_arrays(objective, a, senses, rhs, lower, upper)


def gamma_threshold(instance: ProblemInstance) -> float:
    """Stall price below which trading allocation for stalling can pay off:
    the largest demand-to-rate ratio over the horizon.  Zero-rate slots are
    excluded (their ratio is infinite and no allocation helps them)."""
    mask = instance.valid_mask & (instance.bits_per_prb > 0)
    if not mask.any():
        raise ValueError("threshold undefined: no slot has a positive rate")
    ratios = instance.playout_bits[mask] / instance.bits_per_prb[mask]
    return float(ratios.max())


def extract_plan(solution: LpSolution, instance: ProblemInstance,
                 complementarity_tol: float = 1e-6) -> AllocationPlan:
    """Rebuild the full plan (allocations, stalls, buffer path) from a solve.

    Buffer and stall trajectories are reconstructed recursively from the
    allocation via the closed forms z = max(omega*S + z_prev - V, 0) and
    l = max(V - omega*S - z_prev, 0) / V.  The LP may return tie-optimal
    points that park a stall in a slot whose buffer is still positive; the
    closed forms pick the equivalent plan (same objective for any positive
    gamma) in which a stall happens only when the buffer is actually empty,
    so buffer and stall can never be positive together.
    """
    if solution.status is not LpStatus.OPTIMAL:
        raise PlanExtractionError(solution.status)
    k_users = instance.num_users
    t_max = instance.horizon
    hl = instance.horizon_lengths
    offsets = instance.var_offsets()
    num_w = instance.num_alloc_vars
    x = solution.x
    with_stalls = x.shape[0] == 2 * num_w
    if not with_stalls and x.shape[0] != num_w:
        raise PlanExtractionError(
            solution.status, "solution size matches neither formulation"
        )

    omega = np.zeros((k_users, t_max))
    stall = np.zeros((k_users, t_max))
    buffer = np.zeros((k_users, t_max))
    for k in range(k_users):
        n_k = hl[k]
        w = x[offsets[k] : offsets[k] + n_k]
        omega[k, :n_k] = w
        s = instance.bits_per_prb[k, :n_k]
        v = instance.playout_bits[k, :n_k]
        z = instance.initial_buffer[k]
        for t in range(n_k):
            usable = w[t] * s[t] + z
            stall[k, t] = max(v[t] - usable, 0.0) / v[t]
            z = max(usable - v[t], 0.0)
            buffer[k, t] = z

    # The reported objective prices the realized plan.  For a constant
    # play-out rate it ties the LP optimum exactly; with per-slot rates the
    # LP's stall placement may differ in unweighted total.
    objective = float(omega.sum() + instance.gamma * stall.sum())

    cap = np.maximum(instance.buffer_cap[:, None], 1.0)
    bad = (buffer > complementarity_tol * cap) & (stall > complementarity_tol)
    if bad.any():
        k, t = np.argwhere(bad)[0]
        raise PlanExtractionError(
            solution.status,
            f"positive buffer and stall together at user {k}, slot {t}",
        )

    return AllocationPlan(
        omega=omega,
        stall=stall,
        buffer=buffer,
        feasible=True,
        objective=objective,
        horizon_lengths=hl.copy(),
    )


def baseline_allocate(bits_per_prb, playout_bits, buffer_bits, serving_bs,
                      prbs_per_bs, policy: str = "proportional") -> np.ndarray:
    """One slot of the non-anticipatory baseline: each user asks for exactly
    the PRBs needed to play the current slot from its buffer deficit.

    Under overload the BS either scales all demands by a common factor
    ("proportional") or serves users in index order ("greedy").  A user with
    zero rate and a deficit wants infinitely many PRBs; its demand is capped
    at the cell capacity and it shares like everyone else.
    """
    s = np.asarray(bits_per_prb, dtype=float)
    v = np.asarray(playout_bits, dtype=float)
    z = np.asarray(buffer_bits, dtype=float)
    bs = np.asarray(serving_bs, dtype=int)
    caps = np.atleast_1d(np.asarray(prbs_per_bs, dtype=float))

    deficit = np.maximum(v - z, 0.0)
    demand = np.zeros_like(s)
    has_rate = s > 0
    demand[has_rate] = deficit[has_rate] / s[has_rate]
    demand[~has_rate & (deficit > 0)] = caps[bs[~has_rate & (deficit > 0)]]

    grant = np.zeros_like(demand)
    for m in range(len(caps)):
        members = np.flatnonzero(bs == m)
        if members.size == 0:
            continue
        total = demand[members].sum()
        if total <= caps[m]:
            grant[members] = demand[members]
        elif policy == "proportional":
            grant[members] = demand[members] * (caps[m] / total)
        elif policy == "greedy":
            left = caps[m]
            for k in members:
                take = min(demand[k], left)
                grant[k] = take
                left -= take
                if left <= 0:
                    break
        else:
            raise ValueError(f"unknown baseline policy {policy!r}")
    return grant
