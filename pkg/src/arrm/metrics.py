"""Performance metrics and Monte-Carlo aggregation.

Three quantities drive the studies: cell spectral efficiency (rate-weighted
over the allocated PRBs, divided by cells and PRB bandwidth), per-user
stalling fraction of lifetime, and the solve-time distribution of the
optimizations.  Aggregation reports means with normal-approximation 95%
confidence half-widths.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .simulator import EpisodeTrace

_Z95 = 1.959963984540054  # two-sided 95% normal quantile


@dataclass(frozen=True)
class MetricsReport:
    cell_se: float | None
    cell_se_halfwidth: float
    stall_fraction_mean: float
    stall_fraction_halfwidth: float
    per_user_stall_fractions: dict[int, float]
    solve_time_median_s: float | None
    solve_time_q1_s: float | None
    solve_time_q3_s: float | None
    replications: int

    def __post_init__(self):
        if self.cell_se is not None and self.cell_se < 0:
            raise ValueError("spectral efficiency cannot be negative")
        if not (0.0 <= self.stall_fraction_mean <= 1.0 + 1e-9):
            raise ValueError("stall fraction must lie in [0, 1]")
        if (
            self.solve_time_median_s is not None
            and self.solve_time_q3_s is not None
            and self.solve_time_median_s > self.solve_time_q3_s + 1e-12
        ):
            raise ValueError("median above upper quartile")


def cell_spectral_efficiency(trace: EpisodeTrace) -> float | None:
    """Transmitted bits/s/Hz/cell over the slots until all users are served:
    sum(omega * S) / (M * B * sum(omega)) with realized allocations and true
    rates.  Undefined (None) when nothing was allocated."""
    omega = np.asarray(trace.omega)
    if omega.size == 0:
        return None
    total = omega.sum()
    if total <= 0.0:
        return None
    rates = np.asarray(trace.rate_true_bps)
    return float(
        (omega * rates).sum()
        / (trace.num_cells * trace.prb_bandwidth_hz * total)
    )


def stalling_fraction(trace: EpisodeTrace, user_id: int) -> float:
    """Total stall time of one user as a fraction of its lifetime."""
    if user_id not in trace.lifetimes:
        raise ValueError(f"user {user_id} not in trace")
    rows = trace.user_rows(user_id)
    stalls = np.asarray(trace.stall_frac)[rows]
    return float(stalls.sum() / trace.lifetimes[user_id])


def mean_stalling_fraction(trace: EpisodeTrace) -> float:
    if not trace.lifetimes:
        return 0.0
    return float(
        np.mean([stalling_fraction(trace, k) for k in sorted(trace.lifetimes)])
    )


def _mean_halfwidth(values) -> tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        return float("nan"), 0.0
    if arr.size == 1:
        return float(arr[0]), 0.0
    return float(arr.mean()), float(_Z95 * arr.std(ddof=1) / np.sqrt(arr.size))


def aggregate(traces: list[EpisodeTrace]) -> MetricsReport:
    """Combine replications into one report; permutation-invariant."""
    if not traces:
        raise ValueError("need at least one replication")
    se_values = [v for v in (cell_spectral_efficiency(t) for t in traces) if v is not None]
    stall_values = [mean_stalling_fraction(t) for t in traces]
    solve_times = [e.solve_time_s for t in traces for e in t.events]

    se_mean, se_hw = _mean_halfwidth(se_values) if se_values else (None, 0.0)
    stall_mean, stall_hw = _mean_halfwidth(stall_values)

    per_user: dict[int, list[float]] = {}
    for t in traces:
        for k in t.lifetimes:
            per_user.setdefault(k, []).append(stalling_fraction(t, k))
    per_user_mean = {k: float(np.mean(v)) for k, v in sorted(per_user.items())}

    if solve_times:
        q1, med, q3 = np.percentile(solve_times, [25.0, 50.0, 75.0])
    else:
        q1 = med = q3 = None
    return MetricsReport(
        cell_se=se_mean,
        cell_se_halfwidth=se_hw,
        stall_fraction_mean=stall_mean,
        stall_fraction_halfwidth=stall_hw,
        per_user_stall_fractions=per_user_mean,
        solve_time_median_s=None if med is None else float(med),
        solve_time_q1_s=None if q1 is None else float(q1),
        solve_time_q3_s=None if q3 is None else float(q3),
        replications=len(traces),
    )
