import numpy as np
import pytest

from arrm.metrics import (
    MetricsReport,
    aggregate,
    cell_spectral_efficiency,
    stalling_fraction,
)
from arrm.scenario import ScenarioConfig
from arrm.simulator import EpisodeTrace, OptimizationEvent, run_episode

TD = 0.167
MB = 2 * 180e3  # cells times PRB bandwidth


def synthetic_trace(rows, lifetimes, events=(), initial=None):
    """rows: (user, slot, omega, rate, stall) tuples."""
    tr = EpisodeTrace(num_users=len(lifetimes), num_cells=2,
                      prb_bandwidth_hz=180e3, slot_duration_s=TD)
    tr.lifetimes.update(lifetimes)
    tr.initial_buffers.update(initial or {k: 0.0 for k in lifetimes})
    for user, slot, omega, rate, stall in rows:
        tr.add_row(user, slot, 0, omega, rate, omega * rate * TD, 0.0,
                   stall, 0.0, 1.0)
    tr.events.extend(events)
    return tr


def test_se_single_user_constant_rate():
    # Any allocation pattern at constant rate collapses to S/(M*B).
    rows = [(0, t, 0.5 + 0.1 * t, 2e6, 0.0) for t in range(10)]
    tr = synthetic_trace(rows, {0: 10})
    assert cell_spectral_efficiency(tr) == pytest.approx(2e6 / MB)


def test_se_weighted_mean_two_users():
    rows = [(0, 0, 1.0, 1e6, 0.0), (1, 0, 1.0, 2e6, 0.0)]
    tr = synthetic_trace(rows, {0: 1, 1: 1})
    assert cell_spectral_efficiency(tr) == pytest.approx(1.5e6 / MB)


def test_se_undefined_when_nothing_allocated():
    rows = [(0, t, 0.0, 1e6, 1.0) for t in range(5)]
    tr = synthetic_trace(rows, {0: 5})
    assert cell_spectral_efficiency(tr) is None


def test_se_bounded_by_peak_rate():
    rng = np.random.default_rng(1)
    rows = [
        (0, t, float(rng.uniform(0, 2)), float(rng.uniform(1e5, 5e6)), 0.0)
        for t in range(50)
    ]
    tr = synthetic_trace(rows, {0: 50})
    se = cell_spectral_efficiency(tr)
    assert se <= max(r for (_, _, _, r, _) in rows) / MB + 1e-12


def test_stalling_fraction_examples():
    rows = [(0, t, 0.0, 1e6, 0.0) for t in range(100)]
    tr = synthetic_trace(rows, {0: 100})
    assert stalling_fraction(tr, 0) == 0.0

    rows = [(0, t, 0.0, 1e6, 1.0) for t in range(100)]
    tr = synthetic_trace(rows, {0: 100})
    assert stalling_fraction(tr, 0) == 1.0

    rows = [(0, t, 0.0, 1e6, 1.0 if t < 5 else 0.0) for t in range(100)]
    tr = synthetic_trace(rows, {0: 100})
    assert stalling_fraction(tr, 0) == pytest.approx(0.05)


def test_stalling_fraction_unknown_user():
    tr = synthetic_trace([(0, 0, 0.0, 1e6, 0.0)], {0: 1})
    with pytest.raises(ValueError):
        stalling_fraction(tr, 7)


def test_aggregate_identical_replications_zero_halfwidth():
    rows = [(0, t, 1.0, 2e6, 0.1) for t in range(10)]
    traces = [synthetic_trace(rows, {0: 10}) for _ in range(5)]
    rep = aggregate(traces)
    assert rep.cell_se_halfwidth == 0.0
    assert rep.stall_fraction_halfwidth == 0.0
    assert rep.replications == 5


def test_aggregate_two_point_mean():
    t0 = synthetic_trace([(0, t, 1.0, 1e6, 0.0) for t in range(10)], {0: 10})
    t1 = synthetic_trace([(0, t, 1.0, 1e6, 1.0) for t in range(10)], {0: 10})
    rep = aggregate([t0, t1])
    assert rep.stall_fraction_mean == pytest.approx(0.5)


def test_aggregate_permutation_invariant():
    rng = np.random.default_rng(3)
    traces = []
    for i in range(6):
        rows = [(0, t, float(rng.uniform(0, 1)), float(rng.uniform(1e5, 2e6)),
                 float(rng.uniform(0, 1))) for t in range(8)]
        traces.append(synthetic_trace(rows, {0: 8}))
    a = aggregate(traces)
    b = aggregate(traces[::-1])
    assert a.cell_se == pytest.approx(b.cell_se, rel=1e-12)
    assert a.stall_fraction_mean == pytest.approx(b.stall_fraction_mean, rel=1e-12)
    assert a.cell_se_halfwidth == pytest.approx(b.cell_se_halfwidth, rel=1e-12)


def test_aggregate_sampling_band_known_distribution():
    # Synthetic replications with stall fractions drawn from a known law:
    # the aggregate mean must fall inside the analytic 95% band.
    rng = np.random.default_rng(4)
    mu, sd, n = 0.3, 0.05, 1000
    values = np.clip(rng.normal(mu, sd, size=n), 0.0, 1.0)
    traces = [
        synthetic_trace([(0, 0, 0.0, 1e6, float(v))], {0: 1}) for v in values
    ]
    rep = aggregate(traces)
    band = 1.96 * sd / np.sqrt(n)
    assert abs(rep.stall_fraction_mean - mu) < band


def test_solve_time_quartiles():
    ev = [
        OptimizationEvent(0, "arrival", 1, 10, 12, "optimal", 5, t, 10.0)
        for t in (0.1, 0.2, 0.3, 0.4)
    ]
    tr = synthetic_trace([(0, 0, 1.0, 1e6, 0.0)], {0: 1}, events=ev)
    rep = aggregate([tr])
    assert rep.solve_time_q1_s <= rep.solve_time_median_s <= rep.solve_time_q3_s
    assert rep.solve_time_median_s == pytest.approx(0.25)


def test_aggregate_requires_replications():
    with pytest.raises(ValueError):
        aggregate([])


def test_report_validation():
    with pytest.raises(ValueError):
        MetricsReport(
            cell_se=-1.0, cell_se_halfwidth=0.0, stall_fraction_mean=0.0,
            stall_fraction_halfwidth=0.0, per_user_stall_fractions={},
            solve_time_median_s=None, solve_time_q1_s=None,
            solve_time_q3_s=None, replications=1,
        )
    with pytest.raises(ValueError):
        MetricsReport(
            cell_se=1.0, cell_se_halfwidth=0.0, stall_fraction_mean=2.0,
            stall_fraction_halfwidth=0.0, per_user_stall_fractions={},
            solve_time_median_s=None, solve_time_q1_s=None,
            solve_time_q3_s=None, replications=1,
        )


def test_se_recompute_from_episode():
    # End-to-end: recompute SE from the raw trace arrays the way an external
    # one-liner over the CSV would.
    cfg = ScenarioConfig(num_users=3, reopt_step_slots=20, seed=5)
    trace = run_episode(cfg, np.random.default_rng(5))
    se = cell_spectral_efficiency(trace)
    omega = np.asarray(trace.omega)
    rates = np.asarray(trace.rate_true_bps)
    manual = (omega * rates).sum() / (2 * 180e3 * omega.sum())
    assert se == pytest.approx(manual, rel=1e-12)
