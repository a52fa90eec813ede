"""Reproducible experiment drivers for the reference studies.

Each driver sweeps its parameter grid over Monte-Carlo replications, writes
a delimited results file plus a rendered figure into the output directory,
and prints a short summary table.  All randomness derives from
(master seed, sweep index, replication, policy), so results are identical
for a given config and seed regardless of worker scheduling.
"""
from __future__ import annotations

import dataclasses
import os
import time
from multiprocessing import Pool

import numpy as np

from .config import ExperimentSpec, RunConfig, emit_config
from .lp import LpStatus, solve_lp
from .metrics import cell_spectral_efficiency, mean_stalling_fraction
from .planning import baseline_allocate, build_lp_with_stalls, gamma_threshold, ProblemInstance
from .scenario import ScenarioConfig
from .simulator import run_episode

_POLICY_CODES = {"arrm": 0, "arrm_sigma": 1, "baseline": 2}
_DOMAIN_CODES = {"fig2": 2, "fig3": 3, "fig4": 4, "fig5": 5, "table2": 12, "custom": 0}


# ---------------------------------------------------------------------------
# Episode task plumbing
# ---------------------------------------------------------------------------

def _episode_seed(master: int, domain: str, sweep_index: int, rep: int, policy: str):
    return np.random.SeedSequence(
        [master, _DOMAIN_CODES[domain], sweep_index, rep, _POLICY_CODES[policy]]
    )


def _run_episode_task(task):
    """Worker entry: one episode reduced to the quantities the drivers need."""
    scenario, policy, seed_entropy = task
    rng = np.random.default_rng(np.random.SeedSequence(seed_entropy))
    sim_policy = "baseline" if policy == "baseline" else "arrm"
    trace = run_episode(scenario, rng, policy=sim_policy)
    conservation = max(
        (trace.conservation_residual(k) for k in trace.lifetimes), default=0.0
    )
    return {
        "se": cell_spectral_efficiency(trace),
        "stall": mean_stalling_fraction(trace),
        "solve_times": [e.solve_time_s for e in trace.events],
        "iterations": [e.iterations for e in trace.events],
        "lp_dims": [(e.num_vars, e.num_constraints) for e in trace.events],
        "conservation": conservation,
    }


def _run_tasks(tasks, threads):
    if threads == 0:
        threads = os.cpu_count() or 1
    if threads <= 1 or len(tasks) <= 1:
        return [_run_episode_task(t) for t in tasks]
    with Pool(processes=min(threads, len(tasks))) as pool:
        return pool.map(_run_episode_task, tasks, chunksize=1)


def _mean_hw(values):
    arr = np.asarray([v for v in values if v is not None], dtype=float)
    if arr.size == 0:
        return None, 0.0
    if arr.size == 1:
        return float(arr[0]), 0.0
    return float(arr.mean()), float(1.959963984540054 * arr.std(ddof=1) / np.sqrt(arr.size))


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _prepare_outdir(run: RunConfig, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    # The snapshot captures the experiment definition; output routing and
    # worker count do not affect results and are normalized away.
    snapshot = dataclasses.replace(
        run,
        experiment=dataclasses.replace(run.experiment, output_dir="out", threads=0),
    )
    with open(os.path.join(out_dir, "config.txt"), "w", encoding="utf-8") as fh:
        fh.write(emit_config(snapshot))


def _scenario_with(base: ScenarioConfig, **overrides) -> ScenarioConfig:
    return dataclasses.replace(base, **overrides)


# ---------------------------------------------------------------------------
# fig2: single-user SE vs prediction horizon
# ---------------------------------------------------------------------------

def run_fig2(run: RunConfig, out_dir: str) -> list[tuple]:
    """SE of one user against the prediction horizon, for re-optimization
    every slot versus once per horizon.  Deterministic: one replication."""
    spec = run.experiment
    base = run.scenario
    _prepare_outdir(run, out_dir)

    tasks = []
    meta = []
    sweep_index = 0
    for v in spec.video_rates_bps:
        for horizon in spec.fig2_horizons:
            for mode, reopt in (("tc1", 1), ("tcT", horizon)):
                scenario = _scenario_with(
                    base,
                    num_users=1,
                    prediction_sigma_db=0.0,
                    video_rate_bps=float(v),
                    horizon_slots=int(horizon),
                    reopt_step_slots=int(reopt),
                )
                tasks.append(
                    (scenario, "arrm", [base.seed, 2, sweep_index, 0, 0])
                )
                meta.append((float(v), int(horizon), mode))
                sweep_index += 1

    results = _run_tasks(tasks, spec.threads)
    rows = [
        (v, horizon, mode, res["se"])
        for (v, horizon, mode), res in zip(meta, results)
    ]
    write_csv(
        os.path.join(out_dir, "fig2.csv"),
        ["video_rate_bps", "horizon_slots", "mode", "se_bps_hz_cell"],
        rows,
    )
    from .plots import plot_fig2

    plot_fig2(rows, os.path.join(out_dir, "fig2.png"))
    _summarize_fig2(rows, out_dir)
    return rows


def _summarize_fig2(rows, out_dir):
    lines = ["single-user SE vs horizon (bps/Hz/cell)"]
    for mode in ("tc1", "tcT"):
        for v in sorted({r[0] for r in rows}):
            series = [r for r in rows if r[0] == v and r[2] == mode]
            ses = [r[3] for r in series]
            lines.append(
                f"  V={v/1e6:4.1f} Mbit/s {mode:4s}: "
                f"min={min(ses):6.3f} max={max(ses):6.3f}"
            )
    text = "\n".join(lines) + "\n"
    print(text, end="")
    with open(os.path.join(out_dir, "summary.txt"), "w", encoding="utf-8") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# fig3: stall fraction vs number of users
# ---------------------------------------------------------------------------

def _fig3_policies(spec: ExperimentSpec):
    policies = [("arrm", 0.0)]
    if spec.fig3_include_sigma:
        policies.append(("arrm_sigma", spec.fig3_sigma_db))
    policies.append(("baseline", 0.0))
    return tuple(policies)


def run_fig3(run: RunConfig, out_dir: str) -> list[tuple]:
    """Mean stalling fraction vs user count for the anticipatory allocator
    (perfect and noisy prediction) and the deficit baseline."""
    spec = run.experiment
    base = run.scenario
    _prepare_outdir(run, out_dir)

    grid = []
    sweep_index = 0
    for policy, sigma in _fig3_policies(spec):
        for v in spec.video_rates_bps:
            for k in spec.fig3_user_counts:
                scenario = _scenario_with(
                    base,
                    num_users=int(k),
                    video_rate_bps=float(v),
                    prediction_sigma_db=float(sigma),
                    horizon_slots=spec.fig3_horizon,
                    reopt_step_slots=spec.fig3_reopt_step,
                )
                grid.append((policy, sigma, float(v), int(k), sweep_index, scenario))
                sweep_index += 1

    tasks = []
    for policy, _sigma, _v, _k, sw, scenario in grid:
        for rep in range(spec.replications):
            tasks.append((scenario, policy, [base.seed, 3, sw, rep, _POLICY_CODES[policy]]))

    results = _run_tasks(tasks, spec.threads)
    rows = []
    idx = 0
    for policy, sigma, v, k, _sw, _scenario in grid:
        chunk = results[idx : idx + spec.replications]
        idx += spec.replications
        se_mean, se_hw = _mean_hw([c["se"] for c in chunk])
        stall_mean, stall_hw = _mean_hw([c["stall"] for c in chunk])
        rows.append(
            (policy, sigma, v, k, spec.replications,
             stall_mean, stall_hw, se_mean, se_hw)
        )
    write_csv(
        os.path.join(out_dir, "fig3.csv"),
        ["policy", "sigma_db", "video_rate_bps", "num_users", "replications",
         "stall_frac_mean", "stall_frac_hw95", "se_mean", "se_hw95"],
        rows,
    )
    from .plots import plot_fig3

    plot_fig3(rows, os.path.join(out_dir, "fig3.png"))
    _summarize_series(rows, out_dir, "stall fraction vs users")
    return rows


def _summarize_series(rows, out_dir, title):
    lines = [title]
    for policy in sorted({r[0] for r in rows}):
        for v in sorted({r[2] for r in rows}):
            series = [r for r in rows if r[0] == policy and r[2] == v]
            if not series:
                continue
            worst = max(r[5] for r in series)
            lines.append(
                f"  {policy:10s} V={v/1e6:4.1f}: max stall {100*worst:6.2f}%"
            )
    text = "\n".join(lines) + "\n"
    print(text, end="")
    with open(os.path.join(out_dir, "summary.txt"), "w", encoding="utf-8") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# fig4: SE vs stalling trade-off over the stall-price sweep
# ---------------------------------------------------------------------------

def gamma_grid(spec: ExperimentSpec) -> np.ndarray:
    lo, hi = spec.fig4_gamma_range
    return np.logspace(np.log10(lo), np.log10(hi), spec.fig4_gamma_points)


def run_fig4(run: RunConfig, out_dir: str) -> list[tuple]:
    """(stall fraction, cell SE) pairs over a logarithmic stall-price grid,
    plus the baseline's single operating point per video rate."""
    spec = run.experiment
    base = run.scenario
    _prepare_outdir(run, out_dir)

    grid = []
    sweep_index = 0
    for policy, sigma in (("arrm", 0.0), ("arrm_sigma", spec.fig3_sigma_db)):
        for v in spec.video_rates_bps:
            for gamma in gamma_grid(spec):
                scenario = _scenario_with(
                    base,
                    num_users=spec.fig4_users,
                    video_rate_bps=float(v),
                    prediction_sigma_db=float(sigma),
                    gamma=float(gamma),
                    horizon_slots=spec.fig3_horizon,
                    reopt_step_slots=spec.fig3_reopt_step,
                )
                grid.append((policy, sigma, float(v), float(gamma), sweep_index, scenario))
                sweep_index += 1
    for v in spec.video_rates_bps:
        scenario = _scenario_with(
            base, num_users=spec.fig4_users, video_rate_bps=float(v)
        )
        grid.append(("baseline", 0.0, float(v), None, sweep_index, scenario))
        sweep_index += 1

    tasks = []
    for policy, _sigma, _v, _gamma, sw, scenario in grid:
        for rep in range(spec.replications):
            tasks.append((scenario, policy, [base.seed, 4, sw, rep, _POLICY_CODES[policy]]))

    results = _run_tasks(tasks, spec.threads)
    rows = []
    idx = 0
    for policy, sigma, v, gamma, _sw, _scenario in grid:
        chunk = results[idx : idx + spec.replications]
        idx += spec.replications
        se_mean, se_hw = _mean_hw([c["se"] for c in chunk])
        stall_mean, stall_hw = _mean_hw([c["stall"] for c in chunk])
        rows.append(
            (policy, sigma, v, gamma, spec.replications,
             stall_mean, stall_hw, se_mean, se_hw)
        )
    write_csv(
        os.path.join(out_dir, "fig4.csv"),
        ["policy", "sigma_db", "video_rate_bps", "gamma", "replications",
         "stall_frac_mean", "stall_frac_hw95", "se_mean", "se_hw95"],
        rows,
    )
    from .plots import plot_fig4

    plot_fig4(rows, os.path.join(out_dir, "fig4.png"))
    _summarize_series(rows, out_dir, "SE vs stalling trade-off")
    return rows


# ---------------------------------------------------------------------------
# fig5: SE at the QoS stalling target, against the baseline
# ---------------------------------------------------------------------------

def se_at_stall_target(series, target):
    """Best SE along a sweep subject to mean stalling <= target.

    ``series`` is a list of (stall_mean, se_mean) sorted in sweep order.
    Where the curve crosses the target, the crossing is interpolated
    linearly in the stall fraction; a curve entirely below the target
    contributes its maximum SE; entirely above, None.
    """
    series = [(s, e) for s, e in series if s is not None and e is not None]
    qualified = [se for stall, se in series if stall <= target]
    best = max(qualified) if qualified else None
    for (s0, e0), (s1, e1) in zip(series, series[1:]):
        lo, hi = (s0, s1) if s0 <= s1 else (s1, s0)
        if lo <= target <= hi and hi > lo:
            frac = (target - s0) / (s1 - s0)
            se_cross = e0 + frac * (e1 - e0)
            best = se_cross if best is None else max(best, se_cross)
    return best


def fig5_from_rows(fig4_rows, target):
    """Reduce a fig4 sweep to the QoS-point table."""
    out = []
    rates = sorted({r[2] for r in fig4_rows})
    for v in rates:
        baseline = [r for r in fig4_rows if r[0] == "baseline" and r[2] == v]
        base_se = base_stall = None
        if baseline:
            base_stall = baseline[0][5]
            if base_stall <= target:
                base_se = baseline[0][7]
        for policy in ("arrm", "arrm_sigma"):
            series = [
                (r[5], r[7])
                for r in fig4_rows
                if r[0] == policy and r[2] == v
            ]
            if not series:
                continue
            sigma = next(r[1] for r in fig4_rows if r[0] == policy and r[2] == v)
            se = se_at_stall_target(series, target)
            gain = None
            if se is not None and base_se is not None and base_se > 0:
                gain = se / base_se
            out.append((v, policy, sigma, target, se, base_se, base_stall, gain))
    return out


def run_fig5(run: RunConfig, out_dir: str, fig4_rows=None) -> list[tuple]:
    """SE at the stalling QoS target and the gain over the baseline.

    Reuses fig4 sweep rows when given (or loaded via the CLI flag); runs the
    sweep otherwise.
    """
    spec = run.experiment
    _prepare_outdir(run, out_dir)
    if fig4_rows is None:
        fig4_rows = run_fig4(run, out_dir)
    rows = fig5_from_rows(fig4_rows, spec.fig5_stall_target)
    write_csv(
        os.path.join(out_dir, "fig5.csv"),
        ["video_rate_bps", "policy", "sigma_db", "stall_target",
         "se_at_target", "baseline_se", "baseline_stall_frac", "gain"],
        rows,
    )
    from .plots import plot_fig5

    plot_fig5(rows, os.path.join(out_dir, "fig5.png"))
    lines = [f"cell SE at {100*spec.fig5_stall_target:.0f}% stalling"]
    for v, policy, sigma, _t, se, base_se, _bs, gain in rows:
        se_txt = "n/a" if se is None else f"{se:6.3f}"
        gain_txt = "n/a" if gain is None else f"{gain:4.2f}x"
        lines.append(
            f"  V={v/1e6:4.1f} {policy:10s} sigma={sigma:4.1f}: "
            f"SE={se_txt} gain={gain_txt}"
        )
    text = "\n".join(lines) + "\n"
    print(text, end="")
    with open(os.path.join(out_dir, "summary.txt"), "w", encoding="utf-8") as fh:
        fh.write(text)
    return rows


def load_fig4_csv(path):
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        expected = ["policy", "sigma_db", "video_rate_bps", "gamma", "replications",
                    "stall_frac_mean", "stall_frac_hw95", "se_mean", "se_hw95"]
        if header != expected:
            raise ValueError(f"unexpected fig4 csv header: {header}")
        for line in fh:
            parts = line.rstrip("\n").split(",")
            rows.append(
                (
                    parts[0],
                    float(parts[1]),
                    float(parts[2]),
                    None if parts[3] == "" else float(parts[3]),
                    int(parts[4]),
                    None if parts[5] == "" else float(parts[5]),
                    None if parts[6] == "" else float(parts[6]),
                    None if parts[7] == "" else float(parts[7]),
                    None if parts[8] == "" else float(parts[8]),
                )
            )
    return rows


# ---------------------------------------------------------------------------
# table2: solve-time scaling of one optimization
# ---------------------------------------------------------------------------

def timing_instance(kp, horizon, scenario: ScenarioConfig, rng) -> ProblemInstance:
    """One optimization's inputs with kp users sharing a full horizon:
    fresh buffers, positions drawn uniformly along the road."""
    from .channel import achievable_rate_per_prb, path_loss_db

    topo = scenario.topology
    budget = scenario.link_budget
    td = scenario.slot_duration_s
    pos0 = rng.uniform(0.0, topo.line_end_m, size=kp)
    t_idx = np.arange(horizon)
    pos = np.clip(pos0[:, None] + scenario.speed_mps * td * t_idx[None, :], 0.0, topo.line_end_m)
    bs_pos = np.asarray(topo.bs_positions_m)
    dists = np.abs(pos[:, :, None] - bs_pos[None, None, :])
    serving = np.argmin(dists, axis=2)
    d = np.take_along_axis(dists, serving[:, :, None], axis=2)[:, :, 0]
    d = np.maximum(d, topo.min_distance_m) / 1000.0
    gain = -(path_loss_db(d) + budget.shadow_margin_db)
    s_bits = achievable_rate_per_prb(gain, budget) * td
    v_bits = np.full((kp, horizon), scenario.video_rate_bps * td)
    inst = ProblemInstance(
        bits_per_prb=s_bits,
        playout_bits=v_bits,
        initial_buffer=np.zeros(kp),
        buffer_cap=np.full(kp, scenario.buffer_cap_bits),
        serving_bs=serving,
        prbs_per_bs=np.full(topo.num_bs, float(topo.prbs_per_bs)),
        gamma=1.0,
    )
    gamma = min(max(10.0 * gamma_threshold(inst), 1.0), 1e4)
    return dataclasses.replace(inst, gamma=gamma)


def _table2_cell(args):
    kp, horizon, scenario, entropy = args
    rng = np.random.default_rng(np.random.SeedSequence(entropy))
    inst = timing_instance(kp, horizon, scenario, rng)
    lp = build_lp_with_stalls(inst)
    sol = solve_lp(lp)
    if sol.status is not LpStatus.OPTIMAL:
        raise RuntimeError(f"timing instance unsolved: {sol.status}")
    return {
        "num_vars": lp.num_vars,
        "num_constraints": lp.num_constraints,
        "iterations": sol.iteration_count,
        "solve_time_s": sol.solve_time,
    }


def _baseline_timing(kp, scenario, rng):
    inst = timing_instance(kp, 1, scenario, rng)
    start = time.perf_counter()
    baseline_allocate(
        inst.bits_per_prb[:, 0],
        inst.playout_bits[:, 0],
        inst.initial_buffer,
        inst.serving_bs[:, 0],
        inst.prbs_per_bs,
        policy=scenario.baseline_policy,
    )
    return time.perf_counter() - start


def run_table2(run: RunConfig, out_dir: str):
    """Median time of one optimization by active users and horizon, with the
    baseline's per-slot allocation time for scale.  LP sizes and iteration
    counts go to table2.csv (deterministic); wall-clock medians to
    table2_timing.csv."""
    spec = run.experiment
    base = _scenario_with(run.scenario, video_rate_bps=1.5e6)
    _prepare_outdir(run, out_dir)

    tasks = []
    meta = []
    sweep_index = 0
    for kp in spec.table2_user_counts:
        for horizon in spec.table2_horizons:
            for rep in range(spec.table2_replications):
                tasks.append((int(kp), int(horizon), base,
                              [base.seed, 12, sweep_index, rep, 0]))
            meta.append((int(kp), int(horizon)))
            sweep_index += 1

    threads = spec.threads or (os.cpu_count() or 1)
    if threads <= 1:
        results = [_table2_cell(t) for t in tasks]
    else:
        with Pool(processes=min(threads, len(tasks))) as pool:
            results = pool.map(_table2_cell, tasks, chunksize=1)

    size_rows = []
    time_rows = []
    idx = 0
    for kp, horizon in meta:
        chunk = results[idx : idx + spec.table2_replications]
        idx += spec.table2_replications
        iters = [c["iterations"] for c in chunk]
        times = [c["solve_time_s"] for c in chunk]
        q1, med, q3 = np.percentile(times, [25.0, 50.0, 75.0])
        size_rows.append(
            (kp, horizon, chunk[0]["num_vars"], chunk[0]["num_constraints"],
             float(np.median(iters)), spec.table2_replications)
        )
        time_rows.append(
            (kp, horizon, 1e3 * float(med), 1e3 * float(q1), 1e3 * float(q3))
        )

    rng = np.random.default_rng(np.random.SeedSequence([base.seed, 12, 9999, 0, 2]))
    for kp in spec.table2_user_counts:
        samples = [_baseline_timing(int(kp), base, rng)
                   for _ in range(spec.table2_replications)]
        q1, med, q3 = np.percentile(samples, [25.0, 50.0, 75.0])
        time_rows.append((int(kp), 0, 1e3 * float(med), 1e3 * float(q1), 1e3 * float(q3)))

    write_csv(
        os.path.join(out_dir, "table2.csv"),
        ["active_users", "horizon_slots", "num_vars", "num_constraints",
         "median_iterations", "replications"],
        size_rows,
    )
    write_csv(
        os.path.join(out_dir, "table2_timing.csv"),
        ["active_users", "horizon_slots", "median_ms", "q1_ms", "q3_ms"],
        time_rows,
    )
    lines = ["median time of one optimization (ms); horizon 0 = baseline step"]
    for kp, horizon, med, q1, q3 in time_rows:
        lines.append(f"  K'={kp:3d} T={horizon:3d}: {med:10.2f}  [{q1:.2f}, {q3:.2f}]")
    text = "\n".join(lines) + "\n"
    print(text, end="")
    with open(os.path.join(out_dir, "summary.txt"), "w", encoding="utf-8") as fh:
        fh.write(text)
    return size_rows, time_rows


# ---------------------------------------------------------------------------
# custom: the configured scenario as-is, both policies
# ---------------------------------------------------------------------------

def run_custom(run: RunConfig, out_dir: str):
    """Monte-Carlo of the configured scenario under both policies; dumps the
    first replication's full traces and the aggregate metrics."""
    spec = run.experiment
    base = run.scenario
    _prepare_outdir(run, out_dir)

    tasks = []
    for policy in ("arrm", "baseline"):
        for rep in range(spec.replications):
            tasks.append((base, policy, [base.seed, 0, 0, rep, _POLICY_CODES[policy]]))
    results = _run_tasks(tasks, spec.threads)

    rows = []
    timing_rows = []
    for i, policy in enumerate(("arrm", "baseline")):
        chunk = results[i * spec.replications : (i + 1) * spec.replications]
        se_mean, se_hw = _mean_hw([c["se"] for c in chunk])
        stall_mean, stall_hw = _mean_hw([c["stall"] for c in chunk])
        rows.append((policy, spec.replications, se_mean, se_hw,
                     stall_mean, stall_hw))
        solve_times = [t for c in chunk for t in c["solve_times"]]
        if solve_times:
            q1, med, q3 = np.percentile(solve_times, [25.0, 50.0, 75.0])
            timing_rows.append(
                (policy, spec.replications, 1e3 * float(med),
                 1e3 * float(q1), 1e3 * float(q3))
            )
    write_csv(
        os.path.join(out_dir, "metrics.csv"),
        ["policy", "replications", "se_mean", "se_hw95",
         "stall_frac_mean", "stall_frac_hw95"],
        rows,
    )
    # Wall-clock statistics live apart from the results so every other CSV
    # is byte-reproducible from (config, seed).
    write_csv(
        os.path.join(out_dir, "timing.csv"),
        ["policy", "replications", "solve_median_ms", "solve_q1_ms", "solve_q3_ms"],
        timing_rows,
    )

    # Full first-replication traces, one file per policy.
    for policy in ("arrm", "baseline"):
        rng = np.random.default_rng(
            _episode_seed(base.seed, "custom", 0, 0, policy)
        )
        trace = run_episode(base, rng, policy=policy)
        slot_rows = [
            (policy, trace.user[i], trace.slot[i], trace.serving_bs[i],
             trace.omega[i], trace.rate_true_bps[i], trace.delivered_bits[i],
             trace.buffer_bits[i], trace.stall_frac[i],
             trace.discarded_bits[i], trace.playout_bits[i])
            for i in range(len(trace.user))
        ]
        write_csv(
            os.path.join(out_dir, f"slots_{policy}.csv"),
            ["policy", "user", "slot", "serving_bs", "omega_prb",
             "rate_true_bps", "delivered_bits", "buffer_bits", "stall_frac",
             "discarded_bits", "playout_bits"],
            slot_rows,
        )
        event_rows = [
            (policy, e.slot, e.trigger, e.active_users, e.num_vars,
             e.num_constraints, e.status, e.iterations,
             1e3 * e.solve_time_s, e.gamma)
            for e in trace.events
        ]
        write_csv(
            os.path.join(out_dir, f"events_{policy}.csv"),
            ["policy", "slot", "trigger", "active_users", "num_vars",
             "num_constraints", "status", "iterations", "solve_time_ms",
             "gamma"],
            event_rows,
        )

    lines = ["scenario metrics"]
    for policy, reps, se, se_hw, stall, stall_hw in rows:
        se_txt = "n/a" if se is None else f"{se:6.3f}"
        lines.append(
            f"  {policy:8s} reps={reps}: SE={se_txt} "
            f"stall={100 * stall:6.2f}% +-{100 * stall_hw:.2f}"
        )
    text = "\n".join(lines) + "\n"
    print(text, end="")
    with open(os.path.join(out_dir, "summary.txt"), "w", encoding="utf-8") as fh:
        fh.write(text)
    return rows
