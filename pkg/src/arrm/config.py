"""Run configuration: flat INI file with one section per module.

Every reference-scenario parameter maps to a named key whose default is the
reference value, so an empty file reproduces the standard two-cell study.
Parsing and re-emitting a file is idempotent (canonical key order and float
formatting).
"""
from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field

from .channel import LinkBudget
from .scenario import ScenarioConfig, Topology

_FIG2_HORIZONS = (
    1, 2, 3, 4, 5, 6, 8, 10, 12, 15, 20, 25, 30, 35, 40, 50, 60, 70, 80, 90, 100,
)


@dataclass(frozen=True)
class ExperimentSpec:
    """Sweep shapes, replication counts, and output routing for the drivers."""

    replications: int = 200
    threads: int = 0  # 0 = all cores
    output_dir: str = "out"
    video_rates_bps: tuple[float, ...] = (1.5e6, 2.5e6, 4e6, 6e6)
    fig2_horizons: tuple[int, ...] = _FIG2_HORIZONS
    fig3_user_counts: tuple[int, ...] = (1, 4, 8, 12, 16, 20, 24, 28, 30)
    fig3_sigma_db: float = 10.0
    fig3_include_sigma: bool = True
    fig3_horizon: int = 100
    fig3_reopt_step: int = 20
    fig4_users: int = 20
    fig4_gamma_points: int = 20
    fig4_gamma_range: tuple[float, float] = (1.0, 1e4)
    fig5_stall_target: float = 0.10
    table2_user_counts: tuple[int, ...] = (1, 10, 20, 30)
    table2_horizons: tuple[int, ...] = (20, 50, 100)
    table2_replications: int = 25

    def __post_init__(self):
        if self.replications < 1 or self.table2_replications < 1:
            raise ValueError("replication counts must be at least 1")
        if self.fig4_gamma_points < 2:
            raise ValueError("gamma sweep needs at least two points")
        if not (0.0 < self.fig5_stall_target < 1.0):
            raise ValueError("stall target must be a fraction in (0, 1)")


# (section, key, type) -> attribute path; order here is the canonical
# emission order.
_SCHEMA = [
    ("scenario", "num_users", int),
    ("scenario", "slot_duration_s", float),
    ("scenario", "horizon_slots", int),
    ("scenario", "reopt_step_slots", int),
    ("scenario", "lifetime_slots", int),
    ("scenario", "prediction_sigma_db", float),
    ("scenario", "gamma", "gamma"),
    ("scenario", "seed", int),
    ("scenario", "baseline_policy", str),
    ("topology", "num_bs", int),
    ("topology", "inter_site_distance_m", float),
    ("topology", "prbs_per_bs", int),
    ("topology", "min_distance_m", float),
    ("topology", "bs_antenna_height_m", float),
    ("link_budget", "tx_power_dbm", float),
    ("link_budget", "antenna_gain_dbi", float),
    ("link_budget", "prb_bandwidth_hz", float),
    ("link_budget", "noise_density_dbm_hz", float),
    ("link_budget", "noise_figure_db", float),
    ("link_budget", "interference_margin_db", float),
    ("link_budget", "shadow_margin_db", float),
    ("link_budget", "ber", float),
    ("user", "speed_mps", float),
    ("user", "video_rate_bps", float),
    ("user", "buffer_cap_bits", float),
    ("user", "initial_buffer_bits", float),
    ("experiment", "replications", int),
    ("experiment", "threads", int),
    ("experiment", "output_dir", str),
    ("experiment", "video_rates_mbps", "floats"),
    ("experiment", "fig2_horizons", "ints"),
    ("experiment", "fig3_user_counts", "ints"),
    ("experiment", "fig3_sigma_db", float),
    ("experiment", "fig3_include_sigma", "bool"),
    ("experiment", "fig3_horizon", int),
    ("experiment", "fig3_reopt_step", int),
    ("experiment", "fig4_users", int),
    ("experiment", "fig4_gamma_points", int),
    ("experiment", "fig5_stall_target", float),
    ("experiment", "table2_user_counts", "ints"),
    ("experiment", "table2_horizons", "ints"),
    ("experiment", "table2_replications", int),
]

# The BS antenna height is listed among the reference parameters but the
# empirical path-loss law uses plain ground distance, so the value is carried
# in the config without entering the computation.
_DEFAULT_ANTENNA_HEIGHT_M = 35.0


@dataclass(frozen=True)
class RunConfig:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    experiment: ExperimentSpec = field(default_factory=ExperimentSpec)
    bs_antenna_height_m: float = _DEFAULT_ANTENNA_HEIGHT_M


def _format_value(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (tuple, list)):
        return " ".join(_format_value(v) for v in value)
    return str(value)


def _collect_values(run: RunConfig) -> dict[tuple[str, str], str]:
    sc = run.scenario
    topo = sc.topology
    lb = sc.link_budget
    ex = run.experiment
    vals = {
        ("scenario", "num_users"): sc.num_users,
        ("scenario", "slot_duration_s"): sc.slot_duration_s,
        ("scenario", "horizon_slots"): sc.horizon_slots,
        ("scenario", "reopt_step_slots"): sc.reopt_step_slots,
        ("scenario", "lifetime_slots"): sc.lifetime_slots,
        ("scenario", "prediction_sigma_db"): sc.prediction_sigma_db,
        ("scenario", "gamma"): sc.gamma,
        ("scenario", "seed"): sc.seed,
        ("scenario", "baseline_policy"): sc.baseline_policy,
        ("topology", "num_bs"): topo.num_bs,
        ("topology", "inter_site_distance_m"): topo.inter_site_distance_m,
        ("topology", "prbs_per_bs"): topo.prbs_per_bs,
        ("topology", "min_distance_m"): topo.min_distance_m,
        ("topology", "bs_antenna_height_m"): run.bs_antenna_height_m,
        ("link_budget", "tx_power_dbm"): lb.tx_power_dbm,
        ("link_budget", "antenna_gain_dbi"): lb.antenna_gain_dbi,
        ("link_budget", "prb_bandwidth_hz"): lb.prb_bandwidth_hz,
        ("link_budget", "noise_density_dbm_hz"): lb.noise_density_dbm_hz,
        ("link_budget", "noise_figure_db"): lb.noise_figure_db,
        ("link_budget", "interference_margin_db"): lb.interference_margin_db,
        ("link_budget", "shadow_margin_db"): lb.shadow_margin_db,
        ("link_budget", "ber"): lb.ber,
        ("user", "speed_mps"): sc.speed_mps,
        ("user", "video_rate_bps"): sc.video_rate_bps,
        ("user", "buffer_cap_bits"): sc.buffer_cap_bits,
        ("user", "initial_buffer_bits"): sc.initial_buffer_bits,
        ("experiment", "replications"): ex.replications,
        ("experiment", "threads"): ex.threads,
        ("experiment", "output_dir"): ex.output_dir,
        ("experiment", "video_rates_mbps"): tuple(v / 1e6 for v in ex.video_rates_bps),
        ("experiment", "fig2_horizons"): ex.fig2_horizons,
        ("experiment", "fig3_user_counts"): ex.fig3_user_counts,
        ("experiment", "fig3_sigma_db"): ex.fig3_sigma_db,
        ("experiment", "fig3_include_sigma"): ex.fig3_include_sigma,
        ("experiment", "fig3_horizon"): ex.fig3_horizon,
        ("experiment", "fig3_reopt_step"): ex.fig3_reopt_step,
        ("experiment", "fig4_users"): ex.fig4_users,
        ("experiment", "fig4_gamma_points"): ex.fig4_gamma_points,
        ("experiment", "fig5_stall_target"): ex.fig5_stall_target,
        ("experiment", "table2_user_counts"): ex.table2_user_counts,
        ("experiment", "table2_horizons"): ex.table2_horizons,
        ("experiment", "table2_replications"): ex.table2_replications,
    }
    return vals


def emit_config(run: RunConfig) -> str:
    """Canonical text form; emit(parse(emit(x))) == emit(x)."""
    vals = _collect_values(run)
    out = io.StringIO()
    current = None
    for section, key, _ in _SCHEMA:
        if section != current:
            if current is not None:
                out.write("\n")
            out.write(f"[{section}]\n")
            current = section
        out.write(f"{key} = {_format_value(vals[(section, key)])}\n")
    return out.getvalue()


class ConfigError(ValueError):
    pass


def parse_config(text: str) -> RunConfig:
    """Parse the INI text over the reference defaults; unknown keys error."""
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text)
    except configparser.Error as err:
        raise ConfigError(f"bad config syntax: {err}") from err

    known = {(s, k): typ for s, k, typ in _SCHEMA}
    raw: dict[tuple[str, str], str] = {}
    for section in parser.sections():
        for key, value in parser.items(section):
            if (section, key) not in known:
                raise ConfigError(f"unknown config key [{section}] {key}")
            raw[(section, key)] = value

    def get(section, key, default):
        if (section, key) not in raw:
            return default
        text_val = raw[(section, key)]
        typ = known[(section, key)]
        try:
            if typ is int:
                return int(text_val)
            if typ is float:
                return float(text_val)
            if typ is str:
                return text_val.strip()
            if typ == "gamma":
                stripped = text_val.strip()
                return stripped if stripped == "auto" else float(stripped)
            if typ == "bool":
                stripped = text_val.strip().lower()
                if stripped in ("true", "yes", "1"):
                    return True
                if stripped in ("false", "no", "0"):
                    return False
                raise ValueError(stripped)
            if typ == "ints":
                return tuple(int(v) for v in text_val.split())
            if typ == "floats":
                return tuple(float(v) for v in text_val.split())
        except ValueError as err:
            raise ConfigError(f"bad value for [{section}] {key}: {text_val!r}") from err
        raise AssertionError(typ)

    defaults = RunConfig()
    d_sc = defaults.scenario
    d_ex = defaults.experiment

    prbs = get("topology", "prbs_per_bs", d_sc.topology.prbs_per_bs)
    topo = Topology(
        num_bs=get("topology", "num_bs", d_sc.topology.num_bs),
        inter_site_distance_m=get(
            "topology", "inter_site_distance_m", d_sc.topology.inter_site_distance_m
        ),
        prbs_per_bs=prbs,
        min_distance_m=get("topology", "min_distance_m", d_sc.topology.min_distance_m),
    )
    budget = LinkBudget(
        tx_power_dbm=get("link_budget", "tx_power_dbm", d_sc.link_budget.tx_power_dbm),
        antenna_gain_dbi=get(
            "link_budget", "antenna_gain_dbi", d_sc.link_budget.antenna_gain_dbi
        ),
        prb_bandwidth_hz=get(
            "link_budget", "prb_bandwidth_hz", d_sc.link_budget.prb_bandwidth_hz
        ),
        noise_density_dbm_hz=get(
            "link_budget", "noise_density_dbm_hz", d_sc.link_budget.noise_density_dbm_hz
        ),
        noise_figure_db=get(
            "link_budget", "noise_figure_db", d_sc.link_budget.noise_figure_db
        ),
        interference_margin_db=get(
            "link_budget",
            "interference_margin_db",
            d_sc.link_budget.interference_margin_db,
        ),
        shadow_margin_db=get(
            "link_budget", "shadow_margin_db", d_sc.link_budget.shadow_margin_db
        ),
        ber=get("link_budget", "ber", d_sc.link_budget.ber),
        power_share_prbs=prbs,
    )
    try:
        scenario = ScenarioConfig(
            num_users=get("scenario", "num_users", d_sc.num_users),
            slot_duration_s=get("scenario", "slot_duration_s", d_sc.slot_duration_s),
            horizon_slots=get("scenario", "horizon_slots", d_sc.horizon_slots),
            reopt_step_slots=get("scenario", "reopt_step_slots", d_sc.reopt_step_slots),
            lifetime_slots=get("scenario", "lifetime_slots", d_sc.lifetime_slots),
            prediction_sigma_db=get(
                "scenario", "prediction_sigma_db", d_sc.prediction_sigma_db
            ),
            gamma=get("scenario", "gamma", d_sc.gamma),
            seed=get("scenario", "seed", d_sc.seed),
            baseline_policy=get("scenario", "baseline_policy", d_sc.baseline_policy),
            speed_mps=get("user", "speed_mps", d_sc.speed_mps),
            video_rate_bps=get("user", "video_rate_bps", d_sc.video_rate_bps),
            buffer_cap_bits=get("user", "buffer_cap_bits", d_sc.buffer_cap_bits),
            initial_buffer_bits=get(
                "user", "initial_buffer_bits", d_sc.initial_buffer_bits
            ),
            topology=topo,
            link_budget=budget,
        )
        rates_mbps = get(
            "experiment",
            "video_rates_mbps",
            tuple(v / 1e6 for v in d_ex.video_rates_bps),
        )
        experiment = ExperimentSpec(
            replications=get("experiment", "replications", d_ex.replications),
            threads=get("experiment", "threads", d_ex.threads),
            output_dir=get("experiment", "output_dir", d_ex.output_dir),
            video_rates_bps=tuple(v * 1e6 for v in rates_mbps),
            fig2_horizons=get("experiment", "fig2_horizons", d_ex.fig2_horizons),
            fig3_user_counts=get(
                "experiment", "fig3_user_counts", d_ex.fig3_user_counts
            ),
            fig3_sigma_db=get("experiment", "fig3_sigma_db", d_ex.fig3_sigma_db),
            fig3_include_sigma=get(
                "experiment", "fig3_include_sigma", d_ex.fig3_include_sigma
            ),
            fig3_horizon=get("experiment", "fig3_horizon", d_ex.fig3_horizon),
            fig3_reopt_step=get("experiment", "fig3_reopt_step", d_ex.fig3_reopt_step),
            fig4_users=get("experiment", "fig4_users", d_ex.fig4_users),
            fig4_gamma_points=get(
                "experiment", "fig4_gamma_points", d_ex.fig4_gamma_points
            ),
            fig5_stall_target=get(
                "experiment", "fig5_stall_target", d_ex.fig5_stall_target
            ),
            table2_user_counts=get(
                "experiment", "table2_user_counts", d_ex.table2_user_counts
            ),
            table2_horizons=get(
                "experiment", "table2_horizons", d_ex.table2_horizons
            ),
            table2_replications=get(
                "experiment", "table2_replications", d_ex.table2_replications
            ),
        )
    except ValueError as err:
        raise ConfigError(str(err)) from err

    height = get("topology", "bs_antenna_height_m", _DEFAULT_ANTENNA_HEIGHT_M)
    return RunConfig(scenario=scenario, experiment=experiment, bs_antenna_height_m=height)


def load_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())
