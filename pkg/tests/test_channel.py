import math

import numpy as np
import pytest

from arrm.channel import (
    ChannelGainTrace,
    LinkBudget,
    achievable_rate_per_prb,
    apply_prediction_error,
    path_loss_db,
)


def test_path_loss_reference_points():
    assert path_loss_db(1.0) == pytest.approx(128.1, abs=1e-12)
    assert path_loss_db(0.1) == pytest.approx(128.1 - 37.6, abs=1e-12)


def test_path_loss_quarter_km():
    # Independent evaluation of the empirical law at 250 m.
    expected = 128.1 + 37.6 * math.log10(0.25)
    assert expected == pytest.approx(105.46254432606862, abs=1e-9)
    assert path_loss_db(0.25) == pytest.approx(expected, abs=1e-12)


def test_path_loss_rejects_nonpositive():
    with pytest.raises(ValueError):
        path_loss_db(0.0)
    with pytest.raises(ValueError):
        path_loss_db(-1.0)


def test_sinr_gap_default_ber():
    budget = LinkBudget()
    expected = -math.log(5e-6) / 1.5
    assert budget.sinr_gap_linear == pytest.approx(expected, rel=1e-12)
    assert budget.sinr_gap_linear == pytest.approx(8.1374, abs=1e-4)


def test_rate_at_unit_effective_sinr():
    # Pick the gain so the post-gap SINR is exactly 1; then rate = B.
    budget = LinkBudget()
    gap_db = 10.0 * math.log10(budget.sinr_gap_linear)
    gain = (
        budget.noise_power_dbm
        + budget.interference_margin_db
        + gap_db
        - budget.per_prb_power_dbm
        - budget.antenna_gain_dbi
    )
    assert achievable_rate_per_prb(gain, budget) == pytest.approx(180e3, rel=1e-12)


def test_rate_vanishes_with_gain():
    budget = LinkBudget()
    assert achievable_rate_per_prb(-400.0, budget) == pytest.approx(0.0, abs=1e-6)


def test_rate_full_budget_at_quarter_km():
    # Spreadsheet-style recomputation in the linear (mW) domain, assembled
    # differently from the implementation's dB-domain path.  Total power is
    # split evenly over the 50 PRBs.
    budget = LinkBudget()
    pl = 128.1 + 37.6 * math.log10(0.25)
    gain_db = -(pl + budget.shadow_margin_db)
    rx_mw = 10 ** ((46.0 + 18.0 + gain_db) / 10.0) / 50.0
    noise_mw = 10 ** ((-174.0 + 10 * math.log10(180e3) + 10.0) / 10.0)
    interference = 10 ** (6.0 / 10.0)
    gap = -math.log(5e-6) / 1.5
    sinr_eff = rx_mw / (noise_mw * interference) / gap
    expected = 180e3 * math.log2(1.0 + sinr_eff)
    got = achievable_rate_per_prb(gain_db, budget)
    assert got == pytest.approx(expected, rel=1e-10)
    # West of 2 Mbit/s per PRB at the cell edge of this layout.
    assert 1e6 < got < 2e6


def test_rate_monotone_in_gain_and_ber():
    budget = LinkBudget()
    gains = np.linspace(-140.0, -60.0, 25)
    rates = achievable_rate_per_prb(gains, budget)
    assert np.all(np.diff(rates) > 0)
    worse_ber = LinkBudget(ber=1e-3)
    better_ber = LinkBudget(ber=1e-8)
    r_mid = achievable_rate_per_prb(-100.0, budget)
    assert achievable_rate_per_prb(-100.0, worse_ber) > r_mid
    assert achievable_rate_per_prb(-100.0, better_ber) < r_mid


def test_budget_validation():
    with pytest.raises(ValueError):
        LinkBudget(ber=0.0)
    with pytest.raises(ValueError):
        LinkBudget(ber=0.5)
    with pytest.raises(ValueError):
        LinkBudget(shadow_margin_db=-1.0)


def test_prediction_error_zero_sigma_exact():
    rng = np.random.default_rng(0)
    for t in (1, 50, 100):
        assert apply_prediction_error(-95.5, t, 100, 0.0, rng) == -95.5


def test_prediction_error_std_at_full_horizon():
    rng = np.random.default_rng(123)
    draws = apply_prediction_error(
        np.zeros(100_000), np.full(100_000, 100), 100, 10.0, rng
    )
    assert 9.9 <= draws.std() <= 10.1


def test_prediction_error_std_at_half_horizon():
    rng = np.random.default_rng(124)
    draws = apply_prediction_error(
        np.zeros(100_000), np.full(100_000, 50), 100, 10.0, rng
    )
    assert draws.std() == pytest.approx(5.0, rel=0.01)


def test_prediction_error_mean_unbiased():
    rng = np.random.default_rng(125)
    for t, horizon, sigma in [(10, 100, 20.0), (100, 100, 5.0), (1, 4, 12.0)]:
        draws = apply_prediction_error(
            np.zeros(120_000), np.full(120_000, t), horizon, sigma, rng
        )
        assert abs(draws.mean()) < 0.1


def test_prediction_error_rejects_bad_offsets():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        apply_prediction_error(0.0, 0, 100, 1.0, rng)
    with pytest.raises(ValueError):
        apply_prediction_error(0.0, 101, 100, 1.0, rng)
    with pytest.raises(ValueError):
        apply_prediction_error(0.0, 1, 100, -1.0, rng)


def test_prediction_error_deterministic_under_seed():
    a = apply_prediction_error(-90.0, 7, 20, 4.0, np.random.default_rng(9))
    b = apply_prediction_error(-90.0, 7, 20, 4.0, np.random.default_rng(9))
    assert a == b


def test_gain_trace_length_invariant():
    with pytest.raises(ValueError):
        ChannelGainTrace(np.zeros(5), np.zeros(4))
    tr = ChannelGainTrace(np.zeros(5), np.zeros(5))
    assert len(tr) == 5
