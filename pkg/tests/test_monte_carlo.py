import math
from dataclasses import replace

import numpy as np
import pytest

from common.errors import ValidationError
from common.runner import BlockRunner
from common.util import ps_to_s
from models.counts import DetectorSpec, background_for_fraction, car_model, pairs_per_pulse
from models.hom import dip_visibility
from models.monte_carlo import (
    N_ACCIDENTAL_OFFSETS,
    apply_dead_time,
    count_accidentals,
    mc_run_car,
    mc_run_hom,
)

GATE = 0.8e-9


def power_for_mu(scenario, mu):
    # μ ∝ p² 이므로 현재 세기에서 비례로 옮긴다
    mu_ref = pairs_per_pulse(scenario.fiber, scenario.pump, scenario.capture)
    return scenario.pump.p_avg * math.sqrt(mu / mu_ref)


def toy_scenario(base, mu, efficiency, dark_prob, dead_time=0.0, **kwargs):
    dark_rate = dark_prob / GATE
    detectors = (
        DetectorSpec(efficiency, dark_rate, dead_time, GATE, "free_running"),
        DetectorSpec(efficiency, dark_rate, 0.0, GATE, "gated"),
        DetectorSpec(efficiency, dark_rate, 0.0, GATE, "gated"),
        DetectorSpec(efficiency, dark_rate, dead_time, GATE, "free_running"),
    )
    scenario = replace(base, detectors=detectors, coincidence_window=GATE, **kwargs)
    return scenario.with_power(power_for_mu(scenario, mu))


@pytest.fixture(scope="module")
def busy_scenario(noise_free_scenario):
    return toy_scenario(noise_free_scenario, 0.0065, 0.2, 8e-4, dead_time=3e-6)


def test_block_runner_keeps_block_order():
    def block_fn(block, start, stop):
        return block, start, stop

    serial = BlockRunner(1000, block_size=64).run(block_fn)
    threaded = BlockRunner(1000, block_size=64, workers=4).run(block_fn)
    assert serial == threaded
    assert [r[0] for r in serial] == list(range(16))
    assert serial[-1] == (15, 960, 1000)
    with pytest.raises(ValidationError):
        BlockRunner(0)
    with pytest.raises(ValidationError):
        BlockRunner(10, workers=0)


def test_apply_dead_time():
    clicks = np.array([0, 10, 90, 100, 200], dtype=np.int64)
    assert apply_dead_time(clicks, 84).tolist() == [0, 90, 200]
    assert apply_dead_time(clicks, 1) is clicks


def test_count_accidentals():
    s = np.array([0, 5, 9], dtype=np.int64)
    i = np.array([2, 7, 11, 30], dtype=np.int64)
    # j=2: 0->2, 5->7, 9->11
    assert count_accidentals(s, i, [2]) == 3
    assert count_accidentals(s, i, [1, 2, 3]) == 3
    assert count_accidentals(s, i, [21]) == 1


def test_mc_car_is_deterministic(busy_scenario):
    a = mc_run_car(busy_scenario, 200_000, seed=7)
    b = mc_run_car(busy_scenario, 200_000, seed=7)
    c = mc_run_car(busy_scenario, 200_000, seed=8)
    assert a.counts == b.counts
    assert a.car_estimate == b.car_estimate
    assert a.counts != c.counts


def test_mc_car_independent_of_worker_count(busy_scenario):
    serial = mc_run_car(busy_scenario, 300_000, seed=42, workers=1)
    threaded = mc_run_car(busy_scenario, 300_000, seed=42, workers=4)
    assert serial.counts == threaded.counts
    assert serial.car_estimate == threaded.car_estimate
    assert serial.car_stderr == threaded.car_stderr


def test_mc_car_result_fields(busy_scenario):
    result = mc_run_car(busy_scenario, 200_000, seed=1)
    assert result.counts["n_offsets"] == N_ACCIDENTAL_OFFSETS
    assert result.counts["n_pulses"] == 200_000
    assert result.seed == 1
    row = result.to_row()
    assert row["car_estimate"] == result.car_estimate
    assert row["coincidences"] == result.counts["coincidences"]
    assert result.metadata["dead_pulses"] == [1, 84]


def test_dead_time_removes_clicks(busy_scenario):
    result = mc_run_car(busy_scenario, 200_000, seed=3)
    c = result.counts
    assert c["singles_i_counts"] < c["singles_i_before_dead_time"]
    # 신호 검출기(gated)는 dead time 이 없다
    assert c["singles_s_counts"] == c["singles_s_before_dead_time"]


def test_zero_pump_gives_car_near_one(noise_free_scenario):
    dark_only = toy_scenario(noise_free_scenario, 1e-3, 0.5, 0.02).with_power(0.0)
    result = mc_run_car(dark_only, 1_000_000, seed=5)
    assert result.counts["pairs"] == 0
    assert abs(result.car_estimate - 1.0) < 4 * result.car_stderr


def test_thermal_pairs_keep_the_mean(noise_free_scenario):
    mu = 0.005
    thermal = toy_scenario(noise_free_scenario, mu, 0.5, 0.005, pair_statistics="thermal")
    result = mc_run_car(thermal, 200_000, seed=9)
    expected = mu * 200_000
    assert abs(result.counts["pairs"] - expected) < 5 * math.sqrt(expected * (1 + mu))


def test_mc_car_rejects_bad_arguments(busy_scenario):
    with pytest.raises(ValidationError):
        mc_run_car(busy_scenario, 1000, seed=1)
    with pytest.raises(ValidationError):
        mc_run_car(busy_scenario, 200_000, seed=-1)
    with pytest.raises(ValidationError):
        mc_run_car(busy_scenario, 200_000.5, seed=1)


def test_reported_stderr_covers_analytic_car(noise_free_scenario):
    scenario = toy_scenario(noise_free_scenario, 0.005, 0.5, 0.005)
    analytic = car_model(scenario, scenario.pump.p_avg).car
    assert analytic == pytest.approx(23.2, rel=0.01)
    inside = 0
    for seed in range(100):
        result = mc_run_car(scenario, 200_000, seed=seed)
        if abs(result.car_estimate - analytic) <= 3 * result.car_stderr:
            inside += 1
    assert inside >= 99


@pytest.fixture(scope="module")
def hom_base(noise_free_scenario):
    return toy_scenario(noise_free_scenario, 0.01, 1.0, 0.0)


def test_mc_hom_requires_overlap(hom_base):
    with pytest.raises(ValidationError):
        mc_run_hom(hom_base, [0.0], 200_000, seed=1)


def test_mc_hom_flat_without_overlap(hom_base):
    scenario = replace(hom_base, hom_overlap=lambda t: np.zeros_like(t))
    delays = ps_to_s(np.array([-100.0, -50.0, 0.0, 50.0, 100.0]))
    frame = mc_run_hom(scenario, delays, 2_000_000, seed=2)
    counts = frame["raw_counts"].to_numpy()
    mean = counts.mean()
    assert np.all(np.abs(counts - mean) < 5 * np.sqrt(mean))
    h = 1.0 - math.exp(-0.01)
    assert mean == pytest.approx(h * h * 0.5 * 2_000_000, rel=0.2)


def test_mc_hom_scales_to_acquisition_time(hom_base):
    scenario = replace(hom_base, hom_overlap=lambda t: np.zeros_like(t))
    frame = mc_run_hom(scenario, [0.0], 200_000, seed=4, acquisition_time=10.0)
    scale = 10.0 * scenario.pump.rep_rate / 200_000
    assert frame["fourfold_counts"].iloc[0] == pytest.approx(frame["raw_counts"].iloc[0] * scale)
    assert frame["stderr"].iloc[0] == pytest.approx(math.sqrt(frame["raw_counts"].iloc[0]) * scale)
    assert list(frame.columns) == ["delay_s", "fourfold_counts", "stderr", "raw_counts"]


def test_mc_hom_perfect_overlap_gives_deep_dip(hom_base):
    scenario = replace(hom_base, hom_overlap=lambda t: np.exp(-((t / 20e-12) ** 2)))
    delays = ps_to_s(np.array([-500.0, 0.0, 500.0]))
    frame = mc_run_hom(scenario, delays, 2_000_000, seed=6, workers=2)
    v, _ = dip_visibility(frame["delay_s"].to_numpy(), frame["raw_counts"].to_numpy())
    assert v > 0.85


@pytest.mark.slow
def test_mc_hom_raw_visibility_with_background(hom_base):
    overlap0, fraction = 0.829, 0.6417
    scenario = replace(hom_base, hom_overlap=lambda t: overlap0 * np.exp(-((t / 20e-12) ** 2)))
    scenario = replace(scenario, hom_background=background_for_fraction(scenario, fraction))
    delays = ps_to_s(np.array([-500.0, 0.0, 500.0]))
    frame = mc_run_hom(scenario, delays, 10_000_000, seed=20240501)
    v, err = dip_visibility(frame["delay_s"].to_numpy(), frame["raw_counts"].to_numpy())
    assert abs(v - overlap0 * fraction) < 2 * err


@pytest.mark.slow
def test_mc_car_matches_model_at_operating_point(calibrated_scenario):
    result = mc_run_car(calibrated_scenario, 10_000_000, seed=20240501)
    analytic = car_model(calibrated_scenario, calibrated_scenario.pump.p_avg).car
    assert abs(result.car_estimate - analytic) < 3 * result.car_stderr
