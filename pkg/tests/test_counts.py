import math
from dataclasses import replace

import numpy as np
import pytest
from scipy import constants

import models.counts as counts
from common.errors import GainRegimeError, UndefinedCarError, UnimodalityError, ValidationError
from common.optimizer import GoldenSection, is_unimodal
from common.util import ghz_to_rad, uw_to_w
from models.counts import (
    CarRecord,
    DetectorSpec,
    RamanSpec,
    Scenario,
    background_for_fraction,
    car_curve,
    car_model,
    car_peak,
    fit_noise,
    fourfold_signal_rate,
    pairs_per_pulse,
    raman_per_pulse,
)

P_RANGE = (uw_to_w(1.0), uw_to_w(200.0))


def test_pairs_per_pulse_at_operating_point(fiber, pump):
    assert pairs_per_pulse(fiber, pump) == pytest.approx(3.45e-4, rel=5e-3)
    assert pairs_per_pulse(fiber, pump, capture=0.5) == pytest.approx(0.5 * pairs_per_pulse(fiber, pump))


def test_pairs_per_pulse_quadratic_in_power(fiber, pump):
    assert pairs_per_pulse(fiber, pump.with_power(0.0)) == 0.0
    mu1 = pairs_per_pulse(fiber, pump.with_power(uw_to_w(10.0)))
    mu2 = pairs_per_pulse(fiber, pump.with_power(uw_to_w(20.0)))
    assert mu2 / mu1 == pytest.approx(4.0, rel=1e-12)


def test_gain_guard(fiber, pump):
    with pytest.raises(GainRegimeError):
        pairs_per_pulse(fiber, pump.with_power(uw_to_w(1000.0)))


def test_raman_occupation_by_side():
    shift = 2 * math.pi * 800e9
    anti = RamanSpec(1.0, shift, "anti_stokes")
    stokes = RamanSpec(1.0, shift, "stokes")
    assert anti.occupation(1.0) < 1e-12
    assert stokes.occupation(1.0) == pytest.approx(1.0)
    n = anti.occupation(77.0)
    assert stokes.occupation(77.0) / n == pytest.approx((n + 1.0) / n)


def test_raman_temperature_ratio_matches_bose_einstein():
    shift = 2 * math.pi * 800e9
    anti = RamanSpec(1.0, shift, "anti_stokes")

    def n_th(t):
        return 1.0 / (math.exp(constants.h * 800e9 / (constants.k * t)) - 1.0)

    assert anti.occupation(300.0) == pytest.approx(7.32, abs=0.01)
    assert anti.occupation(300.0) / anti.occupation(77.0) == pytest.approx(n_th(300.0) / n_th(77.0), rel=1e-9)
    assert anti.occupation(300.0) / anti.occupation(77.0) == pytest.approx(4.735, rel=2e-3)


def test_raman_for_channel_side(channel):
    assert RamanSpec.for_channel(0.0, channel.omega_s0, channel.omega_p0).side == "anti_stokes"
    assert RamanSpec.for_channel(0.0, channel.omega_i0, channel.omega_p0).side == "stokes"
    with pytest.raises(ValidationError):
        RamanSpec(-1.0, 1.0)
    with pytest.raises(ValidationError):
        RamanSpec(1.0, ghz_to_rad(800.0), side="sideways")


def test_raman_per_pulse_linear_in_power(pump):
    raman = RamanSpec(2.0, 2 * math.pi * 800e9, "stokes")
    n1 = raman_per_pulse(raman, pump.with_power(1e-5), 77.0)
    n2 = raman_per_pulse(raman, pump.with_power(2e-5), 77.0)
    assert n2 == pytest.approx(2 * n1)
    with pytest.raises(ValidationError):
        raman_per_pulse(raman, pump, 0.0)


def test_detector_spec_validation():
    with pytest.raises(ValidationError):
        DetectorSpec(1.2)
    with pytest.raises(ValidationError):
        DetectorSpec(0.2, dark_rate=-1.0)
    with pytest.raises(ValidationError):
        DetectorSpec(0.2, mode="always")
    gated = DetectorSpec(0.2, dark_rate=1e4, gate_window=2e-9, mode="gated")
    free = DetectorSpec(0.2, dark_rate=1e4, mode="free_running")
    assert gated.dark_probability(0.8e-9) == pytest.approx(2e-5)
    assert free.dark_probability(0.8e-9) == pytest.approx(8e-6)
    assert DetectorSpec(0.2, dead_time=3e-6).dead_pulses(27.9e6) == 84
    assert DetectorSpec(0.2).dead_pulses(27.9e6) == 1


def test_dark_probabilities_follow_detector_mode(noise_free_scenario):
    noisy = noise_free_scenario.with_noise(0.0, 1e4)
    # gate 와 동시계수 창이 모두 0.8 ns
    assert noisy.dark_probabilities() == pytest.approx((8e-6,) * 4)
    wide = replace(noisy, coincidence_window=2e-9)
    probs = wide.dark_probabilities()
    assert probs[0] == pytest.approx(2e-5)
    assert probs[1] == pytest.approx(8e-6)


def test_scenario_validation(noise_free_scenario):
    with pytest.raises(ValidationError):
        Scenario(
            fiber=noise_free_scenario.fiber,
            pump=noise_free_scenario.pump,
            channel=noise_free_scenario.channel,
            detectors=noise_free_scenario.detectors[:3],
            raman_s=noise_free_scenario.raman_s,
            raman_i=noise_free_scenario.raman_i,
        )
    with pytest.raises(ValidationError):
        replace(noise_free_scenario, car_definition="estimated")


def test_noise_free_car_is_one_plus_inverse_mu(noise_free_scenario):
    for p in np.geomspace(1e-7, 3e-4, 12):
        record = car_model(noise_free_scenario, p)
        assert isinstance(record, CarRecord)
        assert record.car == pytest.approx(1.0 + 1.0 / record.mu, rel=1e-12)


def test_noise_free_car_curve_strictly_decreases(noise_free_scenario):
    frame = car_curve(noise_free_scenario, np.geomspace(*P_RANGE, 60))
    assert np.all(np.diff(frame["car"].to_numpy()) < 0)


def test_true_definition_subtracts_one(calibrated_scenario):
    true_def = replace(calibrated_scenario, car_definition="true")
    p = uw_to_w(23.0)
    assert car_model(true_def, p).car == pytest.approx(car_model(calibrated_scenario, p).car - 1.0, rel=1e-12)


def test_dark_dominated_car_tends_to_one(noise_free_scenario):
    noisy = noise_free_scenario.with_noise(0.0, 1e4)
    assert car_model(noisy, 1e-9).car == pytest.approx(1.0, abs=1e-3)


def test_zero_accidentals_raise(noise_free_scenario):
    with pytest.raises(UndefinedCarError):
        car_model(noise_free_scenario, 0.0)


def test_calibrated_scenario_reproduces_peak(calibrated_scenario):
    assert car_model(calibrated_scenario, uw_to_w(23.0)).car == pytest.approx(131.0, rel=1e-6)
    p_opt, car_max = car_peak(calibrated_scenario, P_RANGE)
    assert p_opt == pytest.approx(uw_to_w(23.0), rel=0.1)
    assert car_max == pytest.approx(131.0, rel=0.1)


def test_calibrated_scenario_noise_levels(calibrated_scenario):
    # 최댓값에서 η μ ≈ d 이고 Raman 은 μ 보다 몇 배 크다
    record = car_model(calibrated_scenario, uw_to_w(23.0))
    d_s = calibrated_scenario.signal_detector.dark_probability(calibrated_scenario.coincidence_window)
    assert d_s == pytest.approx(0.2 * record.mu, rel=0.3)
    assert record.raman_s > record.mu


def test_car_curve_is_unimodal(calibrated_scenario):
    frame = car_curve(calibrated_scenario, np.geomspace(*P_RANGE, 60))
    assert list(frame.columns[:2]) == ["p_avg", "car"]
    assert (frame["temperature_k"] == calibrated_scenario.fiber.temperature_k).all()
    assert is_unimodal(frame["car"].to_numpy())


def test_room_temperature_lowers_car(calibrated_scenario):
    p = uw_to_w(100.0)
    cold = car_model(calibrated_scenario, p).car
    warm = car_model(calibrated_scenario, p, temperature_k=300.0).car
    assert warm < cold
    assert car_model(calibrated_scenario.with_temperature(300.0), p).car == pytest.approx(warm)


def test_noise_free_peak_at_range_minimum(noise_free_scenario):
    p_opt, car_max = car_peak(noise_free_scenario, P_RANGE)
    assert p_opt == pytest.approx(P_RANGE[0], rel=1e-3)
    assert car_max == pytest.approx(car_model(noise_free_scenario, P_RANGE[0]).car, rel=1e-6)


def test_efficiency_scaling_raises_peak(noise_free_scenario):
    noisy = noise_free_scenario.with_noise(0.0, 1e4)
    _, base = car_peak(noisy, (1e-7, 2e-4))
    _, scaled = car_peak(noisy.with_efficiency_scale(2.0), (1e-7, 2e-4))
    assert scaled > base
    # 암계수만 있으면 최댓값은 1 + η/(4d)
    d = noisy.signal_detector.dark_probability(noisy.coincidence_window)
    assert base == pytest.approx(1.0 + 0.2 / (4 * d), rel=1e-4)


def test_car_peak_rejects_multimodal_curve(noise_free_scenario, monkeypatch):
    def wavy(scenario, p_avg, temperature_k=None):
        return counts.CarRecord(p_avg, 2.0 + math.sin(3.0 * math.log(p_avg)), 0, 0, 0, 0, 0, 0, 0)

    monkeypatch.setattr(counts, "car_model", wavy)
    with pytest.raises(UnimodalityError) as info:
        car_peak(noise_free_scenario, P_RANGE)
    assert "p_avg_w" in info.value.table


def test_car_peak_rejects_bad_range(calibrated_scenario):
    with pytest.raises(ValidationError):
        car_peak(calibrated_scenario, (1e-4, 1e-5))


def test_golden_section_rejects_bad_brackets():
    with pytest.raises(ValidationError):
        GoldenSection().maximize(lambda x: -x * x, 1.0, 1.0)
    with pytest.raises(ValidationError):
        GoldenSection(log_scale=True).maximize(lambda x: -x * x, -1.0, 1.0)
    x, _ = GoldenSection().maximize(lambda x: -((x - 0.3) ** 2), -1.0, 1.0)
    assert x == pytest.approx(0.3, abs=1e-6)


def test_fit_noise_two_points_exact(noise_free_scenario, calibrated_scenario):
    obs = [(p, car_model(calibrated_scenario, p).car) for p in (uw_to_w(5.0), uw_to_w(100.0))]
    fit = fit_noise(noise_free_scenario, obs)
    assert fit.raman_coeff == pytest.approx(calibrated_scenario.raman_s.coeff, rel=1e-6)
    assert fit.dark_rate == pytest.approx(calibrated_scenario.detectors[0].dark_rate, rel=1e-6)
    assert fit.raman_coeffs[0] == fit.raman_coeffs[1] == fit.raman_coeff
    assert set(fit.dark_rates) == {fit.dark_rate}


def test_fit_noise_recovers_parameters_from_noisy_data(noise_free_scenario, calibrated_scenario):
    rng = np.random.default_rng(11)
    powers = np.geomspace(*P_RANGE, 10)
    clean = np.array([car_model(calibrated_scenario, p).car for p in powers])
    true_coeff = calibrated_scenario.raman_s.coeff
    true_dark = calibrated_scenario.detectors[0].dark_rate
    for _ in range(100):
        noisy = clean * np.exp(0.05 * rng.standard_normal(powers.size))
        fit = fit_noise(noise_free_scenario, np.column_stack([powers, noisy]))
        assert fit.raman_coeff == pytest.approx(true_coeff, rel=0.15)
        assert fit.dark_rate == pytest.approx(true_dark, rel=0.15)


def test_fit_noise_anchor_reproduces_peak(noise_free_scenario, calibrated_scenario):
    low = uw_to_w(5.0)
    obs = [(uw_to_w(23.0), 131.0), (low, car_model(calibrated_scenario, low).car)]
    fit = fit_noise(noise_free_scenario, obs)
    p_opt, car_max = car_peak(fit.scenario, P_RANGE)
    assert p_opt == pytest.approx(uw_to_w(23.0), rel=0.1)
    assert car_max == pytest.approx(131.0, rel=0.1)


@pytest.mark.parametrize(
    "obs",
    [
        [(1e-5, 50.0)],
        [(1e-5, 50.0), (1e-5, 60.0)],
        [(1e-5, 50.0), (2e-5, 0.9)],
        [(0.0, 50.0), (2e-5, 60.0)],
    ],
)
def test_fit_noise_rejects_degenerate_input(noise_free_scenario, obs):
    with pytest.raises(ValidationError):
        fit_noise(noise_free_scenario, obs)


def test_fourfold_rate_and_background(calibrated_scenario):
    mu = pairs_per_pulse(calibrated_scenario.fiber, calibrated_scenario.pump)
    expected = (1 - math.exp(-0.2 * mu)) ** 2 * 0.5 * 0.2 * 0.2
    s = fourfold_signal_rate(calibrated_scenario)
    assert s == pytest.approx(expected, rel=1e-12)
    b = background_for_fraction(calibrated_scenario, 0.6417)
    assert s / (s + b) == pytest.approx(0.6417, rel=1e-12)
    assert background_for_fraction(calibrated_scenario, 1.0) == 0.0
    with pytest.raises(ValidationError):
        background_for_fraction(calibrated_scenario, 0.0)
