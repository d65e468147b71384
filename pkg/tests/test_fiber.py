import math

import numpy as np
import pytest

from common.errors import FrequencyRangeError, ValidationError
from common.functions import GAUSS_ALPHA
from common.util import ghz_to_rad, nm_to_rad, ps_to_s, rad_to_nm, thz_to_rad, uw_to_w
from models.fiber import (
    ChannelPair,
    FiberSpec,
    GridSpec,
    PumpSpec,
    fwhm_from_sigma,
    group_slowness,
    itu_channel_freq,
    sigma_from_fwhm,
    wavevector,
)
from models.jsa import gvm_differences, phase_mismatch


def test_wavevector_matches_taylor_sum(omega_p0):
    beta = (1.0, 5e-9, -2e-26, 1e-40, 3e-55)
    fiber = FiberSpec(length_m=10.0, gamma=1e-3, beta=beta, omega_ref=omega_p0)
    x = ghz_to_rad(500.0)
    expected = sum(b * x**n / math.factorial(n) for n, b in enumerate(beta))
    assert wavevector(fiber, omega_p0 + x) == pytest.approx(expected, rel=1e-12)


def test_group_slowness_is_derivative_of_wavevector(omega_p0):
    fiber = FiberSpec(10.0, 1e-3, (0.0, 5e-9, -2e-26, 1e-40, 3e-55), omega_p0)
    omega = omega_p0 + ghz_to_rad(300.0)
    h = ghz_to_rad(0.01)
    numeric = (wavevector(fiber, omega + h) - wavevector(fiber, omega - h)) / (2 * h)
    assert group_slowness(fiber, omega) == pytest.approx(numeric, rel=1e-7)


def test_frequency_outside_taylor_window_raises(omega_p0):
    fiber = FiberSpec.standard_dsf(omega_p0)
    with pytest.raises(FrequencyRangeError):
        wavevector(fiber, 1.2 * omega_p0)
    with pytest.raises(FrequencyRangeError):
        group_slowness(fiber, np.array([omega_p0, 0.85 * omega_p0]))


def test_fiber_spec_validation(omega_p0):
    with pytest.raises(ValidationError):
        FiberSpec(length_m=0.0, gamma=1e-3, beta=(0, 0, 0, 0, 0), omega_ref=omega_p0)
    with pytest.raises(ValidationError):
        FiberSpec(length_m=1.0, gamma=1e-3, beta=(0, 0, 0), omega_ref=omega_p0)
    with pytest.raises(ValidationError):
        FiberSpec(length_m=1.0, gamma=1e-3, beta=(0, 0, 0, 0, 0), omega_ref=omega_p0, temperature_k=0.0)


def test_channel_pair_energy_conservation(omega_p0):
    offset = ghz_to_rad(800.0)
    pair = ChannelPair.symmetric(omega_p0, offset)
    assert pair.offset == pytest.approx(offset)
    with pytest.raises(ValidationError):
        ChannelPair(omega_s0=omega_p0 + offset, omega_i0=omega_p0 - 0.9 * offset, omega_p0=omega_p0)
    with pytest.raises(ValidationError):
        ChannelPair(omega_s0=omega_p0, omega_i0=omega_p0, omega_p0=omega_p0)


def test_peak_power_of_operating_pump(pump):
    # 23 μW / 27.9 MHz / 25 ps
    assert pump.pulse_energy == pytest.approx(23e-6 / 27.9e6)
    assert pump.peak_power == pytest.approx(0.0310, rel=2e-3)


def test_pump_allows_zero_power_but_not_negative(omega_p0):
    assert PumpSpec(omega_p0, ps_to_s(25.0), 0.0, 27.9e6).peak_power == 0.0
    with pytest.raises(ValidationError):
        PumpSpec(omega_p0, ps_to_s(25.0), -1e-6, 27.9e6)
    with pytest.raises(ValidationError):
        PumpSpec(omega_p0, 0.0, uw_to_w(23.0), 27.9e6)


def test_sigma_fwhm_conversion():
    sigma = sigma_from_fwhm(ps_to_s(25.0))
    assert sigma == pytest.approx(2.0 * math.sqrt(2.0 * math.log(2.0)) / 25e-12)
    assert fwhm_from_sigma(sigma) == pytest.approx(25e-12)
    with pytest.raises(ValidationError):
        sigma_from_fwhm(0.0)


def test_itu_grid():
    assert itu_channel_freq(0) == pytest.approx(193.1e12)
    assert itu_channel_freq(8) == pytest.approx(193.9e12)
    assert itu_channel_freq(-8) == pytest.approx(192.3e12)
    with pytest.raises(ValidationError):
        itu_channel_freq(61)
    with pytest.raises(ValidationError):
        itu_channel_freq(1.5)


def test_unit_helpers():
    assert thz_to_rad(1.0) == pytest.approx(2 * math.pi * 1e12)
    assert rad_to_nm(nm_to_rad(1550.0)) == pytest.approx(1550.0)


def test_grid_spec_validation():
    assert GridSpec().n_points == 512
    with pytest.raises(ValidationError):
        GridSpec(n_points=511)
    with pytest.raises(ValidationError):
        GridSpec(n_points=8)
    with pytest.raises(ValidationError):
        GridSpec(n_points=64, half_range_s=-1.0)


def test_symmetric_gvm_calibration(fiber, pump, channel):
    gvm_s, gvm_i = gvm_differences(fiber, channel)
    expected = 1.0 / (GAUSS_ALPHA * fiber.length_m * sigma_from_fwhm(ps_to_s(8.0)))
    assert gvm_s == pytest.approx(-gvm_i, rel=1e-6)
    assert abs(gvm_s) == pytest.approx(expected, rel=1e-6)
    assert fiber.beta[3] == 0.0
    # 채널 중심에서 위상정합 (2γP 포함)
    dk = phase_mismatch(fiber, pump, channel.omega_s0, channel.omega_i0)
    assert abs(dk * fiber.length_m) < 1e-6


def test_phase_mismatch_nonlinear_term_only(omega_p0, pump):
    fiber = FiberSpec(length_m=300.0, gamma=2e-3, beta=(0, 0, 0, 0, 0), omega_ref=omega_p0)
    omega = omega_p0 + ghz_to_rad(800.0)
    dk = phase_mismatch(fiber, pump, omega, 2.0 * omega_p0 - omega)
    assert dk == pytest.approx(2.0 * fiber.gamma * pump.peak_power, rel=1e-12)


def test_phase_mismatch_with_beta2_only(omega_p0, pump):
    beta2 = -2e-26
    fiber = FiberSpec(length_m=300.0, gamma=0.0, beta=(0, 0, beta2, 0, 0), omega_ref=omega_p0)
    for offset_ghz in (100.0, 400.0, 800.0):
        big_omega = ghz_to_rad(offset_ghz)
        dk = phase_mismatch(fiber, pump, omega_p0 + big_omega, omega_p0 - big_omega)
        assert dk == pytest.approx(-beta2 * big_omega**2, rel=1e-6)
