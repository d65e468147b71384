import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from common.util import hz_to_rad, ps_to_s, uw_to_w  # noqa: E402
from models.counts import DetectorSpec, RamanSpec, Scenario, calibrate_to_peak  # noqa: E402
from models.fiber import (  # noqa: E402
    ChannelPair,
    FiberSpec,
    PumpSpec,
    calibrate_symmetric_gvm,
    itu_channel_freq,
)

T_OPT = ps_to_s(8.0)


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: acceptance-scale Monte Carlo runs")


@pytest.fixture(scope="session")
def omega_p0():
    return hz_to_rad(itu_channel_freq(0))


@pytest.fixture(scope="session")
def pump(omega_p0):
    return PumpSpec(omega_p0=omega_p0, t_fwhm=ps_to_s(25.0), p_avg=uw_to_w(23.0), rep_rate=27.9e6)


@pytest.fixture(scope="session")
def channel(omega_p0):
    return ChannelPair(
        omega_s0=hz_to_rad(itu_channel_freq(8)),
        omega_i0=hz_to_rad(itu_channel_freq(-8)),
        omega_p0=omega_p0,
    )


@pytest.fixture(scope="session")
def fiber(omega_p0, pump, channel):
    # 8 ps 에서 분리 가능한 대칭 GVM 기하
    return calibrate_symmetric_gvm(FiberSpec.standard_dsf(omega_p0), pump, channel, T_OPT)


def make_detectors(efficiency=0.2, dark_rate=0.0, dead_time=3e-6):
    return (
        DetectorSpec(efficiency, dark_rate, dead_time, 0.8e-9, "free_running"),
        DetectorSpec(efficiency, dark_rate, 0.0, 0.8e-9, "gated"),
        DetectorSpec(efficiency, dark_rate, 0.0, 0.8e-9, "gated"),
        DetectorSpec(efficiency, dark_rate, dead_time, 0.8e-9, "free_running"),
    )


@pytest.fixture(scope="session")
def noise_free_scenario(fiber, pump, channel):
    return Scenario(
        fiber=fiber,
        pump=pump,
        channel=channel,
        detectors=make_detectors(),
        raman_s=RamanSpec.for_channel(0.0, channel.omega_s0, channel.omega_p0),
        raman_i=RamanSpec.for_channel(0.0, channel.omega_i0, channel.omega_p0),
        coincidence_window=0.8e-9,
    )


@pytest.fixture(scope="session")
def calibrated_scenario(noise_free_scenario):
    return calibrate_to_peak(noise_free_scenario, uw_to_w(23.0), 131.0).scenario
