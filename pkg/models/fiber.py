# coding: utf-8
"""광섬유/펌프/채널 파라미터와 분산(Taylor 급수) 계산.

모든 값은 SI 단위 (rad/s, s, m, W). 친숙한 단위(nm, ps, μW ...)는
data/load_data.py 에서만 변환한다.
"""
import logging
import math
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np
from numpy.polynomial import polynomial as P

from common.errors import FrequencyRangeError, ValidationError
from common.functions import GAUSS_ALPHA
from common.util import FWHM_SIGMA_PRODUCT, GAUSS_PEAK_FACTOR

logger = logging.getLogger(__name__)

# Taylor 급수를 믿을 수 있는 범위, omega_ref 기준 ±10%
TAYLOR_WINDOW = 0.10
ITU_ANCHOR_HZ = 193.1e12
ITU_SPACING_HZ = 100e9
ITU_MAX_INDEX = 60
# 상온 분산천이 광섬유의 군굴절률 1.47 에 해당하는 β1
DSF_BETA1 = 1.47 / 299792458.0


@dataclass(frozen=True)
class FiberSpec:
    """분산천이 광섬유(DSF).

    Parameters
    ----------
    length_m : 길이 L (m)
    gamma : 비선형 계수 γ (1/(W·m))
    beta : β0..β4 (s^n/m), omega_ref 기준 Taylor 계수
    omega_ref : Taylor 전개 기준 각주파수 (rad/s)
    temperature_k : 광섬유 온도 (K)
    """

    length_m: float
    gamma: float
    beta: Tuple[float, float, float, float, float]
    omega_ref: float
    temperature_k: float = 77.0

    def __post_init__(self):
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))
        if not self.length_m > 0:
            raise ValidationError(f"fiber.length_m must be > 0, got {self.length_m}")
        if not self.gamma >= 0:
            raise ValidationError(f"fiber.gamma must be >= 0, got {self.gamma}")
        if len(self.beta) != 5:
            raise ValidationError(
                f"fiber.beta needs exactly 5 entries (beta0..beta4), got {len(self.beta)}"
            )
        if not self.omega_ref > 0:
            raise ValidationError(f"fiber.omega_ref must be > 0, got {self.omega_ref}")
        if not self.temperature_k > 0:
            raise ValidationError(
                f"fiber.temperature_k must be > 0, got {self.temperature_k}"
            )

    @classmethod
    def standard_dsf(cls, omega_ref, temperature_k=77.0):
        # 300 m DSF, 액체질소 냉각. γ 는 일반적인 DSF 값(가정).
        return cls(
            length_m=300.0,
            gamma=2.0e-3,
            beta=(0.0, DSF_BETA1, 0.0, 0.0, 0.0),
            omega_ref=omega_ref,
            temperature_k=temperature_k,
        )

    @property
    def taylor_coeffs(self):
        # β_n / n!
        return np.array([b / math.factorial(n) for n, b in enumerate(self.beta)])


@dataclass(frozen=True)
class PumpSpec:
    """펄스 펌프. t_fwhm 은 transform-limited 가우시안 세기 FWHM."""

    omega_p0: float
    t_fwhm: float
    p_avg: float
    rep_rate: float

    def __post_init__(self):
        for name in ("omega_p0", "t_fwhm", "rep_rate"):
            value = getattr(self, name)
            if not value > 0:
                raise ValidationError(f"pump.{name} must be > 0, got {value}")
        # 펌프를 끈 경우(0 W)도 허용한다
        if not self.p_avg >= 0:
            raise ValidationError(f"pump.p_avg must be >= 0, got {self.p_avg}")

    @property
    def sigma_p(self):
        return sigma_from_fwhm(self.t_fwhm)

    @property
    def pulse_energy(self):
        return self.p_avg / self.rep_rate

    @property
    def peak_power(self):
        return GAUSS_PEAK_FACTOR * self.pulse_energy / self.t_fwhm

    def with_power(self, p_avg):
        return replace(self, p_avg=p_avg)

    def with_width(self, t_fwhm):
        return replace(self, t_fwhm=t_fwhm)


@dataclass(frozen=True)
class ChannelPair:
    """신호/아이들러 채널 중심. 2ω_p0 = ω_s0 + ω_i0 (1e-9 상대오차)."""

    omega_s0: float
    omega_i0: float
    omega_p0: float

    def __post_init__(self):
        if self.omega_s0 == self.omega_i0:
            raise ValidationError("signal and idler channels must differ")
        total = 2.0 * self.omega_p0
        mismatch = abs(self.omega_s0 + self.omega_i0 - total)
        if mismatch > 1e-9 * total:
            raise ValidationError(
                "channel pair violates energy conservation: "
                f"|omega_s0 + omega_i0 - 2 omega_p0| / (2 omega_p0) = {mismatch / total:.3e}"
            )

    @classmethod
    def symmetric(cls, omega_p0, offset):
        return cls(omega_s0=omega_p0 + offset, omega_i0=omega_p0 - offset, omega_p0=omega_p0)

    @property
    def offset(self):
        # 신호 채널의 펌프 대비 detuning Ω (부호 포함)
        return 0.5 * (self.omega_s0 - self.omega_i0)


@dataclass(frozen=True)
class GridSpec:
    """detuning 격자. half_range 가 None 이면 JSA 계수로부터 자동으로 정한다."""

    n_points: int = 512
    half_range_s: Optional[float] = None
    half_range_i: Optional[float] = None

    def __post_init__(self):
        if int(self.n_points) != self.n_points or self.n_points < 16 or self.n_points % 2:
            raise ValidationError(
                f"grid.n_points must be an even integer >= 16, got {self.n_points}"
            )
        for name in ("half_range_s", "half_range_i"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ValidationError(f"grid.{name} must be > 0, got {value}")


def _check_window(fiber, omega):
    omega = np.asarray(omega, dtype=float)
    off = np.abs(omega - fiber.omega_ref) > TAYLOR_WINDOW * fiber.omega_ref
    if np.any(off):
        worst = omega[off].flat[0] if omega.ndim else float(omega)
        raise FrequencyRangeError(float(worst), fiber.omega_ref, TAYLOR_WINDOW)
    return omega


def wavevector(fiber, omega):
    """k(ω) = Σ β_n (ω-ω_ref)^n / n!"""
    omega = _check_window(fiber, omega)
    return P.polyval(omega - fiber.omega_ref, fiber.taylor_coeffs)


def group_slowness(fiber, omega):
    """k'(ω) = Σ_{n>=1} β_n (ω-ω_ref)^{n-1} / (n-1)!"""
    omega = _check_window(fiber, omega)
    return P.polyval(omega - fiber.omega_ref, P.polyder(fiber.taylor_coeffs))


def sigma_from_fwhm(t_fwhm):
    """펌프 FWHM(s) -> σ_p (rad/s), σ_p = 2 sqrt(2 ln2) / t_fwhm."""
    if not t_fwhm > 0:
        raise ValidationError(f"pulse width must be > 0, got {t_fwhm}")
    return FWHM_SIGMA_PRODUCT / t_fwhm


def fwhm_from_sigma(sigma_p):
    if not sigma_p > 0:
        raise ValidationError(f"sigma_p must be > 0, got {sigma_p}")
    return FWHM_SIGMA_PRODUCT / sigma_p


def itu_channel_freq(channel_index):
    """100 GHz ITU DWDM 격자 주파수 (Hz)."""
    if int(channel_index) != channel_index:
        raise ValidationError(f"ITU channel index must be an integer, got {channel_index}")
    if abs(channel_index) > ITU_MAX_INDEX:
        raise ValidationError(
            f"ITU channel index {channel_index} outside [-{ITU_MAX_INDEX}, {ITU_MAX_INDEX}]"
        )
    return ITU_ANCHOR_HZ + int(channel_index) * ITU_SPACING_HZ


def calibrate_symmetric_gvm(fiber, pump, channel, t_opt, alpha=GAUSS_ALPHA):
    """대칭 GVM 기하를 만드는 β2, β4 를 구한다 (β3 = 0).

    k'_s - k'_p = -(k'_i - k'_p) = 1/(αLσ*) 이고 채널 중심에서 Δk = 0
    (2γP_peak 포함)이 되도록 한다. σ* = sigma_from_fwhm(t_opt).
    """
    if abs(fiber.omega_ref - pump.omega_p0) > 1e-12 * pump.omega_p0:
        fiber = replace(fiber, omega_ref=pump.omega_p0)
        logger.debug("omega_ref moved to the pump centre for calibration")

    omega = channel.offset
    g = 1.0 / (alpha * fiber.length_m * sigma_from_fwhm(t_opt))
    gvm = math.copysign(g, omega)
    two_gp = 2.0 * fiber.gamma * pump.peak_power

    beta4 = 12.0 * (gvm * omega - two_gp) / omega**4
    beta2 = (2.0 * two_gp - gvm * omega) / omega**2
    beta = (fiber.beta[0], fiber.beta[1], beta2, 0.0, beta4)
    logger.debug("symmetric GVM calibration: beta2=%.4e s^2/m, beta4=%.4e s^4/m", beta2, beta4)
    return replace(fiber, beta=beta)
