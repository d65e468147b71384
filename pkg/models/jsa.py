# coding: utf-8
"""결합 스펙트럼 진폭(JSA) f(ω_s, ω_i) = ε(ω_s+ω_i) Γ(ω_s, ω_i).

sinc 모드는 Taylor 다항식 전체로 Δk 를 계산하고, gauss 모드는 채널 중심에서
선형화한 Δk 와 가우시안 위상정합을 써서 정확히 2차 형식
S ∝ exp[-2AΔs² - 2BΔi² - 4CΔsΔi] 을 만든다.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import pandas as pd
from scipy.optimize import brentq

from common.errors import NoFactorableWidthError, NumericalError, ValidationError
from common.functions import (
    GAUSS_ALPHA,
    gaussian_transmission,
    phase_matching_amp,
    pump_envelope_amp,
    rectangular_transmission,
    sinc,
    supergaussian_transmission,
)
from common.optimizer import GoldenSection
from common.util import detuning_axis, edge_fraction, frobenius_normalize, rad_to_ghz
from models.fiber import fwhm_from_sigma, group_slowness, sigma_from_fwhm, wavevector

logger = logging.getLogger(__name__)

# 바깥 2개 행/열에 이보다 많은 노름이 있으면 격자 범위가 좁다고 경고
EDGE_WARN_FRACTION = 1e-3
DEFAULT_N_SIGMA = 4.0
FILTER_SHAPES = ("gaussian", "supergaussian", "rectangular")


@dataclass(frozen=True)
class GaussJsaCoeffs:
    """가우시안 근사 JSA 의 2차 형식 계수 (단위 s²)."""

    A: float
    B: float
    C: float
    sigma_p: Optional[float] = None

    def __post_init__(self):
        if not (self.A > 0 and self.B > 0):
            raise ValidationError(f"need A > 0 and B > 0, got A={self.A}, B={self.B}")
        if not self.A * self.B - self.C**2 > 0:
            raise ValidationError(
                f"non-normalizable Gaussian JSA: AB - C^2 = {self.A * self.B - self.C**2:.3e}"
            )

    @property
    def purity(self):
        return math.sqrt(1.0 - self.C**2 / (self.A * self.B))

    def swapped(self):
        # 신호/아이들러 역할 교환
        return GaussJsaCoeffs(A=self.B, B=self.A, C=self.C, sigma_p=self.sigma_p)


@dataclass(frozen=True)
class FilterSpec:
    """대역통과 필터. center 는 절대 각주파수 (rad/s), fwhm 은 세기 투과 FWHM."""

    center: float
    fwhm: float
    shape: str = "supergaussian"
    order: int = 3

    def __post_init__(self):
        if not self.fwhm > 0:
            raise ValidationError(f"filter fwhm must be > 0, got {self.fwhm}")
        if self.shape not in FILTER_SHAPES:
            raise ValidationError(f"filter shape must be one of {FILTER_SHAPES}, got {self.shape!r}")
        if int(self.order) != self.order or self.order < 1:
            raise ValidationError(f"filter order must be an integer >= 1, got {self.order}")

    def transmission_offset(self, offset):
        # 필터 중심 기준 offset (rad/s) 에서의 세기 투과율 T
        if self.shape == "gaussian":
            return gaussian_transmission(offset, self.fwhm)
        if self.shape == "supergaussian":
            return supergaussian_transmission(offset, self.fwhm, int(self.order))
        return rectangular_transmission(offset, self.fwhm)

    def transmission(self, omega):
        return self.transmission_offset(np.asarray(omega) - self.center)


@dataclass(frozen=True)
class JsaGrid:
    """격자 위의 JSA. values[j, k] 는 (Δs_j, Δi_k) 의 복소 진폭."""

    values: np.ndarray
    axis_s: np.ndarray
    axis_i: np.ndarray
    channel: Optional[object] = None
    mode: str = "gauss"
    normalized: bool = True
    kept_fraction: float = 1.0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        axis_s = np.asarray(self.axis_s, dtype=float)
        axis_i = np.asarray(self.axis_i, dtype=float)
        n_s, n_i = len(axis_s), len(axis_i)
        if values.shape != (n_s, n_i) or n_s != n_i:
            raise ValidationError(
                f"JSA values shape {values.shape} does not match square axes ({n_s}, {n_i})"
            )
        for name, axis in (("axis_s", axis_s), ("axis_i", axis_i)):
            steps = np.diff(axis)
            if np.any(steps <= 0) or not np.allclose(steps, steps[0], rtol=1e-9, atol=0):
                raise ValidationError(f"{name} must be strictly increasing and uniform")
        for arr in (values, axis_s, axis_i):
            arr.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "axis_s", axis_s)
        object.__setattr__(self, "axis_i", axis_i)

    @property
    def n_points(self):
        return len(self.axis_s)

    @property
    def step_s(self):
        return float(self.axis_s[1] - self.axis_s[0])

    @property
    def step_i(self):
        return float(self.axis_i[1] - self.axis_i[0])

    @property
    def intensity(self):
        return np.abs(self.values) ** 2

    @property
    def norm(self):
        return float(np.linalg.norm(self.values))

    def to_frame(self):
        """세 열 (delta_s, delta_i, intensity), 행 우선 순서."""
        ds, di = np.meshgrid(self.axis_s, self.axis_i, indexing="ij")
        return pd.DataFrame(
            {
                "delta_s_rad_per_s": ds.ravel(),
                "delta_i_rad_per_s": di.ravel(),
                "intensity": self.intensity.ravel(),
            }
        )

    def header(self):
        header = {
            "n_points": self.n_points,
            "axis_s_rad_per_s": [float(self.axis_s[0]), float(self.axis_s[-1])],
            "axis_i_rad_per_s": [float(self.axis_i[0]), float(self.axis_i[-1])],
            "mode": self.mode,
            "normalized": self.normalized,
            "frobenius_norm": self.norm,
            "kept_fraction": self.kept_fraction,
        }
        if self.channel is not None:
            header["channel_rad_per_s"] = {
                "signal": self.channel.omega_s0,
                "idler": self.channel.omega_i0,
                "pump": self.channel.omega_p0,
            }
        header.update(self.metadata)
        return header


def phase_mismatch(fiber, pump, omega_s, omega_i):
    """Δk = 2k(ω̄_p) - k(ω_s) - k(ω_i) + 2γP_peak, ω̄_p = (ω_s+ω_i)/2."""
    omega_s = np.asarray(omega_s, dtype=float)
    omega_i = np.asarray(omega_i, dtype=float)
    omega_pair = 0.5 * (omega_s + omega_i)
    linear = 2.0 * wavevector(fiber, omega_pair) - wavevector(fiber, omega_s) - wavevector(fiber, omega_i)
    return linear + 2.0 * fiber.gamma * pump.peak_power


def gvm_differences(fiber, channel):
    """(k'_p - k'_s, k'_p - k'_i), 채널 중심에서 평가 (s/m)."""
    kp = group_slowness(fiber, channel.omega_p0)
    ks = group_slowness(fiber, channel.omega_s0)
    ki = group_slowness(fiber, channel.omega_i0)
    return float(kp - ks), float(kp - ki)


def coeffs_for_sigma(sigma_p, length, gvm_s, gvm_i, alpha=GAUSS_ALPHA):
    inv = 1.0 / sigma_p**2
    a2l2 = (alpha * length) ** 2
    return GaussJsaCoeffs(
        A=inv + a2l2 * gvm_s**2,
        B=inv + a2l2 * gvm_i**2,
        C=inv + a2l2 * gvm_s * gvm_i,
        sigma_p=sigma_p,
    )


def gauss_coeffs(fiber, pump, channel, alpha=GAUSS_ALPHA):
    gvm_s, gvm_i = gvm_differences(fiber, channel)
    return coeffs_for_sigma(pump.sigma_p, fiber.length_m, gvm_s, gvm_i, alpha)


def factorability_residual_from(sigma_p, length, gvm_s, gvm_i, alpha=GAUSS_ALPHA):
    """1 + σ_p² α² L² (k'_p-k'_s)(k'_p-k'_i). 0 이면 분리 가능."""
    product = gvm_s * gvm_i
    if not product < 0:
        raise NoFactorableWidthError(product)
    return 1.0 + sigma_p**2 * (alpha * length) ** 2 * product


def factorability_residual(coeffs):
    # C = 1/σ² + α²L²(k'_p-k'_s)(k'_p-k'_i) 이므로 잔차는 σ²C
    if coeffs.sigma_p is None:
        raise ValidationError("coefficients carry no sigma_p; use factorability_residual_from")
    inv = 1.0 / coeffs.sigma_p**2
    if not coeffs.C - inv < 0:
        raise NoFactorableWidthError((coeffs.C - inv))
    return coeffs.sigma_p**2 * coeffs.C


def optimal_sigma(fiber, channel, alpha=GAUSS_ALPHA):
    gvm_s, gvm_i = gvm_differences(fiber, channel)
    product = gvm_s * gvm_i
    if not product < 0:
        raise NoFactorableWidthError(product)
    return 1.0 / (alpha * fiber.length_m * math.sqrt(-product))


def optimal_pump_width(fiber, channel, alpha=GAUSS_ALPHA, check=True):
    """분리 가능 조건을 만족하는 펌프 FWHM (s).

    닫힌 해를 구한 뒤 해석적 순도를 황금분할로 최대화해서 1e-3 이내로
    일치하는지 확인한다.
    """
    sigma_opt = optimal_sigma(fiber, channel, alpha)
    t_opt = fwhm_from_sigma(sigma_opt)
    if not check:
        return t_opt

    gvm_s, gvm_i = gvm_differences(fiber, channel)

    def purity_at(t):
        return coeffs_for_sigma(sigma_from_fwhm(t), fiber.length_m, gvm_s, gvm_i, alpha).purity

    search = GoldenSection(tol=1e-9, log_scale=True)
    t_num, _ = search.maximize(purity_at, t_opt / 1e3, t_opt * 1e3)
    if abs(t_num - t_opt) > 1e-3 * t_opt:
        raise NumericalError(
            f"closed-form optimum {t_opt:.6e} s disagrees with numeric maximum {t_num:.6e} s"
        )
    logger.debug("optimal pump width %.4e s (numeric check %.4e s)", t_opt, t_num)
    return t_opt


def marginal_std(coeffs):
    # 세기 |f|² 의 주변분포 표준편차 (rad/s)
    det = coeffs.A * coeffs.B - coeffs.C**2
    return math.sqrt(coeffs.B / (4.0 * det)), math.sqrt(coeffs.A / (4.0 * det))


def default_half_range(coeffs, n_sigma=DEFAULT_N_SIGMA):
    return n_sigma * max(marginal_std(coeffs))


def _resolve_axes(grid, coeffs):
    h_auto = None
    if grid.half_range_s is None or grid.half_range_i is None:
        h_auto = default_half_range(coeffs)
    h_s = grid.half_range_s if grid.half_range_s is not None else h_auto
    h_i = grid.half_range_i if grid.half_range_i is not None else h_auto
    return detuning_axis(grid.n_points, h_s), detuning_axis(grid.n_points, h_i)


def _finish(amplitude, axis_s, axis_i, channel, mode, metadata):
    values, _ = frobenius_normalize(amplitude)
    edge = edge_fraction(values)
    metadata = dict(metadata)
    metadata["edge_fraction"] = edge
    if edge > EDGE_WARN_FRACTION:
        message = f"{edge:.2e} of the norm lies in the outermost 2 rows/columns; grid range too small"
        metadata.setdefault("warnings", []).append(message)
        logger.warning(message)
    return JsaGrid(
        values=values.astype(complex),
        axis_s=axis_s,
        axis_i=axis_i,
        channel=channel,
        mode=mode,
        normalized=True,
        metadata=metadata,
    )


class JsaModel:
    """JSA 생성기의 공통 부분: 펌프 envelope, 격자, 정규화.

    하위 클래스는 phase_matching(ds, di) 만 구현한다.
    """

    mode = None

    def __init__(self, fiber, pump, channel, alpha=GAUSS_ALPHA):
        self.fiber = fiber
        self.pump = pump
        self.channel = channel
        self.alpha = alpha
        self.coeffs = gauss_coeffs(fiber, pump, channel, alpha)

    def envelope(self, ds, di):
        return pump_envelope_amp(ds + di, self.pump.sigma_p)

    def phase_matching(self, ds, di):
        raise NotImplementedError

    def build(self, grid):
        axis_s, axis_i = _resolve_axes(grid, self.coeffs)
        ds = axis_s[:, None]
        di = axis_i[None, :]
        amplitude = self.envelope(ds, di) * self.phase_matching(ds, di)
        metadata = {
            "coeffs_s2": {"A": self.coeffs.A, "B": self.coeffs.B, "C": self.coeffs.C},
            "alpha": self.alpha,
            "sigma_p_rad_per_s": self.pump.sigma_p,
        }
        return _finish(amplitude, axis_s, axis_i, self.channel, self.mode, metadata)


class SincJsa(JsaModel):
    """Taylor 다항식 전체로 계산한 Δk 와 sinc(ΔkL/2) 위상정합."""

    mode = "sinc"

    def phase_matching(self, ds, di):
        delta_k = phase_mismatch(
            self.fiber, self.pump, self.channel.omega_s0 + ds, self.channel.omega_i0 + di
        )
        return sinc(delta_k * self.fiber.length_m / 2.0)


class GaussJsa(JsaModel):
    """채널 중심에서 선형화한 Δk 와 가우시안 위상정합."""

    mode = "gauss"

    def __init__(self, fiber, pump, channel, alpha=GAUSS_ALPHA):
        super().__init__(fiber, pump, channel, alpha)
        self.gvm_s, self.gvm_i = gvm_differences(fiber, channel)

    def phase_matching(self, ds, di):
        delta_k = self.gvm_s * ds + self.gvm_i * di
        return phase_matching_amp(delta_k, self.fiber.length_m, "gauss", self.alpha)


JSA_MODELS = {"sinc": SincJsa, "gauss": GaussJsa}


def build_jsa(fiber, pump, channel, grid, mode="gauss", alpha=GAUSS_ALPHA):
    try:
        model_class = JSA_MODELS[mode]
    except KeyError:
        raise ValidationError(f"mode must be 'sinc' or 'gauss', got {mode!r}") from None
    return model_class(fiber, pump, channel, alpha).build(grid)


def jsa_from_coeffs(coeffs, grid, channel=None):
    """계수만으로 가우시안 JSA 진폭 exp[-AΔs² - BΔi² - 2CΔsΔi] 를 만든다."""
    axis_s, axis_i = _resolve_axes(grid, coeffs)
    ds = axis_s[:, None]
    di = axis_i[None, :]
    amplitude = np.exp(-coeffs.A * ds**2 - coeffs.B * di**2 - 2.0 * coeffs.C * ds * di)
    metadata = {"coeffs_s2": {"A": coeffs.A, "B": coeffs.B, "C": coeffs.C}}
    return _finish(amplitude, axis_s, axis_i, channel, "gauss", metadata)


def _as_filters(spec):
    if spec is None:
        return []
    if isinstance(spec, FilterSpec):
        return [spec]
    return list(spec)


def _arm_amplitude(filters, axis, channel_center, arm):
    amp = np.ones_like(axis)
    for f in filters:
        offset = f.center - channel_center
        if offset < axis[0] - 1e-9 * abs(axis[0]) or offset > axis[-1] + 1e-9 * abs(axis[-1]):
            raise ValidationError(
                f"{arm} filter centre {rad_to_ghz(offset):.3f} GHz from the channel lies outside the grid"
            )
        amp = amp * np.sqrt(f.transmission_offset(axis - offset))
    if not np.any(amp > 0):
        raise ValidationError(f"{arm} filter transmits nothing on the grid")
    return amp


def apply_filters(jsa, f_s=None, f_i=None):
    """신호/아이들러 축에 진폭 투과 sqrt(T) 를 곱하고 다시 정규화한다.

    정규화 전에 남은 노름²(heralding 효율)을 kept_fraction 에 곱해 기록한다.
    f_s, f_i 는 FilterSpec 하나 혹은 직렬 연결된 FilterSpec 리스트.
    """
    if jsa.channel is None:
        raise ValidationError("filters need a JSA with a channel pair")
    amp_s = _arm_amplitude(_as_filters(f_s), jsa.axis_s, jsa.channel.omega_s0, "signal")
    amp_i = _arm_amplitude(_as_filters(f_i), jsa.axis_i, jsa.channel.omega_i0, "idler")

    filtered = jsa.values * amp_s[:, None] * amp_i[None, :]
    kept = float(np.sum(np.abs(filtered) ** 2) / np.sum(np.abs(jsa.values) ** 2))
    if kept == 0.0:
        raise ValidationError("filters remove the whole JSA")
    values, _ = frobenius_normalize(filtered)

    metadata = dict(jsa.metadata)
    metadata["filters"] = metadata.get("filters", []) + [
        {
            "arm": arm,
            "shape": f.shape,
            "order": int(f.order),
            "fwhm_ghz": rad_to_ghz(f.fwhm),
        }
        for arm, spec in (("signal", f_s), ("idler", f_i))
        for f in _as_filters(spec)
    ]
    return JsaGrid(
        values=values,
        axis_s=jsa.axis_s,
        axis_i=jsa.axis_i,
        channel=jsa.channel,
        mode=jsa.mode,
        normalized=True,
        kept_fraction=jsa.kept_fraction * kept,
        metadata=metadata,
    )


def phase_matching_fwhm(mode, alpha=GAUSS_ALPHA, profile="amplitude"):
    """위상정합 곡선의 ΔkL 축 FWHM.

    profile 'amplitude' 는 |Γ|, 'intensity' 는 |Γ|² 의 반치폭.
    """
    if profile not in ("amplitude", "intensity"):
        raise ValidationError(f"profile must be 'amplitude' or 'intensity', got {profile!r}")
    level = 0.5 if profile == "amplitude" else math.sqrt(0.5)
    if mode == "sinc":
        # sinc(y) = level, y = ΔkL/2 ∈ (0, π)
        y = brentq(lambda u: float(sinc(u)) - level, 1e-9, math.pi)
        return 4.0 * y
    if mode == "gauss":
        # exp(-α² x²) = level
        return 2.0 * math.sqrt(-math.log(level)) / alpha
    raise ValidationError(f"mode must be 'sinc' or 'gauss', got {mode!r}")
