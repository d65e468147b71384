# coding: utf-8
"""두 독립 헤럴드 광자의 HOM 간섭: 가시도, dip 곡선, 배경 보정."""
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd

from common.errors import AliasingError, NumericalError, ValidationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class VisibilityResult:
    """V = Tr(ρ1ρ2) 와 우변 분해 [Tr ρ1² + Tr ρ2² - ||ρ1-ρ2||²]/2."""

    visibility: float
    purity_1: float
    purity_2: float
    distance_sq: float

    @property
    def rhs(self):
        return 0.5 * (self.purity_1 + self.purity_2 - self.distance_sq)


@dataclass(frozen=True)
class DipCurve:
    delays: np.ndarray
    coincidence_prob: np.ndarray
    v_net: float
    baseline: float

    def to_frame(self, expected_counts=None):
        frame = pd.DataFrame({"delay_s": self.delays, "coincidence_prob": self.coincidence_prob})
        if expected_counts is not None:
            frame["expected_counts"] = expected_counts
        return frame


def _check_pair(rho1, rho2):
    if rho1.values.shape != rho2.values.shape or not np.allclose(rho1.axis, rho2.axis, rtol=1e-12, atol=0):
        raise ValidationError("density matrices live on different frequency axes")
    if abs(rho1.center - rho2.center) > 1e-9 * max(abs(rho1.center), 1.0):
        raise ValidationError("density matrices have different channel centres")


def visibility(rho1, rho2):
    """최대 HOM 가시도 Tr(ρ1ρ2). 두 계산 경로가 1e-10 이내로 같아야 한다."""
    _check_pair(rho1, rho2)
    a, b = rho1.values, rho2.values
    # Tr(AB) = Σ_jk A_jk B_kj
    v = float(np.real(np.sum(a * b.T)))
    diff = a - b
    result = VisibilityResult(
        visibility=v,
        purity_1=float(np.real(np.sum(a * a.T))),
        purity_2=float(np.real(np.sum(b * b.T))),
        distance_sq=float(np.sum(np.abs(diff) ** 2)),
    )
    if abs(result.visibility - result.rhs) > 1e-10:
        raise NumericalError(
            f"visibility paths disagree: Tr(rho1 rho2)={result.visibility:.12f}, rhs={result.rhs:.12f}"
        )
    return result


def overlap_function(rho1, rho2):
    """J(τ) = Σ_jk ρ1[j,k] ρ2[k,j] exp(i(ω_j-ω_k)τ) 를 계산하는 함수를 돌려준다."""
    _check_pair(rho1, rho2)
    m = rho1.values * rho2.values.T
    # 채널 중심은 (ω_j-ω_k) 에서 상쇄되므로 detuning 만 쓴다
    axis = np.asarray(rho1.axis)

    def J(tau):
        tau = np.atleast_1d(np.asarray(tau, dtype=float))
        phase = np.exp(1j * np.outer(tau, axis))
        return np.sum((phase @ m) * phase.conj(), axis=1)

    return J


def alias_period(rho):
    return 2.0 * math.pi / rho.step


def dip_curve(rho1, rho2, delays):
    """P(τ) = ½(1 - Re J(τ))."""
    delays = np.asarray(delays, dtype=float)
    if delays.ndim != 1 or delays.size == 0 or not np.all(np.isfinite(delays)):
        raise ValidationError("delays must be a non-empty 1-D array of finite values")
    span = float(delays.max() - delays.min())
    period = alias_period(rho1)
    if span > period:
        raise AliasingError(
            f"delay span {span:.3e} s exceeds the alias period {period:.3e} s of the frequency grid"
        )
    J = overlap_function(rho1, rho2)
    prob = 0.5 * (1.0 - np.real(J(delays)))
    v_net = visibility(rho1, rho2).visibility
    baseline = float(prob[np.argmax(np.abs(delays))])
    return DipCurve(delays=delays, coincidence_prob=prob, v_net=v_net, baseline=baseline)


def raw_visibility(v_net, signal_rate, background_rate):
    """배경이 지연과 무관하게 더해질 때 V_raw = v_net S/(S+B)."""
    if signal_rate < 0 or background_rate < 0:
        raise ValidationError("rates must be >= 0")
    if not 0.0 <= v_net <= 1.0:
        raise ValidationError(f"v_net must be in [0, 1], got {v_net}")
    total = signal_rate + background_rate
    if total == 0:
        raise ValidationError("signal_rate + background_rate is zero")
    return v_net * signal_rate / total


def net_visibility(v_raw, signal_fraction):
    # raw_visibility 의 역: 배경을 뺀 가시도
    if not 0.0 < signal_fraction <= 1.0:
        raise ValidationError(f"signal fraction must be in (0, 1], got {signal_fraction}")
    return v_raw / signal_fraction


def dip_fwhm(curve):
    """dip 깊이 ½ - P(τ) 의 반치폭 (s). τ >= 0 쪽에서 선형 보간."""
    delays = curve.delays
    depth = 0.5 - curve.coincidence_prob
    order = np.argsort(delays)
    delays, depth = delays[order], depth[order]
    right = delays >= 0
    if np.count_nonzero(right) < 2:
        raise ValidationError("dip width needs at least two delays with tau >= 0")
    tau, d = delays[right], depth[right]
    half = 0.5 * d[0]
    below = np.flatnonzero(d <= half)
    if below.size == 0:
        raise NumericalError("dip does not fall to half depth within the delay range")
    k = below[0]
    if k == 0:
        return 0.0
    # d[k-1] > half >= d[k]
    frac = (d[k - 1] - half) / (d[k - 1] - d[k])
    return 2.0 * (tau[k - 1] + frac * (tau[k] - tau[k - 1]))


def dip_visibility(delays, counts, n_edge: Optional[int] = 1):
    """계수 곡선에서 raw 가시도와 Poisson 표준오차.

    baseline 은 |τ| 가 가장 큰 n_edge 개 지점씩(양쪽)의 평균, dip 은 |τ| 최소 지점.
    """
    delays = np.asarray(delays, dtype=float)
    counts = np.asarray(counts, dtype=float)
    if delays.size == 0 or delays.shape != counts.shape:
        raise ValidationError("delays and counts must be non-empty and the same length")
    order = np.argsort(np.abs(delays))
    dip = counts[order[0]]
    edge = counts[order[-2 * n_edge:]]
    base_total = edge.sum()
    if base_total <= 0:
        raise NumericalError("no baseline counts")
    baseline = base_total / edge.size
    ratio = dip / baseline
    v = 1.0 - ratio
    if dip > 0:
        err = ratio * math.sqrt(1.0 / dip + 1.0 / base_total)
    else:
        err = math.sqrt(1.0 / base_total)
    return v, err
