# coding: utf-8
"""계수율/CAR 해석 모델: 광자쌍, Raman 잡음(온도 의존), 암계수.

검출기 순서는 실험 배치를 따른다.
    detectors[0] APD1 : 소스1 헤럴드 (아이들러)
    detectors[1] APD2 : 소스1 신호, HOM 빔스플리터 출력 a
    detectors[2] APD3 : 소스2 신호, HOM 빔스플리터 출력 b
    detectors[3] APD4 : 소스2 헤럴드 (아이들러)
이중 CAR 은 APD2(신호)와 APD1(아이들러)로 계산한다.
"""
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.optimize import least_squares

from common.errors import GainRegimeError, UndefinedCarError, UnimodalityError, ValidationError
from common.functions import bose_einstein
from common.gradient import log_slope
from common.optimizer import GoldenSection, is_unimodal

logger = logging.getLogger(__name__)

GAIN_LIMIT = 0.3
DETECTOR_MODES = ("free_running", "gated")
RAMAN_SIDES = ("stokes", "anti_stokes")
PAIR_STATISTICS = ("poisson", "thermal")
# measured: (true + acc)/acc, true: true/acc
CAR_DEFINITIONS = ("measured", "true")
SIGNAL, IDLER = 1, 0


@dataclass(frozen=True)
class DetectorSpec:
    """단일광자 검출기 (APD)."""

    efficiency: float
    dark_rate: float = 0.0
    dead_time: float = 0.0
    gate_window: float = 1e-9
    mode: str = "gated"

    def __post_init__(self):
        if not 0.0 <= self.efficiency <= 1.0:
            raise ValidationError(f"detector efficiency must be in [0, 1], got {self.efficiency}")
        for name in ("dark_rate", "dead_time", "gate_window"):
            value = getattr(self, name)
            if not value >= 0:
                raise ValidationError(f"detector {name} must be >= 0, got {value}")
        if self.mode not in DETECTOR_MODES:
            raise ValidationError(f"detector mode must be one of {DETECTOR_MODES}, got {self.mode!r}")

    def dark_probability(self, coincidence_window):
        # 펄스 하나당 암계수 확률. free-running 이면 동시계수 창 안의 암계수
        window = self.gate_window if self.mode == "gated" else coincidence_window
        return self.dark_rate * window

    def dead_pulses(self, rep_rate):
        # 한 번 클릭한 뒤 다음 클릭이 가능한 펄스 간격
        return max(1, int(math.ceil(self.dead_time * rep_rate - 1e-9)))


@dataclass(frozen=True)
class RamanSpec:
    """한 채널의 자발 Raman 잡음.

    coeff 는 photons/(pulse·W) 를 점유수 1 로 나눈 값이라, 온도가 달라져도
    추가 파라미터 없이 n_R = coeff·P_avg·occ(T) 로 옮겨진다.
    """

    coeff: float
    phonon_shift: float
    side: str = "anti_stokes"

    def __post_init__(self):
        if not self.coeff >= 0:
            raise ValidationError(f"raman coeff must be >= 0, got {self.coeff}")
        if not self.phonon_shift > 0:
            raise ValidationError(f"raman phonon_shift must be > 0, got {self.phonon_shift}")
        if self.side not in RAMAN_SIDES:
            raise ValidationError(f"raman side must be one of {RAMAN_SIDES}, got {self.side!r}")

    @classmethod
    def for_channel(cls, coeff, omega_channel, omega_p0):
        # 펌프보다 높은 주파수 채널은 anti-Stokes
        shift = omega_channel - omega_p0
        return cls(coeff=coeff, phonon_shift=abs(shift), side="anti_stokes" if shift > 0 else "stokes")

    def occupation(self, temperature_k):
        n_th = float(bose_einstein(self.phonon_shift, temperature_k))
        return n_th + 1.0 if self.side == "stokes" else n_th


@dataclass(frozen=True)
class Scenario:
    """실험 전체 설정 (두 소스는 같은 광섬유/펌프/채널을 쓴다)."""

    fiber: object
    pump: object
    channel: object
    detectors: Tuple[DetectorSpec, DetectorSpec, DetectorSpec, DetectorSpec]
    raman_s: RamanSpec
    raman_i: RamanSpec
    capture: float = 1.0
    coincidence_window: float = 0.8e-9
    filter_s: Optional[object] = None
    filter_i: Optional[object] = None
    hom_overlap: Optional[Callable] = None
    # 지연과 무관한 배경 4중 계수 (per pulse)
    hom_background: float = 0.0
    pair_statistics: str = "poisson"
    car_definition: str = "measured"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "detectors", tuple(self.detectors))
        if len(self.detectors) != 4:
            raise ValidationError(f"scenario needs exactly 4 detectors, got {len(self.detectors)}")
        if not 0.0 < self.capture <= 1.0:
            raise ValidationError(f"capture must be in (0, 1], got {self.capture}")
        if not self.coincidence_window > 0:
            raise ValidationError(f"coincidence_window must be > 0, got {self.coincidence_window}")
        if not self.hom_background >= 0:
            raise ValidationError(f"hom_background must be >= 0, got {self.hom_background}")
        if self.pair_statistics not in PAIR_STATISTICS:
            raise ValidationError(
                f"pair_statistics must be one of {PAIR_STATISTICS}, got {self.pair_statistics!r}"
            )
        if self.car_definition not in CAR_DEFINITIONS:
            raise ValidationError(
                f"car_definition must be one of {CAR_DEFINITIONS}, got {self.car_definition!r}"
            )

    @property
    def signal_detector(self):
        return self.detectors[SIGNAL]

    @property
    def idler_detector(self):
        return self.detectors[IDLER]

    def dark_probabilities(self):
        return tuple(d.dark_probability(self.coincidence_window) for d in self.detectors)

    def with_power(self, p_avg):
        return replace(self, pump=self.pump.with_power(p_avg))

    def with_temperature(self, temperature_k):
        return replace(self, fiber=replace(self.fiber, temperature_k=temperature_k))

    def with_noise(self, raman_coeff, dark_rate):
        """Raman 계수(두 채널 공통)와 암계수율(네 검출기 공통)을 바꾼 사본."""
        return replace(
            self,
            raman_s=replace(self.raman_s, coeff=raman_coeff),
            raman_i=replace(self.raman_i, coeff=raman_coeff),
            detectors=tuple(replace(d, dark_rate=dark_rate) for d in self.detectors),
        )

    def with_efficiency_scale(self, factor):
        return replace(
            self,
            detectors=tuple(replace(d, efficiency=d.efficiency * factor) for d in self.detectors),
        )


@dataclass(frozen=True)
class CarRecord:
    """펄스당 값들."""

    p_avg: float
    car: float
    true_coinc_per_pulse: float
    accidental_per_pulse: float
    singles_s: float
    singles_i: float
    mu: float
    raman_s: float
    raman_i: float


@dataclass(frozen=True)
class NoiseFit:
    raman_coeff: float
    dark_rate: float
    residuals: np.ndarray
    scenario: Scenario
    success: bool

    @property
    def raman_coeffs(self):
        return self.scenario.raman_s.coeff, self.scenario.raman_i.coeff

    @property
    def dark_rates(self):
        return tuple(d.dark_rate for d in self.scenario.detectors)


def gain(fiber, pump):
    # γ P_peak L
    return fiber.gamma * pump.peak_power * fiber.length_m


def pairs_per_pulse(fiber, pump, capture=1.0):
    """저이득 SFWM 의 펄스당 광자쌍 수 μ = capture (γ P_peak L)²."""
    g = gain(fiber, pump)
    if g >= GAIN_LIMIT:
        raise GainRegimeError(g)
    return capture * g**2


def raman_per_pulse(raman, pump, temperature_k):
    """n_R = coeff · P_avg · occ(T)."""
    if not temperature_k > 0:
        raise ValidationError(f"temperature must be > 0 K, got {temperature_k}")
    return raman.coeff * pump.p_avg * raman.occupation(temperature_k)


def car_model(scenario, p_avg, temperature_k=None):
    """펄스당 신호/아이들러 단일계수와 동시계수로 CAR 을 계산한다.

    N_x = η_x (μ + n_R,x) + d_x,  C_true = η_s η_i μ,  C_acc = N_s N_i
    """
    temperature_k = scenario.fiber.temperature_k if temperature_k is None else temperature_k
    pump = scenario.pump.with_power(float(p_avg))
    mu = pairs_per_pulse(scenario.fiber, pump, scenario.capture)
    n_rs = raman_per_pulse(scenario.raman_s, pump, temperature_k)
    n_ri = raman_per_pulse(scenario.raman_i, pump, temperature_k)

    det_s, det_i = scenario.signal_detector, scenario.idler_detector
    d_s = det_s.dark_probability(scenario.coincidence_window)
    d_i = det_i.dark_probability(scenario.coincidence_window)
    eta_s, eta_i = det_s.efficiency, det_i.efficiency

    singles_s = eta_s * (mu + n_rs) + d_s
    singles_i = eta_i * (mu + n_ri) + d_i
    true = eta_s * eta_i * mu
    acc = singles_s * singles_i
    if acc == 0.0:
        raise UndefinedCarError(
            f"no accidental coincidences at p_avg={p_avg:.3e} W (pairs, Raman noise and dark counts all zero)"
        )
    if scenario.car_definition == "measured":
        car = (true + acc) / acc
    else:
        car = true / acc
    return CarRecord(
        p_avg=float(p_avg),
        car=car,
        true_coinc_per_pulse=true,
        accidental_per_pulse=acc,
        singles_s=singles_s,
        singles_i=singles_i,
        mu=mu,
        raman_s=n_rs,
        raman_i=n_ri,
    )


def car_curve(scenario, powers, temperature_k=None):
    """여러 펌프 세기에서의 CAR 표."""
    records = [car_model(scenario, p, temperature_k) for p in powers]
    frame = pd.DataFrame([asdict(r) for r in records])
    frame["temperature_k"] = scenario.fiber.temperature_k if temperature_k is None else temperature_k
    return frame


def car_peak(scenario, p_range, n_samples=48, temperature_k=None):
    """CAR(p) 의 최댓값을 황금분할(ln p 공간)로 찾는다.

    먼저 n_samples 개 로그 간격 표본으로 단봉성을 확인하고, 아니면
    표본 표를 담아 UnimodalityError 를 낸다.

    Returns
    -------
    (p_opt, car_max)
    """
    p_lo, p_hi = p_range
    if not 0 < p_lo < p_hi:
        raise ValidationError(f"invalid power range [{p_lo}, {p_hi}]")

    def car_at(p):
        return car_model(scenario, p, temperature_k).car

    samples = np.geomspace(p_lo, p_hi, n_samples)
    values = np.array([car_at(p) for p in samples])
    if not is_unimodal(values):
        table = pd.DataFrame({"p_avg_w": samples, "car": values}).to_string(index=False)
        raise UnimodalityError("CAR(p) is not unimodal on the requested range", table=table)

    p_opt, car_max = GoldenSection(tol=1e-9, log_scale=True).maximize(car_at, p_lo, p_hi)
    logger.debug("CAR peak %.4f at %.4e W", car_max, p_opt)
    return p_opt, car_max


def _check_ratio(scenario, car):
    # CAR 정의와 무관하게 C_true/C_acc 로 바꾼다
    return car - 1.0 if scenario.car_definition == "measured" else car


def _peak_guess(scenario, p_opt, car_max):
    """대칭 근사의 닫힌 해. 최댓값에서 d = η μ, 그리고
    C_true/C_acc = μ / (2μ + n_R)² 이다."""
    ratio = _check_ratio(scenario, car_max)
    if not ratio > 0:
        raise ValidationError(f"CAR value {car_max} is not above its floor")
    mu = pairs_per_pulse(scenario.fiber, scenario.pump.with_power(p_opt), scenario.capture)
    if mu == 0:
        raise ValidationError("cannot calibrate noise with zero pair rate")
    eta = math.sqrt(scenario.signal_detector.efficiency * scenario.idler_detector.efficiency)
    n_r = math.sqrt(mu / ratio) - 2.0 * mu
    if n_r <= 0:
        n_r = 0.1 * mu
    t = scenario.fiber.temperature_k
    occ = 0.5 * (scenario.raman_s.occupation(t) + scenario.raman_i.occupation(t))
    windows = [
        d.gate_window if d.mode == "gated" else scenario.coincidence_window
        for d in (scenario.signal_detector, scenario.idler_detector)
    ]
    return n_r / (p_opt * occ), eta * mu / float(np.mean(windows))


def calibrate_to_peak(scenario, p_opt, car_max):
    """CAR(p_opt) = car_max 와 dCAR/dp = 0 을 동시에 만족하는 공통 Raman 계수와
    공통 암계수율을 구해 scenario 에 넣는다."""
    coeff0, dark0 = _peak_guess(scenario, p_opt, car_max)

    def residual(x):
        trial = scenario.with_noise(math.exp(x[0]), math.exp(x[1]))
        car = car_model(trial, p_opt).car
        slope = log_slope(lambda p: car_model(trial, float(p)).car, p_opt, h=1e-4)
        return np.array([math.log(car) - math.log(car_max), float(slope)])

    sol = least_squares(
        residual,
        np.log([coeff0, dark0]),
        method="lm",
        xtol=1e-14,
        ftol=1e-14,
        gtol=1e-14,
    )
    coeff, dark = math.exp(sol.x[0]), math.exp(sol.x[1])
    if np.max(np.abs(sol.fun)) > 1e-6:
        logger.warning("peak calibration residuals %s", sol.fun)
    logger.info("calibrated noise: raman_coeff=%.4e /(pulse W), dark_rate=%.4e Hz", coeff, dark)
    return NoiseFit(
        raman_coeff=coeff,
        dark_rate=dark,
        residuals=np.asarray(sol.fun),
        scenario=scenario.with_noise(coeff, dark),
        success=bool(sol.success),
    )


def fit_noise(scenario_template, observations):
    """(p_avg, CAR) 관측값에 log(CAR) 최소제곱으로 Raman 계수와 암계수율을 맞춘다.

    Parameters
    ----------
    scenario_template : 잡음 값만 비워 둔 Scenario
    observations : (p_avg [W], car) 쌍의 열. 서로 다른 세기가 2개 이상 필요
    """
    obs = np.asarray(observations, dtype=float)
    if obs.ndim != 2 or obs.shape[1] != 2 or obs.shape[0] < 2:
        raise ValidationError("fit_noise needs at least 2 (p_avg, car) observations")
    powers, cars = obs[:, 0], obs[:, 1]
    if len(np.unique(powers)) < 2:
        raise ValidationError("fit_noise needs observations at 2 or more distinct powers")
    if np.any(powers <= 0):
        raise ValidationError("observation powers must be > 0")
    ratios = np.array([_check_ratio(scenario_template, c) for c in cars])
    if np.any(ratios <= 0):
        raise ValidationError("observed CAR values must lie above the accidental floor")

    best = int(np.argmax(cars))
    coeff0, dark0 = _peak_guess(scenario_template, powers[best], cars[best])

    def residual(x):
        trial = scenario_template.with_noise(math.exp(x[0]), math.exp(x[1]))
        model = np.array([car_model(trial, p).car for p in powers])
        return np.log(model) - np.log(cars)

    sol = least_squares(
        residual,
        np.log([coeff0, dark0]),
        method="lm",
        jac="3-point",
        xtol=1e-14,
        ftol=1e-14,
        gtol=1e-14,
    )
    coeff, dark = math.exp(sol.x[0]), math.exp(sol.x[1])
    logger.info(
        "noise fit over %d points: raman_coeff=%.4e, dark_rate=%.4e Hz, rms log residual %.3e",
        len(powers),
        coeff,
        dark,
        float(np.sqrt(np.mean(sol.fun**2))),
    )
    return NoiseFit(
        raman_coeff=coeff,
        dark_rate=dark,
        residuals=np.asarray(sol.fun),
        scenario=scenario_template.with_noise(coeff, dark),
        success=bool(sol.success),
    )


def herald_probability(eta, mu):
    # Poisson 쌍 중 하나 이상의 아이들러가 검출될 확률
    return 1.0 - math.exp(-eta * mu)


def fourfold_signal_rate(scenario):
    """구별 가능한(큰 지연) 기준선에서의 펄스당 4중 계수.

    두 헤럴드가 모두 울리고, 첫 광자 둘이 다른 출력(확률 ½)으로 가서 모두 검출.
    """
    mu = pairs_per_pulse(scenario.fiber, scenario.pump, scenario.capture)
    h1 = herald_probability(scenario.detectors[0].efficiency, mu)
    h2 = herald_probability(scenario.detectors[3].efficiency, mu)
    return h1 * h2 * 0.5 * scenario.detectors[1].efficiency * scenario.detectors[2].efficiency


def background_for_fraction(scenario, fraction):
    """S/(S+B) = fraction 이 되는 배경 B (per pulse)."""
    if not 0.0 < fraction <= 1.0:
        raise ValidationError(f"signal fraction must be in (0, 1], got {fraction}")
    s = fourfold_signal_rate(scenario)
    return s * (1.0 - fraction) / fraction
