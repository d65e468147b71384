# coding: utf-8
"""JSON 설정 파일 -> RunConfig.

친숙한 단위(ps, μW, GHz, ns, μs, ITU 채널 번호)는 여기서만 SI 로 바꾼다.
검증 오류는 해당 키가 나오는 줄 번호를 붙인 ConfigError 로 바꾼다.
"""
import copy
import json
import logging
import os
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Tuple

import numpy as np

from common.errors import ConfigError, ValidationError
from common.functions import GAUSS_ALPHA
from common.util import content_hash, ghz_to_rad, hz_to_rad, ps_to_s, uw_to_w
from models.counts import DetectorSpec, RamanSpec, Scenario, calibrate_to_peak, fit_noise
from models.fiber import (
    ChannelPair,
    FiberSpec,
    GridSpec,
    PumpSpec,
    calibrate_symmetric_gvm,
    itu_channel_freq,
)
from models.jsa import FilterSpec

logger = logging.getLogger(__name__)

PRESET_PATH = os.path.join(os.path.dirname(os.path.abspath(__file__)), "dsf_77k.json")


@dataclass(frozen=True)
class SourceConfig:
    """광자쌍 소스 하나 (광섬유, 펌프, 채널, 양쪽 필터)."""

    fiber: FiberSpec
    pump: PumpSpec
    channel: ChannelPair
    filter_s: Tuple[FilterSpec, ...] = ()
    filter_i: Tuple[FilterSpec, ...] = ()


@dataclass(frozen=True)
class HomParams:
    signal_fraction: float
    acquisition_time: float
    delays: np.ndarray


@dataclass(frozen=True)
class ScanParams:
    t_min: float
    t_max: float
    n_steps: int


@dataclass(frozen=True)
class CarParams:
    p_min: float
    p_max: float
    n_points: int


@dataclass(frozen=True)
class McParams:
    n_pulses: int
    seed: int
    workers: int
    powers: Tuple[float, ...]


@dataclass(frozen=True)
class RunConfig:
    source: SourceConfig
    second_source: SourceConfig
    scenario: Scenario
    grid: GridSpec
    mode: str
    alpha: float
    hom: HomParams
    scan: ScanParams
    car: CarParams
    mc: McParams
    resolved: dict = field(default_factory=dict)
    path: Optional[str] = None

    @property
    def config_hash(self):
        return content_hash(self.resolved)

    @property
    def assumptions(self):
        return self.resolved.get("assumptions", {})

    def echo(self):
        """요약 JSON 에 넣는 설정 사본.

        document 는 오버라이드까지 반영한 입력 문서라 parse_config 로 다시 읽으면
        같은 config_hash 가 나온다. 나머지는 SI 로 풀고 보정까지 끝난 값이다.
        """
        return {
            "document": copy.deepcopy(self.resolved),
            "source": asdict(self.source),
            "second_source": asdict(self.second_source),
            "scenario": asdict(replace(self.scenario, hom_overlap=None)),
            "grid": asdict(self.grid),
            "mode": self.mode,
            "alpha": self.alpha,
            "hom": asdict(self.hom),
            "scan": asdict(self.scan),
            "car": asdict(self.car),
            "mc": asdict(self.mc),
        }


def deep_merge(base, override):
    """override 의 값을 base 위에 재귀적으로 덮어쓴 새 dict."""
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


class ConfigReader:
    """키 경로로 값을 꺼내고, 실패하면 파일의 줄 번호를 붙여 오류를 낸다."""

    def __init__(self, document, text=None, path=None):
        self.document = document
        self.text = text
        self.path = path

    def locate(self, keys):
        # 경로의 문자열 키를 순서대로 찾아 마지막 키의 줄 번호를 돌려준다
        if self.text is None:
            return None
        pos = 0
        found = False
        for key in keys:
            if not isinstance(key, str):
                continue
            idx = self.text.find(f'"{key}"', pos)
            if idx < 0:
                break
            pos, found = idx, True
        return self.text.count("\n", 0, pos) + 1 if found else None

    def error(self, keys, message):
        name = ".".join(str(k) for k in keys)
        return ConfigError(f"{name}: {message}", self.path, self.locate(keys))

    def get(self, keys, kind=float, default=None, required=True):
        node = self.document
        for key in keys:
            try:
                node = node[key]
            except (KeyError, IndexError, TypeError):
                if required and default is None:
                    raise self.error(keys, "missing required key") from None
                return default
        if kind is None:
            return node
        if kind is int:
            if isinstance(node, bool) or not isinstance(node, (int, float)) or int(node) != node:
                raise self.error(keys, f"expected an integer, got {node!r}")
            return int(node)
        if kind is float:
            if isinstance(node, bool) or not isinstance(node, (int, float)):
                raise self.error(keys, f"expected a number, got {node!r}")
            return float(node)
        if not isinstance(node, kind):
            raise self.error(keys, f"expected {kind.__name__}, got {node!r}")
        return node

    @contextmanager
    def section(self, keys):
        # 도메인 객체의 검증 오류를 이 섹션 위치로 옮긴다
        try:
            yield
        except ConfigError:
            raise
        except ValidationError as e:
            raise self.error(keys, str(e)) from e


def _read_filters(reader, keys, omega_center):
    spec = reader.get(keys, kind=None, required=False)
    if spec is None:
        return ()
    items = spec if isinstance(spec, list) else [spec]
    filters = []
    for n, _ in enumerate(items):
        base = list(keys) + ([n] if isinstance(spec, list) else [])
        offset = reader.get(base + ["center_offset_ghz"], default=0.0, required=False)
        with reader.section(base):
            filters.append(
                FilterSpec(
                    center=omega_center + ghz_to_rad(offset),
                    fwhm=ghz_to_rad(reader.get(base + ["fwhm_ghz"])),
                    shape=reader.get(base + ["shape"], kind=str, default="supergaussian", required=False),
                    order=reader.get(base + ["order"], kind=int, default=3, required=False),
                )
            )
    return tuple(filters)


def read_source(reader):
    """fiber/pump/channel/filters 섹션에서 SourceConfig 를 만든다."""
    omega_p0 = hz_to_rad(_itu(reader, ["pump", "itu"]))
    with reader.section(["pump"]):
        pump = PumpSpec(
            omega_p0=omega_p0,
            t_fwhm=ps_to_s(reader.get(["pump", "t_fwhm_ps"])),
            p_avg=uw_to_w(reader.get(["pump", "p_avg_uw"])),
            rep_rate=reader.get(["pump", "rep_rate_mhz"]) * 1e6,
        )
    with reader.section(["channel"]):
        channel = ChannelPair(
            omega_s0=hz_to_rad(_itu(reader, ["channel", "signal_itu"])),
            omega_i0=hz_to_rad(_itu(reader, ["channel", "idler_itu"])),
            omega_p0=omega_p0,
        )

    beta = reader.get(["fiber", "beta"], kind=list)
    if len(beta) != 5 or not all(isinstance(b, (int, float)) and not isinstance(b, bool) for b in beta):
        raise reader.error(["fiber", "beta"], "expected 5 numbers beta0..beta4 in s^n/m")
    with reader.section(["fiber"]):
        fiber = FiberSpec(
            length_m=reader.get(["fiber", "length_m"]),
            gamma=reader.get(["fiber", "gamma_per_w_m"]),
            beta=tuple(beta),
            omega_ref=omega_p0,
            temperature_k=reader.get(["fiber", "temperature_k"], default=77.0, required=False),
        )
    t_opt = reader.get(["fiber", "calibration", "symmetric_gvm_t_opt_ps"], required=False)
    if t_opt is not None:
        alpha = reader.get(["alpha"], default=GAUSS_ALPHA, required=False)
        with reader.section(["fiber", "calibration"]):
            fiber = calibrate_symmetric_gvm(fiber, pump, channel, ps_to_s(t_opt), alpha)

    return SourceConfig(
        fiber=fiber,
        pump=pump,
        channel=channel,
        filter_s=_read_filters(reader, ["filters", "signal"], channel.omega_s0),
        filter_i=_read_filters(reader, ["filters", "idler"], channel.omega_i0),
    )


def _itu(reader, keys):
    index = reader.get(keys, kind=int)
    with reader.section(keys):
        return itu_channel_freq(index)


def read_detectors(reader):
    items = reader.get(["detectors"], kind=list)
    if len(items) != 4:
        raise reader.error(["detectors"], f"expected 4 detectors (APD1..APD4), got {len(items)}")
    detectors = []
    for n in range(4):
        keys = ["detectors", n]
        with reader.section(keys):
            detectors.append(
                DetectorSpec(
                    efficiency=reader.get(keys + ["efficiency"]),
                    dark_rate=reader.get(keys + ["dark_rate_hz"], default=0.0, required=False),
                    dead_time=reader.get(keys + ["dead_time_us"], default=0.0, required=False) * 1e-6,
                    gate_window=reader.get(keys + ["gate_window_ns"], default=1.0, required=False) * 1e-9,
                    mode=reader.get(keys + ["mode"], kind=str, default="gated", required=False),
                )
            )
    return tuple(detectors)


def read_scenario(reader, source):
    with reader.section([]):
        scenario = Scenario(
            fiber=source.fiber,
            pump=source.pump,
            channel=source.channel,
            detectors=read_detectors(reader),
            raman_s=RamanSpec.for_channel(0.0, source.channel.omega_s0, source.channel.omega_p0),
            raman_i=RamanSpec.for_channel(0.0, source.channel.omega_i0, source.channel.omega_p0),
            capture=reader.get(["capture"], default=1.0, required=False),
            coincidence_window=reader.get(["coincidence_window_ns"]) * 1e-9,
            filter_s=source.filter_s or None,
            filter_i=source.filter_i or None,
            pair_statistics=reader.get(["pair_statistics"], kind=str, default="poisson", required=False),
            car_definition=reader.get(["car_definition"], kind=str, default="measured", required=False),
        )
    return apply_noise(reader, scenario)


def apply_noise(reader, scenario):
    """noise 섹션: 직접 값, CAR 최댓값 보정, 혹은 관측값 맞춤 중 하나."""
    noise = reader.get(["noise"], kind=dict)
    if "calibrate_peak" in noise:
        keys = ["noise", "calibrate_peak"]
        with reader.section(keys):
            result = calibrate_to_peak(
                scenario,
                uw_to_w(reader.get(keys + ["p_avg_uw"])),
                reader.get(keys + ["car"]),
            )
        return result.scenario
    if "fit" in noise:
        keys = ["noise", "fit"]
        points = reader.get(keys, kind=list)
        observations = []
        for n, point in enumerate(points):
            if not (isinstance(point, list) and len(point) == 2):
                raise reader.error(keys + [n], "expected [p_avg_uw, car]")
            observations.append((uw_to_w(float(point[0])), float(point[1])))
        with reader.section(keys):
            return fit_noise(scenario, observations).scenario
    if "raman_coeff" in noise or "dark_rate_hz" in noise:
        with reader.section(["noise"]):
            return scenario.with_noise(
                reader.get(["noise", "raman_coeff"], default=0.0, required=False),
                reader.get(["noise", "dark_rate_hz"], default=0.0, required=False),
            )
    raise reader.error(["noise"], "expected one of raman_coeff/dark_rate_hz, calibrate_peak or fit")


def read_grid(reader, n_points=None):
    half = reader.get(["grid", "half_range_ghz"], required=False)
    h = ghz_to_rad(half) if half is not None else None
    with reader.section(["grid"]):
        return GridSpec(
            n_points=n_points if n_points is not None else reader.get(["grid", "n_points"], kind=int, default=512, required=False),
            half_range_s=h,
            half_range_i=h,
        )


def read_hom(reader):
    fraction = reader.get(["hom", "signal_fraction"], default=1.0, required=False)
    if not 0.0 < fraction <= 1.0:
        raise reader.error(["hom", "signal_fraction"], f"must be in (0, 1], got {fraction}")
    acquisition = reader.get(["hom", "acquisition_s"], default=1000.0, required=False)
    if not acquisition > 0:
        raise reader.error(["hom", "acquisition_s"], f"must be > 0, got {acquisition}")
    keys = ["hom", "delays_ps"]
    lo = reader.get(keys + ["min"], default=-80.0, required=False)
    hi = reader.get(keys + ["max"], default=80.0, required=False)
    n = reader.get(keys + ["n"], kind=int, default=81, required=False)
    if not (lo < hi and n >= 3):
        raise reader.error(keys, f"need min < max and n >= 3, got [{lo}, {hi}] with n={n}")
    return HomParams(signal_fraction=fraction, acquisition_time=acquisition, delays=ps_to_s(np.linspace(lo, hi, n)))


def read_scan(reader):
    t_min = reader.get(["scan", "t_min_ps"], default=1.0, required=False)
    t_max = reader.get(["scan", "t_max_ps"], default=64.0, required=False)
    n_steps = reader.get(["scan", "n_steps"], kind=int, default=64, required=False)
    if not (0 < t_min < t_max and n_steps >= 3):
        raise reader.error(["scan"], "need 0 < t_min_ps < t_max_ps and n_steps >= 3")
    return ScanParams(t_min=ps_to_s(t_min), t_max=ps_to_s(t_max), n_steps=n_steps)


def read_car(reader):
    p_min = reader.get(["car", "p_min_uw"], default=1.0, required=False)
    p_max = reader.get(["car", "p_max_uw"], default=200.0, required=False)
    n_points = reader.get(["car", "n_points"], kind=int, default=60, required=False)
    if not (0 < p_min < p_max and n_points >= 3):
        raise reader.error(["car"], "need 0 < p_min_uw < p_max_uw and n_points >= 3")
    return CarParams(p_min=uw_to_w(p_min), p_max=uw_to_w(p_max), n_points=n_points)


def read_mc(reader, seed=None, workers=None):
    n_pulses = reader.get(["mc", "n_pulses"], kind=int, default=10_000_000, required=False)
    if n_pulses < 100_000:
        raise reader.error(["mc", "n_pulses"], f"must be >= 100000, got {n_pulses}")
    if seed is None:
        seed = reader.get(["mc", "seed"], kind=int)
    if not 0 <= seed < 2**64:
        raise reader.error(["mc", "seed"], f"must be an unsigned 64-bit integer, got {seed}")
    if workers is None:
        workers = reader.get(["mc", "workers"], kind=int, default=1, required=False)
    if workers < 1:
        raise reader.error(["mc", "workers"], f"must be >= 1, got {workers}")
    powers = reader.get(["mc", "powers_uw"], kind=list, default=[], required=False)
    if not powers:
        powers = [reader.get(["pump", "p_avg_uw"])]
    return McParams(n_pulses=n_pulses, seed=seed, workers=workers, powers=tuple(uw_to_w(float(p)) for p in powers))


def parse_config(document, text=None, path=None, overrides=None):
    """이미 읽은 JSON 문서로 RunConfig 를 만든다.

    overrides : CLI 옵션 {mode, grid, seed, workers}. None 인 값은 무시한다
    """
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    if not isinstance(document, dict):
        raise ConfigError("top level must be a JSON object", path, 1)
    reader = ConfigReader(document, text, path)

    mode = overrides.get("mode", reader.get(["mode"], kind=str, default="gauss", required=False))
    if mode not in ("sinc", "gauss"):
        raise reader.error(["mode"], f"must be 'sinc' or 'gauss', got {mode!r}")
    alpha = reader.get(["alpha"], default=GAUSS_ALPHA, required=False)
    if not alpha > 0:
        raise reader.error(["alpha"], f"must be > 0, got {alpha}")

    source = read_source(reader)
    second = document.get("hom", {}).get("second_source")
    if second is not None:
        if not isinstance(second, dict):
            raise reader.error(["hom", "second_source"], "expected an object")
        merged = deep_merge({k: v for k, v in document.items() if k != "hom"}, second)
        # 병합된 문서에는 원래 줄 번호가 없으므로 second_source 위치를 쓴다
        second_reader = ConfigReader(merged, None, path)
        try:
            second_source = read_source(second_reader)
        except ConfigError as e:
            raise ConfigError(str(e), path, reader.locate(["hom", "second_source"])) from e
    else:
        second_source = source

    scenario = read_scenario(reader, source)
    resolved = copy.deepcopy(document)
    if "mode" in overrides:
        resolved["mode"] = mode
    if "grid" in overrides:
        resolved.setdefault("grid", {})["n_points"] = overrides["grid"]
    if "seed" in overrides:
        resolved.setdefault("mc", {})["seed"] = overrides["seed"]
    if "workers" in overrides:
        resolved.setdefault("mc", {})["workers"] = overrides["workers"]

    return RunConfig(
        source=source,
        second_source=second_source,
        scenario=scenario,
        grid=read_grid(reader, overrides.get("grid")),
        mode=mode,
        alpha=alpha,
        hom=read_hom(reader),
        scan=read_scan(reader),
        car=read_car(reader),
        mc=read_mc(reader, overrides.get("seed"), overrides.get("workers")),
        resolved=resolved,
        path=path,
    )


def load_config(path=None, overrides=None):
    """설정 파일을 읽는다. path 가 None 이면 내장 프리셋 dsf_77k.json."""
    path = path or PRESET_PATH
    try:
        with open(path, encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise ConfigError(f"cannot read config: {e.strerror}", path) from e
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON: {e.msg} (column {e.colno})", path, e.lineno) from e
    logger.debug("loaded config %s", path)
    return parse_config(document, text, path, overrides)
