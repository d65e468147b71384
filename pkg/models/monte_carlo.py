# coding: utf-8
"""이벤트 단위 Monte Carlo: 2중 CAR 과 4중 HOM 계수.

난수는 블록마다 SeedSequence([seed, ..., block]) 로 따로 만들기 때문에
워커 수를 바꿔도 결과가 비트 단위로 같다.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from common.errors import UndefinedCarError, ValidationError
from common.runner import DEFAULT_BLOCK_SIZE, BlockRunner
from models.counts import pairs_per_pulse, raman_per_pulse

logger = logging.getLogger(__name__)

MIN_PULSES = 100_000
N_ACCIDENTAL_OFFSETS = 64
# SeedSequence 의 두 번째 항목으로 스트림을 구분한다
HOM_STREAM = 1
BACKGROUND_STREAM = 2


@dataclass(frozen=True)
class McCarResult:
    car_estimate: float
    car_stderr: float
    counts: dict
    seed: int
    p_avg: float
    metadata: dict = field(default_factory=dict)

    def to_row(self):
        row = {"seed": self.seed, "p_avg_w": self.p_avg, "car_estimate": self.car_estimate, "car_stderr": self.car_stderr}
        row.update(self.counts)
        return row


def _check_run(n_pulses, seed):
    if int(n_pulses) != n_pulses or n_pulses < MIN_PULSES:
        raise ValidationError(f"n_pulses must be an integer >= {MIN_PULSES}, got {n_pulses}")
    if int(seed) != seed or not 0 <= seed < 2**64:
        raise ValidationError(f"seed must be an unsigned 64-bit integer, got {seed}")


def _draw_pairs(rng, mu, size, statistics):
    if statistics == "thermal":
        # 단일 모드 열분포 P(n) = μ^n/(1+μ)^(n+1)
        return rng.geometric(1.0 / (1.0 + mu), size) - 1
    return rng.poisson(mu, size)


def apply_dead_time(indices, n_dead):
    """정렬된 클릭 펄스 번호에서 dead time 안의 클릭을 지운다.

    클릭 k 다음에는 k + n_dead 번 펄스부터 다시 클릭할 수 있다.
    """
    if n_dead <= 1 or len(indices) == 0:
        return indices
    kept = []
    next_ok = -1
    for k in indices.tolist():
        if k >= next_ok:
            kept.append(k)
            next_ok = k + n_dead
    return np.asarray(kept, dtype=np.int64)


def count_accidentals(clicks_s, clicks_i, offsets):
    # 신호 펄스 k 와 아이들러 펄스 k+j 의 우연 동시계수 합
    return int(sum(np.count_nonzero(np.isin(clicks_s + j, clicks_i, assume_unique=True)) for j in offsets))


def mc_run_car(
    scenario,
    n_pulses,
    seed,
    p_avg=None,
    workers=1,
    verbose=False,
    block_size=DEFAULT_BLOCK_SIZE,
):
    """2중 동시계수 실험을 펄스 단위로 모의하고 CAR 과 Poisson 표준오차를 낸다.

    Parameters
    ----------
    scenario : models.counts.Scenario
    n_pulses : 펌프 펄스 수 (>= 1e5)
    seed : 부호 없는 64비트 정수
    p_avg : 평균 펌프 세기 (W). None 이면 scenario.pump.p_avg
    """
    _check_run(n_pulses, seed)
    p_avg = scenario.pump.p_avg if p_avg is None else float(p_avg)
    pump = scenario.pump.with_power(p_avg)
    temperature = scenario.fiber.temperature_k

    mu = pairs_per_pulse(scenario.fiber, pump, scenario.capture)
    n_rs = raman_per_pulse(scenario.raman_s, pump, temperature)
    n_ri = raman_per_pulse(scenario.raman_i, pump, temperature)
    det_s, det_i = scenario.signal_detector, scenario.idler_detector
    eta_s, eta_i = det_s.efficiency, det_i.efficiency
    d_s = det_s.dark_probability(scenario.coincidence_window)
    d_i = det_i.dark_probability(scenario.coincidence_window)
    statistics = scenario.pair_statistics

    def block_fn(block, start, stop):
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), block]))
        n = stop - start
        pairs = _draw_pairs(rng, mu, n, statistics)
        pair_s = rng.binomial(pairs, eta_s)
        pair_i = rng.binomial(pairs, eta_i)
        raman_s = rng.poisson(eta_s * n_rs, n)
        raman_i = rng.poisson(eta_i * n_ri, n)
        dark_s = rng.random(n) < d_s
        dark_i = rng.random(n) < d_i
        click_s = (pair_s + raman_s > 0) | dark_s
        click_i = (pair_i + raman_i > 0) | dark_i
        return np.flatnonzero(click_s) + start, np.flatnonzero(click_i) + start, int(pairs.sum())

    runner = BlockRunner(n_pulses, block_size=block_size, workers=workers, verbose=verbose)
    results = runner.run(block_fn)

    raw_s = np.concatenate([r[0] for r in results]).astype(np.int64)
    raw_i = np.concatenate([r[1] for r in results]).astype(np.int64)
    n_pairs = sum(r[2] for r in results)

    rep = scenario.pump.rep_rate
    dead_s, dead_i = det_s.dead_pulses(rep), det_i.dead_pulses(rep)
    clicks_s = apply_dead_time(raw_s, dead_s)
    clicks_i = apply_dead_time(raw_i, dead_i)

    coinc = int(np.intersect1d(clicks_s, clicks_i, assume_unique=True).size)
    first = max(dead_s, dead_i)
    offsets = np.arange(first, first + N_ACCIDENTAL_OFFSETS)
    acc = count_accidentals(clicks_s, clicks_i, offsets)
    if acc == 0:
        raise UndefinedCarError(
            f"no accidental coincidences in {n_pulses} pulses; increase n_pulses or the noise level"
        )

    acc_per_window = acc / N_ACCIDENTAL_OFFSETS
    if scenario.car_definition == "measured":
        car = coinc / acc_per_window
    else:
        car = (coinc - acc_per_window) / acc_per_window
    if coinc > 0:
        stderr = (coinc / acc_per_window) * np.sqrt(1.0 / coinc + 1.0 / acc)
    else:
        stderr = 1.0 / acc_per_window

    counts = {
        "n_pulses": int(n_pulses),
        "pairs": int(n_pairs),
        "singles_s_counts": int(clicks_s.size),
        "singles_i_counts": int(clicks_i.size),
        "singles_s_before_dead_time": int(raw_s.size),
        "singles_i_before_dead_time": int(raw_i.size),
        "coincidences": coinc,
        "accidentals": acc,
        "n_offsets": N_ACCIDENTAL_OFFSETS,
    }
    logger.info("MC CAR at %.3e W: %.3f +- %.3f (%d coincidences)", p_avg, car, stderr, coinc)
    return McCarResult(
        car_estimate=float(car),
        car_stderr=float(stderr),
        counts=counts,
        seed=int(seed),
        p_avg=p_avg,
        metadata={"mu": mu, "raman_s": n_rs, "raman_i": n_ri, "dead_pulses": [dead_s, dead_i]},
    )


def mc_run_hom(
    scenario,
    delays,
    n_pulses,
    seed,
    acquisition_time=None,
    workers=1,
    verbose=False,
    block_size=DEFAULT_BLOCK_SIZE,
):
    """두 헤럴드 소스의 4중 동시계수를 지연마다 모의한다.

    두 헤럴드가 모두 울린 펄스에서 각 소스의 첫 광자끼리 간섭하고
    (다른 출력으로 갈 확률 ½(1 - Re J(τ))), 나머지 광자는 구별 가능하다고
    보고 무작위로 나눈다. 배경 4중 계수는 Poisson(hom_background · n_pulses).

    Returns
    -------
    pandas.DataFrame : delay_s, fourfold_counts, stderr, raw_counts
        counts 와 stderr 는 acquisition_time (s) 기준으로 환산한 값
    """
    if scenario.hom_overlap is None:
        raise ValidationError("HOM Monte Carlo needs an overlap function (scenario.hom_overlap)")
    _check_run(n_pulses, seed)
    delays = np.atleast_1d(np.asarray(delays, dtype=float))
    overlap = np.real(np.atleast_1d(scenario.hom_overlap(delays)))
    p_split = np.clip(0.5 * (1.0 - overlap), 0.0, 1.0)

    mu = pairs_per_pulse(scenario.fiber, scenario.pump, scenario.capture)
    eta_h1, eta_a, eta_b, eta_h2 = (d.efficiency for d in scenario.detectors)
    statistics = scenario.pair_statistics

    def make_block_fn(t):
        def block_fn(block, start, stop):
            rng = np.random.default_rng(np.random.SeedSequence([int(seed), HOM_STREAM, t, block]))
            n = stop - start
            n1 = _draw_pairs(rng, mu, n, statistics)
            n2 = _draw_pairs(rng, mu, n, statistics)
            herald = (rng.binomial(n1, eta_h1) > 0) & (rng.binomial(n2, eta_h2) > 0)
            idx = np.flatnonzero(herald)
            m = idx.size
            if m == 0:
                return 0
            extra = n1[idx] + n2[idx] - 2
            split = rng.random(m) < p_split[t]
            to_a = rng.random(m) < 0.5
            # 첫 광자 둘: 갈라지면 (1, 1), 뭉치면 (2, 0) 혹은 (0, 2)
            na = np.where(split, 1, np.where(to_a, 2, 0))
            nb = 2 - na
            extra_a = rng.binomial(extra, 0.5)
            na = na + extra_a
            nb = nb + extra - extra_a
            click_a = rng.binomial(na, eta_a) > 0
            click_b = rng.binomial(nb, eta_b) > 0
            return int(np.count_nonzero(click_a & click_b))

        return block_fn

    raw = np.zeros(delays.size, dtype=np.int64)
    for t in range(delays.size):
        runner = BlockRunner(n_pulses, block_size=block_size, workers=workers, verbose=verbose)
        signal = sum(runner.run(make_block_fn(t)))
        bg_rng = np.random.default_rng(np.random.SeedSequence([int(seed), BACKGROUND_STREAM, t]))
        background = int(bg_rng.poisson(scenario.hom_background * n_pulses))
        raw[t] = signal + background
        logger.debug("delay %.3e s: %d signal + %d background four-folds", delays[t], signal, background)

    scale = 1.0 if acquisition_time is None else acquisition_time * scenario.pump.rep_rate / n_pulses
    return pd.DataFrame(
        {
            "delay_s": delays,
            "fourfold_counts": raw * scale,
            "stderr": np.sqrt(raw) * scale,
            "raw_counts": raw,
        }
    )
