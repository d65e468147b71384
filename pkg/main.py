import logging
import sys
from dataclasses import replace

import click
import numpy as np
import pandas as pd

from common.errors import NoFactorableWidthError, NumericalError, ValidationError
from common.etc import print_gpu_info, resolve_device
from common.output import output_path, write_csv, write_json
from common.util import s_to_ps, w_to_uw
from data.load_data import load_config
from models.counts import (
    background_for_fraction,
    car_curve,
    car_model,
    car_peak,
    fourfold_signal_rate,
)
from models.hom import (
    dip_curve,
    dip_fwhm,
    dip_visibility,
    overlap_function,
    raw_visibility,
    visibility,
)
from models.jsa import apply_filters, build_jsa, factorability_residual, gauss_coeffs, optimal_pump_width
from models.monte_carlo import mc_run_car, mc_run_hom
from models.schmidt import purity_scan, reduced_density, scan_argmax, schmidt_decompose

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
ROOM_TEMPERATURE_K = 300.0


def _summary_base(config, command):
    # config 는 다시 읽을 수 있는 입력 문서와 해석된 시나리오 전체
    return {
        "command": command,
        "config_path": config.path,
        "config_hash": config.config_hash,
        "config": config.echo(),
        "assumptions": config.assumptions,
        "mode": config.mode,
        "alpha": config.alpha,
        "car_definition": config.scenario.car_definition,
        "pair_statistics": config.scenario.pair_statistics,
    }


def source_jsa(config, source, filtered=True):
    """소스 하나의 JSA (필터 적용)."""
    jsa = build_jsa(source.fiber, source.pump, source.channel, config.grid, config.mode, config.alpha)
    if filtered and (source.filter_s or source.filter_i):
        jsa = apply_filters(jsa, source.filter_s, source.filter_i)
    return jsa


def cmd_jsi(config, out_dir, device="cpu"):
    """JSI 격자와 메타데이터 (계수, 해석/SVD 순도)."""
    source = config.source
    coeffs = gauss_coeffs(source.fiber, source.pump, source.channel, config.alpha)
    raw = source_jsa(config, source, filtered=False)
    jsa = source_jsa(config, source)
    result = schmidt_decompose(jsa, device=device)
    try:
        residual = factorability_residual(coeffs)
    except NoFactorableWidthError:
        residual = None

    meta = _summary_base(config, "jsi")
    meta.update(
        {
            "jsa": jsa.header(),
            "coeffs_s2": {"A": coeffs.A, "B": coeffs.B, "C": coeffs.C},
            "factorability_residual": residual,
            "purity_analytic": coeffs.purity,
            "purity_svd": result.purity,
            "purity_svd_unfiltered": schmidt_decompose(raw, device=device).purity,
            "schmidt": result.summary(),
        }
    )
    files = {
        "jsi": write_csv(jsa.to_frame(), output_path(out_dir, "jsi.csv")),
        "modes": write_csv(result.modes_frame(), output_path(out_dir, "schmidt_modes.csv")),
        "meta": write_json(meta, output_path(out_dir, "jsi_meta.json")),
    }
    click.echo(f"purity analytic {coeffs.purity:.5f}  svd {result.purity:.5f}  K {result.schmidt_number:.3f}")
    return files, meta


def cmd_purity_scan(config, out_dir, device="cpu"):
    """펌프 폭에 따른 순도 (필터 없이, 해석식과 SVD)."""
    source = config.source
    scan = purity_scan(
        source.fiber,
        source.pump,
        source.channel,
        (config.scan.t_min, config.scan.t_max),
        config.scan.n_steps,
        grid=config.grid,
        mode=config.mode,
        alpha=config.alpha,
        device=device,
    )
    t_best, p_best = scan_argmax(scan)
    t_opt = optimal_pump_width(source.fiber, source.channel, config.alpha)
    summary = _summary_base(config, "purity-scan")
    summary.update(
        {
            "argmax_t_fwhm_ps": s_to_ps(t_best),
            "argmax_purity": p_best,
            "optimal_pump_width_ps": s_to_ps(t_opt),
            "max_abs_difference": float(np.max(np.abs(scan["purity_analytic"] - scan["purity_svd"]))),
        }
    )
    files = {
        "scan": write_csv(scan, output_path(out_dir, "purity_scan.csv")),
        "summary": write_json(summary, output_path(out_dir, "purity_scan_summary.json")),
    }
    click.echo(
        f"scan argmax {s_to_ps(t_best):.2f} ps (purity {p_best:.5f}); "
        f"factorable width {s_to_ps(t_opt):.3f} ps"
    )
    return files, summary


def cmd_hom(config, out_dir, device="cpu", run_mc=False, workers=None, verbose=False):
    """두 소스의 HOM dip, 가시도, 배경 보정, 기대 4중 계수."""
    rho1 = reduced_density(source_jsa(config, config.source), trace_out="idler")
    rho2 = reduced_density(source_jsa(config, config.second_source), trace_out="idler")
    vis = visibility(rho1, rho2)
    curve = dip_curve(rho1, rho2, config.hom.delays)

    scenario = config.scenario
    signal = fourfold_signal_rate(scenario)
    background = background_for_fraction(scenario, config.hom.signal_fraction)
    v_raw = raw_visibility(vis.visibility, signal, background)
    pulses = config.hom.acquisition_time * scenario.pump.rep_rate
    # 기준선(P = ½)에서 signal 이 되도록 2P 를 곱한다
    expected = (2.0 * signal * curve.coincidence_prob + background) * pulses

    summary = _summary_base(config, "hom")
    summary.update(
        {
            "v_net": vis.visibility,
            "purity_1": vis.purity_1,
            "purity_2": vis.purity_2,
            "distance_sq": vis.distance_sq,
            "v_raw": v_raw,
            "signal_fraction": config.hom.signal_fraction,
            "signal_fourfold_per_pulse": signal,
            "background_fourfold_per_pulse": background,
            "acquisition_s": config.hom.acquisition_time,
            "baseline_prob": curve.baseline,
            "dip_fwhm_ps": s_to_ps(dip_fwhm(curve)),
        }
    )
    files = {"dip": write_csv(curve.to_frame(expected), output_path(out_dir, "hom_dip.csv"))}

    if run_mc:
        hom_scenario = replace(scenario, hom_overlap=overlap_function(rho1, rho2), hom_background=background)
        table = mc_run_hom(
            hom_scenario,
            config.hom.delays,
            config.mc.n_pulses,
            config.mc.seed,
            acquisition_time=config.hom.acquisition_time,
            workers=workers or config.mc.workers,
            verbose=verbose,
        )
        try:
            v_mc, err_mc = dip_visibility(table["delay_s"], table["raw_counts"])
        except NumericalError as e:
            logger.warning("Monte Carlo dip visibility unavailable: %s", e)
            v_mc, err_mc = None, None
        summary.update({"mc_seed": config.mc.seed, "mc_n_pulses": config.mc.n_pulses, "mc_v_raw": v_mc, "mc_v_raw_stderr": err_mc})
        files["mc"] = write_csv(table, output_path(out_dir, "hom_mc.csv"))

    files["summary"] = write_json(summary, output_path(out_dir, "hom_summary.json"))
    click.echo(f"v_net {vis.visibility:.4f}  v_raw {v_raw:.4f}  dip FWHM {summary['dip_fwhm_ps']:.2f} ps")
    return files, summary


def cmd_car(config, out_dir):
    """해석적 CAR 곡선 (77 K 와 상온 비교)과 최댓값."""
    scenario = config.scenario
    powers = np.geomspace(config.car.p_min, config.car.p_max, config.car.n_points)
    curve = car_curve(scenario, powers)
    room = car_curve(scenario, powers, temperature_k=ROOM_TEMPERATURE_K)
    curve["car_room_temperature"] = room["car"]
    p_opt, car_max = car_peak(scenario, (config.car.p_min, config.car.p_max))

    summary = _summary_base(config, "car")
    summary.update(
        {
            "peak_p_avg_uw": w_to_uw(p_opt),
            "peak_car": car_max,
            "temperature_k": scenario.fiber.temperature_k,
            "raman_coeff": scenario.raman_s.coeff,
            "dark_rate_hz": scenario.detectors[0].dark_rate,
            "room_temperature_k": ROOM_TEMPERATURE_K,
            "room_temperature_peak_car": float(room["car"].max()),
        }
    )
    files = {
        "curve": write_csv(curve, output_path(out_dir, "car_curve.csv")),
        "summary": write_json(summary, output_path(out_dir, "car_summary.json")),
    }
    click.echo(f"CAR peak {car_max:.1f} at {w_to_uw(p_opt):.2f} uW")
    return files, summary


def cmd_mc(config, out_dir, workers=None, verbose=False):
    """펄스 단위 Monte Carlo CAR 과 해석 모델 비교."""
    scenario = config.scenario
    rows = []
    for p in config.mc.powers:
        result = mc_run_car(
            scenario,
            config.mc.n_pulses,
            config.mc.seed,
            p_avg=p,
            workers=workers or config.mc.workers,
            verbose=verbose,
        )
        row = result.to_row()
        row["car_model"] = car_model(scenario, p).car
        rows.append(row)

    table = pd.DataFrame(rows)
    summary = _summary_base(config, "mc")
    summary.update(
        {
            "seed": config.mc.seed,
            "n_pulses": config.mc.n_pulses,
            "max_abs_z": float(np.max(np.abs((table["car_estimate"] - table["car_model"]) / table["car_stderr"]))),
        }
    )
    files = {
        "results": write_csv(table, output_path(out_dir, "mc_results.csv")),
        "summary": write_json(summary, output_path(out_dir, "mc_summary.json")),
    }
    return files, summary


def _setup_logging(verbose):
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO, format=LOG_FORMAT, stream=sys.stderr, force=True)


def _run(fn, *args, **kwargs):
    # 예외를 종료 코드로 바꾼다: 설정/입력 2, 수치 3
    ctx = click.get_current_context()
    try:
        fn(*args, **kwargs)
    except ValidationError as e:
        click.echo(f"error: {e}", err=True)
        ctx.exit(EXIT_VALIDATION)
    except NumericalError as e:
        click.echo(f"numerical failure: {e}", err=True)
        ctx.exit(EXIT_NUMERICAL)
    except OSError as e:
        click.echo(f"error: cannot write output: {e}", err=True)
        ctx.exit(EXIT_VALIDATION)


def run_options(f):
    options = [
        click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None, help="JSON config (default: built-in 77 K DSF preset)"),
        click.option("--out", "out_dir", type=click.Path(file_okay=False), envvar="SFWM_OUT_DIR", default="results", show_default=True, help="output directory"),
        click.option("--seed", type=int, default=None, help="Monte Carlo seed (overrides mc.seed)"),
        click.option("--mode", type=click.Choice(["sinc", "gauss"]), default=None, help="phase-matching model"),
        click.option("--grid", type=int, default=None, help="grid points per axis (overrides grid.n_points)"),
        click.option("--workers", type=int, default=None, help="Monte Carlo worker threads"),
        click.option("--device", default="cpu", show_default=True, help="torch device for the SVD"),
        click.option("--verbose", is_flag=True, help="debug logging and Monte Carlo progress"),
    ]
    for option in reversed(options):
        f = option(f)
    return f


def _prepare(config_path, seed, mode, grid, workers, device, verbose):
    _setup_logging(verbose)
    config = load_config(config_path, {"seed": seed, "mode": mode, "grid": grid, "workers": workers})
    device = resolve_device(device)
    print_gpu_info(device)
    return config, device


@click.group()
def cli():
    """SFWM photon-pair source simulator."""


@cli.command("jsi")
@run_options
def jsi(config_path, out_dir, seed, mode, grid, workers, device, verbose):
    """joint spectral intensity and Schmidt decomposition"""

    def job():
        config, dev = _prepare(config_path, seed, mode, grid, workers, device, verbose)
        cmd_jsi(config, out_dir, dev)

    _run(job)


@cli.command("purity-scan")
@run_options
def purity_scan_command(config_path, out_dir, seed, mode, grid, workers, device, verbose):
    """heralded purity versus pump width"""

    def job():
        config, dev = _prepare(config_path, seed, mode, grid, workers, device, verbose)
        cmd_purity_scan(config, out_dir, dev)

    _run(job)


@cli.command("hom")
@run_options
@click.option("--mc", "run_mc", is_flag=True, help="also run the four-fold Monte Carlo")
def hom(config_path, out_dir, seed, mode, grid, workers, device, verbose, run_mc):
    """HOM dip between the two heralded sources"""

    def job():
        config, dev = _prepare(config_path, seed, mode, grid, workers, device, verbose)
        cmd_hom(config, out_dir, dev, run_mc=run_mc, workers=workers, verbose=verbose)

    _run(job)


@cli.command("car")
@run_options
def car(config_path, out_dir, seed, mode, grid, workers, device, verbose):
    """analytic CAR versus pump power"""

    def job():
        config, _ = _prepare(config_path, seed, mode, grid, workers, device, verbose)
        cmd_car(config, out_dir)

    _run(job)


@cli.command("mc")
@run_options
def mc(config_path, out_dir, seed, mode, grid, workers, device, verbose):
    """Monte Carlo CAR at the configured powers"""

    def job():
        config, _ = _prepare(config_path, seed, mode, grid, workers, device, verbose)
        cmd_mc(config, out_dir, workers=workers, verbose=verbose)

    _run(job)


if __name__ == "__main__":
    cli()
