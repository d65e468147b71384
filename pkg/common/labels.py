import math

# CSV 열 이름. 내부 열 -> (CSV 헤더, 곱할 계수). 헤더 접미사가 단위다.
LABEL = {
    "delta_s_rad_per_s": ("delta_s_ghz", 1e-9 / (2.0 * math.pi)),
    "delta_i_rad_per_s": ("delta_i_ghz", 1e-9 / (2.0 * math.pi)),
    "intensity": ("intensity_norm", 1.0),
    "t_fwhm_s": ("t_fwhm_ps", 1e12),
    "purity_analytic": ("purity_analytic", 1.0),
    "purity_svd": ("purity_svd", 1.0),
    "delay_s": ("delay_ps", 1e12),
    "coincidence_prob": ("coincidence_prob", 1.0),
    "expected_counts": ("expected_counts", 1.0),
    "fourfold_counts": ("fourfold_counts", 1.0),
    "stderr": ("stderr_counts", 1.0),
    "raw_counts": ("raw_counts", 1.0),
    "p_avg": ("p_avg_uw", 1e6),
    "p_avg_w": ("p_avg_uw", 1e6),
    "car": ("car", 1.0),
    "true_coinc_per_pulse": ("true_coinc_per_pulse", 1.0),
    "accidental_per_pulse": ("accidental_per_pulse", 1.0),
    "singles_s": ("singles_s_per_pulse", 1.0),
    "singles_i": ("singles_i_per_pulse", 1.0),
    "mu": ("mu_per_pulse", 1.0),
    "raman_s": ("raman_s_per_pulse", 1.0),
    "raman_i": ("raman_i_per_pulse", 1.0),
    "temperature_k": ("temperature_k", 1.0),
    "car_estimate": ("car_estimate", 1.0),
    "car_stderr": ("car_stderr", 1.0),
    "car_model": ("car_model", 1.0),
    # Monte Carlo 원시 계수 (전체 펄스 합)
    "n_pulses": ("n_pulses", 1.0),
    "pairs": ("pairs_counts", 1.0),
    "singles_s_counts": ("singles_s_counts", 1.0),
    "singles_i_counts": ("singles_i_counts", 1.0),
    "singles_s_before_dead_time": ("singles_s_before_dead_time_counts", 1.0),
    "singles_i_before_dead_time": ("singles_i_before_dead_time_counts", 1.0),
    "coincidences": ("coincidences_counts", 1.0),
    "accidentals": ("accidentals_counts", 1.0),
    "n_offsets": ("n_accidental_offsets", 1.0),
}
