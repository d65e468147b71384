# coding: utf-8
import numpy as np
from scipy import constants

from common.errors import ValidationError

# sinc 위상정합을 가우시안으로 근사할 때의 폭 계수
GAUSS_ALPHA = 0.220


def sinc(x):
    # 비정규화 sinc, sin(x)/x. x = 0 에서 1.
    return np.sinc(np.asarray(x) / np.pi)


def pump_envelope_amp(delta_sum, sigma_p):
    """펌프 envelope 진폭 exp[-(Δs+Δi)^2 / σ_p^2].

    제곱하면 세기 exp[-2((ω_s+ω_i-ω_p)/σ_p)^2] 가 된다.
    """
    x = np.asarray(delta_sum) / sigma_p
    return np.exp(-(x**2))


def phase_matching_amp(delta_k, length, mode="sinc", alpha=GAUSS_ALPHA):
    """위상정합 진폭 Γ.

    Parameters
    ----------
    delta_k : 위상 불일치 Δk (1/m)
    length : 광섬유 길이 L (m)
    mode : 'sinc' 혹은 'gauss'
    alpha : gauss 모드의 폭 계수
    """
    dkl = np.asarray(delta_k) * length
    if mode == "sinc":
        return sinc(dkl / 2.0)
    if mode == "gauss":
        return np.exp(-(alpha**2) * dkl**2)
    raise ValidationError(f"unknown phase-matching mode {mode!r}")


def gaussian_transmission(offset, fwhm):
    return np.exp(-4.0 * np.log(2.0) * (np.asarray(offset) / fwhm) ** 2)


def supergaussian_transmission(offset, fwhm, order=3):
    # order 1 이면 gaussian_transmission 과 같다
    x = 2.0 * np.abs(np.asarray(offset)) / fwhm
    return np.exp(-np.log(2.0) * x ** (2 * order))


def rectangular_transmission(offset, fwhm):
    return (np.abs(np.asarray(offset)) <= fwhm / 2.0).astype(float)


def bose_einstein(omega, temperature):
    """포논 점유수 n_th = 1/(exp(ħΩ/k_B T) - 1)."""
    x = constants.hbar * np.asarray(omega) / (constants.k * temperature)
    return 1.0 / np.expm1(x)
