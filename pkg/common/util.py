# coding: utf-8
import hashlib
import json
import os
import tempfile

import numpy as np
from scipy import constants

from common.errors import NumericalError

TWO_PI = 2.0 * np.pi
# transform-limited 가우시안 펄스의 FWHM·σ_p 곱
FWHM_SIGMA_PRODUCT = 2.0 * np.sqrt(2.0 * np.log(2.0))
# 가우시안 펄스 첨두 출력 계수 P_peak = 0.939 E / t_fwhm
GAUSS_PEAK_FACTOR = 0.939


# 단위 변환. 내부 계산은 모두 SI (rad/s, s, m, W).
def thz_to_rad(f_thz):
    return TWO_PI * f_thz * 1e12


def ghz_to_rad(f_ghz):
    return TWO_PI * f_ghz * 1e9


def hz_to_rad(f_hz):
    return TWO_PI * f_hz


def rad_to_ghz(omega):
    return omega / TWO_PI / 1e9


def nm_to_rad(wavelength_nm):
    return TWO_PI * constants.c / (wavelength_nm * 1e-9)


def rad_to_nm(omega):
    return TWO_PI * constants.c / omega * 1e9


def ps_to_s(t_ps):
    return t_ps * 1e-12


def s_to_ps(t_s):
    return t_s * 1e12


def uw_to_w(p_uw):
    return p_uw * 1e-6


def w_to_uw(p_w):
    return p_w * 1e6


def detuning_axis(n_points, half_range):
    """[-h, h] 균등 격자. n 이 짝수라 0 은 표본에 없다."""
    return np.linspace(-half_range, half_range, n_points)


def frobenius_normalize(values):
    norm = np.linalg.norm(values)
    if not np.isfinite(norm) or norm == 0.0:
        raise NumericalError("cannot normalize an all-zero or non-finite matrix")
    return values / norm, norm


def edge_fraction(values, width=2):
    # 바깥쪽 width 개 행/열에 들어 있는 |f|^2 비율
    weights = np.abs(values) ** 2
    total = weights.sum()
    inner = weights[width:-width, width:-width].sum()
    return float((total - inner) / total)


def canonical_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def content_hash(obj):
    """git blob 방식(sha1 of 'blob <len>\\0' + data)의 설정 해시."""
    data = canonical_json(obj).encode("utf-8")
    header = f"blob {len(data)}\0".encode("ascii")
    return hashlib.sha1(header + data).hexdigest()


def atomic_write_text(path, text):
    # 같은 디렉터리에 임시 파일을 쓰고 rename 한다
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise
