# coding: utf-8
"""Schmidt 분해(SVD), 순도, 헤럴드된 광자의 축약 밀도행렬."""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
import torch

from common.errors import NumericalError, ValidationError
from common.functions import GAUSS_ALPHA
from models.fiber import GridSpec, sigma_from_fwhm
from models.jsa import apply_filters, build_jsa, coeffs_for_sigma, gvm_differences

logger = logging.getLogger(__name__)

# 이보다 작은 Schmidt 가중치는 버린다
WEIGHT_CUTOFF = 1e-12


@dataclass(frozen=True)
class SchmidtResult:
    """Schmidt 분해 결과.

    weights : g_n (내림차순, 합 1)
    singular_values : s_n, Σ s_n² = 1 (정규화된 JSA 기준)
    signal_modes, idler_modes : 이산 정규직교 모드 (행 = 모드)
    purity : p = Σ g_n²
    schmidt_number : K = 1/p
    """

    weights: np.ndarray
    singular_values: np.ndarray
    signal_modes: np.ndarray
    idler_modes: np.ndarray
    axis_s: np.ndarray
    axis_i: np.ndarray
    purity: float
    schmidt_number: float
    metadata: dict = field(default_factory=dict)

    def reconstruct(self):
        # Σ s_n ψ_n ⊗ φ_n
        return np.einsum("n,nj,nk->jk", self.singular_values, self.signal_modes, self.idler_modes)

    def continuum_modes(self):
        """1/sqrt(Δω) 로 스케일한 모드 함수 (연속 정규직교 근사)."""
        step_s = self.axis_s[1] - self.axis_s[0]
        step_i = self.axis_i[1] - self.axis_i[0]
        return self.signal_modes / math.sqrt(step_s), self.idler_modes / math.sqrt(step_i)

    def summary(self, n_weights=10):
        return {
            "purity": self.purity,
            "schmidt_number": self.schmidt_number,
            "n_modes": int(len(self.weights)),
            "weights": [float(w) for w in self.weights[:n_weights]],
        }

    def modes_frame(self, n_modes=4):
        psi, phi = self.continuum_modes()
        columns = {"delta_s_rad_per_s": self.axis_s, "delta_i_rad_per_s": self.axis_i}
        for n in range(min(n_modes, len(self.weights))):
            columns[f"psi_{n}_re"] = psi[n].real
            columns[f"psi_{n}_im"] = psi[n].imag
            columns[f"phi_{n}_re"] = phi[n].real
            columns[f"phi_{n}_im"] = phi[n].imag
        return pd.DataFrame(columns)


@dataclass(frozen=True)
class DensityMatrix:
    """한 주파수 축 위의 밀도행렬. center 는 채널 중심 (rad/s, 없으면 0)."""

    values: np.ndarray
    axis: np.ndarray
    center: float = 0.0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        axis = np.asarray(self.axis, dtype=float)
        n = len(axis)
        if values.shape != (n, n):
            raise ValidationError(f"density matrix shape {values.shape} does not match axis ({n})")
        if not np.allclose(values, values.conj().T, rtol=0, atol=1e-10):
            raise ValidationError("density matrix is not Hermitian")
        trace = np.trace(values).real
        if abs(trace - 1.0) > 1e-10:
            raise ValidationError(f"density matrix trace {trace:.12f} != 1")
        smallest = np.linalg.eigvalsh(values).min()
        if smallest < -1e-8:
            raise ValidationError(f"density matrix not positive semidefinite (min eigenvalue {smallest:.3e})")
        values.setflags(write=False)
        axis.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "axis", axis)

    @property
    def purity(self):
        return float(np.real(np.trace(self.values @ self.values)))

    @property
    def step(self):
        return float(self.axis[1] - self.axis[0])


def _check_jsa(jsa):
    if not np.all(np.isfinite(jsa.values)):
        raise NumericalError("JSA contains non-finite entries")
    norm = np.linalg.norm(jsa.values)
    if norm == 0.0:
        raise NumericalError("JSA is identically zero")
    return jsa.values / norm


def schmidt_decompose(jsa, cutoff=WEIGHT_CUTOFF, device="cpu"):
    """JSA 행렬의 SVD 로 Schmidt 분해를 구한다.

    Parameters
    ----------
    jsa : JsaGrid
    cutoff : 이 값보다 작은 가중치는 결과에서 뺀다 (0 이면 모두 유지)
    device : SVD 를 돌릴 torch device
    """
    values = _check_jsa(jsa)

    tensor = torch.from_numpy(np.ascontiguousarray(values, dtype=np.complex128)).to(device)
    U, S, Vh = torch.linalg.svd(tensor, full_matrices=False)
    s = S.cpu().numpy()
    U = U.cpu().numpy()
    Vh = Vh.cpu().numpy()

    total = np.sum(s**2)
    weights_all = s**2 / total
    purity = float(np.sum(weights_all**2))

    keep = weights_all > cutoff
    dropped = float(weights_all[~keep].sum())
    if dropped > 0:
        logger.debug("dropped %d Schmidt weights (total %.2e)", int((~keep).sum()), dropped)
    weights = weights_all[keep] / weights_all[keep].sum()

    return SchmidtResult(
        weights=weights,
        singular_values=s[keep] / math.sqrt(total),
        signal_modes=U[:, keep].T,
        idler_modes=Vh[keep, :],
        axis_s=np.asarray(jsa.axis_s),
        axis_i=np.asarray(jsa.axis_i),
        purity=purity,
        schmidt_number=1.0 / purity,
        metadata={"dropped_weight": dropped, "device": str(device)},
    )


def purity_gauss_analytic(coeffs):
    """가우시안 JSA 의 닫힌 형태 순도 p = sqrt(1 - C²/(AB))."""
    if not coeffs.A * coeffs.B - coeffs.C**2 > 0:
        raise ValidationError("non-normalizable Gaussian coefficients")
    return coeffs.purity


def symmetric_purity(t_fwhm, t_opt):
    # 대칭 GVM 에서 p = 2√r/(1+r), r = (T*/T)²
    r = (t_opt / t_fwhm) ** 2
    return 2.0 * math.sqrt(r) / (1.0 + r)


def reduced_density(jsa, trace_out="idler"):
    """헤럴드된 광자의 축약 밀도행렬.

    trace_out='idler' 이면 ρ_s = F F†, 'signal' 이면 ρ_i = Fᵀ F*.
    """
    values = _check_jsa(jsa)
    if trace_out == "idler":
        rho = values @ values.conj().T
        axis = jsa.axis_s
        center = jsa.channel.omega_s0 if jsa.channel is not None else 0.0
    elif trace_out == "signal":
        rho = values.T @ values.conj()
        axis = jsa.axis_i
        center = jsa.channel.omega_i0 if jsa.channel is not None else 0.0
    else:
        raise ValidationError(f"trace_out must be 'signal' or 'idler', got {trace_out!r}")
    rho = rho / np.trace(rho).real
    # 반올림으로 생기는 비에르미트 성분 제거
    rho = 0.5 * (rho + rho.conj().T)
    return DensityMatrix(values=rho, axis=np.asarray(axis), center=center)


def purity_scan(
    fiber,
    pump,
    channel,
    width_range,
    n_steps,
    grid=None,
    mode="gauss",
    alpha=GAUSS_ALPHA,
    filters=None,
    device="cpu",
):
    """펌프 폭에 따른 순도 (해석식과 SVD 두 열).

    Returns
    -------
    pandas.DataFrame : t_fwhm_s, purity_analytic, purity_svd
    """
    t_lo, t_hi = width_range
    if not (0 < t_lo < t_hi):
        raise ValidationError(f"invalid width range [{t_lo}, {t_hi}]")
    if n_steps < 3:
        raise ValidationError(f"purity scan needs n_steps >= 3, got {n_steps}")
    grid = grid if grid is not None else GridSpec()
    gvm_s, gvm_i = gvm_differences(fiber, channel)
    f_s, f_i = filters if filters is not None else (None, None)

    rows = []
    for t in np.linspace(t_lo, t_hi, n_steps):
        coeffs = coeffs_for_sigma(sigma_from_fwhm(t), fiber.length_m, gvm_s, gvm_i, alpha)
        jsa = build_jsa(fiber, pump.with_width(t), channel, grid, mode, alpha)
        if f_s is not None or f_i is not None:
            jsa = apply_filters(jsa, f_s, f_i)
        result = schmidt_decompose(jsa, device=device)
        rows.append((t, purity_gauss_analytic(coeffs), result.purity))
        logger.debug("t_fwhm=%.3e s purity analytic=%.5f svd=%.5f", *rows[-1])

    return pd.DataFrame(rows, columns=["t_fwhm_s", "purity_analytic", "purity_svd"])


def scan_argmax(scan, column="purity_analytic"):
    idx = int(np.argmax(scan[column].to_numpy()))
    return float(scan["t_fwhm_s"].iloc[idx]), float(scan[column].iloc[idx])
