#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
稠密复矩阵的线性代数基础
Hilbert-Schmidt 内积、厄米矩阵的谱分解与函数演算、幂迭代求主特征对、超算子与 Choi 矩阵
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import numpy.typing as npt

from channel_errors import (
    ConvergenceError,
    DimensionMismatchError,
    NotHermitianError,
    NotPositiveError,
    SingularMatrixError,
)
from settings import get_settings

ComplexArray = npt.NDArray[np.complex128]

# 厄米性判定容差：max|A - A†| <= HERMITIAN_TOL * (1 + ‖A‖)
HERMITIAN_TOL = 1e-12


def as_matrix(A) -> ComplexArray:
    """把输入转成 k×k 复矩阵，非方阵时报错"""
    M = np.asarray(A, dtype=np.complex128)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise DimensionMismatchError(f"需要非空方阵，实际形状为 {M.shape}")
    return M


def _same_dim(A: ComplexArray, B: ComplexArray) -> None:
    if A.shape != B.shape:
        raise DimensionMismatchError(f"矩阵维度不匹配: {A.shape} 与 {B.shape}")


def hs_inner(A, B) -> complex:
    """Hilbert-Schmidt 内积 tr(A B†)"""
    A = as_matrix(A)
    B = as_matrix(B)
    _same_dim(A, B)
    return complex(np.vdot(B, A))


def hs_norm(A) -> float:
    """Hilbert-Schmidt 范数"""
    return float(np.sqrt(max(hs_inner(A, A).real, 0.0)))


def is_hermitian(A, tol: float = HERMITIAN_TOL) -> bool:
    A = as_matrix(A)
    return bool(np.max(np.abs(A - A.conj().T)) <= tol * (1.0 + np.linalg.norm(A)))


def _require_hermitian(A: ComplexArray) -> None:
    if not is_hermitian(A):
        deviation = float(np.max(np.abs(A - A.conj().T)))
        raise NotHermitianError(f"矩阵不是厄米矩阵，最大偏差 {deviation:.3e}")


@dataclass
class HermitianEigen:
    """厄米矩阵的谱分解，特征值升序，特征向量按列排列"""
    eigenvalues: npt.NDArray[np.float64]
    eigenvectors: ComplexArray

    def reconstruct(self, values: Optional[np.ndarray] = None) -> ComplexArray:
        """用给定的特征值（默认原特征值）重建矩阵 U diag(values) U†"""
        vals = self.eigenvalues if values is None else values
        U = self.eigenvectors
        return (U * vals) @ U.conj().T

    def to_dict(self) -> dict:
        return {
            "eigenvalues": self.eigenvalues.tolist(),
            "dim": int(self.eigenvectors.shape[0]),
        }


def hermitian_eigen(A) -> HermitianEigen:
    """厄米矩阵的特征分解（LAPACK heevd）"""
    A = as_matrix(A)
    _require_hermitian(A)
    values, vectors = np.linalg.eigh(0.5 * (A + A.conj().T))
    return HermitianEigen(eigenvalues=values, eigenvectors=vectors)


def min_eigenvalue(A) -> float:
    return float(hermitian_eigen(A).eigenvalues[0])


def is_psd(A, tol: Optional[float] = None) -> bool:
    """特征值 >= -tol·(1+‖A‖) 视为半正定"""
    A = as_matrix(A)
    tol = get_settings().psd_tol if tol is None else tol
    return min_eigenvalue(A) >= -tol * (1.0 + np.linalg.norm(A))


def positive_part_split(rho) -> Tuple[ComplexArray, ComplexArray]:
    """把厄米矩阵拆成正部和负部，ρ = ρ₊ − ρ₋ 且 ρ₊ρ₋ = 0"""
    eig = hermitian_eigen(rho)
    positive = np.clip(eig.eigenvalues, 0.0, None)
    negative = np.clip(-eig.eigenvalues, 0.0, None)
    return eig.reconstruct(positive), eig.reconstruct(negative)


def hermitian_sqrt(A, tol: float = 1e-12) -> ComplexArray:
    """半正定矩阵的平方根，微小负特征值截断为 0"""
    A = as_matrix(A)
    eig = hermitian_eigen(A)
    scale = max(np.linalg.norm(A), np.finfo(float).tiny)
    if eig.eigenvalues[0] < -tol * scale:
        raise NotPositiveError(
            f"矩阵不是半正定的，最小特征值 {eig.eigenvalues[0]:.3e}",
            min_eigenvalue=float(eig.eigenvalues[0]),
        )
    return eig.reconstruct(np.sqrt(np.clip(eig.eigenvalues, 0.0, None)))


def hermitian_inv_sqrt(A, tol: float = 1e-10) -> ComplexArray:
    """正定矩阵的逆平方根"""
    A = as_matrix(A)
    eig = hermitian_eigen(A)
    if eig.eigenvalues[0] <= tol * np.linalg.norm(A):
        raise SingularMatrixError(
            f"矩阵奇异或非正定，最小特征值 {eig.eigenvalues[0]:.3e}",
            min_eigenvalue=float(eig.eigenvalues[0]),
        )
    return eig.reconstruct(1.0 / np.sqrt(eig.eigenvalues))


def canonical_phase(x) -> npt.NDArray[np.complex128]:
    """单位化并固定相位：第一个模大于 1e-12 的分量取正实数"""
    v = np.asarray(x, dtype=np.complex128).ravel()
    norm = np.linalg.norm(v)
    if norm == 0.0:
        raise ValueError("零向量没有射影类")
    v = v / norm
    nonzero = np.flatnonzero(np.abs(v) > 1e-12)
    pivot = v[nonzero[0]]
    v = v * (np.conj(pivot) / abs(pivot))
    v[nonzero[0]] = abs(v[nonzero[0]])
    return v


# ---------------------------------------------------------------------------
# 幂迭代
# ---------------------------------------------------------------------------

@dataclass
class EigenPair:
    """主特征对：value 为原矩阵的特征值，gap 在平移后的谱上估计"""
    value: complex
    vector: ComplexArray
    gap: float
    left_vector: Optional[ComplexArray] = None
    iterations: int = 0
    residual: float = 0.0
    shift: float = 0.0

    def to_dict(self) -> dict:
        return {
            "value": [self.value.real, self.value.imag],
            "gap": self.gap,
            "iterations": self.iterations,
            "residual": self.residual,
            "shift": self.shift,
        }


def _power_iterate(M: ComplexArray, x: ComplexArray, tol: float, max_iter: int) -> Tuple[complex, ComplexArray, int, float]:
    scale = max(np.linalg.norm(M), np.finfo(float).tiny)
    x = x / np.linalg.norm(x)
    residual = np.inf
    for iteration in range(1, max_iter + 1):
        y = M @ x
        value = np.vdot(x, y)
        residual = float(np.linalg.norm(y - value * x))
        if residual <= tol * scale:
            return complex(value), x, iteration, residual
        norm_y = np.linalg.norm(y)
        if norm_y == 0.0:
            return 0j, x, iteration, 0.0
        x = y / norm_y
    raise ConvergenceError(
        f"幂迭代 {max_iter} 步未收敛，残差 {residual:.3e}（可能存在等模的外围特征值）",
        iterations=max_iter,
        residual=residual,
    )


def _growth_rate(M: ComplexArray, x: ComplexArray, steps: int = 600) -> float:
    """用 ‖Mⁿx‖ 的几何增长率估计谱半径"""
    x = x / np.linalg.norm(x)
    logs = []
    for _ in range(steps):
        x = M @ x
        norm_x = np.linalg.norm(x)
        if norm_x == 0.0:
            return 0.0
        logs.append(np.log(norm_x))
        x = x / norm_x
    return float(np.exp(np.mean(logs[steps // 2:])))


def dominant_eigenpair(
    M,
    tol: Optional[float] = None,
    max_iter: Optional[int] = None,
    x0: Optional[np.ndarray] = None,
    shift: float = 0.0,
    seed: int = 0,
    left: bool = True,
) -> EigenPair:
    """
    幂迭代求模最大的特征对，并用一次收缩估计谱隙

    在 M + shift·Id 上迭代，返回 M 的特征值。shift > 0 可以把周期外围谱
    λe^{iθ} 与 λ 分开；shift = 0 时旋转这类等模情形会抛出 ConvergenceError。
    """
    M = np.asarray(M, dtype=np.complex128)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatchError(f"需要方阵，实际形状为 {M.shape}")
    settings = get_settings()
    tol = settings.power_tol if tol is None else tol
    max_iter = settings.power_max_iter if max_iter is None else max_iter
    if tol <= 0:
        raise ValueError("tol 必须为正数")

    n = M.shape[0]
    rng = np.random.default_rng(seed)
    if x0 is None:
        x0 = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    x0 = np.asarray(x0, dtype=np.complex128).ravel()

    shifted = M + shift * np.eye(n)
    mu, x, iterations, residual = _power_iterate(shifted, x0, tol, max_iter)

    y = None
    gap = 0.0
    if left:
        _, y, _, _ = _power_iterate(shifted.conj().T, x0, tol, max_iter)
        overlap = np.vdot(y, x)
        if abs(overlap) > 1e-14:
            deflated = shifted - mu * np.outer(x, y.conj()) / overlap
            start = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            try:
                second, _, _, _ = _power_iterate(deflated, start, 1e-10, min(max_iter, 20000))
                second_modulus = abs(second)
            except ConvergenceError:
                second_modulus = _growth_rate(deflated, start)
            gap = max(abs(mu) - second_modulus, 0.0)

    return EigenPair(
        value=complex(mu - shift),
        vector=x,
        gap=float(gap),
        left_vector=y,
        iterations=iterations,
        residual=residual,
        shift=shift,
    )


def dense_spectrum(M) -> ComplexArray:
    """稠密特征值求解（LAPACK Hessenberg + 位移 QR），作为测试的对照"""
    return np.linalg.eigvals(np.asarray(M, dtype=np.complex128))


# ---------------------------------------------------------------------------
# 超算子与 Choi 矩阵
# ---------------------------------------------------------------------------

def superoperator_from_kraus(weights, operators) -> ComplexArray:
    """行优先向量化下 φ(ρ) = Σ w K ρ K† 的矩阵 Σ w K ⊗ conj(K)"""
    ops = np.asarray(operators, dtype=np.complex128)
    w = np.asarray(weights, dtype=float)
    if ops.ndim != 3 or ops.shape[1] != ops.shape[2]:
        raise DimensionMismatchError(f"Kraus 算子需要 (m, k, k) 形状，实际 {ops.shape}")
    if w.shape != (ops.shape[0],):
        raise DimensionMismatchError("权重个数与 Kraus 算子个数不一致")
    k = ops.shape[1]
    S = np.einsum("m,mac,mbd->abcd", w, ops, ops.conj())
    return S.reshape(k * k, k * k)


def choi_from_superoperator(S) -> ComplexArray:
    """Σ_ij E_ij ⊗ φ(E_ij)"""
    S = np.asarray(S, dtype=np.complex128)
    k = int(round(np.sqrt(S.shape[0])))
    if S.shape != (k * k, k * k):
        raise DimensionMismatchError(f"超算子形状 {S.shape} 不是 k²×k²")
    return S.reshape(k, k, k, k).transpose(2, 0, 3, 1).reshape(k * k, k * k)


def choi_matrix(family) -> ComplexArray:
    """Kraus 族对应信道的 Choi 矩阵，半正定当且仅当完全正"""
    if family.size == 0:
        raise ValueError("Kraus 族为空")
    return choi_from_superoperator(superoperator_from_kraus(family.weights, family.operators))


def transpose_superoperator(k: int) -> ComplexArray:
    """转置映射 X ↦ Xᵀ 的超算子（正但非完全正）"""
    S = np.zeros((k, k, k, k), dtype=np.complex128)
    for a in range(k):
        for b in range(k):
            S[a, b, b, a] = 1.0
    return S.reshape(k * k, k * k)


def unvec(x, k: int) -> ComplexArray:
    return np.asarray(x, dtype=np.complex128).reshape(k, k)
