#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
量子信道 φ_L
信道与对偶的作用、随机性检查、Perron-Frobenius 谱数据 (λ, ρ, σ)、归一化、不可约性判定与时间平均
"""

import threading
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np

from channel_errors import (
    ConvergenceError,
    DimensionMismatchError,
    NonStochasticError,
    NotNormalizableError,
    NotPositiveError,
)
from linalg_core import (
    as_matrix,
    dense_spectrum,
    dominant_eigenpair,
    hermitian_eigen,
    hermitian_inv_sqrt,
    hermitian_sqrt,
    hs_norm,
    superoperator_from_kraus,
    unvec,
)
from logging_config import get_logger
from measure import KrausFamily

logger = get_logger(__name__)

# 谱隙相对 λ 低于该值时不断言特征值简单
SIMPLE_GAP_TOL = 1e-8

# 不可约判定中特征矩阵最小特征值的下限
POSITIVE_EIG_TOL = 1e-9

# 对称化后特征矩阵允许的负特征值（相对）
EIGENMATRIX_NEG_TOL = 1e-8


class Verdict(Enum):
    """不可约性判定结果"""
    IRREDUCIBLE = "irreducible"
    REDUCIBLE = "reducible"
    UNDETERMINED = "undetermined"


@dataclass
class StochasticityCheck:
    """随机性检查：residual = ‖φ*(Id) − Id‖"""
    stochastic: bool
    residual: float
    tol: float

    def __bool__(self) -> bool:
        return self.stochastic

    def to_dict(self) -> Dict[str, Any]:
        return {"stochastic": self.stochastic, "residual": self.residual, "tol": self.tol}


@dataclass
class SpectralData:
    """谱半径 λ、右特征密度 ρ（迹 1）、左特征矩阵 σ（tr(σρ) = 1）"""
    lam: float
    rho: np.ndarray
    sigma: np.ndarray
    simple: bool
    gap: float
    iterations: int = 0
    residual: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "lambda": self.lam,
            "rho": matrix_to_lists(self.rho),
            "sigma": matrix_to_lists(self.sigma),
            "simple": self.simple,
            "gap": self.gap,
            "iterations": self.iterations,
            "residual": self.residual,
        }


@dataclass
class TimeAverage:
    """(1/N) Σ φⁿ(ρ₀) 以及它到 ρ_L 的距离"""
    average: np.ndarray
    steps: int
    distance: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return {"average": matrix_to_lists(self.average), "steps": self.steps, "distance": self.distance}


@dataclass
class IrreducibilityReport:
    """不可约性判定与证据"""
    verdict: Verdict
    evidence: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {"verdict": self.verdict.value, "evidence": self.evidence}


def matrix_to_lists(A: np.ndarray) -> Dict[str, List[List[float]]]:
    A = np.asarray(A, dtype=np.complex128)
    return {"re": A.real.tolist(), "im": A.imag.tolist()}


def _fix_phase(R: np.ndarray) -> np.ndarray:
    """去掉幂迭代带来的全局相位，使迹为正实数"""
    trace = np.trace(R)
    if abs(trace) > 1e-14:
        return R * (np.conj(trace) / abs(trace))
    pivot = R.flat[np.argmax(np.abs(R))]
    return R * (np.conj(pivot) / abs(pivot))


def _to_psd(R: np.ndarray, name: str) -> np.ndarray:
    """对称化、定相位并截断微小负特征值"""
    R = _fix_phase(R)
    R = 0.5 * (R + R.conj().T)
    eig = hermitian_eigen(R)
    scale = max(float(np.max(np.abs(eig.eigenvalues))), np.finfo(float).tiny)
    if eig.eigenvalues[0] < -EIGENMATRIX_NEG_TOL * scale:
        raise NotPositiveError(
            f"{name} 对称化后不是半正定的（最小特征值 {eig.eigenvalues[0]:.3e}），信道可能可约或数值失败",
            min_eigenvalue=float(eig.eigenvalues[0]),
        )
    return eig.reconstruct(np.clip(eig.eigenvalues, 0.0, None))


class Channel:
    """
    由 Kraus 族给出的信道 φ(ρ) = Σ w K ρ K†

    构造时立即计算超算子，之后实例不可变，可在多个线程间共享。
    """

    def __init__(self, family: KrausFamily):
        if family.size == 0:
            raise ValueError("Kraus 族为空")
        self.family = family
        self.dim = family.dim
        self.superoperator = superoperator_from_kraus(family.weights, family.operators)
        self._spectral: Optional[SpectralData] = None
        self._lock = threading.Lock()

    @classmethod
    def from_operators(cls, operators, weights=None) -> "Channel":
        return cls(KrausFamily.from_operators(operators, weights))

    @property
    def weights(self) -> np.ndarray:
        return self.family.weights

    @property
    def operators(self) -> np.ndarray:
        return self.family.operators

    def _check(self, rho) -> np.ndarray:
        rho = as_matrix(rho)
        if rho.shape != (self.dim, self.dim):
            raise DimensionMismatchError(f"输入维度 {rho.shape} 与信道维度 {self.dim} 不一致")
        return rho

    def apply(self, rho) -> np.ndarray:
        """φ(ρ) = Σ w K ρ K†"""
        rho = self._check(rho)
        K = self.operators
        return np.einsum("m,mab,bc,mdc->ad", self.weights, K, rho, K.conj(), optimize=True)

    def apply_dual(self, X) -> np.ndarray:
        """φ*(X) = Σ w K† X K"""
        X = self._check(X)
        K = self.operators
        return np.einsum("m,mba,bc,mcd->ad", self.weights, K.conj(), X, K, optimize=True)

    def apply_super(self, rho) -> np.ndarray:
        """用缓存的超算子作用一次"""
        rho = self._check(rho)
        return unvec(self.superoperator @ rho.ravel(), self.dim)

    def iterate(self, rho, n: int) -> np.ndarray:
        """φⁿ(ρ)，逐步作用超算子"""
        x = self._check(rho).ravel()
        for _ in range(n):
            x = self.superoperator @ x
        return unvec(x, self.dim)

    def is_stochastic(self, tol: float = 1e-9) -> StochasticityCheck:
        residual = hs_norm(self.apply_dual(np.eye(self.dim)) - np.eye(self.dim))
        return StochasticityCheck(stochastic=residual <= tol, residual=residual, tol=tol)

    def spectral_data(self) -> SpectralData:
        """谱数据，首次计算后缓存"""
        with self._lock:
            if self._spectral is None:
                self._spectral = self._compute_spectral_data()
            return self._spectral

    def _compute_spectral_data(self) -> SpectralData:
        k = self.dim
        S = self.superoperator
        start = (np.eye(k) / k).ravel()
        # λ <= ‖φ*(Id)‖，平移把 λe^{iθ} 与 λ 分开
        shift = 0.5 * float(np.linalg.norm(self.apply_dual(np.eye(k)), 2))

        try:
            pair = dominant_eigenpair(S, x0=start, shift=shift)
            lam_complex, right, left = pair.value, pair.vector, pair.left_vector
            gap, iterations, residual = pair.gap, pair.iterations, pair.residual
        except ConvergenceError as error:
            logger.warning("power_iteration_not_converged", iterations=error.iterations, residual=error.residual)
            values, vectors = np.linalg.eig(S)
            index = int(np.argmax(values.real))
            left_values, left_vectors = np.linalg.eig(S.conj().T)
            left_index = int(np.argmax(left_values.real))
            lam_complex, right, left = values[index], vectors[:, index], left_vectors[:, left_index]
            gap, iterations, residual = 0.0, error.iterations, error.residual

        if abs(lam_complex.imag) > 1e-8 * max(abs(lam_complex), 1.0):
            logger.warning("perron_value_not_real", imag=float(lam_complex.imag))
        lam = float(lam_complex.real)

        rho = _to_psd(unvec(right, k), "ρ_L")
        rho = rho / np.trace(rho).real
        sigma = _to_psd(unvec(left, k), "σ_L")
        pairing = float(np.trace(sigma @ rho).real)
        simple = gap > SIMPLE_GAP_TOL * max(abs(lam), np.finfo(float).tiny)
        if pairing > 1e-14:
            sigma = sigma / pairing
        else:
            logger.warning("sigma_rho_orthogonal", pairing=pairing)
            sigma = sigma / np.trace(sigma).real
            simple = False

        if not simple:
            logger.info("simplicity_not_established", gap=gap, lam=lam)

        return SpectralData(
            lam=lam,
            rho=rho,
            sigma=sigma,
            simple=bool(simple),
            gap=float(gap),
            iterations=iterations,
            residual=residual,
        )

    def normalize(self) -> "Channel":
        """K̂ = λ^{-1/2} σ^{1/2} K σ^{-1/2}"""
        data = self.spectral_data()
        min_sigma = float(hermitian_eigen(data.sigma).eigenvalues[0])
        if min_sigma <= 1e-10 or data.lam <= 0:
            raise NotNormalizableError(
                f"σ_L 数值奇异（最小特征值 {min_sigma:.3e}），无法归一化",
                min_eigenvalue=min_sigma,
            )
        root = hermitian_sqrt(data.sigma)
        inv_root = hermitian_inv_sqrt(data.sigma)
        operators = (root @ self.operators @ inv_root) / np.sqrt(data.lam)
        return Channel(self.family.with_operators(operators))

    def time_average(self, rho0, steps: int) -> TimeAverage:
        """(1/N) Σ_{n=1..N} φⁿ(ρ₀)"""
        check = self.is_stochastic()
        if not check:
            raise NonStochasticError(f"时间平均要求随机信道，残差 {check.residual:.3e}", residual=check.residual)
        rho0 = self._check(rho0)
        if abs(np.trace(rho0) - 1.0) > 1e-10:
            raise ValueError("初始状态必须是迹为 1 的密度矩阵")
        x = rho0.ravel()
        total = np.zeros_like(x)
        for _ in range(steps):
            x = self.superoperator @ x
            total += x
        average = unvec(total / steps, self.dim)

        distance = None
        try:
            distance = hs_norm(average - self.spectral_data().rho)
        except (NotPositiveError, ConvergenceError) as error:
            logger.warning("time_average_without_reference", error=str(error))
        return TimeAverage(average=average, steps=steps, distance=distance)

    def to_dict(self) -> Dict[str, Any]:
        return {"family": self.family.to_dict(), "stochastic": self.is_stochastic().to_dict()}


def spectral_radius_oracle(channel: Channel) -> float:
    """稠密特征值求解得到的谱半径"""
    return float(np.max(np.abs(dense_spectrum(channel.superoperator))))


def _rank_one(x: np.ndarray) -> np.ndarray:
    return np.outer(x, x.conj())


def _failing_pair(channel: Channel, A: np.ndarray, B: np.ndarray) -> bool:
    """对所有 n ∈ {1..k−1} 都有 tr[B φⁿ(A)] <= 1e-12"""
    current = A
    for _ in range(1, max(channel.dim, 2)):
        current = channel.apply_super(current)
        if np.trace(B @ current).real > 1e-12:
            return False
    return True


def irreducibility_report(channel: Channel, n_pairs: int = 50, seed: int = 0) -> IrreducibilityReport:
    """
    不可约性判定

    主判据：λ 简单且 ρ_L、σ_L 的最小特征值都大于 1e-9。
    主判据不成立时用秩一正矩阵对做探测，只有找到确证的不变子空间才判为可约。
    """
    from generic import invariant_subspace_search
    from random_ensembles import random_unit_vector

    evidence: Dict[str, Any] = {}
    try:
        data = channel.spectral_data()
        min_rho = float(hermitian_eigen(data.rho).eigenvalues[0])
        min_sigma = float(hermitian_eigen(data.sigma).eigenvalues[0])
        evidence.update(
            {"lambda": data.lam, "simple": data.simple, "gap": data.gap, "min_eig_rho": min_rho, "min_eig_sigma": min_sigma}
        )
        if data.simple and min_rho > POSITIVE_EIG_TOL and min_sigma > POSITIVE_EIG_TOL:
            evidence["test"] = "spectral"
            return IrreducibilityReport(Verdict.IRREDUCIBLE, evidence)
    except (NotPositiveError, ConvergenceError) as error:
        evidence["spectral_error"] = str(error)

    k = channel.dim
    rng = np.random.default_rng(seed)
    pairs = [(_rank_one(random_unit_vector(k, rng)), _rank_one(random_unit_vector(k, rng))) for _ in range(n_pairs)]

    subspaces = invariant_subspace_search(channel.family)
    for subspace in subspaces:
        basis = subspace.basis
        complement = subspace.complement()
        if complement.shape[1] == 0:
            continue
        pairs.append((_rank_one(basis[:, 0]), _rank_one(complement[:, 0])))

    failing = sum(1 for A, B in pairs if _failing_pair(channel, A, B))
    evidence.update(
        {
            "test": "probe",
            "pairs": len(pairs),
            "failing_pairs": failing,
            "invariant_subspaces": [subspace.to_dict() for subspace in subspaces],
        }
    )
    if failing and subspaces:
        return IrreducibilityReport(Verdict.REDUCIBLE, evidence)
    return IrreducibilityReport(Verdict.UNDETERMINED, evidence)
