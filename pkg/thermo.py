#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
热力学形式
转移核 P_L、信道熵 h_μ(L)、势函数 U_H、压力 P(H) = log λ_H、Gibbs 极大化信道与 Gibbs 条件
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
import scipy.stats

from channel_errors import ChannelError, MeasureMismatchError, NonStochasticError, ZeroAtomError
from logging_config import get_logger
from measure import KrausFamily, LMapSpec, build_family, check_column_stochastic
from quantum_channel import Channel, SpectralData
from settings import get_settings

logger = get_logger(__name__)

# 源权重低于该值的行视为死行（0·log 0 = 0）
DEAD_ROW_TOL = 1e-14

# 熵双重求和按行分块的大小
ENTROPY_CHUNK = 512


@dataclass
class TransitionKernel:
    """
    原子间转移核

    entries[i, j] = tr(K_j K_i ρ K_i† K_j†) / tr(K_i ρ K_i†)；
    stationary[i] = tr(K_i ρ K_i†)，source[i] = w_i·stationary[i]。
    """
    entries: np.ndarray
    weights: np.ndarray
    stationary: np.ndarray
    alive: np.ndarray

    @property
    def source(self) -> np.ndarray:
        return self.weights * self.stationary

    @property
    def size(self) -> int:
        return int(self.entries.shape[0])

    def row_sums(self) -> np.ndarray:
        """μ 加权行和 Σ_j w_j P(i, j)"""
        return self.entries @ self.weights

    def summary(self) -> Dict[str, Any]:
        sums = self.row_sums()[self.alive]
        return {
            "atoms": self.size,
            "dead_rows": int(np.count_nonzero(~self.alive)),
            "source_total": float(self.source.sum()),
            "row_sum_deviation": float(np.max(np.abs(sums - 1.0))) if sums.size else 0.0,
            "min_entry": float(self.entries.min()),
            "max_entry": float(self.entries.max()),
        }


@dataclass
class PotentialData:
    """H 信道的谱数据与每个原子上的势 U_H(v_i) = log tr(σ_H H(v_i) ρ_H H(v_i)†)"""
    spectral: SpectralData
    potential: np.ndarray
    weights: np.ndarray

    @property
    def lam(self) -> float:
        return self.spectral.lam

    @property
    def gibbs_weights(self) -> np.ndarray:
        """q(v) = e^{U(v)}/λ_H，满足 Σ w q = 1"""
        return np.exp(self.potential) / self.lam

    def to_dict(self) -> Dict[str, Any]:
        return {
            "lambda": self.lam,
            "potential": self.potential.tolist(),
            "weights": self.weights.tolist(),
            "normalization": float(np.sum(self.weights * np.exp(self.potential))),
        }


@dataclass
class GibbsCheck:
    """Gibbs 条件检查结果"""
    passed: bool
    deviation: float
    tol: float
    reason: Optional[str] = None

    def __bool__(self) -> bool:
        return self.passed

    def to_dict(self) -> Dict[str, Any]:
        return {"passed": self.passed, "deviation": self.deviation, "tol": self.tol, "reason": self.reason}


@dataclass
class HillClimbResult:
    best_value: float
    family: KrausFamily
    history: List[float] = field(default_factory=list)


def _as_channel(channel_or_family) -> Channel:
    if isinstance(channel_or_family, Channel):
        return channel_or_family
    return Channel(channel_or_family)


def _require_stochastic(channel: Channel, tol: float) -> None:
    check = channel.is_stochastic(tol)
    if not check:
        raise NonStochasticError(
            f"熵与转移核只对随机信道有定义，‖φ*(Id) − Id‖ = {check.residual:.3e}，请先归一化",
            residual=check.residual,
        )


def _stationary_density(channel: Channel, rho: Optional[np.ndarray]) -> np.ndarray:
    if rho is not None:
        return np.asarray(rho, dtype=np.complex128)
    data = channel.spectral_data()
    if not data.simple:
        logger.warning("entropy_with_non_simple_eigenvalue", gap=data.gap)
    return data.rho


def _atom_images(channel: Channel, rho: np.ndarray):
    K = channel.operators
    images = K @ rho @ K.conj().transpose(0, 2, 1)
    stationary = np.real(np.trace(images, axis1=1, axis2=2))
    grams = K.conj().transpose(0, 2, 1) @ K
    return images, stationary, grams


def transition_kernel(channel, rho: Optional[np.ndarray] = None, stochastic_tol: float = 1e-6) -> TransitionKernel:
    """在 ρ_L（或给定的 ρ）上计算全部原子间的转移核"""
    channel = _as_channel(channel)
    _require_stochastic(channel, stochastic_tol)
    rho = _stationary_density(channel, rho)
    images, stationary, grams = _atom_images(channel, rho)

    alive = stationary > DEAD_ROW_TOL
    numerators = np.real(np.einsum("jab,iba->ij", grams, images, optimize=True))
    entries = np.zeros_like(numerators)
    entries[alive] = numerators[alive] / stationary[alive, None]
    np.clip(entries, 0.0, None, out=entries)
    return TransitionKernel(entries=entries, weights=channel.weights.copy(), stationary=stationary, alive=alive)


def _entropy_rows(grams, images, stationary, weights, rows) -> float:
    alive = rows[stationary[rows] > DEAD_ROW_TOL]
    if alive.size == 0:
        return 0.0
    numerators = np.real(np.einsum("jab,iba->ij", grams, images[alive], optimize=True))
    kernel = numerators / stationary[alive, None]
    positive = kernel > 0
    logs = np.zeros_like(kernel)
    logs[positive] = np.log(kernel[positive])
    inner = (kernel * logs) @ weights
    return float(-np.sum(weights[alive] * stationary[alive] * inner))


def entropy(channel, rho: Optional[np.ndarray] = None, stochastic_tol: float = 1e-6) -> float:
    """
    h = −Σ_i Σ_j w_i w_j q_i P(i,j) log P(i,j)，q_i = tr(K_i ρ_L K_i†)，自然对数

    双重求和按行分块，块之间并行。
    """
    channel = _as_channel(channel)
    _require_stochastic(channel, stochastic_tol)
    rho = _stationary_density(channel, rho)
    images, stationary, grams = _atom_images(channel, rho)
    weights = channel.weights

    chunks = [np.arange(start, min(start + ENTROPY_CHUNK, channel.family.size))
              for start in range(0, channel.family.size, ENTROPY_CHUNK)]
    if len(chunks) == 1:
        return _entropy_rows(grams, images, stationary, weights, chunks[0])
    with ThreadPoolExecutor(max_workers=get_settings().threads) as pool:
        parts = list(pool.map(lambda rows: _entropy_rows(grams, images, stationary, weights, rows), chunks))
    return float(sum(parts))


def entropy_from_kernel(kernel: TransitionKernel) -> float:
    """由已算好的转移核重新计算熵"""
    P = kernel.entries
    positive = P > 0
    logs = np.zeros_like(P)
    logs[positive] = np.log(P[positive])
    inner = (P * logs) @ kernel.weights
    return float(-np.sum(np.where(kernel.alive, kernel.source * inner, 0.0)))


# ---------------------------------------------------------------------------
# 势函数与压力
# ---------------------------------------------------------------------------

def _require_all_atoms(family: KrausFamily) -> None:
    if family.size < family.measure.size:
        missing = sorted(set(range(family.measure.size)) - set(family.indices.tolist()))
        raise ZeroAtomError(f"H 在原子 {missing[0]} 处为零，势函数无定义", atom_index=missing[0])


def potential_data(H_family: KrausFamily) -> PotentialData:
    """U_H(v_i) = log tr(σ_H H(v_i) ρ_H H(v_i)†)"""
    _require_all_atoms(H_family)
    channel = Channel(H_family)
    data = channel.spectral_data()
    if not data.simple:
        logger.warning("potential_with_non_simple_eigenvalue", gap=data.gap)
    K = H_family.operators
    traces = np.real(np.einsum("ab,mbc,cd,mad->m", data.sigma, K, data.rho, K.conj(), optimize=True))
    nonpositive = np.flatnonzero(traces <= 0)
    if nonpositive.size:
        index = int(H_family.indices[nonpositive[0]])
        raise ZeroAtomError(f"原子 {index} 处 tr(σ H ρ H†) = {traces[nonpositive[0]]:.3e}，势函数无定义", atom_index=index)
    return PotentialData(spectral=data, potential=np.log(traces), weights=H_family.weights.copy())


def pressure(H_family: KrausFamily) -> float:
    """P(H) = log λ_H"""
    lam = Channel(H_family).spectral_data().lam
    if lam <= 0:
        raise ChannelError(f"谱半径 {lam:.3e} 不为正，压力无定义")
    return float(np.log(lam))


def _require_same_measure(L_family: KrausFamily, H_family: KrausFamily) -> None:
    if not L_family.measure.same_atoms(H_family.measure):
        raise MeasureMismatchError("L 与 H 必须共享同一先验测度的原子")


def pressure_functional(L_family: KrausFamily, H_family: KrausFamily, potential: Optional[PotentialData] = None) -> float:
    """h_μ(L) + Σ_i w_i U_H(v_i)·tr(K_i ρ_L K_i†)"""
    _require_same_measure(L_family, H_family)
    potential = potential_data(H_family) if potential is None else potential
    channel = Channel(L_family)
    rho = _stationary_density(channel, None)
    h = entropy(channel, rho=rho)
    _, stationary, _ = _atom_images(channel, rho)
    U = potential.potential[L_family.indices]
    return float(h + np.sum(L_family.weights * U * stationary))


def shift_matrices(k: int):
    """P|i+1⟩ = |i⟩ 的循环移位和 Q = diag(1, …, 1, −1)"""
    P = np.zeros((k, k), dtype=np.complex128)
    for i in range(k):
        P[i, (i + 1) % k] = 1.0
    Q = np.eye(k, dtype=np.complex128)
    Q[-1, -1] = -1.0
    return P, Q


def gibbs_maximizer(H_family: KrausFamily, special_atom_index: Optional[int] = None) -> KrausFamily:
    """
    达到压力上确界的信道

    L(v) = φ(v)·Q（特殊原子）或 φ(v)·P（其余原子），φ(v) = sqrt(tr(σ_H H(v) ρ_H H(v)†)/λ_H)。
    缺省的特殊原子取 φ 最大的那个。
    """
    potential = potential_data(H_family)
    phi = np.sqrt(potential.gibbs_weights)
    if np.count_nonzero(phi > 0) < 2:
        raise ChannelError("至少需要两个 φ(v) ≠ 0 的原子，单原子测度下 H 不可能不可约")
    if special_atom_index is None:
        special_atom_index = int(np.argmax(phi))
    P, Q = shift_matrices(H_family.dim)
    return build_family(H_family.measure, LMapSpec.scaled_shift(phi, special_atom_index, P, Q))


def _kernel_on_measure(L_family: KrausFamily) -> TransitionKernel:
    return transition_kernel(Channel(L_family))


def gibbs_condition_check(L_family: KrausFamily, H_family: KrausFamily, tol: float = 1e-8) -> GibbsCheck:
    """max_{i,j: q_i>0} |P_L(i,j) − tr(σ_H H(v_j) ρ_H H(v_j)†)/λ_H| <= tol"""
    if not L_family.measure.same_atoms(H_family.measure):
        return GibbsCheck(False, float("inf"), tol, reason="measure mismatch")
    kernel = _kernel_on_measure(L_family)
    target = potential_data(H_family).gibbs_weights

    size = L_family.measure.size
    full = np.zeros((int(np.count_nonzero(kernel.alive)), size))
    full[:, L_family.indices] = kernel.entries[kernel.alive]
    deviation = float(np.max(np.abs(full - target[None, :]))) if full.size else 0.0
    return GibbsCheck(deviation <= tol, deviation, tol)


def gibbs_inequality_check(p, q, weights) -> float:
    """−Σ w p log p + Σ w p log q，不大于 0，等号当且仅当 p = q"""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    w = np.asarray(weights, dtype=float)
    if not (p.shape == q.shape == w.shape):
        raise ValueError("p、q 与权重的长度必须一致")
    for name, values in (("p", p), ("q", q)):
        total = float(np.sum(w * values))
        if abs(total - 1.0) > 1e-9 or np.any(values < 0):
            raise ValueError(f"{name} 未按 μ 归一化：Σ w·{name} = {total:.12g}")
    support = (p > 0) & (w > 0)
    if np.any(q[support] <= 0):
        return float("-inf")
    value = float(np.sum(w[support] * p[support] * np.log(q[support] / p[support])))
    return value


def variational_hill_climb(
    H_family: KrausFamily,
    start: Optional[KrausFamily] = None,
    steps: int = 200,
    step_size: float = 0.1,
    rng: Optional[np.random.Generator] = None,
) -> HillClimbResult:
    """
    随机爬山搜索压力泛函，仅作对照：随机扰动 Kraus 算子并重新归一化

    不会超过 log λ_H。
    """
    from random_ensembles import random_complex_matrix, random_table_family, stochastic_operators

    rng = np.random.default_rng(0) if rng is None else rng
    potential = potential_data(H_family)
    current = random_table_family(H_family.measure, rng) if start is None else start
    best = pressure_functional(current, H_family, potential)
    history = [best]
    for _ in range(steps):
        noise = random_complex_matrix(current.dim, rng, size=current.size)
        operators = stochastic_operators(current.operators + step_size * noise, current.weights)
        candidate = current.with_operators(operators)
        try:
            value = pressure_functional(candidate, H_family, potential)
        except ChannelError:
            continue
        if value > best:
            current, best = candidate, value
        history.append(best)
    return HillClimbResult(best_value=best, family=current, history=history)


# ---------------------------------------------------------------------------
# 经典马尔可夫链
# ---------------------------------------------------------------------------

def markov_stationary(P) -> np.ndarray:
    """列随机矩阵的平稳分布：解 (P − I)π = 0，Σπ = 1"""
    P = check_column_stochastic(P)
    d = P.shape[0]
    system = np.vstack([P - np.eye(d), np.ones((1, d))])
    rhs = np.zeros(d + 1)
    rhs[-1] = 1.0
    pi, *_ = np.linalg.lstsq(system, rhs, rcond=None)
    return pi


def markov_entropy_rate(P) -> float:
    """−Σ_j π_j Σ_i p_ij log p_ij"""
    P = check_column_stochastic(P)
    pi = markov_stationary(P)
    return float(sum(pi[j] * scipy.stats.entropy(P[:, j]) for j in range(P.shape[0])))
