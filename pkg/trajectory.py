#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
射影空间上的马尔可夫动力学
核 Π_L 的一步转移、精确推前、蒙特卡罗模拟、Feller 算子、重心、量子轨迹与柱集词概率

随机数：每条链使用 PCG64，种子为 SeedSequence(entropy=seed, spawn_key=(chain,))；
原子按逆 CDF 抽取，每步消耗一个 rng.random()。
"""

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import scipy.sparse
import scipy.sparse.csgraph
import scipy.spatial

from channel_errors import ChannelError, NonStochasticError
from linalg_core import canonical_phase
from logging_config import get_logger
from quantum_channel import Channel
from settings import get_settings

logger = get_logger(__name__)

# 推前与抽样时忽略的原子质量
MASS_TOL = 1e-14

# 随机信道一步推前的总质量与 1 的允许偏差
MASS_DEFECT_TOL = 1e-9

# 射影距离小于该值的点合并
MERGE_TOL = 1e-10

SUPPORT_CAP = 10 ** 4


def proj_distance(x, y) -> float:
    """d(x̂, ŷ) = (1 − |⟨x, y⟩|²)^{1/2}，x、y 为单位代表元"""
    x = np.asarray(x, dtype=np.complex128)
    y = np.asarray(y, dtype=np.complex128)
    overlap = abs(np.vdot(x, y)) ** 2 / (np.vdot(x, x).real * np.vdot(y, y).real)
    return float(np.sqrt(max(0.0, 1.0 - overlap)))


def canonical_rows(X: np.ndarray) -> np.ndarray:
    """逐行单位化并固定相位（第一个模大于 1e-12 的分量取正实数）"""
    X = np.asarray(X, dtype=np.complex128)
    X = X / np.linalg.norm(X, axis=1, keepdims=True)
    pivot_index = np.argmax(np.abs(X) > 1e-12, axis=1)
    pivot = X[np.arange(X.shape[0]), pivot_index]
    X = X * (np.conj(pivot) / np.abs(pivot))[:, None]
    X[np.arange(X.shape[0]), pivot_index] = np.abs(X[np.arange(X.shape[0]), pivot_index])
    return X


@dataclass(frozen=True, eq=False)
class ProjectivePoint:
    """射影点 x̂，保存规范相位的单位代表元"""
    vector: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "vector", canonical_phase(self.vector))

    @property
    def dim(self) -> int:
        return int(self.vector.shape[0])

    def projector(self) -> np.ndarray:
        return np.outer(self.vector, self.vector.conj())

    def distance(self, other: "ProjectivePoint") -> float:
        return proj_distance(self.vector, other.vector)


def _cluster_labels(points: np.ndarray, tol: float) -> Tuple[int, np.ndarray]:
    """先按舍入坐标去重，再用 KD 树找出距离不超过 tol 的代表点对并取连通分量"""
    n = points.shape[0]
    if n <= 1:
        return n, np.zeros(n, dtype=int)
    embedded = np.hstack([points.real, points.imag])
    _, first, inverse = np.unique(np.round(embedded, 12), axis=0, return_index=True, return_inverse=True)
    inverse = np.asarray(inverse).reshape(-1)
    representatives = embedded[first]
    r = representatives.shape[0]
    pairs = scipy.spatial.cKDTree(representatives).query_pairs(r=tol, output_type="ndarray")
    if pairs.size == 0:
        return r, inverse
    graph = scipy.sparse.coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(r, r))
    count, labels = scipy.sparse.csgraph.connected_components(graph, directed=False)
    return count, labels[inverse]


@dataclass
class EmpiricalMeasure:
    """射影空间上的有限支撑概率测度 Σ ω_j δ_{x̂_j}"""
    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        points = np.atleast_2d(np.asarray(self.points, dtype=np.complex128))
        weights = np.asarray(self.weights, dtype=float)
        if points.shape[0] != weights.shape[0]:
            raise ValueError("点数与权重个数不一致")
        if np.any(weights < 0):
            raise ValueError("经验测度的权重必须非负")
        total = weights.sum()
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"经验测度的权重和必须为 1，实际 {total:.12g}")
        self.points = canonical_rows(points)
        self.weights = weights / total

    @classmethod
    def dirac(cls, x) -> "EmpiricalMeasure":
        return cls(points=np.asarray(x, dtype=np.complex128)[None, :], weights=np.ones(1))

    @classmethod
    def uniform(cls, points) -> "EmpiricalMeasure":
        points = np.atleast_2d(np.asarray(points, dtype=np.complex128))
        return cls(points=points, weights=np.full(points.shape[0], 1.0 / points.shape[0]))

    @property
    def size(self) -> int:
        return int(self.points.shape[0])

    @property
    def dim(self) -> int:
        return int(self.points.shape[1])

    def merged(self, tol: float = MERGE_TOL) -> "EmpiricalMeasure":
        """合并射影距离小于 tol 的点，保留每簇第一个代表元"""
        count, labels = _cluster_labels(self.points, tol)
        if count == self.size:
            return self
        weights = np.bincount(labels, weights=self.weights, minlength=count)
        _, first = np.unique(labels, return_index=True)
        return EmpiricalMeasure(points=self.points[first], weights=weights)

    def mass_near(self, x, radius: float = 1e-6) -> float:
        """距 x̂ 不超过 radius 的质量"""
        x = np.asarray(x, dtype=np.complex128)
        x = x / np.linalg.norm(x)
        overlaps = np.abs(self.points @ x.conj()) ** 2
        distances = np.sqrt(np.clip(1.0 - overlaps, 0.0, None))
        return float(self.weights[distances <= radius].sum())

    def expectation(self, f: Callable[[np.ndarray], complex]) -> complex:
        return complex(sum(w * f(x) for x, w in zip(self.points, self.weights)))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "points": {"re": self.points.real.tolist(), "im": self.points.imag.tolist()},
            "weights": self.weights.tolist(),
        }


@dataclass
class TrajectoryConfig:
    """模拟配置"""
    n_steps: int
    burn_in: int = 0
    n_chains: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.n_steps < 1 or self.n_chains < 1 or self.burn_in < 0:
            raise ValueError("n_steps、n_chains 必须为正整数，burn_in 不能为负")
        if self.burn_in >= self.n_steps:
            raise ValueError(f"burn_in ({self.burn_in}) 必须小于 n_steps ({self.n_steps})")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed 必须是 64 位无符号整数")

    def to_dict(self) -> Dict[str, Any]:
        return {"n_steps": self.n_steps, "burn_in": self.burn_in, "n_chains": self.n_chains, "seed": self.seed}


def chain_rng(seed: int, chain: int = 0) -> np.random.Generator:
    """第 chain 条链的独立随机数流"""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy=seed, spawn_key=(chain,))))


def _draw(masses: np.ndarray, rng: np.random.Generator) -> int:
    """按质量逆 CDF 抽取原子下标"""
    masses = np.where(masses < MASS_TOL, 0.0, masses)
    cdf = np.cumsum(masses)
    index = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    return min(index, masses.shape[0] - 1)


def kernel_step(channel: Channel, x, rng: np.random.Generator) -> Tuple[np.ndarray, int]:
    """Π_L 的一步：以概率 w_i‖K_i x‖² 选原子 i，跳到 K_i·x̂"""
    x = np.asarray(x, dtype=np.complex128)
    images = channel.operators @ x
    masses = channel.weights * np.sum(np.abs(images) ** 2, axis=1)
    total = float(masses.sum())
    if abs(total - 1.0) > 1e-6:
        raise NonStochasticError(f"转移质量 {total:.9f} 偏离 1，信道不是随机的", residual=abs(total - 1.0))
    index = _draw(masses, rng)
    return canonical_phase(images[index]), index


def kernel_path(channel: Channel, x0, n_steps: int, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """X_1..X_n 与对应的原子下标"""
    x = canonical_phase(x0)
    points = np.empty((n_steps, x.shape[0]), dtype=np.complex128)
    indices = np.empty(n_steps, dtype=np.int64)
    for step in range(n_steps):
        x, indices[step] = kernel_step(channel, x, rng)
        points[step] = x
    return points, indices


def markov_operator_apply(nu: EmpiricalMeasure, channel: Channel, merge_tol: float = MERGE_TOL) -> EmpiricalMeasure:
    """
    精确推前 νΠ_L：每个 (x̂, ω) 与原子 i 生成 (K_i·x̂, ω·w_i·‖K_i x‖²)

    总质量偏离 1 超过 MASS_DEFECT_TOL 时记录警告，结果仍按保留的质量归一。
    """
    images = np.einsum("mab,nb->nma", channel.operators, nu.points)
    masses = nu.weights[:, None] * channel.weights[None, :] * np.sum(np.abs(images) ** 2, axis=2)
    total = float(masses.sum())
    if abs(1.0 - total) > MASS_DEFECT_TOL:
        logger.warning("pushforward_mass_defect", total=total, defect=1.0 - total)
    keep = masses > MASS_TOL
    discarded = float(masses[~keep].sum())
    if discarded > 0:
        logger.info("pushforward_discarded_mass", discarded=discarded)
    kept_masses = masses[keep]
    if kept_masses.size == 0:
        raise ChannelError("推前后没有剩余质量")
    return EmpiricalMeasure(points=images[keep], weights=kept_masses / kept_masses.sum()).merged(merge_tol)


def total_variation(first: EmpiricalMeasure, second: EmpiricalMeasure, tol: float = MERGE_TOL) -> float:
    """两个有限支撑测度的全变差距离，距离小于 tol 的点视为同一点"""
    points = np.vstack([first.points, second.points])
    count, labels = _cluster_labels(points, tol)
    signed = np.concatenate([first.weights, -second.weights])
    return float(0.5 * np.abs(np.bincount(labels, weights=signed, minlength=count)).sum())


def invariant_measure_pushforward(
    channel: Channel,
    nu0: EmpiricalMeasure,
    tol: float = 1e-10,
    max_iter: int = 10000,
    support_cap: int = SUPPORT_CAP,
) -> Optional[EmpiricalMeasure]:
    """
    迭代精确推前直到全变差变化小于 tol

    支撑超过 support_cap 或迭代用尽时返回 None，由调用方改用蒙特卡罗。
    """
    nu = nu0
    for iteration in range(1, max_iter + 1):
        pushed = markov_operator_apply(nu, channel)
        if pushed.size > support_cap:
            logger.info("pushforward_support_cap", size=pushed.size, iteration=iteration)
            return None
        if total_variation(nu, pushed) < tol:
            return pushed
        nu = pushed
    logger.info("pushforward_not_converged", iterations=max_iter)
    return None


def feller_apply(f: Callable[[np.ndarray], complex], x, channel: Channel) -> complex:
    """Uf(x̂) = Σ w_i f(K_i·x̂)‖K_i x‖²，f 接收规范代表元"""
    x = np.asarray(x, dtype=np.complex128)
    x = x / np.linalg.norm(x)
    images = channel.operators @ x
    masses = channel.weights * np.sum(np.abs(images) ** 2, axis=1)
    total = 0j
    for image, mass in zip(images, masses):
        if mass > MASS_TOL:
            total += mass * f(canonical_phase(image))
    return complex(total)


def barycenter(nu: EmpiricalMeasure) -> np.ndarray:
    """Σ ω_j |x_j⟩⟨x_j|"""
    return np.einsum("n,na,nb->ab", nu.weights, nu.points, nu.points.conj())


# ---------------------------------------------------------------------------
# 蒙特卡罗模拟
# ---------------------------------------------------------------------------

@dataclass
class SimulationResult:
    """模拟结果：各链路径、烧入后的经验测度与诊断"""
    config: TrajectoryConfig
    paths: List[np.ndarray]
    indices: List[np.ndarray]
    empirical: EmpiricalMeasure
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    @property
    def barycenter(self) -> np.ndarray:
        return barycenter(self.empirical)

    def frame(self) -> pd.DataFrame:
        """每行一个 (step, chain, atom, 坐标) 记录，用于 CSV 输出"""
        frames = []
        for chain, (path, atoms) in enumerate(zip(self.paths, self.indices)):
            data = {"step": np.arange(1, path.shape[0] + 1), "chain": chain, "atom": atoms}
            for a in range(path.shape[1]):
                data[f"re_{a}"] = path[:, a].real
                data[f"im_{a}"] = path[:, a].imag
            frames.append(pd.DataFrame(data))
        return pd.concat(frames, ignore_index=True)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "config": self.config.to_dict(),
            "empirical": self.empirical.to_dict(),
            "diagnostics": self.diagnostics,
        }


def _run_chain(channel: Channel, x0, config: TrajectoryConfig, chain: int):
    return kernel_path(channel, x0, config.n_steps, chain_rng(config.seed, chain))


def simulate(channel: Channel, x0, config: TrajectoryConfig) -> SimulationResult:
    """n_chains 条独立链并行模拟，烧入后的状态等权汇总成经验测度"""
    check = channel.is_stochastic(1e-6)
    if not check:
        raise NonStochasticError(f"模拟要求随机信道，残差 {check.residual:.3e}", residual=check.residual)

    workers = min(get_settings().threads, config.n_chains)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        runs = list(pool.map(lambda chain: _run_chain(channel, x0, config, chain), range(config.n_chains)))

    paths = [points for points, _ in runs]
    indices = [atoms for _, atoms in runs]
    kept = [path[config.burn_in:] for path in paths]
    pooled = np.vstack(kept)
    empirical = EmpiricalMeasure.uniform(pooled).merged()

    chain_barycenters = [barycenter(EmpiricalMeasure.uniform(states)) for states in kept]
    pooled_barycenter = barycenter(empirical)
    spread = max(float(np.linalg.norm(b - pooled_barycenter)) for b in chain_barycenters)
    diagnostics = {
        "samples": int(pooled.shape[0]),
        "support": empirical.size,
        "chain_barycenters": [{"re": b.real.tolist(), "im": b.imag.tolist()} for b in chain_barycenters],
        "barycenter_spread": spread,
    }
    logger.info("simulation_done", chains=config.n_chains, samples=int(pooled.shape[0]), support=empirical.size)
    return SimulationResult(config=config, paths=paths, indices=indices, empirical=empirical, diagnostics=diagnostics)


def write_trajectory_csv(result: SimulationResult, path: str) -> None:
    """便捷函数：把各链路径写成 CSV"""
    result.frame().to_csv(path, index=False)


# ---------------------------------------------------------------------------
# 量子轨迹与柱集概率
# ---------------------------------------------------------------------------

def quantum_trajectory(channel: Channel, rho0, config: TrajectoryConfig, chain: int = 0) -> List[np.ndarray]:
    """
    ρ_n = K_i ρ_{n−1} K_i† / tr(K_i ρ_{n−1} K_i†)，原子 i 的概率为 w_i·tr(K_i ρ_{n−1} K_i†)

    返回 [ρ_0, ρ_1, …, ρ_n]，n = config.n_steps。随机流取 chain_rng(config.seed, chain)，
    与 simulate 的第 chain 条链相同，纯态起点下两者逐步耦合。
    """
    rng = chain_rng(config.seed, chain)
    rho = np.asarray(rho0, dtype=np.complex128)
    K = channel.operators
    states = [rho]
    for _ in range(config.n_steps):
        images = K @ rho @ K.conj().transpose(0, 2, 1)
        masses = channel.weights * np.real(np.trace(images, axis1=1, axis2=2))
        if masses.sum() < 1e-12:
            raise ChannelError("所有原子的质量之和小于 1e-12，密度矩阵与 Kraus 族退化")
        index = _draw(masses, rng)
        image = images[index]
        rho = image / np.trace(image).real
        rho = 0.5 * (rho + rho.conj().T)
        states.append(rho)
    return states


def word_probability(channel: Channel, rho, word: Sequence[int]) -> float:
    """(Π_t w_{i_t})·tr(W ρ W†)，W = K_{i_n}···K_{i_1}"""
    rho = np.asarray(rho, dtype=np.complex128)
    W = np.eye(channel.dim, dtype=np.complex128)
    weight = 1.0
    for index in word:
        W = channel.operators[index] @ W
        weight *= channel.weights[index]
    return float(weight * np.trace(W @ rho @ W.conj().T).real)


def word_probability_total(channel: Channel, rho, n: int) -> float:
    """长度为 n 的全部词的概率之和（逐词枚举）"""
    return float(sum(word_probability(channel, rho, word)
                     for word in itertools.product(range(channel.family.size), repeat=n)))
