#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
先验测度与 Kraus 族
把先验测度 μ 表示成有限个带权原子，把矩阵映射 L 作用在原子上得到 Kraus 族 {(w_i, K_i = L(v_i))}
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
import numpy.typing as npt

from channel_errors import ChannelError, DimensionMismatchError, NonStochasticError, TruncationError
from linalg_core import hermitian_inv_sqrt, hs_norm
from logging_config import get_logger
from settings import get_settings

logger = get_logger(__name__)

# w‖K‖² 低于该值的原子被剪除
ZERO_ATOM_TOL = 1e-15

# 高斯例子的径向截断半径，R 之外密度低于 1e-31
GAUSSIAN_RADIUS = 12.0


@dataclass(frozen=True, eq=False)
class MatrixAtom:
    """μ 的一个原子 w·δ_v"""
    point: np.ndarray
    weight: float

    def __post_init__(self):
        point = np.asarray(self.point, dtype=np.complex128)
        if point.ndim != 2 or point.shape[0] != point.shape[1]:
            raise DimensionMismatchError(f"原子必须是方阵，实际形状 {point.shape}")
        if not self.weight > 0:
            raise ValueError(f"原子权重必须为正，实际 {self.weight}")
        object.__setattr__(self, "point", point)
        object.__setattr__(self, "weight", float(self.weight))


@dataclass(frozen=True, eq=False)
class PriorMeasure:
    """有限原子测度 μ = Σ w_i δ_{v_i}，质量不做归一化"""
    atoms: Tuple[MatrixAtom, ...]

    def __post_init__(self):
        atoms = tuple(self.atoms)
        if not atoms:
            raise ValueError("先验测度至少需要一个原子")
        dim = atoms[0].point.shape[0]
        for index, atom in enumerate(atoms):
            if atom.point.shape != (dim, dim):
                raise DimensionMismatchError(f"第 {index} 个原子维度 {atom.point.shape} 与 {dim} 不一致")
        object.__setattr__(self, "atoms", atoms)

    @classmethod
    def from_arrays(cls, weights, points) -> "PriorMeasure":
        points = np.asarray(points, dtype=np.complex128)
        return cls(tuple(MatrixAtom(p, w) for w, p in zip(np.asarray(weights, dtype=float), points)))

    @property
    def dim(self) -> int:
        return int(self.atoms[0].point.shape[0])

    @property
    def size(self) -> int:
        return len(self.atoms)

    @property
    def mass(self) -> float:
        return float(sum(atom.weight for atom in self.atoms))

    @property
    def weights(self) -> npt.NDArray[np.float64]:
        return np.array([atom.weight for atom in self.atoms])

    @property
    def points(self) -> npt.NDArray[np.complex128]:
        return np.stack([atom.point for atom in self.atoms])

    def same_atoms(self, other: "PriorMeasure", tol: float = 1e-12) -> bool:
        """两个测度是否由相同的原子组成（位置与权重逐一比较）"""
        if self is other:
            return True
        if self.size != other.size or self.dim != other.dim:
            return False
        return bool(
            np.allclose(self.weights, other.weights, rtol=0, atol=tol)
            and np.allclose(self.points, other.points, rtol=0, atol=tol)
        )


class LMapKind(Enum):
    """矩阵映射 L 的种类"""
    IDENTITY = "identity"
    CONJUGATION = "conjugation"
    TABLE = "table"
    SCALED_SHIFT = "scaled_shift"


@dataclass(frozen=True, eq=False)
class LMapSpec:
    """矩阵映射 L 的描述"""
    kind: LMapKind
    unitary: Optional[np.ndarray] = None
    table: Optional[np.ndarray] = None
    scales: Optional[np.ndarray] = None
    special_index: Optional[int] = None
    shift: Optional[np.ndarray] = None
    flip: Optional[np.ndarray] = None

    @classmethod
    def identity(cls) -> "LMapSpec":
        return cls(LMapKind.IDENTITY)

    @classmethod
    def conjugation(cls, unitary) -> "LMapSpec":
        U = np.asarray(unitary, dtype=np.complex128)
        if U.ndim != 2 or U.shape[0] != U.shape[1]:
            raise DimensionMismatchError(f"酉矩阵必须是方阵，实际形状 {U.shape}")
        deviation = float(np.linalg.norm(U @ U.conj().T - np.eye(U.shape[0])))
        if deviation > 1e-10:
            raise ChannelError(f"共轭映射需要酉矩阵，‖UU† − Id‖ = {deviation:.3e}")
        return cls(LMapKind.CONJUGATION, unitary=U)

    @classmethod
    def from_table(cls, operators) -> "LMapSpec":
        ops = np.asarray(operators, dtype=np.complex128)
        if ops.ndim != 3 or ops.shape[1] != ops.shape[2]:
            raise DimensionMismatchError(f"算子表需要 (m, k, k) 形状，实际 {ops.shape}")
        return cls(LMapKind.TABLE, table=ops)

    @classmethod
    def scaled_shift(cls, scales, special_index: int, shift, flip) -> "LMapSpec":
        """K_i = s_i·Q（i 为特殊原子），否则 K_i = s_i·P"""
        return cls(
            LMapKind.SCALED_SHIFT,
            scales=np.asarray(scales, dtype=float),
            special_index=int(special_index),
            shift=np.asarray(shift, dtype=np.complex128),
            flip=np.asarray(flip, dtype=np.complex128),
        )

    def operator_dim(self) -> Optional[int]:
        if self.kind == LMapKind.CONJUGATION:
            return int(self.unitary.shape[0])
        if self.kind == LMapKind.TABLE:
            return int(self.table.shape[1])
        if self.kind == LMapKind.SCALED_SHIFT:
            return int(self.shift.shape[0])
        return None

    def apply(self, index: int, point: np.ndarray) -> np.ndarray:
        """计算第 index 个原子处的 L(v)"""
        if self.kind == LMapKind.IDENTITY:
            return point
        if self.kind == LMapKind.CONJUGATION:
            return self.unitary @ point @ self.unitary.conj().T
        if self.kind == LMapKind.TABLE:
            return self.table[index]
        base = self.flip if index == self.special_index else self.shift
        return self.scales[index] * base

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind.value, "operator_dim": self.operator_dim()}


@dataclass(frozen=True, eq=False)
class KrausFamily:
    """
    带权 Kraus 族

    weights/operators 只保留非零原子，indices 记录它们在 measure 中的位置；
    measure 与 lmap 记录来源。
    """
    weights: npt.NDArray[np.float64]
    operators: npt.NDArray[np.complex128]
    measure: PriorMeasure
    lmap: LMapSpec
    indices: npt.NDArray[np.int64] = field(default=None)

    def __post_init__(self):
        ops = np.asarray(self.operators, dtype=np.complex128)
        weights = np.asarray(self.weights, dtype=float)
        if ops.ndim != 3 or ops.shape[1] != ops.shape[2]:
            raise DimensionMismatchError(f"Kraus 算子需要 (m, k, k) 形状，实际 {ops.shape}")
        if weights.shape != (ops.shape[0],):
            raise DimensionMismatchError("权重个数与 Kraus 算子个数不一致")
        indices = np.arange(ops.shape[0]) if self.indices is None else np.asarray(self.indices, dtype=np.int64)
        object.__setattr__(self, "operators", ops)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "indices", indices)

    @classmethod
    def from_operators(cls, operators, weights=None) -> "KrausFamily":
        """直接由算子表构造：μ 的原子取算子本身，L 为恒等映射"""
        ops = np.asarray(operators, dtype=np.complex128)
        if ops.ndim == 2:
            ops = ops[None]
        w = np.ones(ops.shape[0]) if weights is None else np.asarray(weights, dtype=float)
        measure = PriorMeasure.from_arrays(w, ops)
        return build_family(measure, LMapSpec.identity())

    @property
    def dim(self) -> int:
        return int(self.operators.shape[1]) if self.size else self.measure.dim

    @property
    def size(self) -> int:
        return int(self.operators.shape[0])

    @property
    def mass(self) -> float:
        """先验测度的质量（包括被剪除的零原子）"""
        return self.measure.mass

    @property
    def points(self) -> npt.NDArray[np.complex128]:
        return self.measure.points[self.indices]

    @property
    def square_integrability(self) -> float:
        """Σ w_i ‖K_i‖²"""
        return float(np.sum(self.weights * np.sum(np.abs(self.operators) ** 2, axis=(1, 2))))

    def kraus_sum(self) -> np.ndarray:
        """Σ w K†K"""
        return np.einsum("m,mba,mbc->ac", self.weights, self.operators.conj(), self.operators)

    def scaled(self, c: complex) -> "KrausFamily":
        """所有算子乘以 c"""
        return self.with_operators(c * self.operators)

    def with_operators(self, operators) -> "KrausFamily":
        """保持原子与权重不变，替换算子（L 变成算子表）"""
        ops = np.asarray(operators, dtype=np.complex128)
        if ops.shape != self.operators.shape:
            raise DimensionMismatchError(f"新算子形状 {ops.shape} 与原来的 {self.operators.shape} 不一致")
        table = np.zeros((self.measure.size,) + ops.shape[1:], dtype=np.complex128)
        table[self.indices] = ops
        return KrausFamily(
            weights=self.weights,
            operators=ops,
            measure=self.measure,
            lmap=LMapSpec.from_table(table),
            indices=self.indices,
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "dim": self.dim,
            "size": self.size,
            "measure_atoms": self.measure.size,
            "measure_mass": self.mass,
            "square_integrability": self.square_integrability,
            "lmap": self.lmap.to_dict(),
        }


def build_family(mu: PriorMeasure, L: LMapSpec, prune: bool = True) -> KrausFamily:
    """由 (μ, L) 构造 Kraus 族，pairs[i] = (w_i, L(v_i))"""
    operator_dim = L.operator_dim()
    if operator_dim is not None and L.kind == LMapKind.CONJUGATION and operator_dim != mu.dim:
        raise DimensionMismatchError(f"酉矩阵维度 {operator_dim} 与测度维度 {mu.dim} 不一致")
    if L.kind == LMapKind.TABLE and L.table.shape[0] != mu.size:
        raise DimensionMismatchError(f"算子表长度 {L.table.shape[0]} 与原子个数 {mu.size} 不一致")
    if L.kind == LMapKind.SCALED_SHIFT and L.scales.shape[0] != mu.size:
        raise DimensionMismatchError(f"系数个数 {L.scales.shape[0]} 与原子个数 {mu.size} 不一致")

    operators = np.stack([L.apply(i, atom.point) for i, atom in enumerate(mu.atoms)])
    weights = mu.weights
    indices = np.arange(mu.size)

    if prune:
        contribution = weights * np.sum(np.abs(operators) ** 2, axis=(1, 2))
        keep = contribution >= ZERO_ATOM_TOL
        if not np.all(keep):
            logger.warning(
                "pruned_zero_atoms",
                pruned=int(np.count_nonzero(~keep)),
                indices=np.flatnonzero(~keep).tolist()[:20],
            )
            operators, weights, indices = operators[keep], weights[keep], indices[keep]
        if operators.shape[0] == 0:
            raise ChannelError("所有原子的 Kraus 算子都为零")

    return KrausFamily(weights=weights, operators=operators, measure=mu, lmap=L, indices=indices)


def prune_zero_atoms(family: KrausFamily) -> KrausFamily:
    """剪除 w‖K‖² < 1e-15 的原子"""
    contribution = family.weights * np.sum(np.abs(family.operators) ** 2, axis=(1, 2))
    keep = contribution >= ZERO_ATOM_TOL
    if np.all(keep):
        return family
    logger.warning("pruned_zero_atoms", pruned=int(np.count_nonzero(~keep)))
    return KrausFamily(
        weights=family.weights[keep],
        operators=family.operators[keep],
        measure=family.measure,
        lmap=family.lmap,
        indices=family.indices[keep],
    )


# ---------------------------------------------------------------------------
# 具名构造
# ---------------------------------------------------------------------------

def check_column_stochastic(P, tol: float = 1e-12) -> np.ndarray:
    """检查列随机矩阵：元素非负，每列和为 1"""
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise DimensionMismatchError(f"转移矩阵必须是方阵，实际形状 {P.shape}")
    if np.any(P < 0):
        raise NonStochasticError("转移矩阵存在负元素")
    residual = float(np.max(np.abs(P.sum(axis=0) - 1.0)))
    if residual > tol:
        raise NonStochasticError(f"转移矩阵的列和偏离 1，最大偏差 {residual:.3e}", residual=residual)
    return P


def from_markov_chain(P) -> Tuple[PriorMeasure, KrausFamily]:
    """
    列随机矩阵 P 对应的 Kraus 族

    原子按 (i, j) 行优先排列，V_(i,j) = √p_ij |i⟩⟨j|，权重均为 1。
    d = 2 时依次是 [[√p00,0],[0,0]]、[[0,√p01],[0,0]]、[[0,0],[√p10,0]]、[[0,0],[0,√p11]]。
    """
    P = check_column_stochastic(P)
    d = P.shape[0]
    points = np.zeros((d * d, d, d), dtype=np.complex128)
    for i in range(d):
        for j in range(d):
            points[i * d + j, i, j] = np.sqrt(P[i, j])
    mu = PriorMeasure.from_arrays(np.ones(d * d), points)
    return mu, build_family(mu, LMapSpec.identity())


def gaussian_density(x, y):
    return np.exp(-(x ** 2 + y ** 2) / 2.0) / (4.0 * np.pi)


def from_gaussian_rotation(n_r: int, n_theta: int, radius: float = GAUSSIAN_RADIUS) -> Tuple[PriorMeasure, KrausFamily]:
    """
    高斯旋转信道的求积离散

    原子 v = [[x, −y], [y, x]]，径向 Gauss-Legendre（r ∈ (0, R]），角向等距梯形；
    权重 = 密度 × r × 求积权重，总质量约 1/2。
    """
    if n_r < 8 or n_theta < 8:
        raise ValueError(f"求积节点数至少为 8，实际 n_r={n_r}, n_theta={n_theta}")

    nodes, node_weights = np.polynomial.legendre.leggauss(n_r)
    r = 0.5 * radius * (nodes + 1.0)
    w_r = 0.5 * radius * node_weights
    theta = 2.0 * np.pi * np.arange(n_theta) / n_theta
    w_theta = 2.0 * np.pi / n_theta

    R, T = np.meshgrid(r, theta, indexing="ij")
    x = (R * np.cos(T)).ravel()
    y = (R * np.sin(T)).ravel()
    weights = (gaussian_density(x, y) * R.ravel() * np.repeat(w_r, n_theta) * w_theta)

    points = np.zeros((x.size, 2, 2), dtype=np.complex128)
    points[:, 0, 0] = x
    points[:, 0, 1] = -y
    points[:, 1, 0] = y
    points[:, 1, 1] = x
    mu = PriorMeasure.from_arrays(weights, points)
    return mu, build_family(mu, LMapSpec.identity())


# ---------------------------------------------------------------------------
# 无穷原子族的截断
# ---------------------------------------------------------------------------

@dataclass
class AtomGenerator:
    """
    可数原子族 n ↦ (w_n, V_n)，n 从 1 开始

    tail_bound(N) 给出 Σ_{n>N} w_n‖V_n‖² 的上界。
    """
    name: str
    atom: Callable[[int], MatrixAtom]
    tail_bound: Callable[[int], float]
    renormalize: bool = True

    def to_dict(self) -> Dict[str, Any]:
        return {"name": self.name, "renormalize": self.renormalize}


def _smallest_index(tail_bound: Callable[[int], float], mass_tol: float, cap: int) -> int:
    """最小的 N 使得 tail_bound(N) <= mass_tol"""
    if tail_bound(cap) > mass_tol:
        raise TruncationError(
            f"在原子数上限 {cap} 处尾部估计 {tail_bound(cap):.3e} 仍大于 mass_tol={mass_tol:.1e}"
        )
    low, high = 1, 1
    while tail_bound(high) > mass_tol:
        low, high = high + 1, min(2 * high, cap)
    while low < high:
        middle = (low + high) // 2
        if tail_bound(middle) <= mass_tol:
            high = middle
        else:
            low = middle + 1
    return high


def truncate_infinite_family(
    generator: AtomGenerator,
    mass_tol: float,
    max_atoms: Optional[int] = None,
) -> PriorMeasure:
    """
    截断可数原子族：保留到尾部 Σ w‖V‖² 不超过 mass_tol，
    再在保留的原子上重新计算归一化，使截断后的族满足 Σ w V†V = Id
    """
    if mass_tol <= 0:
        raise ValueError("mass_tol 必须为正数")
    cap = get_settings().max_atoms if max_atoms is None else max_atoms
    count = _smallest_index(generator.tail_bound, mass_tol, cap)
    atoms: List[MatrixAtom] = [generator.atom(n) for n in range(1, count + 1)]

    if generator.renormalize:
        weights = np.array([atom.weight for atom in atoms])
        points = np.stack([atom.point for atom in atoms])
        gram = np.einsum("m,mba,mbc->ac", weights, points.conj(), points)
        correction = hermitian_inv_sqrt(gram)
        atoms = [MatrixAtom(atom.point @ correction, atom.weight) for atom in atoms]

    logger.info("truncated_family", generator=generator.name, kept=count, mass_tol=mass_tol)
    return PriorMeasure(tuple(atoms))


def shift_generator() -> AtomGenerator:
    """
    把一切密度送到 |e₁⟩⟨e₁| 的可数族

    V_{2n} = c/(2n)·E11，V_{2n−1} = d/(2n−1)·E12，c² = 24/π²，d² = 8/π²，权重均为 1。
    """
    c = np.sqrt(24.0) / np.pi
    d = np.sqrt(8.0) / np.pi

    def atom(n: int) -> MatrixAtom:
        point = np.zeros((2, 2), dtype=np.complex128)
        if n % 2 == 0:
            point[0, 0] = c / n
        else:
            point[0, 1] = d / n
        return MatrixAtom(point, 1.0)

    def tail_bound(n: int) -> float:
        # Σ_{j>n} 1/j² < 1/n
        return max(c * c, d * d) / n

    return AtomGenerator(name="shift_to_e1", atom=atom, tail_bound=tail_bound)


def harmonic_generator(k: int = 1) -> AtomGenerator:
    """权重 1/n² 的恒等矩阵原子，尾部上界 1/N"""

    def atom(n: int) -> MatrixAtom:
        return MatrixAtom(np.eye(k, dtype=np.complex128), 1.0 / n ** 2)

    return AtomGenerator(name="harmonic", atom=atom, tail_bound=lambda n: k / n)


def single_atom_generator(point) -> AtomGenerator:
    """只有一个原子的族，尾部恒为 0"""
    point = np.asarray(point, dtype=np.complex128)
    return AtomGenerator(
        name="single",
        atom=lambda n: MatrixAtom(point if n == 1 else np.zeros_like(point), 1.0),
        tail_bound=lambda n: 0.0,
    )


def family_summary(family: KrausFamily) -> Dict[str, Any]:
    """便捷函数：Kraus 族的摘要"""
    return {
        **family.to_dict(),
        "stochastic_residual": hs_norm(family.kraus_sum() - np.eye(family.dim)),
    }
