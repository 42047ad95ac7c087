#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
随机矩阵与随机 Kraus 族
测试和对照计算使用的可复现随机样本，全部通过显式传入的 numpy Generator 取样
"""

from typing import Optional

import numpy as np

from linalg_core import hermitian_inv_sqrt
from measure import KrausFamily, LMapSpec, PriorMeasure, build_family


def random_complex_matrix(k: int, rng: np.random.Generator, size: Optional[int] = None) -> np.ndarray:
    """元素为标准复高斯的矩阵（实部、虚部方差各 1/2）"""
    shape = (k, k) if size is None else (size, k, k)
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def random_unitary(k: int, rng: np.random.Generator) -> np.ndarray:
    """对复高斯矩阵做 SVD 取 U V†"""
    u, _, vh = np.linalg.svd(random_complex_matrix(k, rng))
    return u @ vh


def random_hermitian(k: int, rng: np.random.Generator) -> np.ndarray:
    A = random_complex_matrix(k, rng)
    return 0.5 * (A + A.conj().T)


def random_pd(k: int, rng: np.random.Generator, floor: float = 0.1) -> np.ndarray:
    """M M† + floor·Id"""
    M = random_complex_matrix(k, rng)
    return M @ M.conj().T + floor * np.eye(k)


def random_density(k: int, rng: np.random.Generator, rank: Optional[int] = None) -> np.ndarray:
    """随机密度矩阵，rank 缺省时满秩"""
    rank = k if rank is None else rank
    M = (rng.standard_normal((k, rank)) + 1j * rng.standard_normal((k, rank))) / np.sqrt(2.0)
    rho = M @ M.conj().T
    return rho / np.trace(rho).real


def random_unit_vector(k: int, rng: np.random.Generator) -> np.ndarray:
    x = rng.standard_normal(k) + 1j * rng.standard_normal(k)
    return x / np.linalg.norm(x)


def random_column_stochastic(d: int, rng: np.random.Generator) -> np.ndarray:
    """每列取 Dirichlet(1,…,1)，元素几乎必然严格为正"""
    return rng.dirichlet(np.ones(d), size=d).T


def stochastic_operators(operators, weights=None) -> np.ndarray:
    """右乘 G^{-1/2}（G = Σ w K†K），使 Σ w K†K = Id"""
    ops = np.asarray(operators, dtype=np.complex128)
    w = np.ones(ops.shape[0]) if weights is None else np.asarray(weights, dtype=float)
    gram = np.einsum("m,mba,mbc->ac", w, ops.conj(), ops)
    return ops @ hermitian_inv_sqrt(gram)


def random_kraus_family(
    k: int,
    m: int,
    rng: np.random.Generator,
    stochastic: bool = True,
    weights=None,
) -> KrausFamily:
    """m 个随机 Kraus 算子组成的族；stochastic=True 时满足 Σ w K†K = Id"""
    ops = random_complex_matrix(k, rng, size=m)
    w = np.ones(m) if weights is None else np.asarray(weights, dtype=float)
    if stochastic:
        ops = stochastic_operators(ops, w)
    return KrausFamily.from_operators(ops, w)


def random_table_family(
    measure: PriorMeasure,
    rng: np.random.Generator,
    stochastic: bool = True,
    scale: float = 1.0,
) -> KrausFamily:
    """在给定的先验测度上取随机算子表 L"""
    ops = scale * random_complex_matrix(measure.dim, rng, size=measure.size)
    if stochastic:
        ops = stochastic_operators(ops, measure.weights)
    return build_family(measure, LMapSpec.from_table(ops))


def random_block_operators(k: int, d: int, m: int, rng: np.random.Generator, second_scale: float = 0.6) -> np.ndarray:
    """
    分块对角算子 diag(A_i, c·B_i)，span{e₁..e_d} 与其补都不变

    第二块乘以 c 使两块的谱半径分开，幂迭代收敛快。
    """
    if not 1 <= d < k:
        raise ValueError(f"分块位置 d 必须满足 1 <= d < k，实际 d={d}, k={k}")
    ops = np.zeros((m, k, k), dtype=np.complex128)
    ops[:, :d, :d] = random_complex_matrix(d, rng, size=m)
    ops[:, d:, d:] = second_scale * random_complex_matrix(k - d, rng, size=m)
    return ops


def random_block_reducible_family(k: int, rng: np.random.Generator, m: int = 3, d: Optional[int] = None) -> KrausFamily:
    """随机的可约族（分块对角）"""
    d = int(rng.integers(1, k)) if d is None else d
    return KrausFamily.from_operators(random_block_operators(k, d, m, rng))
