#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
公共不变子空间与构造性扰动
不变子空间搜索、Φ-Erg 分类、谱互异扰动以及恢复不可约性的扰动 M_δ
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np
import scipy.linalg

from channel_errors import ChannelError, ConvergenceError, NotPositiveError, UndeterminedVerdictError
from linalg_core import canonical_phase, hermitian_eigen
from logging_config import get_logger
from measure import KrausFamily

logger = get_logger(__name__)

# 判断子空间包含关系和秩的容差
RANK_TOL = 1e-9

# 去重种子时保留的小数位
SEED_DECIMALS = 6

MAX_SEEDS = 400
MAX_HALVINGS = 40

# 扰动项 δφA/2 相对 max‖K‖ 的下限；再小分类器就分辨不出不变子空间被打破
RESOLVABLE_TERM = 1e-3


@dataclass
class SubspaceBasis:
    """正交基按列排列的子空间 E ⊆ ℂ^k"""
    basis: np.ndarray
    residual: float = 0.0

    @property
    def dim(self) -> int:
        return int(self.basis.shape[1])

    @property
    def ambient_dim(self) -> int:
        return int(self.basis.shape[0])

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.conj().T

    def complement(self) -> np.ndarray:
        """正交补的正交基"""
        return scipy.linalg.null_space(self.basis.conj().T)

    def contains(self, other: "SubspaceBasis", tol: float = RANK_TOL) -> bool:
        leftover = other.basis - self.projector() @ other.basis
        return bool(np.linalg.norm(leftover) <= tol * max(1.0, other.dim))

    def same_as(self, other: "SubspaceBasis", tol: float = RANK_TOL) -> bool:
        return self.dim == other.dim and self.contains(other, tol)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "dim": self.dim,
            "basis": {"re": self.basis.real.tolist(), "im": self.basis.imag.tolist()},
            "residual": self.residual,
        }


def invariance_residual(family: KrausFamily, basis: np.ndarray) -> float:
    """max_i ‖(Id − Π_E) K_i Π_E‖"""
    projector = basis @ basis.conj().T
    images = family.operators @ projector
    leak = images - projector @ images
    return float(np.max(np.linalg.norm(leak, ord=2, axis=(1, 2))))


def _operator_scale(family: KrausFamily) -> float:
    return max(float(np.max(np.linalg.norm(family.operators, ord=2, axis=(1, 2)))), np.finfo(float).tiny)


def _close_orbit(operators: np.ndarray, seed: np.ndarray, threshold: float) -> np.ndarray:
    """包含 seed 的最小公共不变子空间（轨道张成 + 秩截断）"""
    k = operators.shape[1]
    basis = (seed / np.linalg.norm(seed))[:, None]
    while basis.shape[1] < k:
        images = np.einsum("mab,bd->amd", operators, basis).reshape(k, -1)
        leftover = images - basis @ (basis.conj().T @ images)
        u, s, _ = np.linalg.svd(leftover, full_matrices=False)
        cut = threshold * np.sqrt(max(leftover.shape[1], 1))
        new = u[:, s > cut]
        if new.shape[1] == 0:
            break
        basis, _ = np.linalg.qr(np.hstack([basis, new]))
        basis = basis[:, : min(k, basis.shape[1])]
    return basis


def _seed_vectors(family: KrausFamily, n_random: int, rng: np.random.Generator) -> List[np.ndarray]:
    operators = family.operators
    _, vectors = np.linalg.eig(operators)
    candidates = [vectors[i, :, j] for i in range(vectors.shape[0]) for j in range(vectors.shape[2])]
    for _ in range(n_random):
        coefficients = rng.standard_normal(family.size)
        _, combo_vectors = np.linalg.eig(np.tensordot(coefficients, operators, axes=1))
        candidates.extend(combo_vectors[:, j] for j in range(combo_vectors.shape[1]))

    unique: Dict[bytes, np.ndarray] = {}
    for vector in candidates:
        if np.linalg.norm(vector) < 1e-12:
            continue
        canonical = canonical_phase(vector)
        key = np.round(np.concatenate([canonical.real, canonical.imag]), SEED_DECIMALS).tobytes()
        unique.setdefault(key, canonical)
    seeds = list(unique.values())
    if len(seeds) > MAX_SEEDS:
        picks = rng.choice(len(seeds), size=MAX_SEEDS, replace=False)
        seeds = [seeds[i] for i in sorted(picks)]
    return seeds


def invariant_subspace_search(
    family: KrausFamily,
    tol: float = 1e-9,
    n_random: int = 20,
    seed: int = 0,
) -> List[SubspaceBasis]:
    """
    搜索所有 K_i 的公共非平凡不变子空间，只返回包含意义下极小的那些

    种子取每个 K_i 以及 n_random 个随机实系数组合 Σ c_i K_i 的特征向量，
    每个种子在全部 K_i 作用下闭合成轨道张成。返回 [] 表示只找到平凡子空间。
    """
    k = family.dim
    if k == 1:
        return []
    rng = np.random.default_rng(seed)
    scale = _operator_scale(family)
    threshold = tol * scale

    found: List[SubspaceBasis] = []
    for vector in _seed_vectors(family, n_random, rng):
        basis = _close_orbit(family.operators, vector, threshold)
        if basis.shape[1] >= k:
            continue
        candidate = SubspaceBasis(basis=basis, residual=invariance_residual(family, basis))
        if candidate.residual > tol * scale:
            logger.debug("subspace_not_certified", dim=candidate.dim, residual=candidate.residual)
            continue
        if not any(existing.same_as(candidate) for existing in found):
            found.append(candidate)

    found.sort(key=lambda subspace: subspace.dim)
    minimal: List[SubspaceBasis] = []
    for candidate in found:
        if not any(candidate.contains(smaller) for smaller in minimal):
            minimal.append(candidate)
    return minimal


class PhiErgKind(Enum):
    """Φ-Erg 分类结果"""
    IRREDUCIBLE = "irreducible"
    PHI_ERG = "phi_erg"
    NOT_PHI_ERG = "not_phi_erg"
    UNDETERMINED = "undetermined"


@dataclass
class PhiErgResult:
    kind: PhiErgKind
    subspaces: List[SubspaceBasis] = field(default_factory=list)
    evidence: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind.value,
            "subspaces": [subspace.to_dict() for subspace in self.subspaces],
            "evidence": self.evidence,
        }


def _spectral_test(family: KrausFamily) -> Dict[str, Any]:
    from quantum_channel import POSITIVE_EIG_TOL, Channel

    try:
        data = Channel(family).spectral_data()
    except (NotPositiveError, ConvergenceError) as error:
        return {"passed": False, "error": str(error)}
    min_rho = float(hermitian_eigen(data.rho).eigenvalues[0])
    min_sigma = float(hermitian_eigen(data.sigma).eigenvalues[0])
    passed = data.simple and min_rho > POSITIVE_EIG_TOL and min_sigma > POSITIVE_EIG_TOL
    return {"passed": bool(passed), "simple": data.simple, "min_eig_rho": min_rho, "min_eig_sigma": min_sigma}


def _independent(first: SubspaceBasis, second: SubspaceBasis) -> bool:
    joint = np.hstack([first.basis, second.basis])
    singular = np.linalg.svd(joint, compute_uv=False)
    return int(np.count_nonzero(singular > RANK_TOL)) == first.dim + second.dim


def phi_erg_classify(family: KrausFamily, tol: float = 1e-9, seed: int = 0) -> PhiErgResult:
    """
    Φ-Erg 分类

    搜索为空且谱判据成立 → irreducible；恰有一个极小子空间 → phi_erg(E)；
    两个以上互不相交的极小子空间 → not_phi_erg；其余情况 → undetermined。
    """
    subspaces = invariant_subspace_search(family, tol=tol, seed=seed)
    if not subspaces:
        spectral = _spectral_test(family)
        kind = PhiErgKind.IRREDUCIBLE if spectral["passed"] else PhiErgKind.UNDETERMINED
        return PhiErgResult(kind, [], {"spectral": spectral})
    if len(subspaces) == 1:
        return PhiErgResult(PhiErgKind.PHI_ERG, subspaces, {"minimal_subspaces": 1})

    first, second = subspaces[0], subspaces[1]
    if _independent(first, second):
        return PhiErgResult(PhiErgKind.NOT_PHI_ERG, [first, second], {"minimal_subspaces": len(subspaces)})
    logger.warning("overlapping_minimal_subspaces", dims=[s.dim for s in subspaces])
    return PhiErgResult(PhiErgKind.UNDETERMINED, subspaces, {"reason": "overlapping minimal subspaces"})


# ---------------------------------------------------------------------------
# 扰动
# ---------------------------------------------------------------------------

def _distinct_spectrum_operator(K: np.ndarray, epsilon: float) -> np.ndarray:
    """
    在 K 的 Schur 基里对角平移 ε/2^e，使对角元两两不同且非零

    候选平移 ε/4, ε/8, …, ε/2^{k+2} 彼此相距至少 2·separation，
    每个已有对角元（连同 0）至多挡住一个候选，所以总能找到可用的平移。
    """
    T, Z = scipy.linalg.schur(K, output="complex")
    diagonal = np.diag(T).copy()
    k = K.shape[0]
    separation = min(1e-9 * max(1.0, float(np.linalg.norm(K, 2))), epsilon / 2 ** (k + 4))

    def clashes(value: complex, earlier: np.ndarray) -> bool:
        return abs(value) <= separation or bool(np.any(np.abs(earlier - value) <= separation))

    shifts = np.zeros(k, dtype=np.complex128)
    for j in range(k):
        if not clashes(diagonal[j], diagonal[:j]):
            continue
        for exponent in range(2, k + 3):
            candidate = diagonal[j] + epsilon / 2 ** exponent
            if not clashes(candidate, diagonal[:j]):
                shifts[j] = candidate - diagonal[j]
                diagonal[j] = candidate
                break
        else:
            raise ChannelError(f"ε = {epsilon:.3e} 时找不到使第 {j} 个对角元互异的平移")
    return K + Z @ np.diag(shifts) @ Z.conj().T


def distinct_spectrum_perturbation(family: KrausFamily, atom_index: int, epsilon: float) -> KrausFamily:
    """把第 atom_index 个算子换成谱互异且非零的 K'，‖K' − K‖ < ε/2"""
    if epsilon <= 0:
        raise ValueError("epsilon 必须为正数")
    operators = family.operators.copy()
    operators[atom_index] = _distinct_spectrum_operator(operators[atom_index], epsilon)
    return family.with_operators(operators)


def _cyclic_shift(k: int) -> np.ndarray:
    """S e_j = e_{j+1}，S e_k = e_1"""
    return np.roll(np.eye(k, dtype=np.complex128), 1, axis=0)


def _distinguished_atom(family: KrausFamily, epsilon: float, candidates: int = 8):
    """在候选原子中选谱互异扰动后特征基条件数最小的那个"""
    best = None
    for index in range(min(family.size, candidates)):
        perturbed = _distinct_spectrum_operator(family.operators[index], epsilon)
        _, vectors = np.linalg.eig(perturbed)
        condition = float(np.linalg.cond(vectors))
        if best is None or condition < best[1]:
            best = (index, condition, perturbed, vectors)
    return best


def irreducible_perturbation(family: KrausFamily, epsilon: float, seed: int = 0) -> KrausFamily:
    """
    恢复不可约性的扰动 M_δ(v) = L_ε(v) + δ·φ(v)/(2‖A‖)·A

    φ(v) = ‖v − v₁‖/(‖v‖ + ‖v₁‖)，A 是特殊原子 v₁ 的特征基上的循环移位。
    δ 从 ε/2 开始减半，直到分类结果为 irreducible；扰动项 max δφ/2 不得小于
    RESOLVABLE_TERM·max‖K‖，ε 太小时直接报 ValueError。
    """
    if family.size < 2:
        raise ValueError("至少需要两个原子才能恢复不可约性")
    if epsilon <= 0:
        raise ValueError("epsilon 必须为正数")

    before = phi_erg_classify(family, seed=seed)
    if before.kind == PhiErgKind.IRREDUCIBLE:
        return family

    index, condition, perturbed, vectors = _distinguished_atom(family, epsilon)
    base = family.operators.copy()
    base[index] = perturbed

    A = vectors @ _cyclic_shift(family.dim) @ np.linalg.inv(vectors)
    A = A / np.linalg.norm(A, 2)
    points = family.points
    v1 = points[index]
    norms = np.linalg.norm(points, axis=(1, 2))
    denominators = norms + np.linalg.norm(v1)
    distances = np.linalg.norm(points - v1, axis=(1, 2))
    phi = np.divide(distances, denominators, out=np.zeros_like(distances), where=denominators > 0)

    floor = RESOLVABLE_TERM * _operator_scale(family)
    delta = epsilon / 2
    if 0.5 * delta * float(np.max(phi)) < floor:
        raise ValueError(
            f"epsilon = {epsilon:.3e} 太小，扰动项低于分类器可分辨的下限 {floor:.3e}，"
            f"至少需要 epsilon >= {4 * floor / max(float(np.max(phi)), np.finfo(float).tiny):.3e}"
        )
    for halving in range(MAX_HALVINGS + 1):
        if 0.5 * delta * float(np.max(phi)) < floor:
            break
        operators = base + (0.5 * delta * phi)[:, None, None] * A[None]
        candidate = family.with_operators(operators)
        result = phi_erg_classify(candidate, seed=seed)
        if result.kind == PhiErgKind.IRREDUCIBLE:
            logger.info("irreducible_perturbation_found", delta=delta, halvings=halving, atom=index, condition=condition)
            return candidate
        logger.debug("perturbation_halving", delta=delta, verdict=result.kind.value)
        delta /= 2

    raise UndeterminedVerdictError(f"δ 减半到 {delta:.3e} 仍未得到不可约的扰动")


def family_distance(first: KrausFamily, second: KrausFamily) -> float:
    """按原子取算子范数距离的最大值"""
    return float(np.max(np.linalg.norm(first.operators - second.operators, ord=2, axis=(1, 2))))


def openness_smoke(
    family: KrausFamily,
    n_trials: int = 20,
    size: float = 1e-8,
    rng: Optional[np.random.Generator] = None,
) -> float:
    """对不可约族做 n_trials 次大小为 size 的随机扰动，返回仍判为不可约的比例"""
    rng = np.random.default_rng(0) if rng is None else rng
    kept = 0
    for _ in range(n_trials):
        noise = rng.standard_normal(family.operators.shape) + 1j * rng.standard_normal(family.operators.shape)
        noise *= size / np.linalg.norm(noise, axis=(1, 2))[:, None, None]
        if phi_erg_classify(family.with_operators(family.operators + noise)).kind == PhiErgKind.IRREDUCIBLE:
            kept += 1
    return kept / n_trials
