#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
具名示例信道
马尔可夫链信道、四个矩阵单位的信道、移向 e₁ 的截断信道、高斯旋转信道，以及逐项对照期望值的示例运行
"""

from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from generic import PhiErgKind, phi_erg_classify
from linalg_core import hs_norm
from measure import (
    KrausFamily,
    LMapSpec,
    PriorMeasure,
    build_family,
    from_gaussian_rotation,
    from_markov_chain,
    shift_generator,
    truncate_infinite_family,
)
from quantum_channel import Channel, Verdict, irreducibility_report
from random_ensembles import random_density
from thermo import entropy, markov_entropy_rate, markov_stationary
from trajectory import EmpiricalMeasure, barycenter, markov_operator_apply

# 列随机矩阵 P*，平稳分布 (0.375, 0.625)
P_STAR = np.array([[0.5, 0.3], [0.5, 0.7]])

# 高斯旋转信道熵的另一个公开数值，只作参考行
GAUSSIAN_ENTROPY_REPORTED = -3.61816


def fix_markov(P: Optional[Sequence[Sequence[float]]] = None) -> KrausFamily:
    """列随机矩阵 P 的 Kraus 族（缺省 P*）"""
    _, family = from_markov_chain(P_STAR if P is None else np.asarray(P, dtype=float))
    return family


def fix_four_projectors() -> KrausFamily:
    """μ = ½ Σ δ_{E_ij}，φ(ρ) = ½ tr(ρ) Id"""
    points = np.zeros((4, 2, 2), dtype=np.complex128)
    for index, (i, j) in enumerate([(0, 0), (0, 1), (1, 0), (1, 1)]):
        points[index, i, j] = 1.0
    return build_family(PriorMeasure.from_arrays(np.full(4, 0.5), points), LMapSpec.identity())


def fix_shift(mass_tol: float = 1e-4) -> KrausFamily:
    """可数族截断后的信道，φ(ρ) = tr(ρ)|e₁⟩⟨e₁|"""
    return build_family(truncate_infinite_family(shift_generator(), mass_tol), LMapSpec.identity())


def fix_gaussian(n_r: int = 40, n_theta: int = 32) -> KrausFamily:
    """高斯旋转信道的求积离散"""
    _, family = from_gaussian_rotation(n_r, n_theta)
    return family


def fix_conjugated(family: KrausFamily, unitary) -> KrausFamily:
    """同一先验测度上的 L(v) = U v U†"""
    return build_family(family.measure, LMapSpec.conjugation(unitary))


def gaussian_entropy_closed_form() -> float:
    """在 ρ = Id/2 处对熵公式解析求值：−(log 2 + 1 − γ)"""
    return -(np.log(2.0) + 1.0 - np.euler_gamma)


def markov_closed_form(P) -> Dict[str, Any]:
    """马尔可夫链信道的闭式结果：ρ_inv = diag(π)，熵 = 经典熵率"""
    pi = markov_stationary(P)
    return {"rho_inv": np.diag(pi), "entropy": markov_entropy_rate(P), "pi": pi}


@dataclass
class ExampleRow:
    """期望值与计算值的对照行；tol 为 None 时只作参考"""
    quantity: str
    expected: Any
    computed: Any
    tol: Optional[float] = None

    @property
    def ok(self) -> Optional[bool]:
        if self.tol is None:
            return None
        if isinstance(self.expected, str):
            return self.expected == self.computed
        return bool(abs(complex(self.expected) - complex(self.computed)) <= self.tol)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "quantity": self.quantity,
            "expected": self.expected,
            "computed": self.computed,
            "tol": self.tol,
            "ok": self.ok,
        }


def _markov_rows(p: Optional[Sequence[float]] = None) -> List[ExampleRow]:
    P = P_STAR if p is None else np.asarray(p, dtype=float).reshape(2, 2)
    expected = markov_closed_form(P)
    channel = Channel(fix_markov(P))
    data = channel.spectral_data()
    rows = [
        ExampleRow("lambda", 1.0, data.lam, 1e-10),
        ExampleRow("stochastic residual", 0.0, channel.is_stochastic().residual, 1e-12),
    ]
    for i in range(2):
        rows.append(ExampleRow(f"rho_inv[{i},{i}]", expected["rho_inv"][i, i], data.rho[i, i].real, 1e-9))
    rows.append(ExampleRow("entropy", expected["entropy"], entropy(channel), 1e-9))
    rows.append(ExampleRow("verdict", Verdict.IRREDUCIBLE.value, irreducibility_report(channel).verdict.value, 0.0))
    return rows


def _four_projector_rows(seed: int = 0) -> List[ExampleRow]:
    channel = Channel(fix_four_projectors())
    rng = np.random.default_rng(seed)
    rho = random_density(2, rng)
    data = channel.spectral_data()
    e1, e2 = np.eye(2, dtype=np.complex128)
    nu = EmpiricalMeasure(points=np.stack([e1, e2]), weights=np.array([0.5, 0.5]))
    pushed = markov_operator_apply(EmpiricalMeasure.dirac(e1), channel)
    return [
        ExampleRow("|phi(rho) - Id/2|", 0.0, hs_norm(channel.apply(rho) - np.eye(2) / 2), 1e-12),
        ExampleRow("|rho_inv - Id/2|", 0.0, hs_norm(data.rho - np.eye(2) / 2), 1e-9),
        ExampleRow("nu({e1})", 0.5, pushed.mass_near(e1), 1e-10),
        ExampleRow("nu({e2})", 0.5, pushed.mass_near(e2), 1e-10),
        ExampleRow("|barycenter - Id/2|", 0.0, hs_norm(barycenter(nu) - np.eye(2) / 2), 1e-10),
        ExampleRow("verdict", Verdict.IRREDUCIBLE.value, irreducibility_report(channel).verdict.value, 0.0),
    ]


def _shift_rows(mass_tol: float = 1e-4, seed: int = 0) -> List[ExampleRow]:
    family = fix_shift(mass_tol)
    channel = Channel(family)
    rng = np.random.default_rng(seed)
    rho = random_density(2, rng)
    e1 = np.array([1.0, 0.0], dtype=np.complex128)
    E11 = np.outer(e1, e1)
    pushed = markov_operator_apply(EmpiricalMeasure.dirac(e1), channel)
    return [
        ExampleRow("atoms kept", None, family.size),
        ExampleRow("|phi(rho) - E11|", 0.0, hs_norm(channel.apply(rho) - E11), 1e-8),
        ExampleRow("nu({e1}) after pushforward", 1.0, pushed.mass_near(e1), 1e-10),
        ExampleRow("verdict", Verdict.REDUCIBLE.value, irreducibility_report(channel).verdict.value, 0.0),
        ExampleRow("phi-erg", PhiErgKind.PHI_ERG.value, phi_erg_classify(family).kind.value, 0.0),
    ]


def _gaussian_rows(n_r: int = 40, n_theta: int = 32) -> List[ExampleRow]:
    family = fix_gaussian(n_r, n_theta)
    channel = Channel(family)
    half = np.eye(2) / 2
    h = entropy(channel)
    return [
        ExampleRow("measure mass", 0.5, family.mass, 1e-6),
        ExampleRow("stochastic residual", 0.0, channel.is_stochastic().residual, 1e-6),
        ExampleRow("|phi(Id/2) - Id/2|", 0.0, hs_norm(channel.apply(half) - half), 1e-6),
        ExampleRow("entropy", gaussian_entropy_closed_form(), h, 2e-3),
        ExampleRow("entropy (reported)", GAUSSIAN_ENTROPY_REPORTED, h),
    ]


EXAMPLES = {
    "markov": _markov_rows,
    "four-proj": _four_projector_rows,
    "shift": _shift_rows,
    "gaussian": _gaussian_rows,
}


def run_example(name: str, **params) -> List[ExampleRow]:
    """运行一个具名示例，返回期望值与计算值的对照"""
    if name not in EXAMPLES:
        raise ValueError(f"未知示例: {name}，可选 {sorted(EXAMPLES)}")
    return EXAMPLES[name](**params)


def rows_frame(rows: List[ExampleRow]) -> pd.DataFrame:
    """便捷函数：对照行转成表格"""
    return pd.DataFrame([row.to_dict() for row in rows])
