#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
信道描述文件
JSON 格式的 ChannelSpec（pydantic 校验）、与 Kraus 族之间的转换以及结果文件的读写
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import AliasChoices, BaseModel, ConfigDict, Field, ValidationError, model_validator

from channel_errors import SpecValidationError
from measure import (
    KrausFamily,
    LMapKind,
    LMapSpec,
    PriorMeasure,
    build_family,
    from_gaussian_rotation,
    from_markov_chain,
    shift_generator,
    truncate_infinite_family,
)
from settings import get_settings


class MatrixModel(BaseModel):
    """复矩阵：实部与虚部分开的行优先数组"""
    model_config = ConfigDict(extra="forbid")

    re: List[List[float]]
    im: Optional[List[List[float]]] = None

    @model_validator(mode="after")
    def _check_shape(self) -> "MatrixModel":
        rows = len(self.re)
        if rows == 0 or any(len(row) != rows for row in self.re):
            raise ValueError("矩阵必须是非空方阵")
        if self.im is not None and (len(self.im) != rows or any(len(row) != rows for row in self.im)):
            raise ValueError("虚部与实部形状不一致")
        return self

    def to_array(self) -> np.ndarray:
        real = np.array(self.re, dtype=float)
        imag = np.zeros_like(real) if self.im is None else np.array(self.im, dtype=float)
        return real + 1j * imag

    @classmethod
    def from_array(cls, A) -> "MatrixModel":
        A = np.asarray(A, dtype=np.complex128)
        return cls(re=A.real.tolist(), im=A.imag.tolist())


class AtomModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    weight: float = Field(gt=0)
    matrix: MatrixModel


class MarkovChainGenerator(BaseModel):
    model_config = ConfigDict(extra="forbid")

    P: List[List[float]]


class GaussianRotationGenerator(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n_r: int = Field(default=40, ge=8)
    n_theta: int = Field(default=32, ge=8)


class ShiftGenerator(BaseModel):
    model_config = ConfigDict(extra="forbid")

    mass_tol: float = Field(default=1e-4, gt=0)


class GeneratorModel(BaseModel):
    """三种生成器恰好选一种；移位族也接受 example1_truncated 这个键名"""
    model_config = ConfigDict(extra="forbid")

    markov_chain: Optional[MarkovChainGenerator] = None
    gaussian_rotation: Optional[GaussianRotationGenerator] = None
    shift_truncated: Optional[ShiftGenerator] = Field(
        default=None,
        validation_alias=AliasChoices("shift_truncated", "example1_truncated"),
    )

    @model_validator(mode="after")
    def _exactly_one(self) -> "GeneratorModel":
        chosen = [name for name in ("markov_chain", "gaussian_rotation", "shift_truncated") if getattr(self, name) is not None]
        if len(chosen) != 1:
            raise ValueError(f"生成器必须恰好指定一种，实际 {chosen}")
        return self


class MeasureModel(BaseModel):
    """显式原子或生成器，二选一"""
    model_config = ConfigDict(extra="forbid")

    atoms: Optional[List[AtomModel]] = None
    generator: Optional[GeneratorModel] = None

    @model_validator(mode="after")
    def _one_source(self) -> "MeasureModel":
        if (self.atoms is None) == (self.generator is None):
            raise ValueError("measure 必须在 atoms 与 generator 之间二选一")
        if self.atoms is not None and not self.atoms:
            raise ValueError("atoms 不能为空")
        return self


class LMapModel(BaseModel):
    """identity、conjugation、table 至多一种，缺省为 identity"""
    model_config = ConfigDict(extra="forbid")

    identity: Optional[bool] = None
    conjugation: Optional[MatrixModel] = None
    table: Optional[List[MatrixModel]] = None

    @model_validator(mode="after")
    def _at_most_one(self) -> "LMapModel":
        chosen = [name for name in ("identity", "conjugation", "table") if getattr(self, name)]
        if len(chosen) > 1:
            raise ValueError(f"lmap 只能指定一种，实际 {chosen}")
        return self

    def to_lmap(self) -> LMapSpec:
        if self.conjugation is not None:
            return LMapSpec.conjugation(self.conjugation.to_array())
        if self.table:
            return LMapSpec.from_table(np.stack([matrix.to_array() for matrix in self.table]))
        return LMapSpec.identity()


class HamiltonianModel(BaseModel):
    """势 H：缺省沿用主信道的先验测度"""
    model_config = ConfigDict(extra="forbid")

    measure: Optional[MeasureModel] = None
    lmap: LMapModel = Field(default_factory=lambda: LMapModel(identity=True))


class ChannelSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    dim: int = Field(ge=1)
    measure: MeasureModel
    lmap: LMapModel = Field(default_factory=lambda: LMapModel(identity=True))
    hamiltonian: Optional[HamiltonianModel] = None


def parse_spec(data: Dict[str, Any]) -> ChannelSpec:
    try:
        return ChannelSpec.model_validate(data)
    except ValidationError as error:
        raise SpecValidationError(f"信道描述不合法: {error}") from error


def load_spec(path) -> ChannelSpec:
    """读取并校验信道描述文件"""
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as error:
        raise SpecValidationError(f"信道描述文件不是合法的 JSON: {error}") from error
    return parse_spec(data)


def dump_spec(spec: ChannelSpec) -> Dict[str, Any]:
    return spec.model_dump(exclude_none=True)


def save_spec(spec: ChannelSpec, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(dump_spec(spec), f, ensure_ascii=False, indent=2)


def build_measure(model: MeasureModel) -> PriorMeasure:
    """由描述构造先验测度"""
    if model.atoms is not None:
        return PriorMeasure.from_arrays(
            [atom.weight for atom in model.atoms],
            np.stack([atom.matrix.to_array() for atom in model.atoms]),
        )
    generator = model.generator
    if generator.markov_chain is not None:
        measure, _ = from_markov_chain(np.array(generator.markov_chain.P, dtype=float))
        return measure
    if generator.gaussian_rotation is not None:
        measure, _ = from_gaussian_rotation(generator.gaussian_rotation.n_r, generator.gaussian_rotation.n_theta)
        return measure
    return truncate_infinite_family(shift_generator(), generator.shift_truncated.mass_tol)


def _checked_family(measure: PriorMeasure, lmap: LMapModel, dim: int) -> KrausFamily:
    if measure.dim != dim:
        raise SpecValidationError(f"dim={dim} 与测度原子的维度 {measure.dim} 不一致")
    return build_family(measure, lmap.to_lmap())


def family_from_spec(spec: ChannelSpec) -> KrausFamily:
    return _checked_family(build_measure(spec.measure), spec.lmap, spec.dim)


def hamiltonian_from_spec(spec: ChannelSpec, measure: Optional[PriorMeasure] = None) -> Optional[KrausFamily]:
    """势 H 的 Kraus 族；未提供测度时沿用主信道的测度"""
    if spec.hamiltonian is None:
        return None
    if spec.hamiltonian.measure is not None:
        measure = build_measure(spec.hamiltonian.measure)
    elif measure is None:
        measure = build_measure(spec.measure)
    return _checked_family(measure, spec.hamiltonian.lmap, spec.dim)


def _lmap_model(lmap: LMapSpec) -> LMapModel:
    if lmap.kind == LMapKind.IDENTITY:
        return LMapModel(identity=True)
    if lmap.kind == LMapKind.CONJUGATION:
        return LMapModel(conjugation=MatrixModel.from_array(lmap.unitary))
    if lmap.kind == LMapKind.TABLE:
        return LMapModel(table=[MatrixModel.from_array(op) for op in lmap.table])
    return LMapModel(table=[MatrixModel.from_array(lmap.apply(i, None)) for i in range(lmap.scales.shape[0])])


def spec_from_family(family: KrausFamily, hamiltonian: Optional[KrausFamily] = None) -> ChannelSpec:
    """把 Kraus 族写成显式原子的描述"""
    measure = MeasureModel(
        atoms=[AtomModel(weight=atom.weight, matrix=MatrixModel.from_array(atom.point)) for atom in family.measure.atoms]
    )
    h_model = None
    if hamiltonian is not None:
        h_model = HamiltonianModel(lmap=_lmap_model(hamiltonian.lmap))
    return ChannelSpec(dim=family.dim, measure=measure, lmap=_lmap_model(family.lmap), hamiltonian=h_model)


def result_path(spec_path) -> Path:
    """<spec>.result.json，与输入文件放在一起"""
    path = Path(spec_path)
    return path.with_name(path.stem + get_settings().result_suffix)


def _json_default(value):
    if isinstance(value, np.ndarray):
        if np.iscomplexobj(value):
            return {"re": value.real.tolist(), "im": value.imag.tolist()}
        return value.tolist()
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    if isinstance(value, complex):
        return [value.real, value.imag]
    raise TypeError(f"无法序列化的类型: {type(value).__name__}")


def write_result(path, payload: Dict[str, Any]) -> Path:
    """写结果文件"""
    path = Path(path)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, ensure_ascii=False, indent=2, default=_json_default)
    return path


def load_result(path) -> Dict[str, Any]:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def spec_summary(spec: ChannelSpec) -> Tuple[str, int]:
    """便捷函数：测度来源与原子数（生成器时为 -1）"""
    if spec.measure.atoms is not None:
        return "atoms", len(spec.measure.atoms)
    generator = spec.measure.generator
    name = next(n for n in ("markov_chain", "gaussian_rotation", "shift_truncated") if getattr(generator, n) is not None)
    return name, -1
