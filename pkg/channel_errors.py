#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
信道计算的异常层级
所有异常都继承 ValueError，调用方可以统一捕获
"""

from typing import Optional


class ChannelError(ValueError):
    """量子信道计算错误的基类"""


class DimensionMismatchError(ChannelError):
    """矩阵维度不匹配"""


class NotHermitianError(ChannelError):
    """输入矩阵不是厄米矩阵"""


class NotPositiveError(ChannelError):
    """矩阵存在超出容差的负特征值"""

    def __init__(self, message: str, min_eigenvalue: float):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


class SingularMatrixError(ChannelError):
    """矩阵奇异，无法求逆平方根"""

    def __init__(self, message: str, min_eigenvalue: float):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


class ConvergenceError(ChannelError):
    """迭代在最大步数内未收敛"""

    def __init__(self, message: str, iterations: int, residual: float):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class NonStochasticError(ChannelError):
    """信道或转移矩阵不满足随机性条件"""

    def __init__(self, message: str, residual: Optional[float] = None):
        super().__init__(message)
        self.residual = residual


class NotNormalizableError(ChannelError):
    """σ_L 数值奇异，无法归一化"""

    def __init__(self, message: str, min_eigenvalue: float):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


class ZeroAtomError(ChannelError):
    """某个原子处的势函数迹为零"""

    def __init__(self, message: str, atom_index: int):
        super().__init__(message)
        self.atom_index = atom_index


class MeasureMismatchError(ChannelError):
    """两个 Kraus 族不共享同一先验测度"""


class TruncationError(ChannelError):
    """截断在原子数上限内达不到要求的尾部质量"""


class SpecValidationError(ChannelError):
    """信道描述文件不合法"""


class UndeterminedVerdictError(ChannelError):
    """数值判定无法给出确定结论"""
