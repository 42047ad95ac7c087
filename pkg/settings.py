#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
运行配置
通过环境变量（前缀 QCHAN_）或 .env 文件覆盖数值容差、线程数和日志选项
"""

import os
from functools import lru_cache

from dotenv import load_dotenv
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

# 加载环境变量
load_dotenv()


class QChannelSettings(BaseSettings):
    """量子信道计算的全局配置"""

    model_config = SettingsConfigDict(
        env_prefix="QCHAN_",
        env_file=".env",
        extra="ignore",
    )

    # 并行配置
    threads: int = Field(default_factory=lambda: os.cpu_count() or 1, ge=1)

    # 日志配置
    log_level: str = "INFO"
    log_json: bool = False

    # 幂迭代配置
    power_tol: float = Field(default=1e-12, gt=0)
    power_max_iter: int = Field(default=200000, ge=1)

    # 半正定判定的舍入容差
    psd_tol: float = Field(default=1e-12, ge=0)

    # 无穷原子族截断的硬上限
    max_atoms: int = Field(default=100000, ge=1)

    # 结果文件后缀
    result_suffix: str = ".result.json"


@lru_cache(maxsize=1)
def get_settings() -> QChannelSettings:
    """获取进程级缓存的配置实例"""
    return QChannelSettings()
