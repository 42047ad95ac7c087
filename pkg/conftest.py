#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
测试公共夹具
具名示例信道与固定种子的随机数发生器
"""

import numpy as np
import pytest

from channel_examples import fix_four_projectors, fix_gaussian, fix_markov, fix_shift
from quantum_channel import Channel
from settings import get_settings


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def fix_mc():
    return Channel(fix_markov())


@pytest.fixture
def fix_four_proj():
    return Channel(fix_four_projectors())


@pytest.fixture(scope="session")
def fix_shift_family():
    # 约 2400 个原子，φ(ρ) = tr(ρ)E11 在截断后仍精确成立
    return fix_shift(mass_tol=1e-3)


@pytest.fixture(scope="session")
def fix_shift_channel(fix_shift_family):
    return Channel(fix_shift_family)


@pytest.fixture(scope="session")
def fix_gauss_channel():
    return Channel(fix_gaussian(40, 32))


@pytest.fixture
def fresh_settings(monkeypatch):
    """清空配置缓存，测试结束后再清一次"""
    get_settings.cache_clear()
    yield monkeypatch
    get_settings.cache_clear()
