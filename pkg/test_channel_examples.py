#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
具名示例测试
高斯旋转信道的不动点与熵、四个矩阵单位、移向 e₁ 的信道以及对照表
"""

import numpy as np
import pytest

from channel_examples import (
    EXAMPLES,
    GAUSSIAN_ENTROPY_REPORTED,
    ExampleRow,
    fix_conjugated,
    fix_gaussian,
    gaussian_entropy_closed_form,
    markov_closed_form,
    rows_frame,
    run_example,
)
from linalg_core import hs_norm
from quantum_channel import Channel
from random_ensembles import random_density, random_unitary
from thermo import entropy


class TestGaussianRotation:
    """φ(ρ) = ½(ρ + JρJ†)"""

    def test_closed_form_value(self):
        assert gaussian_entropy_closed_form() == pytest.approx(-1.115932, abs=1e-6)
        assert GAUSSIAN_ENTROPY_REPORTED < gaussian_entropy_closed_form()

    def test_fixed_point(self):
        channel = Channel(fix_gaussian(40, 32))
        half = np.eye(2) / 2
        assert hs_norm(channel.apply(half) - half) <= 1e-6
        assert np.allclose(channel.spectral_data().rho, half, atol=1e-6)

    def test_acts_as_half_plus_transpose_conjugation(self, rng):
        channel = Channel(fix_gaussian(40, 32))
        J = np.array([[0.0, -1.0], [1.0, 0.0]])
        rho = random_density(2, rng)
        assert np.allclose(channel.apply(rho), 0.5 * (rho + J @ rho @ J.T), atol=1e-6)

    def test_entropy_matches_closed_form(self):
        error = abs(entropy(Channel(fix_gaussian(40, 32))) - gaussian_entropy_closed_form())
        assert error <= 2e-3

    @pytest.mark.parametrize("n_r", [12, 16])
    def test_entropy_error_drops_when_grid_doubles(self, n_r):
        # 在 Id/2 处核只依赖半径，角向求积是精确的；粗网格上信道还不是随机的
        half = np.eye(2) / 2

        def error(n):
            channel = Channel(fix_gaussian(n, 8))
            return abs(entropy(channel, rho=half, stochastic_tol=0.5) - gaussian_entropy_closed_form())

        coarse, fine = error(n_r), error(2 * n_r)
        assert fine <= coarse / 4 or fine <= 1e-10


class TestFourProjectors:

    def test_completely_depolarizing(self, fix_four_proj, rng):
        for _ in range(20):
            rho = random_density(2, rng)
            assert hs_norm(fix_four_proj.apply(rho) - np.eye(2) / 2) <= 1e-12


class TestShift:
    """截断后的可数族"""

    def test_image_is_e11(self, fix_shift_channel, rng):
        E11 = np.diag([1.0, 0.0])
        for _ in range(5):
            assert hs_norm(fix_shift_channel.apply(random_density(2, rng)) - E11) <= 1e-8


class TestConjugation:

    def test_conjugated_markov_keeps_entropy(self, fix_mc, rng):
        U = random_unitary(2, rng)
        conjugated = Channel(fix_conjugated(fix_mc.family, U))
        assert entropy(conjugated) == pytest.approx(entropy(fix_mc), abs=1e-9)
        assert np.allclose(conjugated.spectral_data().rho, U @ fix_mc.spectral_data().rho @ U.conj().T, atol=1e-9)


class TestExampleRuns:
    """对照表"""

    @pytest.mark.parametrize("name, params", [
        ("markov", {}),
        ("markov", {"p": [0.9, 0.2, 0.1, 0.8]}),
        ("four-proj", {"seed": 3}),
        ("shift", {"mass_tol": 1e-3}),
        ("gaussian", {"n_r": 40, "n_theta": 32}),
    ])
    def test_rows_pass(self, name, params):
        rows = run_example(name, **params)
        assert rows
        assert all(row.ok is not False for row in rows), rows_frame(rows).to_string()

    def test_unknown_example(self):
        with pytest.raises(ValueError):
            run_example("nope")
        assert sorted(EXAMPLES) == ["four-proj", "gaussian", "markov", "shift"]

    def test_reference_rows_are_not_checked(self):
        row = ExampleRow("entropy (reported)", GAUSSIAN_ENTROPY_REPORTED, -1.1)
        assert row.ok is None
        assert row.to_dict()["ok"] is None

    def test_markov_closed_form(self):
        closed = markov_closed_form(np.array([[0.9, 0.2], [0.1, 0.8]]))
        assert closed["pi"] == pytest.approx([2.0 / 3.0, 1.0 / 3.0])
        assert np.trace(closed["rho_inv"]) == pytest.approx(1.0)
