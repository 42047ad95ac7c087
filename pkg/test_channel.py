#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
信道对象测试
作用与对偶、谱数据、归一化、时间平均与不可约性判定
"""

import numpy as np
import pytest

from channel_errors import DimensionMismatchError, NonStochasticError, NotNormalizableError
from linalg_core import choi_matrix, hermitian_sqrt, hs_inner, hs_norm, min_eigenvalue
from quantum_channel import Channel, Verdict, irreducibility_report, spectral_radius_oracle
from random_ensembles import (
    random_block_reducible_family,
    random_complex_matrix,
    random_density,
    random_hermitian,
    random_kraus_family,
)
from thermo import shift_matrices


class TestApply:
    """φ 与 φ* 的作用"""

    def test_duality(self, rng):
        channel = Channel(random_kraus_family(3, 3, rng, stochastic=False))
        rho = random_density(3, rng)
        X = random_hermitian(3, rng)
        assert hs_inner(channel.apply(rho), X) == pytest.approx(hs_inner(rho, channel.apply_dual(X)))

    @pytest.mark.parametrize("k", [2, 3, 4])
    def test_duality_on_random_pairs(self, rng, k):
        channel = Channel(random_kraus_family(k, 3, rng, stochastic=False))
        for _ in range(100):
            X = random_complex_matrix(k, rng)
            Y = random_complex_matrix(k, rng)
            lhs = hs_inner(channel.apply(X), Y)
            rhs = hs_inner(X, channel.apply_dual(Y))
            assert abs(lhs - rhs) <= 1e-10 * hs_norm(X) * hs_norm(Y)

    @pytest.mark.parametrize("k", [1, 2, 3, 4])
    def test_doubled_identity_residual(self, k):
        check = Channel.from_operators(2.0 * np.eye(k)).is_stochastic()
        assert not check
        assert check.residual == pytest.approx(3.0 * np.sqrt(k), abs=1e-12)

    def test_superoperator_agrees_with_apply(self, rng):
        channel = Channel(random_kraus_family(3, 2, rng))
        rho = random_density(3, rng)
        assert np.allclose(channel.apply_super(rho), channel.apply(rho), atol=1e-12)
        twice = channel.apply(channel.apply(channel.apply(rho)))
        assert np.allclose(channel.iterate(rho, 3), twice, atol=1e-12)

    def test_trace_preserved(self, rng):
        channel = Channel(random_kraus_family(2, 3, rng))
        assert channel.is_stochastic()
        assert np.trace(channel.apply(random_density(2, rng))).real == pytest.approx(1.0)

    def test_dimension_checked(self, fix_mc):
        with pytest.raises(DimensionMismatchError):
            fix_mc.apply(np.eye(3))


class TestSpectralData:
    """谱半径与正特征矩阵"""

    def test_markov_fixture(self, fix_mc):
        data = fix_mc.spectral_data()
        assert data.lam == pytest.approx(1.0, abs=1e-10)
        assert np.allclose(data.rho, np.diag([0.375, 0.625]), atol=1e-9)
        assert np.allclose(data.sigma, np.eye(2), atol=1e-9)
        assert data.simple
        assert fix_mc.is_stochastic().residual < 1e-12

    def test_four_projectors(self, fix_four_proj):
        data = fix_four_proj.spectral_data()
        assert np.allclose(data.rho, np.eye(2) / 2, atol=1e-9)
        assert data.simple

    def test_normalization_of_pair(self, rng):
        data = Channel(random_kraus_family(3, 3, rng, stochastic=False)).spectral_data()
        assert np.trace(data.rho).real == pytest.approx(1.0)
        assert np.trace(data.sigma @ data.rho).real == pytest.approx(1.0)

    def test_cached(self, fix_mc):
        assert fix_mc.spectral_data() is fix_mc.spectral_data()

    def test_periodic_channel_is_not_simple(self):
        P, _ = shift_matrices(3)
        data = Channel.from_operators(P).spectral_data()
        assert data.lam == pytest.approx(1.0, abs=1e-10)
        assert not data.simple

    @pytest.mark.parametrize("c", [0.5, 2.0, 3.0])
    def test_scaling_covariance(self, fix_mc, rng, c):
        for family in (fix_mc.family, random_kraus_family(3, 3, rng, stochastic=False)):
            data = Channel(family).spectral_data()
            scaled = Channel(family.scaled(c)).spectral_data()
            assert scaled.lam == pytest.approx(abs(c) ** 2 * data.lam, rel=1e-9)
            assert np.allclose(scaled.rho, data.rho, atol=1e-9)
            assert np.allclose(scaled.sigma, data.sigma, atol=1e-9)

    @pytest.mark.parametrize("name", ["fix_mc", "fix_four_proj", "fix_shift_channel", "fix_gauss_channel"])
    def test_named_channels_match_oracle(self, request, name):
        channel = request.getfixturevalue(name)
        oracle = spectral_radius_oracle(channel)
        assert abs(channel.spectral_data().lam - oracle) <= 1e-8 * oracle
        assert min_eigenvalue(choi_matrix(channel.family)) >= -1e-10

    def test_oracle_equivalence(self, rng):
        for k in (2, 3):
            for _ in range(25):
                channel = Channel(random_kraus_family(k, int(rng.integers(2, 4)), rng, stochastic=False))
                oracle = spectral_radius_oracle(channel)
                assert abs(channel.spectral_data().lam - oracle) <= 1e-8 * oracle


class TestNormalize:
    """L̂ = λ^{-1/2} σ^{1/2} L σ^{-1/2}"""

    def test_normalization_suite(self, rng):
        for k in (2, 3):
            for _ in range(10):
                channel = Channel(random_kraus_family(k, 3, rng, stochastic=False))
                data = channel.spectral_data()
                normalized = channel.normalize()
                hat = normalized.spectral_data()
                root = hermitian_sqrt(data.sigma)
                assert hat.lam == pytest.approx(1.0, abs=1e-8)
                assert hs_norm(normalized.apply_dual(np.eye(k)) - np.eye(k)) <= 1e-8
                assert hs_norm(hat.rho - root @ data.rho @ root) <= 1e-8
                assert irreducibility_report(normalized).verdict == irreducibility_report(channel).verdict

    def test_fixed_point_of_stochastic_channel(self, fix_mc):
        normalized = fix_mc.normalize()
        assert np.allclose(normalized.operators, fix_mc.operators, atol=1e-10)

    def test_scaled_markov_normalizes_back(self, fix_mc):
        scaled = Channel(fix_mc.family.scaled(np.sqrt(3.0)))
        assert scaled.spectral_data().lam == pytest.approx(3.0, rel=1e-10)
        assert np.allclose(scaled.normalize().operators, fix_mc.operators, atol=1e-10)

    @pytest.mark.parametrize("k", [2, 3])
    def test_idempotent(self, rng, k):
        for _ in range(5):
            once = Channel(random_kraus_family(k, 3, rng, stochastic=False)).normalize()
            twice = once.normalize()
            assert np.allclose(twice.operators, once.operators, atol=1e-9)

    def test_singular_sigma(self):
        channel = Channel.from_operators(np.array([[1.0, 1.0], [0.0, 0.5]]))
        with pytest.raises(NotNormalizableError):
            channel.normalize()


class TestTimeAverage:

    def test_converges_to_stationary(self, fix_mc):
        average = fix_mc.time_average(np.diag([1.0, 0.0]), 2000)
        assert average.distance < 1e-3
        assert np.trace(average.average).real == pytest.approx(1.0)

    def test_four_projectors_collapse_in_one_step(self, fix_four_proj, rng):
        average = fix_four_proj.time_average(random_density(2, rng), 2)
        assert np.allclose(average.average, np.eye(2) / 2, atol=1e-12)
        assert average.distance < 1e-9

    @pytest.mark.parametrize("steps", [1, 5, 50])
    def test_stationary_start_stays_put(self, fix_mc, steps):
        rho = fix_mc.spectral_data().rho
        average = fix_mc.time_average(rho, steps)
        assert np.allclose(average.average, rho, atol=1e-11)

    def test_requires_stochastic(self, rng):
        channel = Channel(random_kraus_family(2, 2, rng, stochastic=False).scaled(3.0))
        with pytest.raises(NonStochasticError):
            channel.time_average(np.eye(2) / 2, 10)


class TestIrreducibility:
    """不可约性判定"""

    def test_markov_fixture(self, fix_mc):
        report = irreducibility_report(fix_mc)
        assert report.verdict == Verdict.IRREDUCIBLE
        assert report.evidence["test"] == "spectral"

    def test_random_channels(self, rng):
        for _ in range(5):
            assert irreducibility_report(Channel(random_kraus_family(3, 3, rng))).verdict == Verdict.IRREDUCIBLE

    def test_block_families(self, rng):
        for k in (2, 3, 4):
            family = random_block_reducible_family(k, rng)
            report = irreducibility_report(Channel(family))
            assert report.verdict == Verdict.REDUCIBLE
            assert report.evidence["failing_pairs"] >= 1

    def test_triangular_family(self):
        channel = Channel.from_operators(np.array([[1.0, 1.0], [0.0, 0.5]]))
        assert irreducibility_report(channel).verdict == Verdict.REDUCIBLE
