#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
先验测度与 Kraus 族测试
"""

import numpy as np
import pytest

from channel_errors import ChannelError, DimensionMismatchError, NonStochasticError, TruncationError
from measure import (
    KrausFamily,
    LMapKind,
    LMapSpec,
    MatrixAtom,
    PriorMeasure,
    build_family,
    family_summary,
    from_gaussian_rotation,
    from_markov_chain,
    harmonic_generator,
    prune_zero_atoms,
    shift_generator,
    single_atom_generator,
    truncate_infinite_family,
)
from random_ensembles import random_complex_matrix, random_kraus_family, random_unitary


class TestAtoms:
    """原子与先验测度的校验"""

    def test_atom_requires_square_point(self):
        with pytest.raises(DimensionMismatchError):
            MatrixAtom(np.ones((2, 3)), 1.0)

    def test_atom_requires_positive_weight(self):
        with pytest.raises(ValueError):
            MatrixAtom(np.eye(2), 0.0)

    def test_measure_requires_atoms(self):
        with pytest.raises(ValueError):
            PriorMeasure(())

    def test_measure_requires_common_dimension(self):
        with pytest.raises(DimensionMismatchError):
            PriorMeasure((MatrixAtom(np.eye(2), 1.0), MatrixAtom(np.eye(3), 1.0)))

    def test_mass_is_not_normalized(self, rng):
        mu = PriorMeasure.from_arrays([0.25, 2.0], random_complex_matrix(2, rng, size=2))
        assert mu.mass == pytest.approx(2.25)
        assert mu.size == 2 and mu.dim == 2

    def test_same_atoms(self, rng):
        points = random_complex_matrix(2, rng, size=3)
        first = PriorMeasure.from_arrays([1.0, 1.0, 1.0], points)
        second = PriorMeasure.from_arrays([1.0, 1.0, 1.0], points.copy())
        third = PriorMeasure.from_arrays([1.0, 1.0, 2.0], points)
        assert first.same_atoms(second)
        assert not first.same_atoms(third)


class TestBuildFamily:
    """(μ, L) → Kraus 族"""

    def test_identity_map(self, rng):
        points = random_complex_matrix(2, rng, size=3)
        family = build_family(PriorMeasure.from_arrays([1.0, 2.0, 3.0], points), LMapSpec.identity())
        assert np.allclose(family.operators, points)
        assert np.allclose(family.weights, [1.0, 2.0, 3.0])

    def test_conjugation_map(self, rng):
        points = random_complex_matrix(3, rng, size=2)
        U = random_unitary(3, rng)
        family = build_family(PriorMeasure.from_arrays([1.0, 1.0], points), LMapSpec.conjugation(U))
        for K, v in zip(family.operators, points):
            assert np.allclose(K, U @ v @ U.conj().T)

    def test_conjugation_requires_unitary(self):
        with pytest.raises(ChannelError):
            LMapSpec.conjugation(np.diag([1.0, 2.0]))

    def test_table_length_checked(self, rng):
        mu = PriorMeasure.from_arrays([1.0, 1.0], random_complex_matrix(2, rng, size=2))
        with pytest.raises(DimensionMismatchError):
            build_family(mu, LMapSpec.from_table(random_complex_matrix(2, rng, size=3)))

    def test_zero_atoms_are_pruned(self, rng):
        points = random_complex_matrix(2, rng, size=3)
        points[1] = 0.0
        mu = PriorMeasure.from_arrays([1.0, 1.0, 1.0], points)
        family = build_family(mu, LMapSpec.identity())
        assert family.size == 2
        assert family.indices.tolist() == [0, 2]
        assert family.mass == pytest.approx(3.0)
        assert np.allclose(family.points, points[[0, 2]])

    def test_all_zero_family_rejected(self):
        mu = PriorMeasure.from_arrays([1.0], np.zeros((1, 2, 2)))
        with pytest.raises(ChannelError):
            build_family(mu, LMapSpec.identity())

    def test_prune_after_replacing_operators(self, rng):
        family = random_kraus_family(2, 3, rng)
        operators = family.operators.copy()
        operators[0] = 0.0
        pruned = prune_zero_atoms(family.with_operators(operators))
        assert pruned.size == 2
        assert pruned.indices.tolist() == [1, 2]


class TestKrausFamily:

    def test_stochastic_family(self, rng):
        family = random_kraus_family(3, 4, rng)
        assert np.allclose(family.kraus_sum(), np.eye(3), atol=1e-12)
        assert family.square_integrability == pytest.approx(3.0)
        assert family_summary(family)["stochastic_residual"] < 1e-12

    def test_scaled(self, rng):
        family = random_kraus_family(2, 3, rng)
        assert np.allclose(family.scaled(2.0).kraus_sum(), 4.0 * np.eye(2), atol=1e-12)

    def test_with_operators_keeps_measure(self, rng):
        family = random_kraus_family(2, 3, rng)
        replaced = family.with_operators(2.0 * family.operators)
        assert replaced.measure is family.measure
        assert replaced.lmap.kind == LMapKind.TABLE
        with pytest.raises(DimensionMismatchError):
            family.with_operators(family.operators[:2])

    def test_from_single_operator(self):
        family = KrausFamily.from_operators(np.eye(2))
        assert family.size == 1 and family.dim == 2


class TestNamedMeasures:
    """马尔可夫链与高斯旋转"""

    def test_markov_atoms_row_major(self):
        P = np.array([[0.5, 0.3], [0.5, 0.7]])
        mu, family = from_markov_chain(P)
        assert mu.size == 4
        assert family.operators[1][0, 1] == pytest.approx(np.sqrt(0.3))
        assert family.operators[2][1, 0] == pytest.approx(np.sqrt(0.5))
        assert np.allclose(family.kraus_sum(), np.eye(2))

    def test_identity_chain_prunes_zero_atoms(self):
        mu, family = from_markov_chain(np.eye(2))
        assert mu.size == 4
        assert family.size == 2
        assert family.indices.tolist() == [0, 3]
        assert np.allclose(family.operators, np.stack([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]))

    def test_circulant_chain(self):
        column = np.array([0.5, 0.3, 0.2])
        P = np.array([[column[(i - j) % 3] for j in range(3)] for i in range(3)])
        mu, family = from_markov_chain(P)
        assert mu.size == family.size == 9
        assert np.allclose(family.kraus_sum(), np.eye(3), atol=1e-12)

    def test_markov_requires_column_stochastic(self):
        with pytest.raises(NonStochasticError):
            from_markov_chain(np.array([[0.5, 0.5], [0.3, 0.7]]))
        with pytest.raises(NonStochasticError):
            from_markov_chain(np.array([[1.2, 0.3], [-0.2, 0.7]]))

    def test_gaussian_mass_and_stochasticity(self):
        mu, family = from_gaussian_rotation(40, 32)
        assert mu.size == 40 * 32
        assert mu.mass == pytest.approx(0.5, abs=1e-9)
        assert np.allclose(family.kraus_sum(), np.eye(2), atol=1e-9)

    def test_gaussian_requires_enough_nodes(self):
        with pytest.raises(ValueError):
            from_gaussian_rotation(4, 32)


class TestTruncation:
    """可数原子族的截断"""

    def test_harmonic_count(self):
        mu = truncate_infinite_family(harmonic_generator(), 1e-3)
        assert mu.size == 1000
        assert mu.mass == pytest.approx(np.pi ** 2 / 6, abs=1.1e-3)
        family = build_family(mu, LMapSpec.identity())
        assert np.allclose(family.kraus_sum(), np.eye(1), atol=1e-12)

    def test_shift_generator_is_renormalized(self):
        mu = truncate_infinite_family(shift_generator(), 1e-3)
        assert mu.size == 2432
        family = build_family(mu, LMapSpec.identity())
        assert np.allclose(family.kraus_sum(), np.eye(2), atol=1e-12)

    def test_atom_cap(self):
        with pytest.raises(TruncationError):
            truncate_infinite_family(harmonic_generator(), 1e-3, max_atoms=10)

    def test_non_positive_tolerance(self):
        with pytest.raises(ValueError):
            truncate_infinite_family(harmonic_generator(), 0.0)

    def test_single_atom(self):
        mu = truncate_infinite_family(single_atom_generator(np.eye(2)), 1e-12)
        assert mu.size == 1
