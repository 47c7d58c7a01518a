"""Mixing-matrix parametrizations and planted-network sampling."""

import numpy as np
import pytest

from coreperiphery.sbm import (ASSORTATIVE, CORE_PERIPHERY, DEGENERATE,
                               DISASSORTATIVE, MixingMatrix,
                               ThetaParametrization, group_mean_degrees,
                               mixing_from_theta, sample_sbm,
                               weak_structure_mixing)


def rank_one_mixing(theta1, theta2, r):
    """Independent evaluation of the two rank-one terms."""
    u1 = np.array([np.sqrt(r), 1 / np.sqrt(r)])
    u2 = np.array([1 / np.sqrt(r), -np.sqrt(r)])
    return theta1 * np.outer(u1, u1) + theta2 * np.outer(u2, u2)


class TestMixingFromTheta:
    def test_theta2_zero_reduction(self):
        mix = mixing_from_theta(ThetaParametrization(3.0, 0.0, 2.0))
        assert (mix.c11, mix.c12, mix.c22) == (6.0, 3.0, 1.5)

    def test_matches_rank_one_sum(self):
        # expected values frozen from the independent rank-one evaluation
        expected = rank_one_mixing(3.0, 0.2, 2.0)
        np.testing.assert_allclose(expected[0, 0], 6.1)
        np.testing.assert_allclose(expected[0, 1], 2.8)
        np.testing.assert_allclose(expected[1, 1], 1.9)
        mix = mixing_from_theta(ThetaParametrization(3.0, 0.2, 2.0))
        assert (mix.c11, mix.c12, mix.c22) == pytest.approx((6.1, 2.8, 1.9))

    def test_upper_bound_violation(self):
        # bound theta1*(1-1/r)/(r+1) = 0.5 at theta1=3, r=2
        with pytest.raises(ValueError):
            ThetaParametrization(3.0, 0.6, 2.0)

    def test_lower_bound_violation(self):
        with pytest.raises(ValueError):
            ThetaParametrization(3.0, -1.6, 2.0)

    def test_admissible_points_classify_core_periphery(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            theta1 = rng.uniform(0.5, 5.0)
            r = rng.uniform(1.2, 4.0)
            lo, hi = ThetaParametrization.theta2_bounds(theta1, r)
            theta2 = rng.uniform(lo * 0.9, hi * 0.9)
            mix = mixing_from_theta(ThetaParametrization(theta1, theta2, r))
            assert mix.classify() == CORE_PERIPHERY


class TestWeakStructureMixing:
    def test_delta_zero_uniform(self):
        mix = weak_structure_mixing(3.0, 1.0, 1.0, 0.0)
        assert (mix.c11, mix.c12, mix.c22) == (3.0, 3.0, 3.0)
        assert mix.classify() == DEGENERATE

    def test_direct_substitution(self):
        mix = weak_structure_mixing(3.0, 2.0, 1.0, 0.5)
        assert (mix.c11, mix.c12, mix.c22) == (4.0, 3.0, 2.5)

    def test_nonnegativity(self):
        with pytest.raises(ValueError):
            weak_structure_mixing(3.0, 1.0, 1.0, 4.0)


class TestGroupMeanDegrees:
    def test_direct_substitution(self):
        d1, d2 = group_mean_degrees(0.5, MixingMatrix(6, 3, 1.5))
        assert (d1, d2) == (4.5, 2.25)

    def test_uniform_case(self):
        d1, d2 = group_mean_degrees(0.3, MixingMatrix(3, 3, 3))
        assert d1 == d2
        assert d1 == pytest.approx(3.0)

    def test_weak_family_gap(self):
        for delta in (0.1, 0.5, 1.0):
            mix = weak_structure_mixing(3.0, 1.0, 1.0, delta)
            d1, d2 = group_mean_degrees(0.5, mix)
            assert d1 - d2 == pytest.approx(0.5 * (1 + 1) * delta)
            assert d1 > d2


class TestClassify:
    def test_assortative(self):
        assert MixingMatrix(5, 1, 4).classify() == ASSORTATIVE

    def test_disassortative(self):
        assert MixingMatrix(1, 5, 2).classify() == DISASSORTATIVE

    def test_core_periphery_after_canonical_ordering(self):
        assert MixingMatrix(1.5, 3, 6).classify() == CORE_PERIPHERY

    def test_negative_entry_rejected(self):
        with pytest.raises(ValueError):
            MixingMatrix(1, -0.1, 1)


class TestSampleSbm:
    def test_determinism(self):
        mix = MixingMatrix(6, 3, 1.5)
        a = sample_sbm(500, 0.5, mix, seed=11)
        b = sample_sbm(500, 0.5, mix, seed=11)
        assert np.array_equal(a.truth, b.truth)
        assert np.array_equal(a.graph.edges, b.graph.edges)

    def test_different_seeds_differ(self):
        mix = MixingMatrix(6, 3, 1.5)
        a = sample_sbm(500, 0.5, mix, seed=11)
        b = sample_sbm(500, 0.5, mix, seed=12)
        assert not np.array_equal(a.graph.edges, b.graph.edges)

    def test_clamped_probability_gives_complete_block(self):
        # c11 = 2n makes p11 clamp to 1: every core-core pair is an edge
        n = 40
        net = sample_sbm(n, 0.999, MixingMatrix(2 * n, 0, 0), seed=0)
        core = np.flatnonzero(net.truth == 1)
        expected = len(core) * (len(core) - 1) // 2
        assert net.graph.m == expected

    def test_block_densities_within_binomial_bounds(self):
        n = 10_000
        mix = MixingMatrix(6, 3, 1.5)
        net = sample_sbm(n, 0.5, mix, seed=21)
        g1 = np.flatnonzero(net.truth == 1)
        g2 = np.flatnonzero(net.truth == 2)
        counts = {(1, 1): 0, (1, 2): 0, (2, 2): 0}
        for i, j in net.graph.edges:
            key = tuple(sorted((net.truth[i], net.truth[j])))
            counts[key] += 1
        pairs = {(1, 1): len(g1) * (len(g1) - 1) / 2,
                 (1, 2): len(g1) * len(g2),
                 (2, 2): len(g2) * (len(g2) - 1) / 2}
        for key, c_rs in ((1, 1), mix.c11), ((1, 2), mix.c12), ((2, 2), mix.c22):
            p = c_rs / n
            mean = pairs[key] * p
            sd = np.sqrt(pairs[key] * p * (1 - p))
            assert abs(counts[key] - mean) < 5 * sd

    def test_group_degree_means_poisson(self):
        n = 100_000
        mix = MixingMatrix(6, 3, 1.5)
        net = sample_sbm(n, 0.5, mix, seed=5)
        d1, d2 = group_mean_degrees(0.5, mix)
        deg = net.graph.degrees
        for label, target in ((1, d1), (2, d2)):
            sample = deg[net.truth == label]
            se = np.sqrt(target / len(sample))  # Poisson variance = mean
            assert abs(sample.mean() - target) < 3 * se

    def test_input_validation(self):
        mix = MixingMatrix(6, 3, 1.5)
        with pytest.raises(ValueError):
            sample_sbm(1, 0.5, mix, seed=0)
        with pytest.raises(ValueError):
            sample_sbm(10, 0.0, mix, seed=0)


class TestPairIndexing:
    def test_within_block_inversion_matches_enumeration(self):
        from coreperiphery.sbm import _pairs_within
        members = np.array([3, 5, 8, 9, 12, 20])
        k = len(members)
        flat = np.arange(k * (k - 1) // 2)
        got = _pairs_within(members, flat)
        expected = [(members[i], members[j])
                    for i in range(k) for j in range(i + 1, k)]
        assert list(map(tuple, got.tolist())) == expected

    def test_between_block_inversion(self):
        from coreperiphery.sbm import _pairs_between
        a = np.array([1, 4])
        b = np.array([2, 6, 7])
        flat = np.arange(6)
        got = _pairs_between(a, b, flat)
        expected = [(1, 2), (1, 6), (1, 7), (4, 2), (4, 6), (4, 7)]
        assert list(map(tuple, got.tolist())) == expected

    def test_skip_sample_statistics(self):
        from coreperiphery.sbm import _skip_sample
        rng = np.random.default_rng(3)
        idx = _skip_sample(rng, 100_000, 0.05)
        assert len(np.unique(idx)) == len(idx)
        assert idx.min() >= 0 and idx.max() < 100_000
        assert abs(len(idx) - 5000) < 5 * np.sqrt(5000)
