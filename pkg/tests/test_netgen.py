"""Tests for blockmodel sampling, group indicators, and connection probabilities."""

import numpy as np
import pytest

from ruinnet.model import AgentSubset
from ruinnet.netgen import (
    BipartiteGraph,
    BlockModel,
    connect_prob,
    connect_prob_enumerated,
    group_indicators,
    sample_graph,
    sample_group_counts,
    sample_group_indicators,
    sample_types,
)
from ruinnet.streams import stream


def random_model(rng, K=None, L=None):
    K = K or int(rng.integers(1, 4))
    L = L or int(rng.integers(1, 4))
    return BlockModel(
        w=rng.dirichlet(np.ones(K)),
        v=rng.dirichlet(np.ones(L)),
        p=rng.uniform(0.0, 1.0, size=(K, L)),
    )


class TestBlockModel:
    def test_bernoulli_factory(self):
        m = BlockModel.bernoulli(0.3)
        assert m.is_bernoulli and m.K == 1 and m.L == 1
        assert m.p[0, 0] == 0.3

    def test_rejects_bad_probabilities(self):
        with pytest.raises(ValueError):
            BlockModel(w=[0.5, 0.4], v=[1.0], p=[[0.5], [0.5]])
        with pytest.raises(ValueError):
            BlockModel(w=[1.0], v=[1.0], p=[[1.5]])
        with pytest.raises(ValueError):
            BlockModel(w=[0.5, 0.5], v=[1.0], p=[[0.5]])


class TestSampleTypes:
    def test_degenerate_single_type(self):
        m = BlockModel.bernoulli(0.5)
        types = sample_types(m, 5, 7, stream(0, 1))
        assert (types.s == 0).all() and (types.t == 0).all()

    def test_point_mass(self):
        m = BlockModel(w=[1.0, 0.0], v=[1.0], p=[[0.5], [0.5]])
        types = sample_types(m, 50, 3, stream(0, 2))
        assert (types.s == 0).all()

    def test_binomial_concentration(self):
        m = BlockModel(w=[0.5, 0.5], v=[1.0], p=[[0.5], [0.5]])
        types = sample_types(m, 100_000, 1, stream(7, 3))
        frac = (types.s == 0).mean()
        assert abs(frac - 0.5) < 0.01


class TestSampleGraph:
    def test_empty_and_complete(self):
        types = sample_types(BlockModel.bernoulli(0.5), 4, 5, stream(1, 0))
        empty = sample_graph(BlockModel.bernoulli(0.0), types, stream(1, 1))
        full = sample_graph(BlockModel.bernoulli(1.0), types, stream(1, 2))
        assert not empty.incidence.any()
        assert full.incidence.all()

    def test_edge_count_concentration(self):
        m = BlockModel.bernoulli(0.5)
        types = sample_types(m, 100, 100, stream(2, 0))
        graph = sample_graph(m, types, stream(2, 1))
        assert abs(int(graph.incidence.sum()) - 5000) < 300  # 6 sigma

    def test_bit_identical_for_same_stream(self):
        m = random_model(np.random.default_rng(5))
        types = sample_types(m, 30, 40, stream(3, 0))
        g1 = sample_graph(m, types, stream(3, 1))
        g2 = sample_graph(m, types, stream(3, 1))
        np.testing.assert_array_equal(g1.incidence, g2.incidence)
        g3 = sample_graph(m, types, stream(3, 2))
        assert (g1.incidence != g3.incidence).any()


class TestGroupIndicators:
    def test_empty_graph(self):
        g = BipartiteGraph(np.zeros((3, 4), dtype=bool))
        assert not group_indicators(g, AgentSubset.prefix(2)).any()

    def test_single_agent_row(self):
        g = BipartiteGraph(np.array([[1, 0, 1], [1, 1, 1]], dtype=bool))
        np.testing.assert_array_equal(
            group_indicators(g, AgentSubset((1,))), [True, False, True]
        )

    def test_max_over_group(self):
        g = BipartiteGraph(np.array([[1, 0], [0, 1]], dtype=bool))
        np.testing.assert_array_equal(
            group_indicators(g, AgentSubset.prefix(2)), [True, True]
        )


class TestConnectProb:
    def test_bernoulli_pair(self):
        assert connect_prob(BlockModel.bernoulli(0.5), 2) == pytest.approx(0.75)

    def test_single_agent_marginal(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            m = random_model(rng)
            expected = float((m.p * m.w[:, None] * m.v[None, :]).sum())
            assert connect_prob(m, 1) == pytest.approx(expected, abs=1e-12)

    def test_table_scale_value(self):
        d = 100_000
        m = BlockModel.bernoulli(d**-0.5)
        assert connect_prob(m, 100) == pytest.approx(0.27148, abs=1e-5)

    def test_matches_enumerated_display(self):
        rng = np.random.default_rng(17)
        for _ in range(25):
            m = random_model(rng, K=int(rng.integers(1, 4)), L=int(rng.integers(1, 4)))
            size_q = int(rng.integers(1, 6))
            assert connect_prob(m, size_q) == pytest.approx(
                connect_prob_enumerated(m, size_q), abs=1e-12
            )

    def test_monotone_in_group_size_and_p(self):
        rng = np.random.default_rng(23)
        m = random_model(rng)
        probs = [connect_prob(m, k) for k in range(1, 8)]
        assert all(a <= b + 1e-15 for a, b in zip(probs, probs[1:]))
        base = BlockModel.bernoulli(0.3)
        bigger = BlockModel.bernoulli(0.4)
        assert connect_prob(base, 3) <= connect_prob(bigger, 3)

    def test_empirical_frequency(self):
        # indicator frequency over replicate graphs matches the closed form
        rng_master = np.random.default_rng(29)
        m = random_model(rng_master, K=2, L=2)
        group = AgentSubset.prefix(2)
        R = 10_000
        hits = 0
        for r in range(R):
            rng = stream(77, 4, r)
            types = sample_types(m, 3, 1, rng)
            graph = sample_graph(m, types, rng)
            hits += int(group_indicators(graph, group)[0])
        p = connect_prob(m, 2)
        assert abs(hits / R - p) < 4 * np.sqrt(p * (1 - p) / R)


class TestFastPaths:
    def test_requires_one_type_model(self):
        m = BlockModel(w=[0.5, 0.5], v=[1.0], p=[[0.2], [0.8]])
        with pytest.raises(ValueError):
            sample_group_indicators(m, 2, 5, stream(0, 0))
        with pytest.raises(ValueError):
            sample_group_counts(m, 2, np.array([3]), stream(0, 0), 10)

    def test_indicator_probability(self):
        m = BlockModel.bernoulli(0.5)
        ind = sample_group_indicators(m, 3, 200_000, stream(5, 0))
        pc = 1 - 0.5**3
        assert abs(ind.mean() - pc) < 4 * np.sqrt(pc * (1 - pc) / ind.size)

    def test_counts_match_graph_distribution(self):
        # collapsed binomial counts agree with the full graph pipeline
        m = BlockModel.bernoulli(0.4)
        group = AgentSubset.prefix(2)
        d, R = 6, 4000
        pc = connect_prob(m, 2)
        counts_fast = sample_group_counts(m, 2, np.array([d]), stream(9, 0), R)[:, 0]
        counts_graph = np.empty(R, dtype=int)
        for r in range(R):
            rng = stream(9, 1, r)
            types = sample_types(m, 2, d, rng)
            counts_graph[r] = group_indicators(sample_graph(m, types, rng), group).sum()
        # both empirical pmfs must match Binomial(d, pc) bin by bin
        from math import comb

        for k in range(d + 1):
            pmf = comb(d, k) * pc**k * (1 - pc) ** (d - k)
            tol = 5 * np.sqrt(pmf * (1 - pmf) / R) + 1e-9
            assert abs((counts_fast == k).mean() - pmf) < tol
            assert abs((counts_graph == k).mean() - pmf) < tol
