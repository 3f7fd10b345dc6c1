"""Exact-oracle checks: closed forms vs enumeration, spread, optimal seeds."""

from __future__ import annotations

import itertools

import numpy as np
import pytest

from cascadeim import (
    Graph,
    InstanceTooLargeError,
    LiveEdgeGraph,
    Model,
    ModelMismatchError,
    SeedDistribution,
    exact_ap,
    exact_ap_given,
    exact_optimal_seeds,
    exact_sigma,
    exact_sigma_with_forced_in_edges,
)

from conftest import (
    brute_force_ap,
    brute_force_sigma,
    make_random_dist,
    make_random_graph,
)


class TestExactAp:
    def test_isolated_node(self):
        g = Graph.from_edges(2, Model.IC, [])
        d = SeedDistribution(np.array([0.0, 0.3]))
        assert exact_ap(g, d, 1) == pytest.approx(0.3, abs=1e-15)

    def test_ic_single_edge(self):
        g = Graph.from_edges(2, Model.IC, [(0, 1, 0.5)])
        d = SeedDistribution(np.array([0.5, 0.0]))
        assert exact_ap(g, d, 1) == pytest.approx(0.25, abs=1e-15)
        assert exact_ap_given(g, d, 1, 0, False) == pytest.approx(0.0, abs=1e-15)
        assert exact_ap_given(g, d, 1, 0, True) == pytest.approx(0.5, abs=1e-15)

    def test_lt_single_edge(self):
        g = Graph.from_edges(2, Model.LT, [(0, 1, 0.4)])
        d = SeedDistribution(np.array([0.5, 0.2]))
        assert exact_ap(g, d, 1) == pytest.approx(0.36, abs=1e-15)
        assert exact_ap_given(g, d, 1, 0, False) == pytest.approx(0.2, abs=1e-15)

    def test_conditional_rejects_same_node(self):
        g = Graph.from_edges(2, Model.IC, [(0, 1, 0.5)])
        d = SeedDistribution.uniform(2, 0.5)
        with pytest.raises(ValueError):
            exact_ap_given(g, d, 1, 1, False)

    def test_closed_forms_match_enumeration(self, rng):
        # the closed products/sums against plain seed-set enumeration
        for model in Model:
            for _ in range(20):
                g = make_random_graph(rng, 5, 0.6, 0.1, 0.9, model)
                d = make_random_dist(rng, 5, 0.05, 0.95)
                for v in range(5):
                    assert exact_ap(g, d, v) == pytest.approx(
                        brute_force_ap(g, d, v), abs=1e-12
                    )
                    for u in range(5):
                        if u == v:
                            continue
                        for seeded in (False, True):
                            assert exact_ap_given(g, d, v, u, seeded) == pytest.approx(
                                brute_force_ap(g, d, v, condition=(u, seeded)), abs=1e-12
                            )


class TestExactSigma:
    def test_full_seed_set(self, rng):
        for model in Model:
            g = make_random_graph(rng, 5, 0.5, 0.2, 0.8, model)
            assert exact_sigma(g, range(5)) == pytest.approx(5.0, abs=1e-12)

    def test_ic_single_edge(self):
        g = Graph.from_edges(2, Model.IC, [(0, 1, 0.5)])
        assert exact_sigma(g, [0]) == pytest.approx(1.5, abs=1e-15)

    def test_lt_deterministic_chain(self):
        g = Graph.from_edges(3, Model.LT, [(0, 1, 1.0), (1, 2, 1.0)])
        assert exact_sigma(g, [0]) == pytest.approx(3.0, abs=1e-15)

    def test_empty_seed_set(self, rng):
        for model in Model:
            g = make_random_graph(rng, 4, 0.5, 0.2, 0.8, model)
            assert exact_sigma(g, []) == 0.0

    def test_matches_python_enumeration(self, rng):
        for model in Model:
            for _ in range(10):
                g = make_random_graph(rng, 5, 0.5, 0.1, 0.9, model)
                seeds = [int(v) for v in np.flatnonzero(rng.random(5) < 0.5)]
                assert exact_sigma(g, seeds) == pytest.approx(
                    brute_force_sigma(g, seeds), abs=1e-10
                )

    def test_bounds(self, rng):
        for model in Model:
            g = make_random_graph(rng, 6, 0.5, 0.2, 0.8, model)
            seeds = [0, 3]
            s = exact_sigma(g, seeds)
            assert len(seeds) - 1e-12 <= s <= 6 + 1e-12

    def test_ic_cap(self):
        g = Graph.from_edges(6, Model.IC, [(u, v, 0.5) for u in range(6) for v in range(6) if u != v])
        with pytest.raises(InstanceTooLargeError):
            exact_sigma(g, [0], max_edges=10)

    def test_lt_cap(self):
        edges = [(u, v, 0.1) for u in range(8) for v in range(8) if u != v]
        g = Graph.from_edges(8, Model.LT, edges)
        with pytest.raises(InstanceTooLargeError):
            exact_sigma(g, [0], max_worlds=10_000)


class TestForcedInEdges:
    def test_empty_r_equals_plain_sigma(self, rng):
        for _ in range(5):
            g = make_random_graph(rng, 5, 0.5, 0.2, 0.9, Model.IC)
            seeds = [0, 2]
            assert exact_sigma_with_forced_in_edges(g, [], seeds) == pytest.approx(
                exact_sigma(g, seeds), abs=1e-12
            )

    def test_r_full_with_reaching_seed(self):
        g = Graph.from_edges(4, Model.IC, [(0, 1, 0.5)])
        # all incoming pairs forced: any nonempty seed set reaches everything
        assert exact_sigma_with_forced_in_edges(g, range(4), [0]) == pytest.approx(4.0)

    def test_dominance_lemma_on_random_instances(self, rng):
        # sigma(S u R) on the original graph dominates sigma(S) on the forced graph
        for _ in range(30):
            g = make_random_graph(rng, 6, 0.35, 0.1, 0.9, Model.IC)
            nodes = np.arange(6)
            r = [int(v) for v in nodes[rng.random(6) < 0.3]]
            s = [int(v) for v in nodes[rng.random(6) < 0.4]]
            lhs = exact_sigma(g, set(s) | set(r))
            rhs = exact_sigma_with_forced_in_edges(g, r, s)
            assert lhs >= rhs - 1e-9

    def test_lt_rejected(self):
        g = Graph.from_edges(3, Model.LT, [(0, 1, 0.4)])
        with pytest.raises(ModelMismatchError):
            exact_sigma_with_forced_in_edges(g, [1], [0])


class TestOptimalSeeds:
    def test_k_equals_n(self, rng):
        g = make_random_graph(rng, 5, 0.4, 0.2, 0.8, Model.IC)
        nodes, sigma = exact_optimal_seeds(g, 5)
        assert nodes == frozenset(range(5))
        assert sigma == pytest.approx(5.0, abs=1e-12)

    def test_star_center(self):
        g = Graph.from_edges(5, Model.IC, [(0, leaf, 1.0) for leaf in range(1, 5)])
        nodes, sigma = exact_optimal_seeds(g, 1)
        assert nodes == frozenset({0})
        assert sigma == pytest.approx(5.0, abs=1e-12)

    def test_matches_independent_enumeration(self, rng):
        # fast singleton-union path vs a direct loop over all C(n, k) sets
        for model in Model:
            g = make_random_graph(rng, 8 if model is Model.IC else 6, 0.3, 0.2, 0.9, model)
            nodes, sigma = exact_optimal_seeds(g, 2)
            best_direct, best_sigma = None, -1.0
            for combo in itertools.combinations(range(g.n), 2):
                s = exact_sigma(g, combo)
                if s > best_sigma:
                    best_direct, best_sigma = frozenset(combo), s
            assert sigma == pytest.approx(best_sigma, abs=1e-9)
            assert exact_sigma(g, nodes) == pytest.approx(best_sigma, abs=1e-9)
            assert nodes == best_direct

    def test_lexicographic_tie_break(self):
        g = Graph.from_edges(4, Model.IC, [])  # all singletons tie at sigma = 1
        nodes, sigma = exact_optimal_seeds(g, 1)
        assert nodes == frozenset({0})
        assert sigma == pytest.approx(1.0)

    def test_node_cap(self, rng):
        g = make_random_graph(rng, 6, 0.2, 0.2, 0.8, Model.IC)
        with pytest.raises(InstanceTooLargeError):
            exact_optimal_seeds(g, 2, max_nodes=5)


class TestInvariantSuites:
    def test_ic_ap_bound_chain(self, rng):
        # ap evaluated with the target's own seed draw removed obeys
        # ap <= 1 - prod(1 - p_uv) <= sum(p_uv)
        for _ in range(30):
            g = make_random_graph(rng, 6, 0.5, 0.1, 0.9, Model.IC)
            d = make_random_dist(rng, 6)
            for v in range(6):
                q0 = d.q.copy()
                q0[v] = 0.0
                ap = exact_ap(g, SeedDistribution(q0), v)
                srcs, ps = g.in_adjacency[v]
                middle = 1.0 - np.prod(1.0 - ps)
                assert ap <= middle + 1e-12
                assert middle <= ps.sum() + 1e-12

    def test_sigma_monotone_and_submodular(self, rng):
        for model in Model:
            for _ in range(10):
                g = make_random_graph(rng, 5, 0.45, 0.1, 0.9, model)
                nodes = list(range(5))
                s = {int(v) for v in np.array(nodes)[rng.random(5) < 0.3]}
                extra = {int(v) for v in np.array(nodes)[rng.random(5) < 0.3]}
                t = s | extra
                outside = [v for v in nodes if v not in t]
                if not outside:
                    continue
                x = outside[0]
                sig_s, sig_t = exact_sigma(g, s), exact_sigma(g, t)
                assert sig_s <= sig_t + 1e-9
                gain_s = exact_sigma(g, s | {x}) - sig_s
                gain_t = exact_sigma(g, t | {x}) - sig_t
                assert gain_s >= gain_t - 1e-9


class TestLiveEdgeGraph:
    def test_ic_sampling_and_reachability(self, rng):
        g = make_random_graph(rng, 6, 0.5, 0.3, 0.9, Model.IC)
        world = LiveEdgeGraph.sample_ic(g, np.random.default_rng(0))
        assert world.edges <= g.edges
        reach = world.reachable_from([0])
        assert 0 in reach

    def test_lt_sampling_respects_single_in_edge(self, rng):
        g = make_random_graph(rng, 6, 0.7, 0.1, 0.4, Model.LT)
        for seed in range(20):
            world = LiveEdgeGraph.sample_lt(g, np.random.default_rng(seed))
            assert world.lt_violations() == []

    def test_lt_choice_frequencies(self):
        g = Graph.from_edges(2, Model.LT, [(0, 1, 0.3)])
        rng = np.random.default_rng(5)
        hits = sum((0, 1) in LiveEdgeGraph.sample_lt(g, rng).edges for _ in range(50_000))
        assert abs(hits / 50_000 - 0.3) <= 0.01
