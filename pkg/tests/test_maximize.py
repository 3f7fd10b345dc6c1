"""Monte-Carlo spread estimation and CELF greedy selection."""

from __future__ import annotations

import numpy as np
import pytest

from cascadeim import (
    Graph,
    Model,
    SeedSet,
    Worlds,
    estimate_sigma,
    exact_optimal_seeds,
    exact_sigma,
    greedy_im,
    lazy_greedy,
    sample_worlds,
)

from conftest import make_random_graph


class TestEstimateSigma:
    def test_full_seed_set(self):
        g = Graph.from_edges(4, Model.IC, [(0, 1, 0.5)])
        est = estimate_sigma(g, range(4), 500, rng_seed=1)
        assert est.mean == 4.0
        assert est.std_error == 0.0

    def test_empty_seed_set(self):
        g = Graph.from_edges(4, Model.IC, [(0, 1, 0.5)])
        est = estimate_sigma(g, [], 500, rng_seed=1)
        assert est.mean == 0.0

    def test_single_edge_converges(self):
        g = Graph.from_edges(2, Model.IC, [(0, 1, 0.5)])
        est = estimate_sigma(g, [0], 100_000, rng_seed=3)
        assert abs(est.mean - 1.5) <= 0.01

    def test_lt_worlds_converge(self, rng):
        g = make_random_graph(rng, 5, 0.5, 0.1, 0.5, Model.LT)
        sigma = exact_sigma(g, [0, 2])
        est = estimate_sigma(g, [0, 2], 100_000, rng_seed=5)
        assert abs(est.mean - sigma) <= 4 * max(est.std_error, 1e-4)

    def test_deterministic(self, rng):
        g = make_random_graph(rng, 5, 0.5, 0.2, 0.9, Model.IC)
        a = estimate_sigma(g, [1], 5000, rng_seed=9)
        b = estimate_sigma(g, [1], 5000, rng_seed=9)
        assert a == b

    def test_num_sims_validated(self):
        g = Graph.from_edges(2, Model.IC, [(0, 1, 0.5)])
        with pytest.raises(ValueError):
            estimate_sigma(g, [0], 0, rng_seed=1)

    def test_mean_within_3se_of_exact(self, rng):
        # 3-standard-error coverage over repeated estimates: >= 99% of trials
        g = make_random_graph(rng, 6, 0.4, 0.2, 0.8, Model.IC)
        sigma = exact_sigma(g, [0, 3])
        trials, hits = 300, 0
        for seed in range(trials):
            est = estimate_sigma(g, [0, 3], 4000, rng_seed=seed)
            if abs(est.mean - sigma) <= 3 * est.std_error:
                hits += 1
        assert hits >= 0.99 * trials


class TestGreedy:
    def test_k_equals_n(self, rng):
        g = make_random_graph(rng, 5, 0.4, 0.2, 0.8, Model.IC)
        assert greedy_im(g, 5, 500, rng_seed=1).nodes == frozenset(range(5))

    def test_star_center_first(self):
        g = Graph.from_edges(5, Model.IC, [(0, leaf, 1.0) for leaf in range(1, 5)])
        assert greedy_im(g, 1, 500, rng_seed=1).nodes == frozenset({0})

    def test_k_out_of_range(self):
        g = Graph.from_edges(3, Model.IC, [(0, 1, 0.5)])
        with pytest.raises(ValueError):
            greedy_im(g, 0, 100, rng_seed=1)
        with pytest.raises(ValueError):
            greedy_im(g, 4, 100, rng_seed=1)

    def test_returns_exactly_min_k_n(self):
        g = Graph.from_edges(4, Model.IC, [])  # zero marginal gains beyond 1 each
        out = greedy_im(g, 3, 200, rng_seed=1)
        assert len(out.nodes) == 3
        # smallest-index tie break fills with 0, 1, 2
        assert out.nodes == frozenset({0, 1, 2})

    def test_gains_non_increasing(self, rng):
        for model in Model:
            for trial in range(10):
                g = make_random_graph(rng, 7, 0.4, 0.2, 0.8, model)
                worlds = sample_worlds(g, 2000, rng_seed=trial)
                sel = lazy_greedy(g, 4, worlds)
                gains = list(sel.gains)
                assert all(a >= b - 1e-12 for a, b in zip(gains, gains[1:]))
                assert len(sel.order) == 4

    def test_lazy_matches_plain_greedy(self, rng):
        # CELF against a naive full re-evaluation greedy on the same worlds
        for model in Model:
            g = make_random_graph(rng, 6, 0.5, 0.2, 0.9, model)
            worlds = sample_worlds(g, 3000, rng_seed=17)
            sel = lazy_greedy(g, 3, worlds)
            chosen: list[int] = []
            for _ in range(3):
                best, best_val = None, -1.0
                for x in range(6):
                    if x in chosen:
                        continue
                    val = worlds.reach_counts(chosen + [x]).mean()
                    if val > best_val + 1e-12:
                        best, best_val = x, val
                chosen.append(best)
            assert list(sel.order) == chosen

    def test_relabeling_equivariance(self, rng):
        g = make_random_graph(rng, 6, 0.5, 0.2, 0.9, Model.IC)
        perm = np.array([4, 2, 0, 5, 1, 3])  # new label of old node i
        params_p = np.zeros((6, 6))
        for u, v in g.edges:
            params_p[perm[u], perm[v]] = g.params[u, v]
        g_perm = Graph.from_matrix(Model.IC, params_p)
        worlds = sample_worlds(g, 4000, rng_seed=23)
        # carry the same worlds through the relabeling
        src_p, dst_p, _ = g_perm.edge_arrays
        edge_order = {e: i for i, e in enumerate(g_perm.edge_list)}
        col_of = [edge_order[(int(perm[u]), int(perm[v]))] for u, v in g.edge_list]
        live_p = np.empty_like(worlds.live)
        live_p[:, col_of] = worlds.live
        import cascadeim._reach as _reach

        worlds_p = Worlds(
            model=Model.IC,
            n=6,
            num_worlds=worlds.num_worlds,
            src=src_p,
            live=live_p,
            onehot=_reach.dst_onehot(dst_p, 6),
        )
        sel = lazy_greedy(g, 3, worlds)
        sel_p = lazy_greedy(g_perm, 3, worlds_p)
        assert {int(perm[x]) for x in sel.seed_set.nodes} == set(sel_p.seed_set.nodes)

    def test_greedy_near_optimal_on_small_instance(self, rng):
        g = make_random_graph(rng, 8, 0.3, 0.2, 0.7, Model.IC)
        out = greedy_im(g, 2, 20_000, rng_seed=7)
        _, opt = exact_optimal_seeds(g, 2)
        achieved = exact_sigma(g, out.nodes)
        assert achieved >= (1 - 1 / np.e) * opt - 1e-9


class TestSeedSet:
    def test_budget_enforced(self):
        with pytest.raises(ValueError):
            SeedSet(nodes=frozenset({0, 1, 2}), budget_k=2)
        SeedSet(nodes=frozenset({0, 1}), budget_k=2)
