"""Shared fixtures and independent brute-force oracles for the test suite.

The oracles here are deliberately written as plain python enumerations,
independent of the library's vectorized paths, so every closed form is
checked against a second route.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

from cascadeim import Graph, Model, SeedDistribution


def make_random_graph(rng: np.random.Generator, n: int, density: float,
                      low: float, high: float, model: Model) -> Graph:
    """Test-local random graph (independent of the library's random_graph)."""
    params = np.zeros((n, n))
    for u in range(n):
        for v in range(n):
            if u != v and rng.random() < density:
                params[u, v] = rng.uniform(low, high)
    if model is Model.LT:
        for v in range(n):
            s = params[:, v].sum()
            if s > 0.95:
                params[:, v] *= 0.95 / s
    return Graph.from_matrix(model, params)


def make_random_dist(rng: np.random.Generator, n: int, lo: float = 0.1,
                     hi: float = 0.9) -> SeedDistribution:
    return SeedDistribution(rng.uniform(lo, hi, size=n))


def brute_force_ap(graph: Graph, dist: SeedDistribution, v: int,
                   condition: tuple[int, bool] | None = None) -> float:
    """P(v in S_1) by enumerating every seed set, optionally conditioning
    on one node's seed state.  Independent of the closed forms."""
    n = graph.n
    q = dist.q
    total = 0.0
    for bits in itertools.product([0, 1], repeat=n):
        if condition is not None:
            u, seeded = condition
            if bool(bits[u]) != seeded:
                continue
        weight = 1.0
        for w in range(n):
            factor = q[w] if bits[w] else 1.0 - q[w]
            if condition is not None and w == condition[0]:
                factor = 1.0  # conditioning removes this node's seed marginal
            weight *= factor
        if weight == 0.0:
            continue
        if bits[v]:
            total += weight
            continue
        if graph.model is Model.IC:
            miss = 1.0
            for u in range(n):
                if bits[u]:
                    miss *= 1.0 - graph.params[u, v]
            total += weight * (1.0 - miss)
        else:
            mass = sum(graph.params[u, v] for u in range(n) if bits[u])
            total += weight * min(1.0, mass)
    return total


def brute_force_sigma(graph: Graph, seeds) -> float:
    """Exact spread by plain-python live-edge enumeration (dict BFS)."""
    seeds = set(int(s) for s in seeds)
    edges = sorted(graph.edges)
    m = len(edges)
    total = 0.0
    if graph.model is Model.IC:
        for bits in itertools.product([0, 1], repeat=m):
            weight = 1.0
            kept = []
            for keep, (u, v) in zip(bits, edges):
                p = graph.params[u, v]
                weight *= p if keep else 1.0 - p
                if keep:
                    kept.append((u, v))
            if weight:
                total += weight * len(_reach_py(graph.n, kept, seeds))
        return total
    options = []
    for v in range(graph.n):
        incoming = [(u, graph.params[u, v]) for u in range(graph.n) if graph.params[u, v] > 0]
        rest = 1.0 - sum(w for _, w in incoming)
        options.append([(None, rest)] + [((u, v), w) for u, w in incoming])
    for combo in itertools.product(*options):
        weight = math.prod(w for _, w in combo)
        if not weight:
            continue
        kept = [e for e, _ in combo if e is not None]
        total += weight * len(_reach_py(graph.n, kept, seeds))
    return total


def _reach_py(n: int, edges, seeds: set[int]) -> set[int]:
    out: dict[int, list[int]] = {}
    for u, v in edges:
        out.setdefault(u, []).append(v)
    seen = set(seeds)
    stack = list(seeds)
    while stack:
        u = stack.pop()
        for v in out.get(u, ()):
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return seen


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
