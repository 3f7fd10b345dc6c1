"""Monte-Carlo influence spread estimation and lazy greedy seed selection.

Candidate seed sets are compared on one shared pool of pre-sampled
live-edge worlds (common random numbers): for IC each world keeps an edge
subset, for LT each world keeps at most one incoming edge per node.  The
pool average is a genuine monotone submodular set function, so lazy
(CELF-style) evaluation is exact and the recorded marginal gains are
non-increasing.  Deterministic given the world-sampling seed.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from . import _reach, _rng
from .graphs import Graph, Model

__all__ = [
    "SpreadEstimate",
    "SeedSet",
    "Worlds",
    "GreedySelection",
    "sample_worlds",
    "estimate_sigma",
    "lazy_greedy",
    "greedy_im",
]


@dataclass(frozen=True)
class SpreadEstimate:
    mean: float
    std_error: float
    num_simulations: int


@dataclass(frozen=True)
class SeedSet:
    """A chosen seed set together with the budget it respects."""

    nodes: frozenset[int]
    budget_k: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", frozenset(int(v) for v in self.nodes))
        if len(self.nodes) > self.budget_k:
            raise ValueError(f"{len(self.nodes)} seeds exceed the budget {self.budget_k}")


@dataclass(frozen=True, eq=False)
class Worlds:
    """A pool of live-edge worlds bound to one graph."""

    model: Model
    n: int
    num_worlds: int
    src: np.ndarray | None = None
    live: np.ndarray | None = None
    onehot: np.ndarray | None = None
    choice_src: np.ndarray | None = None

    def closure(self, active: np.ndarray) -> np.ndarray:
        """Close a (num_worlds, n) active matrix under the worlds' edges."""
        if self.model is Model.IC:
            return _reach.ic_reached(active, self.live, self.src, self.onehot)
        return _reach.lt_choice_reached(active, self.choice_src)

    def reached_from(self, nodes: Iterable[int]) -> np.ndarray:
        seeds = np.zeros((self.num_worlds, self.n), dtype=bool)
        seeds[:, [int(v) for v in nodes]] = True
        return self.closure(seeds)

    def reach_counts(self, nodes: Iterable[int]) -> np.ndarray:
        return self.reached_from(nodes).sum(axis=1)


def sample_worlds(graph: Graph, num_worlds: int, rng_seed: int) -> Worlds:
    """Draw a shared world pool; world i is a pure function of (rng_seed, i)."""
    if num_worlds < 1:
        raise ValueError("need at least one world")
    n = graph.n
    src, dst, p = graph.edge_arrays
    m = src.shape[0]
    if graph.model is Model.IC:
        width = _rng.padded_width(m)
        u = _rng.block_uniforms(rng_seed, _rng.STREAM_WORLDS, 0, num_worlds, width)
        live = u[:, :m] < p
        return Worlds(
            model=Model.IC,
            n=n,
            num_worlds=num_worlds,
            src=src,
            live=live,
            onehot=_reach.dst_onehot(dst, n),
        )
    width = _rng.padded_width(n)
    u = _rng.block_uniforms(rng_seed, _rng.STREAM_WORLDS, 0, num_worlds, width)
    choice_src = np.full((num_worlds, n), -1, dtype=np.int64)
    for v in range(n):
        srcs, ws = graph.in_adjacency[v]
        if not srcs.size:
            continue
        cum = np.cumsum(ws)
        idx = np.searchsorted(cum, u[:, v], side="right")
        srcs_ext = np.append(srcs, -1)
        choice_src[:, v] = srcs_ext[np.minimum(idx, srcs.size)]
    return Worlds(model=Model.LT, n=n, num_worlds=num_worlds, choice_src=choice_src)


def estimate_sigma(
    graph: Graph, seeds: Iterable[int], num_sims: int, rng_seed: int
) -> SpreadEstimate:
    """Mean final-active-set size over num_sims simulated worlds."""
    worlds = sample_worlds(graph, num_sims, rng_seed)
    counts = worlds.reach_counts(seeds)
    std_error = float(counts.std(ddof=1) / np.sqrt(num_sims)) if num_sims > 1 else 0.0
    return SpreadEstimate(
        mean=float(counts.mean()), std_error=std_error, num_simulations=num_sims
    )


@dataclass(frozen=True)
class GreedySelection:
    """Greedy pick order with the (non-increasing) marginal gains."""

    order: tuple[int, ...]
    gains: tuple[float, ...]
    seed_set: SeedSet


def lazy_greedy(graph: Graph, k: int, worlds: Worlds) -> GreedySelection:
    """CELF selection of k seeds maximizing the shared-pool mean spread.

    Ties break toward the smallest node index; the output has exactly
    min(k, n) nodes even when trailing marginal gains are zero.
    """
    n = graph.n
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    reached = np.zeros((worlds.num_worlds, n), dtype=bool)
    value = 0.0

    def value_with(x: int) -> float:
        seeded = reached.copy()
        seeded[:, x] = True
        return float(worlds.closure(seeded).sum(axis=1).mean())

    # heap entries: (-gain, node, size of S at evaluation time, f(S + node))
    heap = []
    for x in range(n):
        total = value_with(x)
        heap.append((-total, x, 0, total))
    heapq.heapify(heap)
    order: list[int] = []
    gains: list[float] = []
    while len(order) < k:
        neg_gain, x, stamp, total = heapq.heappop(heap)
        if stamp == len(order):
            order.append(x)
            gains.append(-neg_gain)
            value = total
            reached[:, x] = True
            reached = worlds.closure(reached)
        else:
            total = value_with(x)
            heapq.heappush(heap, (-(total - value), x, len(order), total))
    return GreedySelection(
        order=tuple(order),
        gains=tuple(gains),
        seed_set=SeedSet(nodes=frozenset(order), budget_k=k),
    )


def greedy_im(graph: Graph, k: int, num_sims: int = 10_000, rng_seed: int = 0) -> SeedSet:
    """Lazy-greedy seed selection on a fresh shared world pool."""
    if num_sims < 1:
        raise ValueError("need at least one simulation world")
    worlds = sample_worlds(graph, num_sims, rng_seed)
    return lazy_greedy(graph, k, worlds).seed_set
