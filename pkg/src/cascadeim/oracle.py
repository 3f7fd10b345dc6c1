"""Brute-force exact computation on small instances: the ground truth layer.

One-step activation probabilities come from closed forms; influence spread
comes from full live-edge enumeration.  For IC the live-edge graph keeps
each edge independently with its parameter; for LT each node exclusively
selects at most one incoming edge, edge (u, v) with probability w_uv and no
edge with the leftover mass.  Reachability from the seed set in the
live-edge graph is distributed exactly as the final active set, so summing
reachable-set sizes against realization weights gives the exact spread.

Everything here is deliberately exponential; hard caps raise
:class:`InstanceTooLargeError` instead of silently degrading.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from . import _reach
from .graphs import Graph, Model, SeedDistribution
from .simulate import ModelMismatchError

__all__ = [
    "InstanceTooLargeError",
    "LiveEdgeGraph",
    "exact_ap",
    "exact_ap_given",
    "exact_one_step_probabilities",
    "exact_sigma",
    "exact_sigma_with_forced_in_edges",
    "exact_optimal_seeds",
]

MAX_IC_EDGES = 20
MAX_LT_WORLDS = 1_000_000
MAX_OPTIMAL_NODES = 12
_CHUNK = 1 << 16


class InstanceTooLargeError(RuntimeError):
    """The instance exceeds the configured enumeration cap."""


@dataclass(frozen=True)
class LiveEdgeGraph:
    """One realization of the live-edge random subgraph."""

    n: int
    edges: frozenset[tuple[int, int]]

    def lt_violations(self) -> list[str]:
        """LT realizations must keep at most one incoming edge per node."""
        counts: dict[int, int] = {}
        for _, v in self.edges:
            counts[v] = counts.get(v, 0) + 1
        return [f"node {v} keeps {c} incoming edges" for v, c in sorted(counts.items()) if c > 1]

    def reachable_from(self, seeds: Iterable[int]) -> frozenset[int]:
        out_adj: dict[int, list[int]] = {}
        for u, v in self.edges:
            out_adj.setdefault(u, []).append(v)
        seen = set(int(s) for s in seeds)
        stack = list(seen)
        while stack:
            u = stack.pop()
            for v in out_adj.get(u, ()):
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return frozenset(seen)

    @classmethod
    def sample_ic(cls, graph: Graph, rng: np.random.Generator) -> "LiveEdgeGraph":
        """Each edge kept independently with its parameter."""
        if graph.model is not Model.IC:
            raise ModelMismatchError("sample_ic requires an IC graph")
        src, dst, p = graph.edge_arrays
        keep = rng.random(p.shape[0]) < p
        edges = frozenset(
            (int(u), int(v)) for u, v, k in zip(src, dst, keep) if k
        )
        return cls(n=graph.n, edges=edges)

    @classmethod
    def sample_lt(cls, graph: Graph, rng: np.random.Generator) -> "LiveEdgeGraph":
        """Per node, at most one incoming edge, chosen with its weight."""
        if graph.model is not Model.LT:
            raise ModelMismatchError("sample_lt requires an LT graph")
        edges = set()
        draws = rng.random(graph.n)
        for v in range(graph.n):
            srcs, ws = graph.in_adjacency[v]
            cum = np.cumsum(ws)
            j = int(np.searchsorted(cum, draws[v], side="right"))
            if j < srcs.shape[0]:
                edges.add((int(srcs[j]), v))
        return cls(n=graph.n, edges=frozenset(edges))


def exact_ap(graph: Graph, dist: SeedDistribution, v: int) -> float:
    """Probability that v is active at step 1 (seed membership included).

    IC: 1 - (1 - q_v) * prod_{u in N(v)} (1 - q_u p_uv);
    LT: q_v + (1 - q_v) * sum_{u in N(v)} q_u w_uv.
    """
    _check_node(graph, v)
    q = dist.q
    srcs, ps = graph.in_adjacency[v]
    if graph.model is Model.IC:
        return float(1.0 - (1.0 - q[v]) * np.prod(1.0 - q[srcs] * ps))
    return float(q[v] + (1.0 - q[v]) * np.sum(q[srcs] * ps))


def exact_ap_given(
    graph: Graph, dist: SeedDistribution, v: int, u: int, u_seeded: bool
) -> float:
    """One-step activation probability of v conditioned on u's seed state."""
    _check_node(graph, v)
    _check_node(graph, u)
    if u == v:
        raise ValueError("conditioning node must differ from the target node")
    q = dist.q
    srcs, ps = graph.in_adjacency[v]
    is_u = srcs == u
    p_uv = float(ps[is_u][0]) if is_u.any() else 0.0
    if graph.model is Model.IC:
        prod_others = float(np.prod((1.0 - q[srcs] * ps)[~is_u]))
        factor_u = (1.0 - p_uv) if u_seeded else 1.0
        return float(1.0 - (1.0 - q[v]) * prod_others * factor_u)
    base = float(np.sum((q[srcs] * ps)[~is_u]))
    if u_seeded:
        base += p_uv
    return float(q[v] + (1.0 - q[v]) * base)


def exact_one_step_probabilities(
    graph: Graph, dist: SeedDistribution
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(q, ap, ap_given_not) with ap_given_not[u, v] = ap(v | u not seeded).

    The diagonal of ap_given_not is NaN: the estimators never use u = v.
    """
    n = graph.n
    ap = np.array([exact_ap(graph, dist, v) for v in range(n)])
    given = np.full((n, n), np.nan)
    for u in range(n):
        for v in range(n):
            if u != v:
                given[u, v] = exact_ap_given(graph, dist, v, u, u_seeded=False)
    return dist.q.copy(), ap, given


def _check_node(graph: Graph, v: int) -> None:
    if not 0 <= v < graph.n:
        raise ValueError(f"node {v} out of range for n={graph.n}")


def _seed_mask(n: int, seeds: Iterable[int]) -> np.ndarray:
    mask = np.zeros(n, dtype=bool)
    nodes = [int(s) for s in seeds]
    if nodes and not all(0 <= s < n for s in nodes):
        raise ValueError(f"seed nodes out of range for n={n}")
    mask[nodes] = True
    return mask


def _ic_world_chunks(
    p: np.ndarray, chunk: int = _CHUNK
) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield (live, weight) for every subset of the m enumerated edges."""
    m = p.shape[0]
    total = 1 << m
    shifts = np.arange(m, dtype=np.uint64)
    for lo in range(0, total, chunk):
        idx = np.arange(lo, min(lo + chunk, total), dtype=np.uint64)
        live = ((idx[:, None] >> shifts) & np.uint64(1)).astype(bool)
        weight = np.prod(np.where(live, p, 1.0 - p), axis=1)
        yield live, weight


def _lt_choice_tables(graph: Graph) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-node exclusive-choice tables: radices, source table, weight table.

    Choice 0 means "no incoming edge" (leftover mass); choice j >= 1 selects
    the j-th in-neighbor in sorted order.
    """
    n = graph.n
    radices = np.array([graph.in_degree(v) + 1 for v in range(n)], dtype=np.int64)
    width = int(radices.max()) if n else 1
    src_table = np.full((n, width), -1, dtype=np.int64)
    w_table = np.zeros((n, width))
    for v in range(n):
        srcs, ws = graph.in_adjacency[v]
        total = float(ws.sum())
        if total > 1.0 + 1e-12:
            raise ValueError(f"LT normalization violated at node {v} (sum {total})")
        w_table[v, 0] = max(1.0 - total, 0.0)
        src_table[v, 1 : 1 + srcs.shape[0]] = srcs
        w_table[v, 1 : 1 + ws.shape[0]] = ws
    return radices, src_table, w_table


def _lt_world_chunks(
    graph: Graph, max_worlds: int, chunk: int = _CHUNK
) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield (choice_src, weight) over all exclusive in-edge combinations."""
    radices, src_table, w_table = _lt_choice_tables(graph)
    n = graph.n
    total = int(np.prod(radices)) if n else 1
    strides = np.ones(n, dtype=np.int64)
    for v in range(1, n):
        strides[v] = strides[v - 1] * radices[v - 1]
    node_idx = np.arange(n)
    for lo in range(0, total, chunk):
        idx = np.arange(lo, min(lo + chunk, total), dtype=np.int64)
        choice = (idx[:, None] // strides) % radices
        weight = np.prod(w_table[node_idx, choice], axis=1)
        choice_src = src_table[node_idx, choice]
        yield choice_src, weight


def _lt_world_count(graph: Graph) -> int:
    count = 1
    for v in range(graph.n):
        count *= graph.in_degree(v) + 1
    return count


def exact_sigma(
    graph: Graph,
    seeds: Iterable[int],
    *,
    max_edges: int = MAX_IC_EDGES,
    max_worlds: int = MAX_LT_WORLDS,
) -> float:
    """Exact influence spread sigma(S) = E[|final active set|]."""
    n = graph.n
    mask = _seed_mask(n, seeds)
    if graph.model is Model.IC:
        src, dst, p = graph.edge_arrays
        if p.shape[0] > max_edges:
            raise InstanceTooLargeError(
                f"{p.shape[0]} edges exceed the IC enumeration cap of {max_edges}"
            )
        onehot = _reach.dst_onehot(dst, n)
        total = 0.0
        for live, weight in _ic_world_chunks(p):
            seeds_rows = np.broadcast_to(mask, live.shape[:1] + (n,))
            reached = _reach.ic_reached(seeds_rows, live, src, onehot)
            total += float(weight @ reached.sum(axis=1))
        return total
    count = _lt_world_count(graph)
    if count > max_worlds:
        raise InstanceTooLargeError(
            f"{count} LT realizations exceed the enumeration cap of {max_worlds}"
        )
    total = 0.0
    for choice_src, weight in _lt_world_chunks(graph, max_worlds):
        seeds_rows = np.broadcast_to(mask, choice_src.shape)
        reached = _reach.lt_choice_reached(seeds_rows, choice_src)
        total += float(weight @ reached.sum(axis=1))
    return total


def exact_sigma_with_forced_in_edges(
    graph: Graph,
    forced_nodes: Iterable[int],
    seeds: Iterable[int],
    *,
    max_edges: int = MAX_IC_EDGES,
) -> float:
    """Exact spread on the modified IC graph with R's incoming edges forced.

    The modified graph carries parameter 1 on every ordered pair (u, v) with
    v in R and u != v (self-loops excluded); all other edges keep their
    original parameters.
    """
    if graph.model is not Model.IC:
        raise ModelMismatchError("forced-in-edge spread is defined for IC graphs")
    n = graph.n
    mask = _seed_mask(n, seeds)
    forced = _seed_mask(n, forced_nodes)
    src, dst, p = graph.edge_arrays
    keep = ~forced[dst]
    src_e, dst_e, p_e = src[keep], dst[keep], p[keep]
    if p_e.shape[0] > max_edges:
        raise InstanceTooLargeError(
            f"{p_e.shape[0]} enumerated edges exceed the IC cap of {max_edges}"
        )
    forced_pairs = [(u, v) for v in np.flatnonzero(forced) for u in range(n) if u != v]
    src_f = np.array([u for u, _ in forced_pairs], dtype=np.int64)
    dst_f = np.array([v for _, v in forced_pairs], dtype=np.int64)
    src_full = np.concatenate([src_e, src_f])
    onehot = _reach.dst_onehot(np.concatenate([dst_e, dst_f]), n)
    total = 0.0
    for live, weight in _ic_world_chunks(p_e):
        rows = live.shape[0]
        live_full = np.hstack([live, np.ones((rows, src_f.shape[0]), dtype=bool)])
        seeds_rows = np.broadcast_to(mask, (rows, n))
        reached = _reach.ic_reached(seeds_rows, live_full, src_full, onehot)
        total += float(weight @ reached.sum(axis=1))
    return total


def _singleton_reach_masks(
    model: Model, n: int, live_or_choice: np.ndarray, src: np.ndarray, onehot: np.ndarray
) -> np.ndarray:
    """(rows,) int64 reachability bitmask per world, per singleton seed: (n, rows)."""
    rows = live_or_choice.shape[0]
    bit_weights = (np.int64(1) << np.arange(n, dtype=np.int64))
    masks = np.empty((n, rows), dtype=np.int64)
    for s in range(n):
        seeds = np.zeros((rows, n), dtype=bool)
        seeds[:, s] = True
        if model is Model.IC:
            reached = _reach.ic_reached(seeds, live_or_choice, src, onehot)
        else:
            reached = _reach.lt_choice_reached(seeds, live_or_choice)
        masks[s] = reached.astype(np.int64) @ bit_weights
    return masks


def exact_optimal_seeds(
    graph: Graph,
    k: int,
    *,
    max_nodes: int = MAX_OPTIMAL_NODES,
    max_edges: int = MAX_IC_EDGES,
    max_worlds: int = MAX_LT_WORLDS,
) -> tuple[frozenset[int], float]:
    """Exhaustive argmax of sigma over seed sets of size k.

    By monotonicity the optimum over sets of size at most k is attained at
    size exactly k, so only size-k sets are enumerated; ties break toward
    the lexicographically smallest set.
    """
    n = graph.n
    if n > max_nodes:
        raise InstanceTooLargeError(f"n={n} exceeds the exhaustive-search cap of {max_nodes}")
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    if graph.model is Model.IC:
        src, dst, p = graph.edge_arrays
        if p.shape[0] > max_edges:
            raise InstanceTooLargeError(
                f"{p.shape[0]} edges exceed the IC enumeration cap of {max_edges}"
            )
        chunks = _ic_world_chunks(p)
        onehot = _reach.dst_onehot(dst, n)
    else:
        count = _lt_world_count(graph)
        if count > max_worlds:
            raise InstanceTooLargeError(
                f"{count} LT realizations exceed the enumeration cap of {max_worlds}"
            )
        chunks = _lt_world_chunks(graph, max_worlds)
        src = onehot = None  # type: ignore[assignment]
    combos = list(itertools.combinations(range(n), k))
    sigmas = np.zeros(len(combos))
    popcount = np.array([bin(i).count("1") for i in range(1 << n)], dtype=np.int64)
    for worlds, weight in chunks:
        masks = _singleton_reach_masks(graph.model, n, worlds, src, onehot)
        for ci, combo in enumerate(combos):
            union = masks[combo[0]].copy()
            for s in combo[1:]:
                union |= masks[s]
            sigmas[ci] += float(weight @ popcount[union])
    best = int(np.argmax(sigmas))  # argmax returns the first (lexicographic) maximizer
    return frozenset(combos[best]), float(sigmas[best])
