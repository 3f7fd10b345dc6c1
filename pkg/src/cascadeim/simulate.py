"""Cascade generation under IC and LT dynamics from a product seed distribution.

A cascade is the monotone sequence of active sets ``S_0 ⊆ S_1 ⊆ ... ⊆
S_{n-1}`` produced by one diffusion run; it stabilizes after at most
``n - 1`` rounds, so only the per-step *deltas* (newly activated nodes) up
to the stabilization step are stored.

Datasets are generated on counter-based per-cascade random streams derived
from ``(rng_seed, cascade index)``: cascade ``i`` can be regenerated in
isolation, and chunked or parallel generation is bit-identical to a
sequential pass.  The batch path samples the IC randomness as a per-cascade
live-edge subset (one Bernoulli draw per edge), which induces exactly the
step-rule cascade distribution; LT cascades draw one threshold per node, as
in the step rule itself.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from . import _reach, _rng
from .graphs import Graph, Model, SeedDistribution

__all__ = [
    "Cascade",
    "CascadeDataset",
    "ModelMismatchError",
    "sample_seed_set",
    "simulate_ic",
    "simulate_lt",
    "generate_dataset",
    "cascade_violations",
]


class ModelMismatchError(ValueError):
    """A graph/dataset was used with an operation for the other diffusion model."""


@dataclass(frozen=True, slots=True)
class Cascade:
    """One observed diffusion run over nodes 0..n-1.

    ``deltas[tau]`` holds the nodes newly active at step ``tau``;
    ``stable_at`` is the first step at which the final active set is
    reached, so ``len(deltas) == stable_at + 1``.  The logical sequence has
    length ``n``: all steps past ``stable_at`` repeat the final set.
    """

    n: int
    deltas: tuple[tuple[int, ...], ...]
    stable_at: int

    def step_set(self, tau: int) -> frozenset[int]:
        """Active set S_tau (tau may be any step up to n - 1)."""
        if not 0 <= tau < self.n:
            raise IndexError(f"step {tau} out of range for n={self.n}")
        upto = min(tau, self.stable_at) + 1
        return frozenset(v for delta in self.deltas[:upto] for v in delta)

    @property
    def seed_set(self) -> frozenset[int]:
        return frozenset(self.deltas[0])

    @property
    def one_step_set(self) -> frozenset[int]:
        """S_1 (equals S_0 when the cascade stabilized immediately)."""
        return self.step_set(min(1, self.n - 1)) if self.n else frozenset()

    @property
    def final_set(self) -> frozenset[int]:
        return frozenset(v for delta in self.deltas for v in delta)

    def steps(self) -> Iterator[frozenset[int]]:
        """All n logical active sets, including the repeated stabilized tail."""
        current: frozenset[int] = frozenset()
        for tau in range(self.n):
            if tau <= self.stable_at:
                current = current | frozenset(self.deltas[tau])
            yield current


def cascade_violations(cascade: Cascade) -> list[str]:
    """Invariant violations of a cascade record; empty iff well-formed."""
    out: list[str] = []
    n, deltas, stable_at = cascade.n, cascade.deltas, cascade.stable_at
    if not 0 <= stable_at <= max(n - 1, 0):
        out.append(f"stable_at={stable_at} outside [0, {max(n - 1, 0)}]")
    if len(deltas) != stable_at + 1:
        out.append(f"{len(deltas)} deltas recorded but stable_at={stable_at}")
    seen: set[int] = set()
    for tau, delta in enumerate(deltas):
        if tau >= 1 and not delta:
            out.append(f"empty delta at step {tau} before stabilization")
        if list(delta) != sorted(set(delta)):
            out.append(f"delta at step {tau} is not sorted and duplicate-free")
        for v in delta:
            if not 0 <= v < n:
                out.append(f"node {v} out of range at step {tau}")
            if v in seen:
                out.append(f"node {v} activated twice (step {tau})")
            seen.add(v)
    return out


def _row_deltas(row: np.ndarray) -> tuple[tuple[int, ...], ...]:
    last = int(row.max()) if row.size else -1
    if last < 0:
        return ((),)
    steps: list[list[int]] = [[] for _ in range(last + 1)]
    for v, tv in enumerate(row.tolist()):
        if tv >= 0:
            steps[tv].append(v)
    return tuple(tuple(s) for s in steps)


@dataclass(frozen=True, eq=False)
class CascadeDataset:
    """An ordered collection of i.i.d. cascades plus generation metadata.

    ``activation_times[i, v]`` is the step at which node v became active in
    cascade i (-1 if never); it is the compact storage behind the cascade
    records.  Digests identify the generating graph and seed distribution.
    """

    graph_digest: str
    seed_dist_digest: str
    model: Model
    rng_seed: int
    t: int
    n: int
    activation_times: np.ndarray

    def __post_init__(self) -> None:
        times = np.ascontiguousarray(self.activation_times, dtype=np.int16)
        if times.shape != (self.t, self.n):
            raise ValueError(f"activation_times must have shape ({self.t}, {self.n})")
        times.flags.writeable = False
        object.__setattr__(self, "activation_times", times)
        object.__setattr__(self, "model", Model(self.model))

    @cached_property
    def cascades(self) -> tuple[Cascade, ...]:
        out = []
        for i in range(self.t):
            deltas = _row_deltas(self.activation_times[i])
            out.append(Cascade(n=self.n, deltas=deltas, stable_at=len(deltas) - 1))
        return tuple(out)

    def seed_matrix(self) -> np.ndarray:
        """(t, n) bool: membership in S_0."""
        return self.activation_times == 0

    def one_step_matrix(self) -> np.ndarray:
        """(t, n) bool: membership in S_1."""
        return (self.activation_times >= 0) & (self.activation_times <= 1)

    def header_json(self) -> str:
        header = {
            "graph_digest": self.graph_digest,
            "seed_dist_digest": self.seed_dist_digest,
            "model": self.model.value,
            "rng_seed": self.rng_seed,
            "t": self.t,
            "n": self.n,
        }
        return json.dumps(header, separators=(",", ":"))

    def save(self, path: str | Path) -> None:
        """Header line, then one line per cascade with new-at-step deltas."""
        with open(path, "w") as fh:
            fh.write(self.header_json() + "\n")
            for i in range(self.t):
                deltas = _row_deltas(self.activation_times[i])
                line = json.dumps(
                    {"steps": [list(d) for d in deltas], "stable_at": len(deltas) - 1},
                    separators=(",", ":"),
                )
                fh.write(line + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "CascadeDataset":
        with open(path) as fh:
            header = json.loads(fh.readline())
            t, n = int(header["t"]), int(header["n"])
            times = np.full((t, n), -1, dtype=np.int16)
            count = 0
            for i, line in enumerate(fh):
                record = json.loads(line)
                for tau, nodes in enumerate(record["steps"]):
                    times[i, nodes] = tau
                count += 1
            if count != t:
                raise ValueError(f"header claims {t} cascades, file has {count}")
        return cls(
            graph_digest=header["graph_digest"],
            seed_dist_digest=header["seed_dist_digest"],
            model=Model(header["model"]),
            rng_seed=int(header["rng_seed"]),
            t=t,
            n=n,
            activation_times=times,
        )


def sample_seed_set(dist: SeedDistribution, rng: np.random.Generator) -> frozenset[int]:
    """Seed set draw: each node included independently with probability q[u]."""
    return frozenset(int(v) for v in np.flatnonzero(rng.random(dist.n) < dist.q))


def _check_seeds(n: int, seeds: Iterable[int]) -> list[int]:
    nodes = sorted({int(v) for v in seeds})
    if nodes and not (0 <= nodes[0] and nodes[-1] < n):
        raise ValueError(f"seed nodes out of range for n={n}")
    return nodes


def simulate_ic(graph: Graph, seeds: Iterable[int], rng: np.random.Generator) -> Cascade:
    """One IC cascade via the literal step rule.

    At each step, every newly activated node u attempts each still-inactive
    out-neighbor v once, independently succeeding with the edge parameter;
    the run ends when a step activates nobody.  Draws are consumed in
    (target, source) sorted order, so the cascade is a deterministic
    function of the rng state.
    """
    if graph.model is not Model.IC:
        raise ModelMismatchError(f"simulate_ic requires an IC graph, got {graph.model.value}")
    n = graph.n
    nodes = _check_seeds(n, seeds)
    active = np.zeros(n, dtype=bool)
    frontier = np.zeros(n, dtype=bool)
    active[nodes] = frontier[nodes] = True
    deltas: list[tuple[int, ...]] = [tuple(nodes)]
    in_adj = graph.in_adjacency
    while True:
        new_nodes: list[int] = []
        for v in range(n):
            if active[v]:
                continue
            srcs, ps = in_adj[v]
            if not srcs.size:
                continue
            attempting = frontier[srcs]
            count = int(attempting.sum())
            if not count:
                continue
            if np.any(rng.random(count) < ps[attempting]):
                new_nodes.append(v)
        if not new_nodes:
            break
        frontier[:] = False
        frontier[new_nodes] = active[new_nodes] = True
        deltas.append(tuple(new_nodes))
    return Cascade(n=n, deltas=tuple(deltas), stable_at=len(deltas) - 1)


def simulate_lt(graph: Graph, seeds: Iterable[int], rng: np.random.Generator) -> Cascade:
    """One LT cascade: thresholds drawn once, then deterministic propagation.

    Node v activates at the first step where the summed weight of its
    active in-neighbors reaches its uniform threshold.
    """
    if graph.model is not Model.LT:
        raise ModelMismatchError(f"simulate_lt requires an LT graph, got {graph.model.value}")
    n = graph.n
    nodes = _check_seeds(n, seeds)
    thresholds = rng.random(n)
    active = np.zeros(n, dtype=bool)
    active[nodes] = True
    deltas: list[tuple[int, ...]] = [tuple(nodes)]
    while True:
        influence = active.astype(np.float64) @ graph.params
        newly = ~active & (influence >= thresholds)
        if not newly.any():
            break
        active |= newly
        deltas.append(tuple(int(v) for v in np.flatnonzero(newly)))
    return Cascade(n=n, deltas=tuple(deltas), stable_at=len(deltas) - 1)


def generate_dataset(
    graph: Graph,
    dist: SeedDistribution,
    t: int,
    rng_seed: int,
    *,
    n_jobs: int = 1,
    chunk_size: int = 1 << 16,
) -> CascadeDataset:
    """t independent cascades, each from a fresh seed-set draw.

    Deterministic given ``rng_seed``; cascade i is a pure function of
    ``(rng_seed, i)`` (see module docstring), so ``n_jobs > 1`` changes
    only the wall time, never the output.
    """
    if t < 1:
        raise ValueError("dataset must contain at least one cascade (t >= 1)")
    if graph.n != dist.n:
        raise ValueError(f"graph has {graph.n} nodes but distribution has {dist.n}")
    n = graph.n
    src, dst, p = graph.edge_arrays
    m = src.shape[0]
    onehot = _reach.dst_onehot(dst, n)
    is_ic = graph.model is Model.IC
    width = _rng.padded_width(n + m if is_ic else 2 * n)

    def run_chunk(bounds: tuple[int, int]) -> np.ndarray:
        a, b = bounds
        u = _rng.block_uniforms(rng_seed, _rng.STREAM_DATASET, a, b - a, width)
        seeds = u[:, :n] < dist.q
        if is_ic:
            live = u[:, n : n + m] < p
            return _reach.ic_times(seeds, live, src, onehot, n)
        return _reach.lt_times(seeds, u[:, n : 2 * n], graph.params)

    bounds = [(a, min(a + chunk_size, t)) for a in range(0, t, chunk_size)]
    if n_jobs > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            chunks = list(pool.map(run_chunk, bounds))
    else:
        chunks = [run_chunk(b) for b in bounds]
    times = np.vstack(chunks) if len(chunks) > 1 else chunks[0]
    return CascadeDataset(
        graph_digest=graph.digest,
        seed_dist_digest=dist.digest,
        model=graph.model,
        rng_seed=int(rng_seed),
        t=t,
        n=n,
        activation_times=times,
    )
