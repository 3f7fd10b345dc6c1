"""Directed influence graphs, seed distributions, and their validity rules.

A graph consists of nodes ``0..n-1``, a directed edge set without
self-loops, and one real parameter per edge.  Under the independent-cascade
(IC) interpretation the parameter of ``(u, v)`` is the probability that an
activation of ``u`` propagates to ``v``; under the linear-threshold (LT)
interpretation it is the weight ``u`` contributes toward ``v``'s threshold,
and each node's incoming weights must sum to at most 1 (the normalization
condition).  Non-edges carry parameter 0.

Graphs and seed distributions are immutable after construction and safe to
share across threads.
"""

from __future__ import annotations

import enum
import hashlib
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import _rng

__all__ = [
    "Model",
    "Graph",
    "SeedDistribution",
    "AssumptionParams",
    "validate",
    "max_in_degree",
    "random_graph",
]


class Model(str, enum.Enum):
    """Diffusion model tag carried by a graph."""

    IC = "ic"
    LT = "lt"


def _fmt(x: float) -> str:
    """17 significant digits: enough to round-trip any float exactly."""
    return format(float(x), ".17g")


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class Graph:
    """A weighted directed graph with a diffusion-model tag.

    ``params[u, v]`` is the edge parameter of ``(u, v)``; entries for pairs
    outside ``edges`` are expected to be 0 (checked by :func:`validate`,
    not by the constructor, so that violating instances can be inspected).
    Self-loops are rejected outright: the diffusion semantics never use
    them.
    """

    n: int
    model: Model
    params: np.ndarray
    edges: frozenset[tuple[int, int]]

    def __post_init__(self) -> None:
        if self.n < 0:
            raise ValueError("n must be non-negative")
        params = _readonly(self.params)
        if params.shape != (self.n, self.n):
            raise ValueError(f"params must have shape ({self.n}, {self.n})")
        object.__setattr__(self, "params", params)
        object.__setattr__(self, "model", Model(self.model))
        edges = frozenset((int(u), int(v)) for u, v in self.edges)
        object.__setattr__(self, "edges", edges)
        for u, v in edges:
            if u == v:
                raise ValueError(f"self-loop ({u}, {u}) is not allowed")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge ({u}, {v}) out of range for n={self.n}")
        if self.n and np.any(np.diagonal(params) != 0.0):
            raise ValueError("self-loop parameters on the diagonal are not allowed")

    @classmethod
    def from_edges(
        cls, n: int, model: Model, edge_params: Iterable[tuple[int, int, float]]
    ) -> "Graph":
        params = np.zeros((n, n))
        edges = set()
        for u, v, p in edge_params:
            if (u, v) in edges:
                raise ValueError(f"duplicate edge ({u}, {v})")
            edges.add((int(u), int(v)))
            params[u, v] = p
        return cls(n=n, model=model, params=params, edges=frozenset(edges))

    @classmethod
    def from_matrix(cls, model: Model, params: np.ndarray) -> "Graph":
        """Graph whose edge set is the nonzero support of ``params``."""
        params = np.asarray(params, dtype=np.float64)
        n = params.shape[0]
        us, vs = np.nonzero(params)
        edges = frozenset((int(u), int(v)) for u, v in zip(us, vs))
        return cls(n=n, model=model, params=params, edges=edges)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self.n == other.n
            and self.model is other.model
            and self.edges == other.edges
            and np.array_equal(self.params, other.params)
        )

    @cached_property
    def edge_list(self) -> tuple[tuple[int, int], ...]:
        """Edges in canonical (sorted) order; fixes all edge-indexed layouts."""
        return tuple(sorted(self.edges))

    @cached_property
    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(src, dst, param) arrays aligned with :attr:`edge_list`."""
        if not self.edge_list:
            empty = np.empty(0, dtype=np.int64)
            return empty, empty.copy(), np.empty(0, dtype=np.float64)
        src = np.array([u for u, _ in self.edge_list], dtype=np.int64)
        dst = np.array([v for _, v in self.edge_list], dtype=np.int64)
        p = self.params[src, dst]
        return src, dst, p

    @cached_property
    def in_adjacency(self) -> tuple[tuple[np.ndarray, np.ndarray], ...]:
        """Per node v: (sorted in-neighbor array, aligned parameter array)."""
        srcs: list[list[int]] = [[] for _ in range(self.n)]
        for u, v in self.edge_list:
            srcs[v].append(u)
        out = []
        for v, s in enumerate(srcs):
            idx = np.array(s, dtype=np.int64)
            out.append((idx, self.params[idx, v]))
        return tuple(out)

    def in_degree(self, v: int) -> int:
        return len(self.in_adjacency[v][0])

    def to_json(self) -> str:
        """Canonical JSON form; edge params carry 17 significant digits."""
        edges = ",".join(f"[{u},{v},{_fmt(self.params[u, v])}]" for u, v in self.edge_list)
        return f'{{"n":{self.n},"model":"{self.model.value}","edges":[{edges}]}}'

    @cached_property
    def digest(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def from_json(cls, text: str) -> "Graph":
        data = json.loads(text)
        return cls.from_edges(
            int(data["n"]), Model(data["model"]), [(u, v, p) for u, v, p in data["edges"]]
        )

    @classmethod
    def load(cls, path: str | Path) -> "Graph":
        return cls.from_json(Path(path).read_text())


@dataclass(frozen=True, eq=False)
class SeedDistribution:
    """Product seed distribution: node u is seeded independently w.p. q[u]."""

    q: np.ndarray

    def __post_init__(self) -> None:
        q = _readonly(np.atleast_1d(self.q))
        if q.ndim != 1:
            raise ValueError("q must be one-dimensional")
        if np.any(q < 0.0) or np.any(q > 1.0):
            raise ValueError("seed probabilities must lie in [0, 1]")
        object.__setattr__(self, "q", q)

    @classmethod
    def uniform(cls, n: int, q: float) -> "SeedDistribution":
        return cls(np.full(n, float(q)))

    @property
    def n(self) -> int:
        return self.q.shape[0]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SeedDistribution):
            return NotImplemented
        return np.array_equal(self.q, other.q)

    def to_json(self) -> str:
        return '{"q":[' + ",".join(_fmt(x) for x in self.q) + "]}"

    @cached_property
    def digest(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "SeedDistribution":
        data = json.loads(Path(path).read_text())
        return cls(np.array(data["q"], dtype=np.float64))


@dataclass(frozen=True)
class AssumptionParams:
    """Parameters of the estimation/maximization assumptions.

    ``alpha``: lower bound on per-node one-step non-activation probability;
    ``gamma``: band half-width keeping seed probabilities away from 0 and 1;
    ``beta``: minimum true edge parameter targeted by structure recovery;
    ``c``: expected-seed-set-size multiplier (sum of q_u at most c*k);
    ``epsilon``/``delta``: accuracy / failure-probability targets;
    ``k``: seed budget; ``kappa``: approximation ratio of the IM subroutine.
    """

    alpha: float = 1.0
    gamma: float = 0.5
    beta: float = 0.5
    c: float = 1.0
    epsilon: float = 0.1
    delta: float = 0.1
    k: int = 1
    kappa: float = 1.0 - 1.0 / math.e

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must be in (0, 1]")
        if not 0.0 < self.gamma <= 0.5:
            raise ValueError("gamma must be in (0, 1/2]")
        if not 0.0 < self.beta < 1.0:
            raise ValueError("beta must be in (0, 1)")
        if not self.c > 0.0:
            raise ValueError("c must be positive")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must be in (0, 1)")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must be in (0, 1)")
        if int(self.k) != self.k or self.k < 1:
            raise ValueError("k must be a positive integer")
        if not 0.0 < self.kappa <= 1.0:
            raise ValueError("kappa must be in (0, 1]")


def validate(graph: Graph) -> list[str]:
    """All invariant violations of ``graph``; empty list iff valid.

    Checks: parameter/edge support agreement, parameter range, absence of
    self-loops, and for LT graphs the per-node normalization condition
    (incoming weights sum to at most 1, with 1e-12 slack for rounding).
    """
    violations: list[str] = []
    params = graph.params
    for u, v in sorted(graph.edges):
        if params[u, v] <= 0.0:
            violations.append(f"edge ({u},{v}) is declared but its parameter is {params[u, v]}")
        elif params[u, v] > 1.0:
            violations.append(f"edge ({u},{v}) has parameter {params[u, v]} > 1")
    nz_us, nz_vs = np.nonzero(params)
    for u, v in zip(nz_us, nz_vs):
        pair = (int(u), int(v))
        if pair not in graph.edges:
            violations.append(
                f"pair {pair} has parameter {params[u, v]} but is not a declared edge"
            )
    if graph.n and np.any(np.diagonal(params) != 0.0):
        violations.append("nonzero diagonal entries (self-loops)")
    if graph.model is Model.LT:
        col_sums = params.sum(axis=0)
        for v in np.flatnonzero(col_sums > 1.0 + 1e-12):
            violations.append(
                f"normalization at {int(v)}: incoming weights sum to {col_sums[v]} > 1"
            )
    return violations


def max_in_degree(graph: Graph) -> int:
    """Largest number of in-neighbors over all nodes (0 for an empty edge set)."""
    if not graph.edges:
        return 0
    counts = np.zeros(graph.n, dtype=np.int64)
    for _, v in graph.edges:
        counts[v] += 1
    return int(counts.max())


def random_graph(
    n: int,
    edge_density: float,
    param_range: tuple[float, float],
    model: Model,
    rng_seed: int,
) -> Graph:
    """Random graph: each ordered pair is an edge independently w.p. ``edge_density``.

    Parameters are uniform in ``param_range`` (which must sit inside (0, 1]).
    For LT graphs, incoming weights of any node whose sum exceeds 1 are
    rescaled to restore normalization; rescaling never zeroes a retained
    edge.  Deterministic given ``rng_seed``.
    """
    low, high = float(param_range[0]), float(param_range[1])
    if not 0.0 < low <= high <= 1.0:
        raise ValueError(f"param_range must satisfy 0 < low <= high <= 1, got {param_range}")
    if not 0.0 <= edge_density <= 1.0:
        raise ValueError(f"edge_density must be in [0, 1], got {edge_density}")
    rng = _rng.generator(rng_seed, _rng.STREAM_GRAPH)
    mask = rng.random((n, n)) < edge_density
    values = rng.uniform(low, high, size=(n, n))
    np.fill_diagonal(mask, False)
    params = np.where(mask, values, 0.0)
    model = Model(model)
    if model is Model.LT:
        for v in range(n):
            s = params[:, v].sum()
            while s > 1.0:
                params[:, v] /= s
                params[:, v] *= 1.0 - 1e-15
                s = params[:, v].sum()
    return Graph.from_matrix(model, params)
