"""End-to-end influence maximization from cascade samples.

Four pipelines share the shape "infer a surrogate graph from one-step
statistics, then hand it to a black-box seed-selection algorithm A":

* ``ims_ic_a1``  - plain learning-then-optimization at per-entry accuracy
  eps*k/(2n^3); needs the one-step activation probabilities bounded away
  from 1.
* ``ims_ic_a2``  - two-phase variant with no requirement on the network:
  nodes whose estimated one-step activation probability is already near 1
  get all incoming pairs forced to parameter 1 (they activate on their own
  from a random seed set), the rest are estimated from held-out cascades;
  a fair coin picks between A's answer and the first observed seed set,
  subsampled to the budget when necessary.
* ``ims_ic_a2_eps`` - same construction, but A runs at the reduced budget
  floor((1-2*eps)*k) and the union with the first seed set is returned
  directly; the budget holds whenever that seed set has at most 2*eps*k
  nodes (recorded in diagnostics).
* ``ims_lt``     - LT estimation at accuracy eps*k/(2*D*n^3) followed by
  the 1/(1+eps/2) rescaling that restores the normalization condition.

Surrogate graphs keep every ordered pair with a nonzero estimate; exact
zeros are treated as absent edges.  Pipelines accept any sample size and
report the ratio to the theorem-level requirement in diagnostics instead
of refusing to run.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from . import _rng
from .graphs import AssumptionParams, Graph, Model
from .inference import (
    EstimationReport,
    OneStepStats,
    SampleSizeTask,
    collect_stats,
    estimate_edge_probabilities_ic,
    estimate_edge_weights_lt,
    rescale_lt,
    sample_size,
)
from .maximize import SeedSet, greedy_im
from .simulate import CascadeDataset, ModelMismatchError

__all__ = [
    "Pipeline",
    "ImsResult",
    "ImAlgorithm",
    "PipelineError",
    "EstimatorDegeneracyError",
    "NormalizationError",
    "ims_ic_a1",
    "ims_ic_a2",
    "ims_ic_a2_eps",
    "ims_lt",
]

ImAlgorithm = Callable[[Graph, int], SeedSet]


class Pipeline(str, enum.Enum):
    IC_A1 = "ic-a1"
    IC_A2 = "ic-a2"
    IC_A2_EPS = "ic-a2-eps"
    LT = "lt"


class PipelineError(RuntimeError):
    pass


class EstimatorDegeneracyError(PipelineError):
    """Too many pairs had no usable estimate."""

    def __init__(self, fraction: float, limit: float, flag_counts: dict[str, int]):
        self.fraction = fraction
        self.limit = limit
        self.flag_counts = flag_counts
        super().__init__(
            f"{fraction:.1%} of pairs have undefined estimates (limit {limit:.1%}); "
            f"flags: {flag_counts}"
        )


class NormalizationError(PipelineError):
    """Rescaled LT weights still violate the normalization condition."""

    def __init__(self, offending_nodes: tuple[int, ...]):
        self.offending_nodes = offending_nodes
        super().__init__(f"normalization violated after rescaling at nodes {offending_nodes}")


@dataclass(frozen=True, eq=False)
class ImsResult:
    chosen: SeedSet
    surrogate_graph_digest: str
    pipeline: Pipeline
    diagnostics: dict

    def to_json(self) -> str:
        doc = {
            "pipeline": self.pipeline.value,
            "chosen": sorted(self.chosen.nodes),
            "budget_k": self.chosen.budget_k,
            "surrogate_graph_digest": self.surrogate_graph_digest,
            "diagnostics": self.diagnostics,
        }
        return json.dumps(doc, separators=(",", ":"))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n")


def _default_algorithm(num_sims: int, rng_seed: int) -> ImAlgorithm:
    def algorithm(graph: Graph, k: int) -> SeedSet:
        return greedy_im(graph, k, num_sims=num_sims, rng_seed=rng_seed)

    return algorithm


def _check_common(dataset: CascadeDataset, model: Model, k: int, epsilon: float) -> None:
    if dataset.model is not model:
        raise ModelMismatchError(
            f"pipeline expects a {model.value} dataset, got {dataset.model.value}"
        )
    if not 1 <= k <= dataset.n:
        raise ValueError(f"k must be in [1, {dataset.n}], got {k}")
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must be in (0, 1)")


def _check_degeneracy(
    report: EstimationReport, limit: float, columns: np.ndarray | None = None
) -> float:
    """Fraction of relevant off-diagonal pairs with UNDEFINED_DENOMINATOR."""
    n = report.n
    relevant = ~np.eye(n, dtype=bool)
    if columns is not None:
        relevant &= columns[None, :]
    total = int(relevant.sum())
    if total == 0:
        return 0.0
    from .inference import EstimateFlag

    fraction = float((report.flags[relevant] == EstimateFlag.UNDEFINED_DENOMINATOR).mean())
    if fraction > limit:
        raise EstimatorDegeneracyError(fraction, limit, report.flag_counts())
    return fraction


def _sample_ratio(
    task: SampleSizeTask,
    stats: OneStepStats,
    t_available: int,
    n: int,
    k: int,
    epsilon: float,
    delta: float,
    D: int | None = None,
) -> dict:
    """Theorem-level sample requirement at the empirically feasible alpha/gamma.

    Returns {"theoretical_t", "ratio"} with None entries when the data
    admit no positive alpha or gamma.
    """
    q, ap = stats.q_hat, stats.ap_hat
    gamma_hat = float(min(q.min(initial=1.0), 1.0 - q.max(initial=0.0)))
    alpha_hat = float(1.0 - ap.max(initial=0.0))
    if gamma_hat <= 0.0 or (task in (SampleSizeTask.IMS_IC_A1,) and alpha_hat <= 0.0):
        return {"theoretical_t": None, "ratio": None}
    params = AssumptionParams(
        alpha=min(max(alpha_hat, 1e-12), 1.0),
        gamma=min(gamma_hat, 0.5),
        epsilon=epsilon,
        delta=delta,
        k=k,
    )
    plan = sample_size(task, params, n, D)
    return {"theoretical_t": plan.t, "ratio": t_available / plan.t}


def ims_ic_a1(
    dataset: CascadeDataset,
    k: int,
    epsilon: float,
    im_algorithm: ImAlgorithm | None = None,
    *,
    num_sims: int = 10_000,
    rng_seed: int = 0,
    max_undefined_fraction: float = 0.5,
    diagnostic_delta: float = 0.1,
) -> ImsResult:
    """Learning-then-optimization on the full sample at accuracy eps*k/(2n^3)."""
    _check_common(dataset, Model.IC, k, epsilon)
    n = dataset.n
    algorithm = im_algorithm or _default_algorithm(num_sims, rng_seed)
    accuracy = epsilon * k / (2.0 * n**3)
    stats = collect_stats(dataset)
    report = estimate_edge_probabilities_ic(stats, target_accuracy=accuracy)
    undefined = _check_degeneracy(report, max_undefined_fraction)
    surrogate = Graph.from_matrix(Model.IC, report.param_hat)
    chosen = algorithm(surrogate, k)
    diagnostics = {
        "accuracy_target": accuracy,
        "undefined_fraction": undefined,
        "flag_counts": report.flag_counts(),
        **_sample_ratio(
            SampleSizeTask.IMS_IC_A1, stats, dataset.t, n, k, epsilon, diagnostic_delta
        ),
    }
    return ImsResult(
        chosen=chosen,
        surrogate_graph_digest=surrogate.digest,
        pipeline=Pipeline.IC_A1,
        diagnostics=diagnostics,
    )


def _two_phase_surrogate(
    dataset: CascadeDataset,
    k: int,
    epsilon: float,
    delta: float,
    t_prime: int,
    max_undefined_fraction: float,
) -> tuple[Graph, frozenset[int], dict]:
    """Shared steps (1)-(3) of the two-phase IC pipelines.

    Phase 1 estimates one-step activation probabilities from the first
    t_prime cascades and forces all incoming pairs of the near-saturated
    nodes (ap_hat >= 1 - delta/(4n)) to parameter 1; phase 2 estimates the
    remaining columns from the held-out cascades.
    """
    n = dataset.n
    if not 1 <= t_prime < dataset.t:
        raise ValueError(f"t_prime must be in [1, t), got {t_prime} with t={dataset.t}")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must be in (0, 1)")
    phase1 = collect_stats(dataset, 0, t_prime)
    threshold = 1.0 - delta / (4.0 * n)
    v2_mask = phase1.ap_hat >= threshold
    phase2 = collect_stats(dataset, t_prime, None)
    accuracy = epsilon * k / (2.0 * n**3)
    report = estimate_edge_probabilities_ic(phase2, target_accuracy=accuracy)
    undefined = _check_degeneracy(report, max_undefined_fraction, columns=~v2_mask)
    params = report.param_hat.copy()
    params[:, v2_mask] = 1.0
    np.fill_diagonal(params, 0.0)
    surrogate = Graph.from_matrix(Model.IC, params)
    t2 = frozenset(int(v) for v in np.flatnonzero(dataset.seed_matrix()[0]))
    diagnostics = {
        "accuracy_target": accuracy,
        "partition_threshold": threshold,
        "v1_size": int(n - v2_mask.sum()),
        "v2_size": int(v2_mask.sum()),
        "v2_nodes": [int(v) for v in np.flatnonzero(v2_mask)],
        "t_prime": t_prime,
        "undefined_fraction": undefined,
        "t2_nodes": sorted(t2),
        **_sample_ratio(
            SampleSizeTask.IMS_IC_A2, phase2, dataset.t, n, k, epsilon, delta
        ),
    }
    return surrogate, t2, diagnostics


def ims_ic_a2(
    dataset: CascadeDataset,
    k: int,
    epsilon: float,
    delta: float,
    t_prime: int,
    im_algorithm: ImAlgorithm | None = None,
    *,
    rng_seed: int = 0,
    num_sims: int = 10_000,
    max_undefined_fraction: float = 0.5,
) -> ImsResult:
    """Two-phase pipeline with the fair-coin choice between A's seeds and S_{1,0}.

    Deterministic given rng_seed, which drives the coin and (when the
    chosen set exceeds the budget) the uniform k-subset draw.
    """
    _check_common(dataset, Model.IC, k, epsilon)
    algorithm = im_algorithm or _default_algorithm(num_sims, rng_seed)
    surrogate, t2, diagnostics = _two_phase_surrogate(
        dataset, k, epsilon, delta, t_prime, max_undefined_fraction
    )
    t1 = algorithm(surrogate, k).nodes
    rng = _rng.generator(rng_seed, _rng.STREAM_PIPELINE)
    branch = "T1" if rng.random() < 0.5 else "T2"
    chosen_nodes = t1 if branch == "T1" else t2
    subsampled = False
    if len(chosen_nodes) > k:
        picked = rng.choice(sorted(chosen_nodes), size=k, replace=False)
        chosen_nodes = frozenset(int(v) for v in picked)
        subsampled = True
    diagnostics.update(
        {"t1_nodes": sorted(t1), "selected_branch": branch, "subsampled": subsampled}
    )
    return ImsResult(
        chosen=SeedSet(nodes=chosen_nodes, budget_k=k),
        surrogate_graph_digest=surrogate.digest,
        pipeline=Pipeline.IC_A2,
        diagnostics=diagnostics,
    )


def ims_ic_a2_eps(
    dataset: CascadeDataset,
    k: int,
    epsilon: float,
    delta: float,
    t_prime: int,
    im_algorithm: ImAlgorithm | None = None,
    *,
    rng_seed: int = 0,
    num_sims: int = 10_000,
    max_undefined_fraction: float = 0.5,
) -> ImsResult:
    """Approximation-preserving variant: A runs at budget floor((1-2eps)k),
    and the union with the first observed seed set is returned directly."""
    if not 0.0 < epsilon < 1.0 / 3.0:
        raise ValueError("epsilon must be in (0, 1/3) for the c = epsilon variant")
    _check_common(dataset, Model.IC, k, epsilon)
    algorithm = im_algorithm or _default_algorithm(num_sims, rng_seed)
    surrogate, t2, diagnostics = _two_phase_surrogate(
        dataset, k, epsilon, delta, t_prime, max_undefined_fraction
    )
    t1_budget = int((1.0 - 2.0 * epsilon) * k)
    t1 = algorithm(surrogate, t1_budget).nodes if t1_budget >= 1 else frozenset()
    union = t1 | t2
    within_budget = len(union) <= k
    diagnostics.update(
        {
            "t1_budget": t1_budget,
            "t1_nodes": sorted(t1),
            "union_size": len(union),
            "requested_k": k,
            "budget_respected": within_budget,
            "t2_within_2eps_k": len(t2) <= 2.0 * epsilon * k,
        }
    )
    return ImsResult(
        chosen=SeedSet(nodes=union, budget_k=k if within_budget else len(union)),
        surrogate_graph_digest=surrogate.digest,
        pipeline=Pipeline.IC_A2_EPS,
        diagnostics=diagnostics,
    )


def ims_lt(
    dataset: CascadeDataset,
    k: int,
    epsilon: float,
    im_algorithm: ImAlgorithm | None = None,
    *,
    max_in_degree_bound: int | None = None,
    num_sims: int = 10_000,
    rng_seed: int = 0,
    max_undefined_fraction: float = 0.5,
    diagnostic_delta: float = 0.1,
) -> ImsResult:
    """LT learning-then-optimization with the normalization-restoring rescale.

    ``max_in_degree_bound`` is the caller's upper bound D on the true
    maximum in-degree (defaults to n - 1); the estimation accuracy target
    is eps*k/(2*D*n^3).
    """
    _check_common(dataset, Model.LT, k, epsilon)
    n = dataset.n
    algorithm = im_algorithm or _default_algorithm(num_sims, rng_seed)
    D = max(n - 1, 1) if max_in_degree_bound is None else int(max_in_degree_bound)
    if D < 1:
        raise ValueError("max_in_degree_bound must be at least 1")
    accuracy = epsilon * k / (2.0 * D * n**3)
    stats = collect_stats(dataset)
    report = estimate_edge_weights_lt(stats, target_accuracy=accuracy)
    undefined = _check_degeneracy(report, max_undefined_fraction)
    rescaled = rescale_lt(report, epsilon)
    if not rescaled.normalized:
        raise NormalizationError(rescaled.offending_nodes)
    surrogate = Graph.from_matrix(Model.LT, rescaled.weights)
    chosen = algorithm(surrogate, k)
    diagnostics = {
        "accuracy_target": accuracy,
        "max_in_degree_bound": D,
        "undefined_fraction": undefined,
        "flag_counts": report.flag_counts(),
        "max_column_sum": float(rescaled.column_sums.max(initial=0.0)),
        **_sample_ratio(
            SampleSizeTask.IMS_LT, stats, dataset.t, n, k, epsilon, diagnostic_delta, D
        ),
    }
    return ImsResult(
        chosen=chosen,
        surrogate_graph_digest=surrogate.digest,
        pipeline=Pipeline.LT,
        diagnostics=diagnostics,
    )
