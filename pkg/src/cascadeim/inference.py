"""Network inference from one-step cascade statistics.

Only ``S_0`` and ``S_1`` of each cascade are consumed.  Writing ``q_u`` for
the seed probability of u, ``ap(v)`` for the probability that v is active
at step 1, and ``ap(v|u-bar)`` for the same probability conditioned on u
not being a seed, the edge parameters admit closed forms:

* IC: ``p_uv = (ap(v) - ap(v|u-bar)) / (q_u * (1 - ap(v|u-bar)))``
* LT: ``w_uv = (ap(v) - ap(v|u-bar)) / (q_u * (1 - q_v))``

The estimators plug empirical counts into these forms, clamp the raw value
into [0, 1], and flag every clamped or degenerate entry instead of raising:
partial output with flags is more useful than an aborted run.  Feeding
exact population probabilities recovers the true parameters exactly, which
is the contract the oracle-backed tests enforce.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Union

import mpmath
import numpy as np

from . import oracle
from .graphs import AssumptionParams, Graph, Model, SeedDistribution
from .simulate import CascadeDataset

__all__ = [
    "EstimateFlag",
    "OneStepStats",
    "EstimationReport",
    "RescaledWeights",
    "AssumptionKind",
    "AssumptionCheck",
    "AssumptionReport",
    "SampleSizeTask",
    "SampleSizePlan",
    "collect_stats",
    "estimate_edge_probabilities_ic",
    "estimate_edge_weights_lt",
    "recover_structure",
    "rescale_lt",
    "check_assumptions",
    "sample_size",
]


class EstimateFlag(enum.IntEnum):
    OK = 0
    CLAMPED_LOW = 1
    CLAMPED_HIGH = 2
    UNDEFINED_DENOMINATOR = 3


def _readonly(a: np.ndarray, dtype) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=dtype)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class OneStepStats:
    """Counts and ratios of seed/one-step-activation events.

    ``t == 0`` marks population statistics (exact probabilities standing in
    for the infinite-sample limit); count arrays are then ``None``.
    ``ap_given_not[u, v]`` is NaN wherever the conditional frequency has no
    value (node u seeded in every cascade), mirrored by ``undefined_given``.
    """

    n: int
    t: int
    q_hat: np.ndarray
    ap_hat: np.ndarray
    ap_given_not: np.ndarray
    undefined_given: np.ndarray
    seed_counts: np.ndarray | None = None
    not_seed_counts: np.ndarray | None = None
    active_counts: np.ndarray | None = None
    not_seed_active_counts: np.ndarray | None = None

    @classmethod
    def from_first_steps(cls, s0: np.ndarray, s1: np.ndarray) -> "OneStepStats":
        """Counts from boolean membership matrices for S_0 and S_1."""
        t, n = s0.shape
        seed_counts = s0.sum(axis=0, dtype=np.int64)
        active_counts = s1.sum(axis=0, dtype=np.int64)
        ns_active = ((~s0).astype(np.float64).T @ s1.astype(np.float64)).astype(np.int64)
        return cls._from_counts(n, t, seed_counts, active_counts, ns_active)

    @classmethod
    def _from_counts(
        cls,
        n: int,
        t: int,
        seed_counts: np.ndarray,
        active_counts: np.ndarray,
        not_seed_active_counts: np.ndarray,
    ) -> "OneStepStats":
        not_seed = t - seed_counts
        q_hat = seed_counts / t
        ap_hat = active_counts / t
        with np.errstate(divide="ignore", invalid="ignore"):
            ap_given = not_seed_active_counts / not_seed[:, None]
        undefined = np.broadcast_to((not_seed == 0)[:, None], (n, n)).copy()
        ap_given = np.where(undefined, np.nan, ap_given)
        return cls(
            n=n,
            t=t,
            q_hat=_readonly(q_hat, np.float64),
            ap_hat=_readonly(ap_hat, np.float64),
            ap_given_not=_readonly(ap_given, np.float64),
            undefined_given=_readonly(undefined, bool),
            seed_counts=_readonly(seed_counts, np.int64),
            not_seed_counts=_readonly(not_seed, np.int64),
            active_counts=_readonly(active_counts, np.int64),
            not_seed_active_counts=_readonly(not_seed_active_counts, np.int64),
        )

    @classmethod
    def exact(cls, graph: Graph, dist: SeedDistribution) -> "OneStepStats":
        """Population statistics from the exact oracle (the t -> inf limit)."""
        q, ap, ap_given = oracle.exact_one_step_probabilities(graph, dist)
        undefined = np.broadcast_to((q == 1.0)[:, None], (graph.n, graph.n)).copy()
        np.fill_diagonal(undefined, True)
        return cls(
            n=graph.n,
            t=0,
            q_hat=_readonly(q, np.float64),
            ap_hat=_readonly(ap, np.float64),
            ap_given_not=_readonly(ap_given, np.float64),
            undefined_given=_readonly(undefined, bool),
        )


def collect_stats(
    source: Union[CascadeDataset, str, Path],
    start: int = 0,
    stop: int | None = None,
    *,
    chunk_size: int = 1 << 17,
) -> OneStepStats:
    """One pass over cascades [start, stop); uses only S_0 and S_1.

    Accepts an in-memory dataset or a dataset file path; files are streamed
    chunk by chunk, keeping memory at O(chunk * n + n^2).
    """
    if isinstance(source, CascadeDataset):
        times = source.activation_times[start:stop]
        if times.shape[0] < 1:
            raise ValueError("statistics need at least one cascade")
        s0 = times == 0
        s1 = (times >= 0) & (times <= 1)
        return OneStepStats.from_first_steps(s0, s1)
    n = None
    seed_counts = active_counts = ns_active = None
    t_used = 0
    with open(source) as fh:
        header = json.loads(fh.readline())
        n = int(header["n"])
        seed_counts = np.zeros(n, dtype=np.int64)
        active_counts = np.zeros(n, dtype=np.int64)
        ns_active = np.zeros((n, n), dtype=np.int64)
        chunk_s0: list[list[int]] = []
        chunk_s1: list[list[int]] = []

        def flush() -> None:
            nonlocal seed_counts, active_counts, ns_active
            if not chunk_s0:
                return
            rows = len(chunk_s0)
            s0 = np.zeros((rows, n), dtype=bool)
            s1 = np.zeros((rows, n), dtype=bool)
            for i in range(rows):
                s0[i, chunk_s0[i]] = True
                s1[i, chunk_s1[i]] = True
            seed_counts += s0.sum(axis=0, dtype=np.int64)
            active_counts += s1.sum(axis=0, dtype=np.int64)
            ns_active += ((~s0).astype(np.float64).T @ s1.astype(np.float64)).astype(np.int64)
            chunk_s0.clear()
            chunk_s1.clear()

        for i, line in enumerate(fh):
            if i < start:
                continue
            if stop is not None and i >= stop:
                break
            steps = json.loads(line)["steps"]
            first = steps[0]
            second = first + steps[1] if len(steps) > 1 else first
            chunk_s0.append(first)
            chunk_s1.append(second)
            t_used += 1
            if len(chunk_s0) >= chunk_size:
                flush()
        flush()
    if t_used < 1:
        raise ValueError("statistics need at least one cascade")
    return OneStepStats._from_counts(n, t_used, seed_counts, active_counts, ns_active)


@dataclass(frozen=True, eq=False)
class EstimationReport:
    """Estimated parameter matrix with per-entry flags and the source stats."""

    model: Model
    param_hat: np.ndarray
    flags: np.ndarray
    stats: OneStepStats
    target_accuracy: float | None = None

    @property
    def n(self) -> int:
        return self.param_hat.shape[0]

    def undefined_fraction(self) -> float:
        """Share of off-diagonal pairs flagged UNDEFINED_DENOMINATOR."""
        n = self.n
        if n < 2:
            return 0.0
        off = ~np.eye(n, dtype=bool)
        return float((self.flags[off] == EstimateFlag.UNDEFINED_DENOMINATOR).mean())

    def flag_counts(self) -> dict[str, int]:
        off = ~np.eye(self.n, dtype=bool)
        return {
            flag.name: int((self.flags[off] == flag).sum()) for flag in EstimateFlag
        }

    def to_json(self) -> str:
        doc = {
            "model": self.model.value,
            "n": self.n,
            "t": self.stats.t,
            "target_accuracy": self.target_accuracy,
            "param_hat": [[float(x) for x in row] for row in self.param_hat],
            "flags": [[int(x) for x in row] for row in self.flags],
            "stats": {
                "q_hat": [float(x) for x in self.stats.q_hat],
                "ap_hat": [float(x) for x in self.stats.ap_hat],
            },
        }
        return json.dumps(doc, separators=(",", ":"))

    def save_json(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    def save_csv(self, path: str | Path) -> None:
        """Triple list (u, v, param_hat, flag) for analysis tooling."""
        lines = ["u,v,param_hat,flag"]
        for u in range(self.n):
            for v in range(self.n):
                if u == v:
                    continue
                flag = EstimateFlag(int(self.flags[u, v])).name
                lines.append(f"{u},{v},{self.param_hat[u, v]!r},{flag}")
        Path(path).write_text("\n".join(lines) + "\n")


def _finalize_report(
    model: Model,
    stats: OneStepStats,
    raw: np.ndarray,
    undefined: np.ndarray,
    target_accuracy: float | None,
) -> EstimationReport:
    n = stats.n
    flags = np.full((n, n), int(EstimateFlag.OK), dtype=np.int8)
    with np.errstate(invalid="ignore"):
        flags[raw < 0.0] = int(EstimateFlag.CLAMPED_LOW)
        flags[raw > 1.0] = int(EstimateFlag.CLAMPED_HIGH)
        param = np.clip(raw, 0.0, 1.0)
    param[undefined] = 0.0
    flags[undefined] = int(EstimateFlag.UNDEFINED_DENOMINATOR)
    np.fill_diagonal(param, 0.0)
    np.fill_diagonal(flags, int(EstimateFlag.OK))
    return EstimationReport(
        model=model,
        param_hat=_readonly(param, np.float64),
        flags=_readonly(flags, np.int8),
        stats=stats,
        target_accuracy=target_accuracy,
    )


def estimate_edge_probabilities_ic(
    stats: OneStepStats, target_accuracy: float | None = None
) -> EstimationReport:
    """IC closed-form estimate for every ordered pair u != v.

    Raw values are clamped into [0, 1] (clamping never increases the error,
    since the true parameter lies in [0, 1]); pairs where the denominator
    has no value (u always seeded, q_hat_u = 0, or ap_hat(v|u-bar) >= 1)
    are emitted as 0 with flag UNDEFINED_DENOMINATOR.
    """
    with np.errstate(invalid="ignore"):
        apg = np.where(stats.undefined_given, 0.0, stats.ap_given_not)
        undefined = stats.undefined_given | (stats.q_hat[:, None] == 0.0) | (apg >= 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        raw = (stats.ap_hat[None, :] - apg) / (stats.q_hat[:, None] * (1.0 - apg))
    return _finalize_report(Model.IC, stats, raw, undefined, target_accuracy)


def estimate_edge_weights_lt(
    stats: OneStepStats, target_accuracy: float | None = None
) -> EstimationReport:
    """LT closed-form estimate for every ordered pair u != v.

    Degenerate denominators (u always seeded, q_hat_u = 0, or q_hat_v = 1)
    are flagged UNDEFINED_DENOMINATOR; clamping as in the IC estimator.
    """
    with np.errstate(invalid="ignore"):
        apg = np.where(stats.undefined_given, 0.0, stats.ap_given_not)
        undefined = (
            stats.undefined_given
            | (stats.q_hat[:, None] == 0.0)
            | (stats.q_hat[None, :] == 1.0)
        )
    with np.errstate(divide="ignore", invalid="ignore"):
        denom = stats.q_hat[:, None] * (1.0 - stats.q_hat[None, :])
        raw = (stats.ap_hat[None, :] - apg) / denom
    return _finalize_report(Model.LT, stats, raw, undefined, target_accuracy)


def recover_structure(report: EstimationReport, beta: float) -> frozenset[tuple[int, int]]:
    """Edges whose estimated parameter exceeds beta / 2.

    Requires a report whose declared target accuracy is at most beta / 2:
    at that accuracy no non-edge can cross the threshold, and every edge
    with a true parameter above beta must.
    """
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must be in (0, 1)")
    if report.target_accuracy is None or report.target_accuracy > beta / 2.0:
        raise ValueError(
            f"structure recovery at beta={beta} needs a report with target "
            f"accuracy <= {beta / 2.0}, got {report.target_accuracy}"
        )
    us, vs = np.nonzero(report.param_hat > beta / 2.0)
    return frozenset((int(u), int(v)) for u, v in zip(us, vs))


@dataclass(frozen=True, eq=False)
class RescaledWeights:
    """LT weights divided by (1 + epsilon/2), with the normalization check."""

    weights: np.ndarray
    column_sums: np.ndarray
    normalized: bool
    offending_nodes: tuple[int, ...]


def rescale_lt(report: EstimationReport, epsilon: float) -> RescaledWeights:
    """Divide every estimated LT weight by (1 + epsilon/2).

    When the report met accuracy epsilon / (2D), the rescaled weights
    satisfy the normalization condition; failure is reported in the result,
    never raised.
    """
    if report.model is not Model.LT:
        raise ValueError("rescale_lt expects a report from the LT estimator")
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must be in (0, 1)")
    weights = report.param_hat / (1.0 + epsilon / 2.0)
    sums = weights.sum(axis=0)
    bad = np.flatnonzero(sums > 1.0 + 1e-12)
    return RescaledWeights(
        weights=_readonly(weights, np.float64),
        column_sums=_readonly(sums, np.float64),
        normalized=bad.size == 0,
        offending_nodes=tuple(int(v) for v in bad),
    )


class AssumptionKind(str, enum.Enum):
    A1_IC = "a1-ic"
    A2_IC = "a2-ic"
    A3_LT = "a3-lt"


@dataclass(frozen=True)
class AssumptionCheck:
    condition: str
    node: int | None
    observed: float
    lower: float
    upper: float
    slack: float
    passed: bool


@dataclass(frozen=True)
class AssumptionReport:
    which: AssumptionKind
    checks: tuple[AssumptionCheck, ...]
    passed: bool
    feasible: dict[str, float]

    def failures(self) -> tuple[AssumptionCheck, ...]:
        return tuple(c for c in self.checks if not c.passed)


def _band_check(
    condition: str, node: int | None, observed: float, lower: float, upper: float, slack: float
) -> AssumptionCheck:
    passed = (lower - slack) <= observed <= (upper + slack)
    return AssumptionCheck(condition, node, float(observed), lower, upper, slack, passed)


def check_assumptions(
    stats: OneStepStats, params: AssumptionParams, which: AssumptionKind
) -> AssumptionReport:
    """Evaluate an assumption against empirical statistics.

    Conditions are tested with a slack of 3 standard errors of the
    empirical frequency (0 for population statistics), and the report
    carries the largest alpha/gamma/c consistent with the data.
    """
    which = AssumptionKind(which)
    q, ap, t = stats.q_hat, stats.ap_hat, stats.t
    inf = float("inf")
    se_q = np.sqrt(q * (1.0 - q) / t) if t else np.zeros_like(q)
    se_ap = np.sqrt(ap * (1.0 - ap) / t) if t else np.zeros_like(ap)
    checks: list[AssumptionCheck] = []
    feasible: dict[str, float] = {}
    gamma_band = [
        _band_check(
            "seed probability band", u, q[u], params.gamma, 1.0 - params.gamma, 3.0 * se_q[u]
        )
        for u in range(stats.n)
    ]
    feasible_gamma = float(max(0.0, min(q.min(initial=1.0), 1.0 - q.max(initial=0.0))))
    if which is AssumptionKind.A1_IC:
        checks += [
            _band_check(
                "one-step activation bound", v, ap[v], -inf, 1.0 - params.alpha, 3.0 * se_ap[v]
            )
            for v in range(stats.n)
        ]
        checks += gamma_band
        feasible["alpha"] = float(1.0 - ap.max(initial=0.0))
        feasible["gamma"] = feasible_gamma
    elif which is AssumptionKind.A2_IC:
        total = float(q.sum())
        se_total = math.sqrt(float((q * (1.0 - q)).sum()) / t) if t else 0.0
        checks.append(
            _band_check(
                "expected seed-set size", None, total, -inf, params.c * params.k, 3.0 * se_total
            )
        )
        checks += gamma_band
        feasible["c"] = total / params.k
        feasible["gamma"] = feasible_gamma
    else:
        checks += gamma_band
        feasible["gamma"] = feasible_gamma
    checks_t = tuple(checks)
    return AssumptionReport(
        which=which,
        checks=checks_t,
        passed=all(c.passed for c in checks_t),
        feasible=feasible,
    )


class SampleSizeTask(str, enum.Enum):
    IC_ESTIMATION = "ic-estimation"
    IC_STRUCTURE = "ic-structure"
    IMS_IC_A1 = "ims-ic-a1"
    IMS_IC_A2 = "ims-ic-a2"
    LT_ESTIMATION = "lt-estimation"
    LT_ESTIMATION_NORMALIZED = "lt-estimation-normalized"
    IMS_LT = "ims-lt"


@dataclass(frozen=True)
class SampleSizePlan:
    task: SampleSizeTask
    t: int
    eta: float
    t_prime: int | None = None


def sample_size(
    task: SampleSizeTask, params: AssumptionParams, n: int, D: int | None = None
) -> SampleSizePlan:
    """Cascade count guaranteeing the selected task's accuracy/confidence.

    Returns the ceiling of the task's bound together with the internal
    per-quantity accuracy eta it budgets (eta = eps*alpha*gamma/4 for IC
    estimation tasks, eps*gamma^2/4 for LT ones, with eps replaced by the
    task's effective per-entry accuracy).  The two-phase task also returns
    the first-phase sample count t'.

    The bounds easily exceed 2**53, where float arithmetic cannot resolve
    the true integer ceiling, so they are evaluated in 50-digit arithmetic.
    """
    task = SampleSizeTask(task)
    if n < 1:
        raise ValueError("n must be at least 1")
    if task in (SampleSizeTask.IMS_IC_A1, SampleSizeTask.IMS_IC_A2, SampleSizeTask.IMS_LT):
        if params.k > n:
            raise ValueError(f"k={params.k} exceeds n={n}")
    if task in (SampleSizeTask.LT_ESTIMATION_NORMALIZED, SampleSizeTask.IMS_LT):
        D = (n - 1) if D is None else int(D)
        if D < 1:
            raise ValueError("maximum in-degree bound D must be at least 1")
    eps_f, a_f, g_f = params.epsilon, params.alpha, params.gamma
    k_f = params.k
    t_prime: int | None = None
    with mpmath.workdps(50):
        a, g, b = mpmath.mpf(params.alpha), mpmath.mpf(params.gamma), mpmath.mpf(params.beta)
        eps, delta = mpmath.mpf(params.epsilon), mpmath.mpf(params.delta)
        k = mpmath.mpf(params.k)
        log12 = mpmath.log(12 * n / delta)
        if task is SampleSizeTask.IC_ESTIMATION:
            raw = 256 / (eps**2 * a**2 * g**3) * log12
            eta = eps_f * a_f * g_f / 4.0
        elif task is SampleSizeTask.IC_STRUCTURE:
            raw = 1024 / (a**2 * b**2 * g**3) * mpmath.log(4 * n / delta)
            eta = (params.beta / 2.0) * a_f * g_f / 4.0
        elif task is SampleSizeTask.IMS_IC_A1:
            raw = 1024 / (eps**2 * a**2 * g**3) * (mpmath.mpf(n) ** 6 / k**2) * log12
            eta = (eps_f * k_f / (2.0 * n**3)) * a_f * g_f / 4.0
        elif task is SampleSizeTask.IMS_IC_A2:
            phase1 = 72 * mpmath.mpf(n) ** 2 / delta**2 * log12
            raw = 36864 / (eps**2 * delta**2 * g**3) * (
                mpmath.mpf(n) ** 8 / k**2
            ) * mpmath.log(36 * n / delta) + phase1
            eta = (eps_f * k_f / (2.0 * n**3)) * (params.delta / (6.0 * n)) * g_f / 4.0
            t_prime = int(mpmath.ceil(phase1))
        elif task is SampleSizeTask.LT_ESTIMATION:
            raw = 256 / (eps**2 * g**6) * log12
            eta = eps_f * g_f**2 / 4.0
        elif task is SampleSizeTask.LT_ESTIMATION_NORMALIZED:
            raw = 1024 / (eps**2 * g**6) * mpmath.mpf(D) ** 2 * log12
            eta = (eps_f / (2.0 * D)) * g_f**2 / 4.0
        else:  # IMS_LT
            raw = 4096 / (eps**2 * g**3) * (mpmath.mpf(D) ** 2 * mpmath.mpf(n) ** 6 / k**2) * log12
            eta = (eps_f * k_f / (2.0 * D * n**3)) * g_f**2 / 4.0
        t = int(mpmath.ceil(raw))
    return SampleSizePlan(task=task, t=t, eta=eta, t_prime=t_prime)
