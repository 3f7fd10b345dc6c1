"""Per-trial experiment metrics: estimation error, recovery quality, spread.

These operationalize the success events of the guarantees: entrywise and
L1 parameter error, structure precision/recall, achieved versus optimal
spread.  The optimal spread is filled in only when the exact oracle can
afford the instance.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Iterable

import numpy as np

from . import oracle
from .graphs import Graph
from .inference import EstimationReport

__all__ = [
    "MetricsRecord",
    "CSV_SCHEMA",
    "estimation_errors",
    "structure_scores",
    "spread_scores",
    "write_metrics_csv",
    "summarize",
]

CSV_SCHEMA = "# cascadeim metrics schema v1"


@dataclass
class MetricsRecord:
    trial: int
    max_param_error: float | None = None
    l1_param_error: float | None = None
    structure_precision: float | None = None
    structure_recall: float | None = None
    sigma_chosen: float | None = None
    sigma_optimal: float | None = None
    approximation_ratio: float | None = None
    wall_time_s: float | None = None


def estimation_errors(graph: Graph, report: EstimationReport) -> tuple[float, float]:
    """(max entrywise, L1) error of the estimated parameters over all pairs."""
    diff = np.abs(report.param_hat - graph.params)
    np.fill_diagonal(diff, 0.0)
    return float(diff.max(initial=0.0)), float(diff.sum())


def structure_scores(
    true_edges: frozenset[tuple[int, int]], recovered: frozenset[tuple[int, int]]
) -> tuple[float, float]:
    """(precision, recall) of a recovered edge set; empty sets score 1.0."""
    hit = len(true_edges & recovered)
    precision = hit / len(recovered) if recovered else 1.0
    recall = hit / len(true_edges) if true_edges else 1.0
    return float(precision), float(recall)


def spread_scores(
    graph: Graph, chosen: Iterable[int], k: int
) -> tuple[float, float | None, float | None]:
    """(sigma(chosen), sigma(optimal) or None, ratio or None).

    The optimum is omitted (None) when the instance exceeds the oracle caps.
    """
    sigma_chosen = oracle.exact_sigma(graph, chosen)
    try:
        _, sigma_opt = oracle.exact_optimal_seeds(graph, k)
    except oracle.InstanceTooLargeError:
        return sigma_chosen, None, None
    ratio = sigma_chosen / sigma_opt if sigma_opt > 0 else 1.0
    return sigma_chosen, sigma_opt, ratio


def write_metrics_csv(
    path: str | Path, records: Iterable[MetricsRecord], *, record_wall_time: bool = False
) -> None:
    """Versioned CSV, one row per trial.

    Wall time is blanked unless explicitly requested: it is the one field
    that would break byte-identical re-runs.
    """
    names = [f.name for f in fields(MetricsRecord)]
    with open(path, "w", newline="") as fh:
        fh.write(CSV_SCHEMA + "\n")
        writer = csv.writer(fh)
        writer.writerow(names)
        for record in records:
            row = []
            for name in names:
                value = getattr(record, name)
                if name == "wall_time_s" and not record_wall_time:
                    value = None
                row.append("" if value is None else repr(value) if isinstance(value, float) else value)
            writer.writerow(row)


def summarize(records: list[MetricsRecord]) -> dict[str, dict[str, float]]:
    """Quantiles (min/median/max) of every populated numeric field."""
    out: dict[str, dict[str, float]] = {}
    for f in fields(MetricsRecord):
        if f.name in ("trial", "wall_time_s"):
            continue
        values = [getattr(r, f.name) for r in records if getattr(r, f.name) is not None]
        if not values:
            continue
        arr = np.array(values, dtype=np.float64)
        out[f.name] = {
            "min": float(arr.min()),
            "median": float(np.median(arr)),
            "max": float(arr.max()),
        }
    return out
