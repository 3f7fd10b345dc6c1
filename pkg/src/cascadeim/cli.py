"""Command-line entry points for reproducible cascade experiments.

Subcommands: generate, infer, recover, ims, oracle, evaluate, sample-size.
Every command is a pure function of its input files, flags, and rng seed:
re-running reproduces output files byte for byte.  Data goes to files,
diagnostics to stderr; small receipts (digests, exact values, summaries)
go to stdout.  The CASCADEIM_THREADS environment variable caps worker
threads for dataset generation and experiment trials.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import metrics as metrics_mod
from . import oracle as oracle_mod
from .graphs import AssumptionParams, Graph, Model, SeedDistribution, random_graph
from .inference import (
    EstimationReport,
    SampleSizeTask,
    collect_stats,
    estimate_edge_probabilities_ic,
    estimate_edge_weights_lt,
    recover_structure,
    sample_size,
)
from .pipelines import Pipeline, ims_ic_a1, ims_ic_a2, ims_ic_a2_eps, ims_lt
from .simulate import CascadeDataset, generate_dataset


def _threads() -> int:
    raw = os.environ.get("CASCADEIM_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _file_sha256(path: Path) -> str:
    import hashlib

    return hashlib.sha256(path.read_bytes()).hexdigest()


@dataclass
class ExperimentConfig:
    """Merged configuration: JSON file values overridden by CLI flags."""

    graph_file: str | None = None
    n: int | None = None
    edge_density: float | None = None
    param_low: float | None = None
    param_high: float | None = None
    model: str | None = None
    seeds_file: str | None = None
    uniform_q: float | None = None
    q: list[float] | None = None
    t: int | None = None
    rng_seed: int | None = None
    out_dir: str | None = None
    pipeline: str | None = None
    k: int | None = None
    epsilon: float | None = None
    delta: float | None = None
    t_prime: int | None = None
    num_sims: int | None = None
    max_in_degree: int | None = None
    trials: int | None = None

    @classmethod
    def load(cls, args: argparse.Namespace) -> "ExperimentConfig":
        values: dict = {}
        config_path = getattr(args, "config", None)
        if config_path:
            values.update(json.loads(Path(config_path).read_text()))
        for name in cls.__dataclass_fields__:
            flag = getattr(args, name, None)
            if flag is not None:
                values[name] = flag
        known = {k: v for k, v in values.items() if k in cls.__dataclass_fields__}
        cfg = cls(**known)
        for path in (cfg.graph_file, cfg.seeds_file):
            if path is not None and not Path(path).exists():
                raise FileNotFoundError(f"configured file does not exist: {path}")
        return cfg

    def require(self, *names: str) -> None:
        missing = [name for name in names if getattr(self, name) is None]
        if missing:
            raise ValueError(f"missing required configuration: {', '.join(missing)}")


def _resolve_graph(cfg: ExperimentConfig) -> Graph:
    if cfg.graph_file:
        graph = Graph.load(cfg.graph_file)
        if cfg.model and Model(cfg.model) is not graph.model:
            raise ValueError(
                f"--model {cfg.model} does not match graph file model {graph.model.value}"
            )
        return graph
    cfg.require("n", "edge_density", "param_low", "param_high", "model", "rng_seed")
    return random_graph(
        cfg.n,
        cfg.edge_density,
        (cfg.param_low, cfg.param_high),
        Model(cfg.model),
        rng_seed=cfg.rng_seed,
    )


def _resolve_dist(cfg: ExperimentConfig, n: int) -> SeedDistribution:
    if cfg.seeds_file:
        return SeedDistribution.load(cfg.seeds_file)
    if cfg.q is not None:
        return SeedDistribution(np.array(cfg.q, dtype=np.float64))
    if cfg.uniform_q is not None:
        return SeedDistribution.uniform(n, cfg.uniform_q)
    raise ValueError("no seed distribution given (seeds_file, q, or uniform_q)")


def cmd_generate(args: argparse.Namespace) -> int:
    cfg = ExperimentConfig.load(args)
    cfg.require("t", "rng_seed", "out_dir")
    graph = _resolve_graph(cfg)
    dist = _resolve_dist(cfg, graph.n)
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    dataset = generate_dataset(graph, dist, cfg.t, rng_seed=cfg.rng_seed, n_jobs=_threads())
    graph.save(out_dir / "graph.json")
    dist.save(out_dir / "seeds.json")
    dataset.save(out_dir / "cascades.jsonl")
    print(f"graph_digest={graph.digest}")
    print(f"seed_dist_digest={dist.digest}")
    print(f"dataset_sha256={_file_sha256(out_dir / 'cascades.jsonl')}")
    return 0


def cmd_infer(args: argparse.Namespace) -> int:
    model = Model(args.model)
    with open(args.dataset) as fh:
        header = json.loads(fh.readline())
    if Model(header["model"]) is not model:
        raise ValueError(
            f"--model {model.value} does not match dataset model {header['model']}"
        )
    stats = collect_stats(args.dataset)
    if model is Model.IC:
        report = estimate_edge_probabilities_ic(stats, target_accuracy=args.accuracy)
    else:
        report = estimate_edge_weights_lt(stats, target_accuracy=args.accuracy)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report.save_json(out_dir / "report.json")
    report.save_csv(out_dir / "report.csv")
    if args.beta is not None:
        edges = recover_structure(report, args.beta)
        doc = {"beta": args.beta, "edges": sorted([list(e) for e in edges])}
        (out_dir / "recovered_edges.json").write_text(
            json.dumps(doc, separators=(",", ":")) + "\n"
        )
    print(f"report_pairs={report.n * (report.n - 1)}")
    print(f"undefined_fraction={report.undefined_fraction()!r}")
    return 0


def _load_report(path: str) -> EstimationReport:
    from .inference import OneStepStats, _readonly

    doc = json.loads(Path(path).read_text())
    n = int(doc["n"])
    given = np.full((n, n), np.nan)
    stats = OneStepStats(
        n=n,
        t=int(doc["t"]),
        q_hat=_readonly(np.array(doc["stats"]["q_hat"]), np.float64),
        ap_hat=_readonly(np.array(doc["stats"]["ap_hat"]), np.float64),
        ap_given_not=_readonly(given, np.float64),
        undefined_given=_readonly(np.ones((n, n), bool), bool),
    )
    return EstimationReport(
        model=Model(doc["model"]),
        param_hat=_readonly(np.array(doc["param_hat"]), np.float64),
        flags=_readonly(np.array(doc["flags"]), np.int8),
        stats=stats,
        target_accuracy=doc["target_accuracy"],
    )


def cmd_recover(args: argparse.Namespace) -> int:
    report = _load_report(args.report)
    edges = recover_structure(report, args.beta)
    doc = {"beta": args.beta, "edges": sorted([list(e) for e in edges])}
    text = json.dumps(doc, separators=(",", ":")) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _run_pipeline(dataset: CascadeDataset, cfg: ExperimentConfig, rng_seed: int):
    pipeline = Pipeline(cfg.pipeline)
    num_sims = cfg.num_sims or 10_000
    common = dict(num_sims=num_sims, rng_seed=rng_seed)
    if pipeline is Pipeline.IC_A1:
        return ims_ic_a1(dataset, cfg.k, cfg.epsilon, **common)
    if pipeline is Pipeline.IC_A2:
        cfg.require("delta", "t_prime")
        return ims_ic_a2(dataset, cfg.k, cfg.epsilon, cfg.delta, cfg.t_prime, **common)
    if pipeline is Pipeline.IC_A2_EPS:
        cfg.require("delta", "t_prime")
        return ims_ic_a2_eps(dataset, cfg.k, cfg.epsilon, cfg.delta, cfg.t_prime, **common)
    return ims_lt(
        dataset, cfg.k, cfg.epsilon, max_in_degree_bound=cfg.max_in_degree, **common
    )


def cmd_ims(args: argparse.Namespace) -> int:
    cfg = ExperimentConfig.load(args)
    cfg.require("pipeline", "k", "epsilon", "rng_seed")
    if cfg.trials:
        return _cmd_ims_experiment(args, cfg)
    if not args.dataset:
        raise ValueError("--dataset is required (or use --trials with a generation spec)")
    dataset = CascadeDataset.load(args.dataset)
    result = _run_pipeline(dataset, cfg, cfg.rng_seed)
    Path(args.out).write_text(result.to_json() + "\n")
    print(f"chosen={sorted(result.chosen.nodes)}")
    return 0


def _cmd_ims_experiment(args: argparse.Namespace, cfg: ExperimentConfig) -> int:
    """trials x (generate -> pipeline -> oracle evaluation), one rng stream per trial."""
    cfg.require("t", "out_dir")
    graph = _resolve_graph(cfg)
    dist = _resolve_dist(cfg, graph.n)
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    def run_trial(i: int):
        start = time.perf_counter()
        trial_seed = cfg.rng_seed + i
        dataset = generate_dataset(graph, dist, cfg.t, rng_seed=trial_seed)
        result = _run_pipeline(dataset, cfg, trial_seed)
        sigma_chosen, sigma_opt, ratio = metrics_mod.spread_scores(
            graph, result.chosen.nodes, cfg.k
        )
        record = metrics_mod.MetricsRecord(
            trial=i,
            sigma_chosen=sigma_chosen,
            sigma_optimal=sigma_opt,
            approximation_ratio=ratio,
            wall_time_s=time.perf_counter() - start,
        )
        return result, record

    indices = range(cfg.trials)
    if _threads() > 1:
        with ThreadPoolExecutor(max_workers=_threads()) as pool:
            outcomes = list(pool.map(run_trial, indices))
    else:
        outcomes = [run_trial(i) for i in indices]
    records = []
    for i, (result, record) in enumerate(outcomes):
        result.save(out_dir / f"result_{i:03d}.json")
        records.append(record)
    metrics_mod.write_metrics_csv(
        out_dir / "metrics.csv", records, record_wall_time=args.record_wall_time
    )
    for field, quantiles in metrics_mod.summarize(records).items():
        print(f"{field}: min={quantiles['min']!r} median={quantiles['median']!r} "
              f"max={quantiles['max']!r}")
    return 0


def cmd_oracle(args: argparse.Namespace) -> int:
    graph = Graph.load(args.graph)
    if args.query == "ap":
        dist = SeedDistribution.load(args.seed_dist)
        if args.given is not None:
            value = oracle_mod.exact_ap_given(
                graph, dist, args.node, args.given, args.given_seeded
            )
        else:
            value = oracle_mod.exact_ap(graph, dist, args.node)
        print(repr(value))
    elif args.query == "sigma":
        seeds = [int(s) for s in args.seeds.split(",") if s != ""]
        if args.forced:
            forced = [int(s) for s in args.forced.split(",") if s != ""]
            value = oracle_mod.exact_sigma_with_forced_in_edges(graph, forced, seeds)
        else:
            value = oracle_mod.exact_sigma(graph, seeds)
        print(repr(value))
    else:  # optimal
        nodes, sigma = oracle_mod.exact_optimal_seeds(graph, args.k)
        print(f"{','.join(str(v) for v in sorted(nodes))} {sigma!r}")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    graph = Graph.load(args.graph)
    report = _load_report(args.report) if args.report else None
    rows: list[metrics_mod.MetricsRecord] = []
    base: dict = {}
    if report is not None:
        max_err, l1_err = metrics_mod.estimation_errors(graph, report)
        base.update(max_param_error=max_err, l1_param_error=l1_err)
        if args.beta is not None:
            recovered = recover_structure(report, args.beta)
            precision, recall = metrics_mod.structure_scores(graph.edges, recovered)
            base.update(structure_precision=precision, structure_recall=recall)
    result_files = args.ims_result or []
    if result_files:
        for i, path in enumerate(result_files):
            doc = json.loads(Path(path).read_text())
            chosen = doc["chosen"]
            k = args.k if args.k is not None else int(doc["budget_k"])
            start = time.perf_counter()
            sigma_chosen, sigma_opt, ratio = metrics_mod.spread_scores(graph, chosen, k)
            record = metrics_mod.MetricsRecord(
                trial=i,
                sigma_chosen=sigma_chosen,
                sigma_optimal=sigma_opt,
                approximation_ratio=ratio,
                wall_time_s=time.perf_counter() - start,
                **base,
            )
            if sigma_opt is None:
                print(f"note: optimal spread omitted for {path}: instance above oracle caps",
                      file=sys.stderr)
            rows.append(record)
    else:
        rows.append(metrics_mod.MetricsRecord(trial=0, **base))
    metrics_mod.write_metrics_csv(args.out, rows, record_wall_time=args.record_wall_time)
    for field, quantiles in metrics_mod.summarize(rows).items():
        print(f"{field}: min={quantiles['min']!r} median={quantiles['median']!r} "
              f"max={quantiles['max']!r}")
    return 0


def cmd_sample_size(args: argparse.Namespace) -> int:
    params = AssumptionParams(
        alpha=args.alpha,
        gamma=args.gamma,
        beta=args.beta,
        c=args.c,
        epsilon=args.epsilon,
        delta=args.delta,
        k=args.k,
    )
    plan = sample_size(SampleSizeTask(args.task), params, args.n, args.max_in_degree)
    print(f"t={plan.t}")
    print(f"eta={plan.eta!r}")
    if plan.t_prime is not None:
        print(f"t_prime={plan.t_prime}")
    return 0


def _add_config_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="JSON config file; flags override its values")
    sub.add_argument("--graph-file")
    sub.add_argument("--n", type=int)
    sub.add_argument("--edge-density", type=float, dest="edge_density")
    sub.add_argument("--param-low", type=float, dest="param_low")
    sub.add_argument("--param-high", type=float, dest="param_high")
    sub.add_argument("--model", choices=[m.value for m in Model])
    sub.add_argument("--seeds-file", dest="seeds_file")
    sub.add_argument("--uniform-q", type=float, dest="uniform_q")
    sub.add_argument("--t", type=int)
    sub.add_argument("--rng-seed", type=int, dest="rng_seed")
    sub.add_argument("--out-dir", dest="out_dir")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cascadeim",
        description="Simulate influence cascades, infer networks from them, "
        "and maximize influence from samples.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("generate", help="write a graph, seed distribution, and dataset")
    _add_config_flags(p)
    p.set_defaults(func=cmd_generate)

    p = subs.add_parser("infer", help="estimate edge parameters from a dataset file")
    p.add_argument("--dataset", required=True)
    p.add_argument("--model", required=True, choices=[m.value for m in Model])
    p.add_argument("--accuracy", type=float, help="declared target accuracy epsilon")
    p.add_argument("--beta", type=float, help="also recover edges with threshold beta/2")
    p.add_argument("--out-dir", required=True, dest="out_dir")
    p.set_defaults(func=cmd_infer)

    p = subs.add_parser("recover", help="threshold a saved report into an edge set")
    p.add_argument("--report", required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_recover)

    p = subs.add_parser("ims", help="run an influence-maximization-from-samples pipeline")
    _add_config_flags(p)
    p.add_argument("--dataset")
    p.add_argument("--pipeline", choices=[pl.value for pl in Pipeline])
    p.add_argument("--k", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--t-prime", type=int, dest="t_prime")
    p.add_argument("--num-sims", type=int, dest="num_sims")
    p.add_argument("--max-in-degree", type=int, dest="max_in_degree")
    p.add_argument("--trials", type=int)
    p.add_argument("--out", help="result JSON path (single-run mode)")
    p.add_argument("--record-wall-time", action="store_true")
    p.set_defaults(func=cmd_ims)

    p = subs.add_parser("oracle", help="exact activation probability, spread, or optimum")
    p.add_argument("query", choices=["ap", "sigma", "optimal"])
    p.add_argument("--graph", required=True)
    p.add_argument("--seed-dist", dest="seed_dist")
    p.add_argument("--node", type=int)
    p.add_argument("--given", type=int)
    p.add_argument("--given-seeded", action="store_true", dest="given_seeded")
    p.add_argument("--seeds", default="")
    p.add_argument("--forced", help="comma list of nodes whose in-edges are forced to 1")
    p.add_argument("--k", type=int)
    p.set_defaults(func=cmd_oracle)

    p = subs.add_parser("evaluate", help="metrics CSV from reports and/or ims results")
    p.add_argument("--graph", required=True)
    p.add_argument("--report")
    p.add_argument("--beta", type=float)
    p.add_argument("--ims-result", nargs="*", dest="ims_result")
    p.add_argument("--k", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--record-wall-time", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    p = subs.add_parser("sample-size", help="theorem-level cascade-count calculator")
    p.add_argument("--task", required=True, choices=[t.value for t in SampleSizeTask])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=0.5)
    p.add_argument("--beta", type=float, default=0.5)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--max-in-degree", type=int, dest="max_in_degree")
    p.set_defaults(func=cmd_sample_size)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as err:  # CLI boundary: message to stderr, nonzero exit
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
