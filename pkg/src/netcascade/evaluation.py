"""Experiment harness: trials, accuracy scoring, and parameter sweeps.

A trial generates (or loads) a ground-truth graph, simulates cascades on it,
hands the activation times to each reconstruction method, and scores the
selected edges against the truth. Sweeps repeat trials over a parameter grid
with replicates and emit plot-ready CSV rows.
"""
from __future__ import annotations

import csv
import dataclasses
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cascade import DEFAULT_STEP_CAP, ActivationFunction, ThresholdActivation, run_experiments
from .graph import DirectedGraph, build_surrogate, generate_random_graph, in_degree_distribution, load_edge_list
from .inference import (
    bootstrap_degree_distribution,
    infer_semiempirical,
    infer_theoretical,
    measure_likelihood_table,
    prior_omega,
    score_heuristic,
    select_edges,
)

METHODS = ("theoretical", "semiempirical", "heuristic")
CASCADE_POLICIES = ("equal-edges", "0.4-pairs")
SWEEPABLE = ("gamma", "epsilon", "f_c", "n_experiments", "n_nodes", "n_edges", "density")

# A trial seeds several independent random streams from one base seed; spacing
# them by purpose keeps replicate seeds (base, base+1, ...) collision-free.
_PURPOSES = {"graph": 0, "traces": 1, "surrogate": 2, "measure": 3}


def _component_seed(seed: int, purpose: str) -> int:
    return seed * len(_PURPOSES) + _PURPOSES[purpose]


def accuracy(predicted: set, truth: set) -> float:
    """Fraction of true edges present among the predicted edges."""
    truth = set(truth)
    if not truth:
        raise ValueError("truth must contain at least one edge")
    return len(set(predicted) & truth) / len(truth)


@dataclass(frozen=True)
class TrialConfig:
    """Everything one reconstruction experiment needs, seeds included.

    The graph comes either from the (n_nodes, n_edges) generator or from an
    edge-list file; n_cascades may be an integer or a named policy tying the
    cascade budget to the graph size ("equal-edges", "0.4-pairs").
    """

    f: ActivationFunction = None
    n_cascades: object = None
    n_nodes: int = None
    n_edges: int = None
    graph_path: str = None
    seed: int = 0
    step_cap: int = DEFAULT_STEP_CAP
    methods: tuple = METHODS
    gamma_from: str = "truth"
    surrogate_cascades: int = None
    heuristic_cascades: int = None
    t_limit: int = None

    def replace(self, **changes) -> "TrialConfig":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class InferenceReport:
    """Outcome of one method on one trial."""

    method: str
    predicted_edges: frozenset
    accuracy: float
    params: dict
    wall_time: float


def _load_graph(config: TrialConfig) -> DirectedGraph:
    if config.graph_path is not None:
        return load_edge_list(config.graph_path)
    if config.n_nodes is None or config.n_edges is None:
        raise ValueError("config needs either graph_path or (n_nodes, n_edges)")
    return generate_random_graph(config.n_nodes, config.n_edges,
                                 seed=_component_seed(config.seed, "graph"))


def _resolve_cascades(n_cascades, graph: DirectedGraph) -> int:
    if n_cascades == "equal-edges":
        return graph.n_edges
    if n_cascades == "0.4-pairs":
        return round(0.4 * graph.n_nodes * (graph.n_nodes - 1))
    if isinstance(n_cascades, (int, np.integer)) and n_cascades >= 1:
        return int(n_cascades)
    raise ValueError(f"n_cascades must be a positive int or one of {CASCADE_POLICIES}")


def run_trial(config: TrialConfig) -> dict[str, InferenceReport]:
    """Simulate one trace set and score every requested method against the truth."""
    unknown = set(config.methods) - set(METHODS)
    if unknown:
        raise ValueError(f"unknown methods: {sorted(unknown)}")
    if config.gamma_from not in ("truth", "bootstrap"):
        raise ValueError("gamma_from must be 'truth' or 'bootstrap'")
    if config.f is None:
        raise ValueError("config needs an activation function")
    graph = _load_graph(config)
    truth = graph.edge_set()
    n_cascades = _resolve_cascades(config.n_cascades, graph)
    traces = run_experiments(graph, config.f, n_cascades,
                             seed=_component_seed(config.seed, "traces"),
                             step_cap=config.step_cap)
    omega = prior_omega(graph.n_nodes, graph.n_edges)
    params = {
        "n_nodes": graph.n_nodes, "n_edges": graph.n_edges,
        "n_cascades": n_cascades, "seed": config.seed, "f": repr(config.f),
        "gamma_from": config.gamma_from, "step_cap": config.step_cap,
        "graph_path": config.graph_path,
    }

    dist = None
    if {"theoretical", "semiempirical"} & set(config.methods):
        dist = in_degree_distribution(graph) if config.gamma_from == "truth" \
            else bootstrap_degree_distribution(traces, graph.n_edges)

    reports = {}
    for method in config.methods:
        start = time.perf_counter()
        if method == "theoretical":
            scores = infer_theoretical(traces, dist, config.f, omega).p
        elif method == "semiempirical":
            surrogate = build_surrogate(dist, graph.n_nodes,
                                        seed=_component_seed(config.seed, "surrogate"))
            table = measure_likelihood_table(
                surrogate, config.f,
                config.surrogate_cascades or n_cascades,
                seed=_component_seed(config.seed, "measure"),
                step_cap=config.step_cap, t_limit=config.t_limit)
            scores = infer_semiempirical(traces, table, omega).p
        else:
            scores = score_heuristic(traces, config.heuristic_cascades).counts
        predicted = select_edges(scores, graph.n_edges)
        reports[method] = InferenceReport(
            method=method, predicted_edges=frozenset(predicted),
            accuracy=accuracy(predicted, truth), params=params,
            wall_time=time.perf_counter() - start)
    return reports


# ---- sweeps ----

@dataclass(frozen=True)
class SweepSpec:
    """A one-parameter grid of trials around a fixed base configuration."""

    swept_parameter: str
    values: tuple
    fixed: TrialConfig
    methods: tuple = None
    replicates: int = 3

    def __post_init__(self):
        if self.swept_parameter not in SWEEPABLE:
            raise ValueError(f"swept_parameter must be one of {SWEEPABLE}")
        if not self.values:
            raise ValueError("values must be nonempty")
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        object.__setattr__(self, "values", tuple(self.values))
        if self.methods is not None:
            object.__setattr__(self, "methods", tuple(self.methods))


@dataclass(frozen=True)
class SweepRow:
    param: str
    value: object
    method: str
    replicate: int
    accuracy: float
    seconds: float


def _apply_parameter(config: TrialConfig, param: str, value) -> TrialConfig:
    if param in ("gamma", "epsilon", "f_c"):
        if not isinstance(config.f, ThresholdActivation):
            raise ValueError(f"sweeping {param} requires a threshold activation function")
        field = "critical_fraction" if param == "f_c" else param
        return config.replace(f=dataclasses.replace(config.f, **{field: value}))
    if param == "n_experiments":
        return config.replace(n_cascades=value)
    if param == "n_nodes":
        return config.replace(n_nodes=int(value))
    if param == "n_edges":
        return config.replace(n_edges=int(value))
    if param == "density":
        slots = config.n_nodes * (config.n_nodes - 1)
        return config.replace(n_edges=round(value * slots))
    raise ValueError(f"unknown parameter {param!r}")


def run_sweep(spec: SweepSpec, threads: int = None) -> list[SweepRow]:
    """One trial per (value, replicate); rows come back sorted by value.

    Replicate r reuses base seed + r across values, so sweeps compare like
    against like. Trials run concurrently when threads allows; assembly order
    is fixed, so results do not depend on the thread count.
    """
    methods = spec.methods or spec.fixed.methods
    base = spec.fixed.replace(methods=tuple(methods))
    jobs = []
    for value in sorted(spec.values):
        for rep in range(spec.replicates):
            config = _apply_parameter(base, spec.swept_parameter, value)
            jobs.append((value, rep, config.replace(seed=base.seed + rep)))
    max_workers = threads or os.cpu_count() or 1
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        results = list(pool.map(lambda job: run_trial(job[2]), jobs))
    rows = []
    for (value, rep, _), reports in zip(jobs, results):
        for method in methods:
            report = reports[method]
            rows.append(SweepRow(param=spec.swept_parameter, value=value,
                                 method=method, replicate=rep,
                                 accuracy=report.accuracy,
                                 seconds=report.wall_time))
    return rows


def summarize_sweep(rows: list[SweepRow]) -> list[dict]:
    """Replicate-averaged accuracy with standard error, per (value, method)."""
    groups = {}
    for row in rows:
        groups.setdefault((row.value, row.method), []).append(row.accuracy)
    summary = []
    for (value, method), accs in sorted(groups.items(), key=lambda kv: (kv[0][0], kv[0][1])):
        arr = np.asarray(accs)
        stderr = float(arr.std(ddof=1) / np.sqrt(arr.size)) if arr.size > 1 else 0.0
        summary.append({"value": value, "method": method,
                        "mean_accuracy": float(arr.mean()), "stderr": stderr,
                        "replicates": arr.size})
    return summary


def write_sweep_csv(rows: list[SweepRow], path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["param", "value", "method", "replicate", "accuracy", "seconds"])
        for row in rows:
            writer.writerow([row.param, row.value, row.method, row.replicate,
                             repr(row.accuracy), f"{row.seconds:.6f}"])
