"""Command-line pipelines over the library: generate, simulate, infer, eval, sweep.

Every command echoes its effective parameters (seeds included) to stdout and
is deterministic given its arguments; errors go to stderr with a nonzero exit.
"""
from __future__ import annotations

import functools
from pathlib import Path

import click

from .cascade import (
    DEFAULT_STEP_CAP,
    AffineActivation,
    ThresholdActivation,
    load_traces,
    run_experiments,
    save_traces,
)
from .datasets import available_datasets, dataset_path
from .evaluation import (
    CASCADE_POLICIES,
    METHODS,
    SweepSpec,
    TrialConfig,
    _component_seed,
    accuracy,
    run_sweep,
    write_sweep_csv,
)
from .graph import (
    DirectedGraph,
    build_surrogate,
    generate_random_graph,
    in_degree_distribution,
    load_degree_distribution,
    load_edge_list,
    save_edge_list,
)
from .inference import (
    bootstrap_degree_distribution,
    infer_semiempirical,
    infer_theoretical,
    measure_likelihood_table,
    prior_omega,
    save_score_matrix,
    score_heuristic,
    select_edges,
)

_AFFINE_USAGE = "affine:SHAPE[,RATE][,BASE,SCALE] with shape linear|square|square-complement|exp"


def parse_model(spec: str):
    """Build an activation function from a spec like threshold:0.04,0.6,0.4."""
    kind, _, rest = spec.partition(":")
    fields = [tok.strip() for tok in rest.split(",")] if rest else []
    try:
        if kind == "threshold":
            if len(fields) != 3:
                raise ValueError("threshold takes exactly GAMMA,EPSILON,CRITICAL")
            gamma, epsilon, critical = (float(tok) for tok in fields)
            return ThresholdActivation(gamma=gamma, epsilon=epsilon,
                                       critical_fraction=critical)
        if kind == "affine":
            if not fields or not fields[0]:
                raise ValueError(f"affine needs a shape: {_AFFINE_USAGE}")
            shape, extras = fields[0], fields[1:]
            rate = 1.0
            if shape == "exp":
                if not extras:
                    raise ValueError("affine:exp needs a rate, e.g. affine:exp,3")
                rate = float(extras.pop(0))
            if extras and len(extras) != 2:
                raise ValueError(_AFFINE_USAGE)
            base, scale = (float(extras[0]), float(extras[1])) if extras else (0.04, 0.96)
            return AffineActivation(base=base, scale=scale, shape=shape, rate=rate)
        raise ValueError("model kind must be 'threshold' or 'affine'")
    except ValueError as exc:
        raise ValueError(f"bad model spec {spec!r}: {exc}") from None


def _wrap_errors(fn):
    """Convert library errors into clean CLI failures on stderr."""
    @functools.wraps(fn)
    def inner(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except click.ClickException:
            raise
        except (ValueError, OSError) as exc:
            raise click.ClickException(str(exc)) from exc
    return inner


def _resolve_network(graph: str, dataset: str, purpose: str) -> Path:
    if graph and dataset:
        raise click.UsageError("give either --graph or --dataset, not both")
    if graph:
        return Path(graph)
    if dataset:
        return dataset_path(dataset)
    raise click.UsageError(f"{purpose} requires a network: --graph PATH or --dataset NAME")


_graph_option = click.option("--graph", type=click.Path(), default=None,
                             help="Edge-list file of the network.")
_dataset_option = click.option("--dataset", type=click.Choice(available_datasets()),
                               default=None, help="Bundled network to use instead of --graph.")


@click.group()
def main():
    """Simulate activation cascades and reconstruct the network behind them."""


@main.command()
@click.option("--nodes", type=click.IntRange(1), required=True)
@click.option("--edges", type=click.IntRange(0), required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--output", "-o", type=click.Path(), required=True)
@_wrap_errors
def generate(nodes, edges, seed, output):
    """Generate a uniform random directed graph and write its edge list."""
    g = generate_random_graph(nodes, edges, seed=seed)
    save_edge_list(g, output)
    click.echo(f"generate: nodes={g.n_nodes} edges={g.n_edges} "
               f"mean_in_degree={g.n_edges / g.n_nodes:.4f} seed={seed} output={output}")


@main.command()
@_graph_option
@_dataset_option
@click.option("--model", required=True, help="threshold:G,E,FC or affine:SHAPE[,RATE].")
@click.option("--cascades", type=click.IntRange(1), required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--step-cap", type=click.IntRange(1), default=DEFAULT_STEP_CAP,
              show_default=True, help="Steps before a cascade is censored.")
@click.option("--output", "-o", type=click.Path(), required=True)
@_wrap_errors
def simulate(graph, dataset, model, cascades, seed, step_cap, output):
    """Run cascades on a network and write the activation-time traces."""
    path = _resolve_network(graph, dataset, "simulate")
    f = parse_model(model)
    g = load_edge_list(path)
    traces = run_experiments(g, f, cascades, seed=seed, step_cap=step_cap)
    save_traces(traces, output)
    click.echo(f"simulate: network={path} model={model} cascades={cascades} "
               f"seed={seed} step_cap={step_cap} output={output}")


@main.command()
@click.option("--traces", "traces_path", type=click.Path(), required=True,
              help="Activation-time traces from 'simulate'.")
@click.option("--method", type=click.Choice(METHODS), required=True)
@click.option("--edges", type=click.IntRange(1), required=True,
              help="How many edges to predict.")
@click.option("--model", default=None, help="Activation model; required except for heuristic.")
@click.option("--gamma-from", type=click.Choice(("truth", "bootstrap", "file")),
              default="truth", show_default=True,
              help="Source of the in-degree distribution.")
@_graph_option
@_dataset_option
@click.option("--gamma-file", type=click.Path(), default=None,
              help="Degree-distribution file for --gamma-from file.")
@click.option("--surrogate-cascades", type=click.IntRange(1), default=None,
              help="Cascades measured on the surrogate (default: as many as the traces).")
@click.option("--t-limit", type=click.IntRange(1), default=None,
              help="Likelihood-table horizon (default: 99th percentile of surrogate times).")
@click.option("--heuristic-cascades", type=click.IntRange(1), default=None,
              help="Use only the first K cascades for the heuristic counts.")
@click.option("--seed", type=int, default=0, show_default=True,
              help="Seed for the surrogate pipeline.")
@click.option("--scores", type=click.Path(), default=None,
              help="Also dump the full score/posterior matrix here.")
@click.option("--output", "-o", type=click.Path(), required=True,
              help="Predicted edge list.")
@_wrap_errors
def infer(traces_path, method, edges, model, gamma_from, graph, dataset, gamma_file,
          surrogate_cascades, t_limit, heuristic_cascades, seed, scores, output):
    """Reconstruct the most likely edge set from observed traces."""
    traces = load_traces(traces_path)
    n = traces.n_nodes
    if edges > n * (n - 1):
        raise click.UsageError(f"--edges {edges} exceeds the {n * (n - 1)} ordered pairs "
                               f"of a {n}-node network")
    omega = prior_omega(n, edges)

    if method == "heuristic":
        matrix = score_heuristic(traces, heuristic_cascades).counts
    else:
        if model is None:
            raise click.UsageError(f"--method {method} requires --model")
        f = parse_model(model)
        if gamma_from == "truth":
            if not (graph or dataset):
                raise click.UsageError("--gamma-from truth requires the true network: "
                                       "--graph PATH or --dataset NAME")
            dist = in_degree_distribution(load_edge_list(
                _resolve_network(graph, dataset, "infer")))
        elif gamma_from == "bootstrap":
            dist = bootstrap_degree_distribution(traces, edges)
        else:
            if gamma_file is None:
                raise click.UsageError("--gamma-from file requires --gamma-file PATH")
            dist = load_degree_distribution(gamma_file)
        if method == "theoretical":
            matrix = infer_theoretical(traces, dist, f, omega).p
        else:
            surrogate = build_surrogate(dist, n, seed=_component_seed(seed, "surrogate"))
            table = measure_likelihood_table(
                surrogate, f, surrogate_cascades or traces.n_cascades,
                seed=_component_seed(seed, "measure"), t_limit=t_limit)
            matrix = infer_semiempirical(traces, table, omega).p

    predicted = select_edges(matrix, edges)
    save_edge_list(DirectedGraph.from_edges(n, sorted(predicted)), output)
    if scores:
        save_score_matrix(matrix, method, omega, scores)
    click.echo(f"infer: method={method} traces={traces_path} edges={edges} "
               f"gamma_from={gamma_from} seed={seed} output={output}"
               + (f" scores={scores}" if scores else ""))


@main.command(name="eval")
@click.option("--predicted", type=click.Path(), required=True)
@click.option("--truth", type=click.Path(), required=True)
@click.option("--output", "-o", type=click.Path(), default=None,
              help="Also write the accuracy to a file.")
@_wrap_errors
def eval_cmd(predicted, truth, output):
    """Score a predicted edge list against the true network."""
    pred = load_edge_list(predicted)
    true = load_edge_list(truth)
    if pred.n_nodes != true.n_nodes:
        raise click.ClickException(f"node counts differ: predicted has {pred.n_nodes}, "
                                   f"truth has {true.n_nodes}")
    acc = accuracy(pred.edge_set(), true.edge_set())
    hits = len(pred.edge_set() & true.edge_set())
    if output:
        Path(output).write_text(f"accuracy\t{acc!r}\n", encoding="utf-8")
    click.echo(f"eval: predicted={predicted} truth={truth} "
               f"accuracy={hits}/{true.n_edges}={acc:.6f}")


def _read_config(path: str) -> dict[str, str]:
    """Line-oriented `key = value` text; '#' starts a comment."""
    out: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep or not key.strip():
                raise ValueError(f"{path}, line {lineno}: expected 'key = value'")
            out[key.strip()] = value.strip()
    return out


def _parse_number(token: str):
    try:
        return int(token)
    except ValueError:
        return float(token)


_SWEEP_KEYS = ("param", "values", "nodes", "edges", "graph", "dataset", "model",
               "cascades", "seed", "replicates", "methods", "threads")


@main.command()
@click.option("--config", type=click.Path(), required=True,
              help="key = value file; flags below override its entries.")
@click.option("--param", default=None, help="Parameter to sweep.")
@click.option("--values", default=None, help="Comma-separated sweep values.")
@click.option("--replicates", type=click.IntRange(1), default=None)
@click.option("--seed", type=int, default=None)
@click.option("--threads", type=click.IntRange(1), default=None,
              help="Worker threads (default: all cores).")
@click.option("--output", "-o", type=click.Path(), required=True,
              help="Sweep CSV.")
@_wrap_errors
def sweep(config, param, values, replicates, seed, threads, output):
    """Run a one-parameter sweep of reconstruction trials, CSV out."""
    conf = _read_config(config)
    unknown = set(conf) - set(_SWEEP_KEYS)
    if unknown:
        raise click.ClickException(f"unknown config keys in {config}: {sorted(unknown)}")
    if param is not None:
        conf["param"] = param
    if values is not None:
        conf["values"] = values
    if replicates is not None:
        conf["replicates"] = str(replicates)
    if seed is not None:
        conf["seed"] = str(seed)
    if threads is not None:
        conf["threads"] = str(threads)
    for key in ("param", "values", "model"):
        if key not in conf:
            raise click.ClickException(f"sweep needs {key!r} (config file or flag)")

    graph_path = None
    if conf.get("graph") or conf.get("dataset"):
        graph_path = str(_resolve_network(conf.get("graph"), conf.get("dataset"), "sweep"))
    cascades = conf.get("cascades")
    if cascades is not None and cascades not in CASCADE_POLICIES:
        cascades = int(cascades)
    fixed = TrialConfig(
        f=parse_model(conf["model"]),
        n_cascades=cascades,
        n_nodes=int(conf["nodes"]) if "nodes" in conf else None,
        n_edges=int(conf["edges"]) if "edges" in conf else None,
        graph_path=graph_path,
        seed=int(conf.get("seed", 0)),
    )
    methods = None
    if "methods" in conf:
        methods = tuple(tok.strip() for tok in conf["methods"].split(",") if tok.strip())
    spec = SweepSpec(
        swept_parameter=conf["param"],
        values=tuple(_parse_number(tok) for tok in conf["values"].split(",") if tok.strip()),
        fixed=fixed,
        methods=methods,
        replicates=int(conf.get("replicates", 3)),
    )
    rows = run_sweep(spec, threads=int(conf["threads"]) if "threads" in conf else None)
    write_sweep_csv(rows, output)
    click.echo(f"sweep: param={spec.swept_parameter} values={list(spec.values)} "
               f"replicates={spec.replicates} seed={fixed.seed} rows={len(rows)} "
               f"output={output}")


if __name__ == "__main__":
    main()
