import csv
import os

import numpy as np
import pytest
from click.testing import CliRunner

from netcascade.cascade import CENSORED, ThresholdActivation, load_traces
from netcascade.cli import main, parse_model
from netcascade.graph import (
    DirectedGraph,
    in_degree_distribution,
    load_edge_list,
    save_degree_distribution,
    save_edge_list,
)


@pytest.fixture
def runner():
    return CliRunner()


def invoke(runner, *args):
    return runner.invoke(main, [str(a) for a in args])


# ---- model specs ----

def test_model_spec_threshold_parses_to_its_parameters():
    f = parse_model("threshold:0.04,0.6,0.4")
    assert f == ThresholdActivation(gamma=0.04, epsilon=0.6, critical_fraction=0.4)


def test_model_spec_affine_defaults_and_exp_rate():
    lin = parse_model("affine:linear")
    assert lin(0.0) == pytest.approx(0.04)
    assert lin(1.0) == pytest.approx(1.0)
    exp3 = parse_model("affine:exp,3")
    assert exp3(1.0) == pytest.approx(0.04 + 0.96 * (1 - np.exp(-3.0)))


@pytest.mark.parametrize("bad", ["threshold:0.1", "affine:cubic", "logistic:1",
                                 "affine:exp", "threshold:a,b,c"])
def test_model_spec_rejects_malformed_input(bad):
    with pytest.raises(ValueError, match="bad model spec"):
        parse_model(bad)


# ---- generate ----

def test_generate_writes_requested_edge_count(runner, tmp_path):
    out = tmp_path / "net.tsv"
    result = invoke(runner, "generate", "--nodes", 200, "--edges", 1484,
                    "--seed", 7, "-o", out)
    assert result.exit_code == 0, result.output
    lines = out.read_text().splitlines()
    assert lines[0] == "# nodes=200"
    assert len(lines) == 1 + 1484


def test_generate_zero_edges_gives_header_only_file(runner, tmp_path):
    out = tmp_path / "empty.tsv"
    result = invoke(runner, "generate", "--nodes", 5, "--edges", 0, "-o", out)
    assert result.exit_code == 0
    assert out.read_text() == "# nodes=5\n"


def test_generate_rejects_impossible_edge_count(runner, tmp_path):
    result = invoke(runner, "generate", "--nodes", 3, "--edges", 7,
                    "-o", tmp_path / "x.tsv")
    assert result.exit_code != 0
    assert "Error" in result.output


# ---- simulate ----

def test_simulate_round_trips_a_trace_file(runner, tmp_path):
    net = tmp_path / "net.tsv"
    save_edge_list(DirectedGraph.from_edges(4, [(0, 1), (1, 2), (2, 3)]), net)
    out = tmp_path / "traces.tsv"
    result = invoke(runner, "simulate", "--graph", net,
                    "--model", "threshold:0.2,1.0,0.5",
                    "--cascades", 1, "--seed", 5, "-o", out)
    assert result.exit_code == 0, result.output
    body = [l for l in out.read_text().splitlines() if not l.startswith("#")]
    assert len(body) == 1
    traces = load_traces(out)
    assert traces.n_nodes == 4


def test_simulate_same_seed_reproduces_the_file(runner, tmp_path):
    net = tmp_path / "net.tsv"
    save_edge_list(DirectedGraph.from_edges(6, [(i, i + 1) for i in range(5)]), net)
    outs = []
    for name in ("a.tsv", "b.tsv"):
        out = tmp_path / name
        result = invoke(runner, "simulate", "--graph", net,
                        "--model", "affine:linear", "--cascades", 20,
                        "--seed", 9, "-o", out)
        assert result.exit_code == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_simulate_requires_a_network_source(runner, tmp_path):
    result = invoke(runner, "simulate", "--model", "affine:linear",
                    "--cascades", 2, "-o", tmp_path / "t.tsv")
    assert result.exit_code != 0
    assert "--graph" in result.output and "--dataset" in result.output


# ---- infer ----

def _chain_pipeline(runner, tmp_path, n_nodes=6, cascades=300):
    net = tmp_path / "chain.tsv"
    chain = DirectedGraph.from_edges(n_nodes, [(i, i + 1) for i in range(n_nodes - 1)])
    save_edge_list(chain, net)
    traces = tmp_path / "traces.tsv"
    result = invoke(runner, "simulate", "--graph", net,
                    "--model", "threshold:0.05,1.0,0.5",
                    "--cascades", cascades, "--seed", 3, "-o", traces)
    assert result.exit_code == 0, result.output
    return net, traces, chain


def test_infer_heuristic_recovers_a_chain_end_to_end(runner, tmp_path):
    net, traces, chain = _chain_pipeline(runner, tmp_path)
    pred = tmp_path / "pred.tsv"
    result = invoke(runner, "infer", "--traces", traces, "--method", "heuristic",
                    "--edges", chain.n_edges, "-o", pred)
    assert result.exit_code == 0, result.output
    assert load_edge_list(pred).edge_set() == chain.edge_set()
    assert pred.read_bytes() == net.read_bytes()


def test_infer_output_edge_count_matches_requested(runner, tmp_path):
    _, traces, chain = _chain_pipeline(runner, tmp_path, cascades=40)
    pred = tmp_path / "pred.tsv"
    result = invoke(runner, "infer", "--traces", traces, "--method", "heuristic",
                    "--edges", 9, "-o", pred)
    assert result.exit_code == 0
    assert load_edge_list(pred).n_edges == 9


def test_infer_theoretical_with_gamma_file_and_score_dump(runner, tmp_path):
    net, traces, chain = _chain_pipeline(runner, tmp_path)
    gamma = tmp_path / "gamma.tsv"
    save_degree_distribution(in_degree_distribution(chain), gamma)
    pred = tmp_path / "pred.tsv"
    scores = tmp_path / "scores.tsv"
    result = invoke(runner, "infer", "--traces", traces, "--method", "theoretical",
                    "--model", "threshold:0.05,1.0,0.5",
                    "--gamma-from", "file", "--gamma-file", gamma,
                    "--edges", 5, "--scores", scores, "-o", pred)
    assert result.exit_code == 0, result.output
    assert load_edge_list(pred).edge_set() == chain.edge_set()
    header = scores.read_text().splitlines()[0]
    assert header.startswith("# method=theoretical")


def test_infer_semiempirical_needs_a_model(runner, tmp_path):
    _, traces, _ = _chain_pipeline(runner, tmp_path, cascades=10)
    result = invoke(runner, "infer", "--traces", traces, "--method", "semiempirical",
                    "--edges", 5, "-o", tmp_path / "p.tsv")
    assert result.exit_code != 0
    assert "requires --model" in result.output


def test_infer_gamma_from_truth_names_the_missing_network(runner, tmp_path):
    _, traces, _ = _chain_pipeline(runner, tmp_path, cascades=10)
    result = invoke(runner, "infer", "--traces", traces, "--method", "theoretical",
                    "--model", "affine:linear", "--edges", 5,
                    "-o", tmp_path / "p.tsv")
    assert result.exit_code != 0
    assert "--gamma-from truth" in result.output


def test_infer_semiempirical_runs_with_bundled_dataset_gamma(runner, tmp_path):
    _, traces, chain = _chain_pipeline(runner, tmp_path, cascades=60)
    pred = tmp_path / "pred.tsv"
    result = invoke(runner, "infer", "--traces", traces, "--method", "semiempirical",
                    "--model", "threshold:0.05,1.0,0.5", "--gamma-from", "bootstrap",
                    "--surrogate-cascades", 200, "--seed", 4,
                    "--edges", 5, "-o", pred)
    assert result.exit_code == 0, result.output
    assert load_edge_list(pred).n_edges == 5


# ---- eval ----

def test_eval_identical_files_score_one(runner, tmp_path):
    net = tmp_path / "net.tsv"
    save_edge_list(DirectedGraph.from_edges(5, [(0, 1), (2, 3)]), net)
    result = invoke(runner, "eval", "--predicted", net, "--truth", net)
    assert result.exit_code == 0
    assert "accuracy=2/2=1.000000" in result.output


def test_eval_reports_partial_overlap_and_writes_report(runner, tmp_path):
    truth = tmp_path / "truth.tsv"
    pred = tmp_path / "pred.tsv"
    save_edge_list(DirectedGraph.from_edges(4, [(0, 1), (1, 2), (2, 3)]), truth)
    save_edge_list(DirectedGraph.from_edges(4, [(0, 1), (3, 2), (2, 0)]), pred)
    report = tmp_path / "report.tsv"
    result = invoke(runner, "eval", "--predicted", pred, "--truth", truth, "-o", report)
    assert result.exit_code == 0
    assert "accuracy=1/3" in result.output
    assert report.read_text().startswith("accuracy\t0.333")


def test_eval_rejects_empty_truth(runner, tmp_path):
    truth = tmp_path / "truth.tsv"
    pred = tmp_path / "pred.tsv"
    save_edge_list(DirectedGraph.from_edges(3, []), truth)
    save_edge_list(DirectedGraph.from_edges(3, [(0, 1)]), pred)
    result = invoke(runner, "eval", "--predicted", pred, "--truth", truth)
    assert result.exit_code != 0
    assert "at least one edge" in result.output


def test_eval_rejects_mismatched_node_counts(runner, tmp_path):
    truth = tmp_path / "truth.tsv"
    pred = tmp_path / "pred.tsv"
    save_edge_list(DirectedGraph.from_edges(4, [(0, 1)]), truth)
    save_edge_list(DirectedGraph.from_edges(5, [(0, 1)]), pred)
    result = invoke(runner, "eval", "--predicted", pred, "--truth", truth)
    assert result.exit_code != 0
    assert "node counts differ" in result.output


# ---- sweep ----

SWEEP_CONFIG = """
# tiny sweep for tests
param = n_experiments
values = 5, 10
nodes = 12
edges = 30
model = threshold:0.1,0.9,0.4
seed = 3
replicates = 2
methods = heuristic, theoretical
"""


def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_sweep_config_file_produces_plot_ready_csv(runner, tmp_path):
    conf = tmp_path / "sweep.conf"
    conf.write_text(SWEEP_CONFIG)
    out = tmp_path / "sweep.csv"
    result = invoke(runner, "sweep", "--config", conf, "-o", out)
    assert result.exit_code == 0, result.output
    rows = _read_csv(out)
    assert rows[0] == ["param", "value", "method", "replicate", "accuracy", "seconds"]
    assert len(rows) == 1 + 2 * 2 * 2
    for row in rows[1:]:
        assert row[0] == "n_experiments"
        assert 0.0 <= float(row[4]) <= 1.0


def test_sweep_flags_override_config_values(runner, tmp_path):
    conf = tmp_path / "sweep.conf"
    conf.write_text(SWEEP_CONFIG)
    out = tmp_path / "sweep.csv"
    result = invoke(runner, "sweep", "--config", conf, "--values", "5",
                    "--replicates", 1, "-o", out)
    assert result.exit_code == 0, result.output
    rows = _read_csv(out)
    assert len(rows) == 1 + 1 * 1 * 2
    assert {row[1] for row in rows[1:]} == {"5"}


def test_sweep_rejects_unknown_config_keys(runner, tmp_path):
    conf = tmp_path / "sweep.conf"
    conf.write_text("param = gamma\nvalues = 0.1\nmodell = typo\n")
    result = invoke(runner, "sweep", "--config", conf, "-o", tmp_path / "x.csv")
    assert result.exit_code != 0
    assert "modell" in result.output


def _mask_seconds(path):
    rows = _read_csv(path)
    return [row[:5] for row in rows]


def test_sweep_output_is_identical_across_thread_counts(runner, tmp_path):
    conf = tmp_path / "sweep.conf"
    conf.write_text(SWEEP_CONFIG)
    csvs = []
    for threads in (1, os.cpu_count() or 2):
        out = tmp_path / f"sweep-{threads}.csv"
        result = invoke(runner, "sweep", "--config", conf, "--threads", threads, "-o", out)
        assert result.exit_code == 0, result.output
        csvs.append(_mask_seconds(out))
    assert csvs[0] == csvs[1]
