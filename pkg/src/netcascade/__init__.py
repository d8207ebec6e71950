"""Cascade simulation on directed networks and network inference from cascades."""

from netcascade.cascade import (
    CENSORED,
    ActivationFunction,
    AffineActivation,
    CascadeTraceSet,
    MeanFieldCurves,
    TabulatedActivation,
    ThresholdActivation,
    binomial_weight,
    empirical_curves,
    load_traces,
    meanfield_forward,
    run_experiments,
    save_traces,
    simulate_cascade,
)
from netcascade.datasets import available_datasets, dataset_path, load_dataset
from netcascade.evaluation import (
    InferenceReport,
    SweepSpec,
    TrialConfig,
    accuracy,
    run_sweep,
    run_trial,
    summarize_sweep,
    write_sweep_csv,
)
from netcascade.graph import (
    DegreeDistribution,
    DirectedGraph,
    build_surrogate,
    generate_random_graph,
    in_degree_distribution,
    load_edge_list,
    save_edge_list,
)
from netcascade.inference import (
    EdgePosterior,
    HeuristicInference,
    HeuristicScores,
    LikelihoodTable,
    SemiempiricalInference,
    TheoreticalInference,
    bootstrap_degree_distribution,
    infer_semiempirical,
    infer_theoretical,
    measure_likelihood_table,
    prior_omega,
    score_heuristic,
    select_edges,
)

__version__ = "0.1.0"

__all__ = [
    "ActivationFunction",
    "AffineActivation",
    "CENSORED",
    "CascadeTraceSet",
    "DegreeDistribution",
    "DirectedGraph",
    "EdgePosterior",
    "HeuristicInference",
    "HeuristicScores",
    "InferenceReport",
    "LikelihoodTable",
    "MeanFieldCurves",
    "SemiempiricalInference",
    "SweepSpec",
    "TabulatedActivation",
    "TheoreticalInference",
    "ThresholdActivation",
    "TrialConfig",
    "accuracy",
    "available_datasets",
    "binomial_weight",
    "bootstrap_degree_distribution",
    "build_surrogate",
    "dataset_path",
    "empirical_curves",
    "generate_random_graph",
    "in_degree_distribution",
    "infer_semiempirical",
    "infer_theoretical",
    "load_dataset",
    "load_edge_list",
    "load_traces",
    "meanfield_forward",
    "measure_likelihood_table",
    "prior_omega",
    "run_experiments",
    "run_sweep",
    "run_trial",
    "save_edge_list",
    "save_traces",
    "score_heuristic",
    "select_edges",
    "simulate_cascade",
    "summarize_sweep",
    "write_sweep_csv",
    "__version__",
]
