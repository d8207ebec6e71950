"""Activation functions, cascade simulation, observed/predicted activation curves."""
import math

import numpy as np
import pytest

from netcascade.cascade import (
    CENSORED,
    AffineActivation,
    CascadeTraceSet,
    MeanFieldCurves,
    TabulatedActivation,
    ThresholdActivation,
    as_trace_set,
    binomial_weight,
    empirical_curves,
    evaluate_f,
    load_traces,
    meanfield_forward,
    run_experiments,
    save_traces,
    simulate_cascade,
)
from netcascade.graph import DegreeDistribution, DirectedGraph, build_surrogate, generate_random_graph

THRESHOLD = ThresholdActivation(gamma=0.04, epsilon=0.6, critical_fraction=0.4)


# ---- binomial weights ----

def test_binomial_weight_matches_factorial_formula():
    # oracle: the definition written with factorials, nothing shared with the package
    def oracle(m, k, q):
        coeff = math.factorial(k) // (math.factorial(m) * math.factorial(k - m))
        return coeff * q**m * (1 - q) ** (k - m)

    for k in range(21):
        for m in range(k + 1):
            for q in (0.0, 0.17, 0.5, 0.83, 1.0):
                assert abs(binomial_weight(m, k, q) - oracle(m, k, q)) <= 1e-12


def test_binomial_weight_sums_to_one():
    for k in (0, 1, 5, 13):
        total = sum(binomial_weight(m, k, 0.37) for m in range(k + 1))
        assert abs(total - 1.0) <= 1e-12


def test_binomial_weight_validation():
    with pytest.raises(ValueError):
        binomial_weight(3, 2, 0.5)
    with pytest.raises(ValueError):
        binomial_weight(-1, 2, 0.5)
    with pytest.raises(ValueError):
        binomial_weight(1, 2, 1.5)


# ---- activation functions ----

def test_threshold_activation_values():
    assert evaluate_f(THRESHOLD, 1, 4) == 0.04  # 0.25 below the critical fraction
    assert evaluate_f(THRESHOLD, 2, 4) == 0.6   # 0.5 at/above it
    assert evaluate_f(THRESHOLD, 0, 0) == 0.04  # provider-less nodes use f(0)


def test_affine_activation_shapes():
    linear = AffineActivation(base=0.04, scale=0.96, shape="linear")
    assert evaluate_f(linear, 4, 4) == pytest.approx(1.0)
    assert evaluate_f(linear, 0, 4) == pytest.approx(0.04)
    assert evaluate_f(linear, 2, 4) == pytest.approx(0.52)

    square = AffineActivation(base=0.04, scale=0.96, shape="square")
    assert evaluate_f(square, 2, 4) == pytest.approx(0.04 + 0.96 * 0.25)

    comp = AffineActivation(base=0.04, scale=0.96, shape="square-complement")
    assert evaluate_f(comp, 2, 4) == pytest.approx(0.04 + 0.96 * 0.75)

    exp3 = AffineActivation(base=0.04, scale=0.96, shape="exp", rate=3.0)
    assert evaluate_f(exp3, 4, 4) == pytest.approx(0.04 + 0.96 * (1 - math.exp(-3.0)))
    assert evaluate_f(exp3, 1, 4) == pytest.approx(0.04 + 0.96 * (1 - math.exp(-0.75)))


def test_tabulated_activation_interpolates():
    tab = TabulatedActivation({0.0: 0.2, 1.0: 0.8})
    assert tab(0.5) == pytest.approx(0.5)
    assert TabulatedActivation.constant(0.3)(0.77) == pytest.approx(0.3)


def test_activation_validation():
    with pytest.raises(ValueError):
        ThresholdActivation(gamma=-0.1, epsilon=0.5, critical_fraction=0.5)
    with pytest.raises(ValueError):
        ThresholdActivation(gamma=0.1, epsilon=1.5, critical_fraction=0.5)
    with pytest.raises(ValueError):
        AffineActivation(base=0.5, scale=0.6, shape="linear")  # exceeds 1 at m=k
    with pytest.raises(ValueError):
        AffineActivation(base=0.04, scale=0.96, shape="cubic")
    with pytest.raises(ValueError):
        TabulatedActivation({0.0: 1.2})
    with pytest.raises(ValueError):
        evaluate_f(THRESHOLD, 5, 4)
    with pytest.raises(ValueError):
        evaluate_f(THRESHOLD, 1, 0)


# ---- simulation ----

def test_always_fire_activates_everything_at_step_one():
    g = generate_random_graph(30, 100, seed=0)
    times = simulate_cascade(g, TabulatedActivation.constant(1.0), seed=1)
    assert np.all(times == 1)


def test_never_fire_censors_everything():
    g = generate_random_graph(10, 20, seed=0)
    traces = run_experiments(g, TabulatedActivation.constant(0.0), n_cascades=3, seed=1, step_cap=50)
    assert np.all(traces.times == CENSORED)


def test_cold_chain_stays_inactive():
    # gamma=0 means no spontaneous ignition, so a 0 -> 1 chain never starts
    g = DirectedGraph.from_edges(2, [(0, 1)])
    f = ThresholdActivation(gamma=0.0, epsilon=1.0, critical_fraction=0.5)
    times = simulate_cascade(g, f, seed=3, step_cap=100)
    assert times[0] == CENSORED and times[1] == CENSORED


def test_updates_are_synchronous():
    # f(0)=1, f(1)=0: with synchronous updates every node sees the all-inactive
    # state of step zero and fires at t=1; any in-step sequencing would instead
    # freeze the downstream nodes forever
    g = DirectedGraph.from_edges(3, [(0, 1), (1, 2)])
    f = ThresholdActivation(gamma=1.0, epsilon=0.0, critical_fraction=0.5)
    times = simulate_cascade(g, f, seed=0, step_cap=10)
    assert list(times) == [1, 1, 1]


def test_simulation_deterministic_and_seed_sensitive():
    g = generate_random_graph(50, 200, seed=5)
    a = simulate_cascade(g, THRESHOLD, seed=11)
    b = simulate_cascade(g, THRESHOLD, seed=11)
    c = simulate_cascade(g, THRESHOLD, seed=12)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_cascade_streams_are_independent_of_batch_size():
    # cascade i is seeded from (seed, i), so a longer run extends a shorter one
    g = generate_random_graph(40, 160, seed=2)
    short = run_experiments(g, THRESHOLD, n_cascades=4, seed=9)
    long = run_experiments(g, THRESHOLD, n_cascades=8, seed=9)
    assert np.array_equal(short.times, long.times[:4])


def test_positive_spontaneous_rate_leaves_nothing_censored():
    g = generate_random_graph(200, 1484, seed=7)
    traces = run_experiments(g, THRESHOLD, n_cascades=2000, seed=7, step_cap=10_000)
    assert not np.any(traces.times == CENSORED)
    assert traces.times.min() >= 1


def test_trace_set_validation():
    with pytest.raises(ValueError):
        CascadeTraceSet(np.array([[0, 1]]))  # 0 is not a valid activation time
    ok = CascadeTraceSet(np.array([[1, CENSORED], [2, 3]]))
    assert ok.n_cascades == 2 and ok.n_nodes == 2 and ok.t_max == 3


def test_as_trace_set_accepts_float_matrices_with_nan():
    x = np.array([[1.0, np.nan], [2.0, 3.0]])
    traces = as_trace_set(x)
    assert traces.times[0, 1] == CENSORED
    assert traces.times[1, 1] == 3


# ---- observed curves ----

def test_empirical_curves_small_case():
    traces = CascadeTraceSet(np.array([[1, 2], [1, CENSORED]]))
    curves = empirical_curves(traces)
    assert np.allclose(curves.d, [0.5, 0.25])
    assert np.allclose(curves.q, [0.5, 0.75])
    assert curves.q_at(0) == 0.0
    assert curves.d_at(2) == 0.25
    with pytest.raises(ValueError):
        curves.d_at(3)


def test_empirical_curves_cumulative_identity():
    g = generate_random_graph(80, 400, seed=1)
    traces = run_experiments(g, THRESHOLD, n_cascades=50, seed=4)
    curves = empirical_curves(traces)
    assert np.all(curves.q[:-1] <= curves.q[1:] + 1e-15)
    assert curves.q[-1] <= 1.0 + 1e-12
    recon = np.cumsum(curves.d)
    assert np.array_equal(recon, curves.q)


# ---- forward mean-field curves ----

def _oracle_forward(gamma: dict[int, float], f, horizon: int):
    """Independent re-derivation: per-class survival DP with persistent providers."""
    classes = {}
    for k, g in gamma.items():
        fk = [f(m / k) if k else f(0.0) for m in range(k + 1)]
        classes[k] = {"g": g, "f": fk, "w": [1.0] + [0.0] * k}
    d_out, q = [], 0.0
    for _ in range(horizon):
        dt = sum(c["g"] * sum(w * fv for w, fv in zip(c["w"], c["f"])) for c in classes.values())
        q_new = q + dt
        r = 0.0 if q >= 1 else (q_new - q) / (1 - q)
        for k, c in classes.items():
            surv = [w * (1 - fv) for w, fv in zip(c["w"], c["f"])]
            nw = [0.0] * (k + 1)
            for m in range(k + 1):
                for j in range(k - m + 1):
                    nw[m + j] += surv[m] * math.comb(k - m, j) * r**j * (1 - r) ** (k - m - j)
            c["w"] = nw
        d_out.append(dt)
        q = q_new
    return np.array(d_out)


def test_meanfield_first_step_is_spontaneous_rate():
    dist = DegreeDistribution({0: 0.2, 2: 0.5, 5: 0.3})
    curves = meanfield_forward(dist, THRESHOLD, horizon=4)
    assert curves.d_at(1) == pytest.approx(0.04, abs=1e-12)
    assert len(curves.d) == 4


def test_meanfield_constant_rate_decays_geometrically():
    dist = DegreeDistribution({3: 1.0})
    curves = meanfield_forward(dist, TabulatedActivation.constant(0.3), horizon=8)
    expect = [0.3 * 0.7 ** (t - 1) for t in range(1, 9)]
    assert np.allclose(curves.d, expect, atol=1e-12)


def test_meanfield_hand_expanded_second_step():
    # k=2 everywhere, threshold f = (0.1, 0.9, 0.9) at m = 0, 1, 2.
    # Step 1: everyone fires with f(0)=0.1, so D(1)=0.1 and survivors carry a
    # Binom(2, 0.1) provider count. D(2) = 0.9 * (0.81*0.1 + 0.18*0.9 + 0.01*0.9).
    dist = DegreeDistribution({2: 1.0})
    f = ThresholdActivation(gamma=0.1, epsilon=0.9, critical_fraction=0.5)
    curves = meanfield_forward(dist, f, horizon=3)
    assert curves.d_at(1) == pytest.approx(0.1, abs=1e-12)
    assert curves.d_at(2) == pytest.approx(0.2268, abs=1e-12)


def test_meanfield_matches_independent_dp():
    f = AffineActivation(base=0.05, scale=0.9, shape="linear")
    dist = DegreeDistribution({0: 0.1, 1: 0.2, 3: 0.4, 6: 0.3})
    got = meanfield_forward(dist, f, horizon=12)
    want = _oracle_forward(dist.gamma, lambda x: float(f(x)), 12)
    assert np.allclose(got.d, want, atol=1e-12)
    assert np.array_equal(got.q, np.cumsum(got.d))
    assert got.q[-1] <= 1.0 + 1e-12


def test_meanfield_tracks_simulation():
    # reduced-size version of the fidelity gate: predicted activation-time curve
    # vs direct simulation on a surrogate network
    dist = DegreeDistribution({2: 0.5, 4: 0.5})
    f = ThresholdActivation(gamma=0.05, epsilon=0.7, critical_fraction=0.5)
    g = build_surrogate(dist, 5000, seed=3)
    traces = run_experiments(g, f, n_cascades=40, seed=8)
    emp = empirical_curves(traces)
    mf = meanfield_forward(dist, f, horizon=len(emp.d))
    assert np.abs(mf.d - emp.d).max() <= 0.02


# ---- trace files ----

def test_trace_file_round_trip(tmp_path):
    g = generate_random_graph(25, 80, seed=6)
    traces = run_experiments(g, THRESHOLD, n_cascades=12, seed=13, step_cap=60)
    path = tmp_path / "traces.txt"
    save_traces(traces, path)
    loaded = load_traces(path)
    assert np.array_equal(loaded.times, traces.times)


def test_trace_file_censored_marker(tmp_path):
    traces = CascadeTraceSet(np.array([[1, CENSORED], [CENSORED, 4]]))
    path = tmp_path / "traces.txt"
    save_traces(traces, path)
    text = path.read_text(encoding="utf-8")
    assert text.splitlines()[0] == "# nodes=2 cascades=2"
    assert "-" in text
    assert np.array_equal(load_traces(path).times, traces.times)


def test_trace_file_rejects_bad_width(tmp_path):
    path = tmp_path / "traces.txt"
    path.write_text("# nodes=3 cascades=1\n1 2\n", encoding="utf-8")
    with pytest.raises(ValueError, match="line 2"):
        load_traces(path)
