"""Reconstructing the hidden edge set from observed activation times.

Three routes to a per-pair edge score:

* theoretical: model-implied pair likelihoods built from the in-degree
  distribution, the activation function, and the observed activation curves,
  folded through iterative Bayes updates;
* semiempirical: the same Bayes fold, but with likelihood tables measured by
  simulating cascades on a surrogate network with matching in-degrees;
* heuristic: counting how often one node fires exactly one step after another.

All three produce a dense score matrix; the final edge set is the top E pairs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import expit
from sklearn.base import BaseEstimator

from .cascade import (
    CENSORED,
    DEFAULT_STEP_CAP,
    ActivationFunction,
    CascadeTraceSet,
    MeanFieldCurves,
    _comb_row,
    as_trace_set,
    empirical_curves,
    run_experiments,
)
from .graph import DegreeDistribution, DirectedGraph, build_surrogate, in_degree_distribution

# Bayes updates are absorbing at 0 and 1; keeping every probability inside
# [PROB_FLOOR, 1 - PROB_FLOOR] keeps the fold reversible.
PROB_FLOOR = 1e-9


class DegenerateEvidenceError(ValueError):
    """Both likelihoods are zero: the observation carries no usable signal."""


def prior_omega(n_nodes: int, n_edges: int) -> float:
    """Prior edge probability: edges over ordered node pairs."""
    if n_nodes < 2:
        raise ValueError("need at least two nodes")
    slots = n_nodes * (n_nodes - 1)
    if not 0 <= n_edges <= slots:
        raise ValueError(f"n_edges must be in [0, {slots}], got {n_edges}")
    return n_edges / slots


# ---- theoretical pair likelihoods ----

def _provider_hazards(curves: MeanFieldCurves) -> np.ndarray:
    """Per-step fire hazard of an arbitrary provider, implied by the observed curve.

    hazards[t-1] = P(fires at t | not yet active), so chaining them reproduces
    the curve's cumulative activation exactly.
    """
    q_prev = np.concatenate(([0.0], curves.q[:-1])) if curves.horizon else curves.q
    remain = 1.0 - q_prev
    rates = np.divide(curves.d, remain, out=np.zeros_like(curves.d), where=remain > 0.0)
    return np.clip(rates, 0.0, 1.0)


def _recruit_matrix(size: int, rate: float) -> np.ndarray:
    """Transition matrix over provider counts 0..size-1 for one recruitment step."""
    out = np.zeros((size, size))
    for m in range(size):
        rem = size - 1 - m
        j = np.arange(rem + 1)
        out[m, m:] = _comb_row(rem) * rate**j * (1.0 - rate) ** (rem - j)
    return out


def _consumer_classes(dist: DegreeDistribution) -> list[tuple[int, float]]:
    """Degree classes a consumer with at least one provider can belong to.

    Degree-0 classes drop out (no edge can point at them) and the remaining
    shares renormalize, otherwise the mixture sums below one and every
    observation picks up a constant spurious drift against the edge.
    """
    pairs = [(k, share) for k, share in dist.items() if k > 0 and share > 0.0]
    total = sum(w for _, w in pairs)
    if total <= 0.0:
        raise ValueError("in-degree distribution has no mass on positive degrees")
    return [(k, w / total) for k, w in pairs]


def _consumer_time_law(dist: DegreeDistribution, f: ActivationFunction,
                       curves: MeanFieldCurves) -> np.ndarray:
    """law[a-1][b-1] = P(consumer fires at b | one of its providers fired at a).

    Tracks, per degree class k, the consumer's survival jointly with how many
    of its k-1 other providers are active. Other providers arrive with the
    per-step hazard implied by the observed curve (so their marginal activation
    matches it exactly), the designated provider counts from step a+1 on, and
    each step multiplies survival by one minus the fire rate. Classes mix with
    positive-degree shares so the law stays a proper sub-distribution.
    """
    horizon = curves.horizon
    rates = _provider_hazards(curves)
    a_idx = np.arange(horizon)[:, None]
    b_idx = np.arange(horizon)[None, :]
    law = np.zeros((horizon, horizon))
    for k, share in _consumer_classes(dist):
        grid = np.arange(k) / k
        f_off = np.asarray(f(grid), dtype=float).reshape(-1)
        f_on = np.asarray(f(grid + 1.0 / k), dtype=float).reshape(-1)
        # source-inactive pass: fire law plus the state entering every step
        w = np.zeros(k)
        w[0] = 1.0
        states = np.zeros((horizon, k))
        p_off = np.zeros(horizon)
        transitions = []
        for t in range(horizon):
            states[t] = w
            p_off[t] = w @ f_off
            transitions.append(_recruit_matrix(k, float(rates[t])))
            w = (w * (1.0 - f_off)) @ transitions[t]
        class_law = np.where(b_idx <= a_idx, p_off[None, :], 0.0)
        # switched continuations, one per a, advanced in lockstep over b
        cont = np.zeros((horizon, k))
        for b in range(1, horizon):
            cont[b - 1] = states[b]
            class_law[:b, b] = cont[:b] @ f_on
            cont[:b] = (cont[:b] * (1.0 - f_on)[None, :]) @ transitions[b]
        law += share * class_law
    return law


def _check_time(name: str, t: int, horizon: int) -> None:
    if not isinstance(t, (int, np.integer)) or not 1 <= t <= horizon:
        raise ValueError(f"{name}={t} outside the curve horizon [1, {horizon}]")


def theoretical_pair_likelihood(t_i: int, t_j: int, dist: DegreeDistribution,
                                f: ActivationFunction, curves: MeanFieldCurves) -> float:
    """P(t_i, t_j | i -> j): source fires at t_i, consumer at t_j.

    D(t_i) times the consumer's conditional fire law, which accounts for the
    consumer surviving every earlier step and for the source's influence
    starting the step after it fires.
    """
    _check_time("t_i", t_i, curves.horizon)
    _check_time("t_j", t_j, curves.horizon)
    law = _consumer_time_law(dist, f, curves)
    return float(curves.d_at(t_i) * law[t_i - 1, t_j - 1])


def noedge_pair_likelihood(t_i: int, t_j: int, omega: float, p_edge: float,
                           curves: MeanFieldCurves) -> float:
    """P(t_i, t_j | no edge), inverted from D(t_i)D(t_j) = w*p_edge + (1-w)*p_noedge.

    The inversion can go negative when the edge likelihood overshoots; the
    result is clamped to the probability floor.
    """
    if not 0 <= omega < 1:
        raise ValueError("omega must be in [0, 1)")
    joint = curves.d_at(t_i) * curves.d_at(t_j)
    return max((joint - omega * p_edge) / (1.0 - omega), PROB_FLOOR)


def _pair_likelihood_grids(dist, f, curves, omega):
    """Dense (t_i, t_j) grids of edge and no-edge likelihoods, 1-indexed times."""
    edge = curves.d[:, None] * _consumer_time_law(dist, f, curves)
    joint = curves.d[:, None] * curves.d[None, :]
    noedge = np.maximum((joint - omega * edge) / (1.0 - omega), PROB_FLOOR)
    return edge, noedge


# ---- Bayes updates ----

def bayes_step(prev: float, l_edge: float, l_noedge: float) -> float:
    """One posterior update from a single (t_i, t_j) observation."""
    if not 0 < prev < 1:
        raise ValueError("prev must be strictly inside (0, 1)")
    if l_edge < 0 or l_noedge < 0:
        raise ValueError("likelihoods must be nonnegative")
    if l_edge == 0 and l_noedge == 0:
        raise DegenerateEvidenceError("both likelihoods are zero")
    if l_edge == l_noedge:
        return prev
    post = prev * l_edge / (prev * l_edge + (1.0 - prev) * l_noedge)
    return float(min(max(post, PROB_FLOOR), 1.0 - PROB_FLOOR))


def _log_ratio(l_edge: np.ndarray, l_noedge: np.ndarray) -> np.ndarray:
    """log(l_edge / l_noedge); equal entries give exactly 0, zero l_edge gives -inf."""
    with np.errstate(divide="ignore"):
        return np.log(l_edge) - np.log(l_noedge)


def _fold_posterior(per_cascade, n_nodes: int, n_cascades: int, omega: float) -> np.ndarray:
    """Combine per-cascade evidence into posteriors via the product form.

    The Bayes iteration is a product of per-observation likelihood ratios, so
    the fold accumulates log-ratios (order-independent up to float addition)
    and converts once at the end. Invalid or uninformative cells contribute
    exactly 0, which makes omega an exact fixpoint when nothing carries signal,
    and the final clamp keeps every posterior inside [floor, 1 - floor].
    """
    if not 0 < omega < 1:
        raise ValueError("omega must be strictly inside (0, 1)")
    total = np.zeros((n_nodes, n_nodes))
    for c in range(n_cascades):
        ratio, valid = per_cascade(c)
        total += np.where(valid, ratio, 0.0)
    post = np.where(total == 0.0, omega, expit(math.log(omega / (1.0 - omega)) + total))
    post = np.clip(post, PROB_FLOOR, 1.0 - PROB_FLOOR)
    np.fill_diagonal(post, np.nan)
    return post


# ---- containers ----

@dataclass(frozen=True)
class EdgePosterior:
    """Per-ordered-pair edge probabilities; diagonal is undefined (NaN)."""

    n_nodes: int
    p: np.ndarray
    omega: float = float("nan")
    method: str = ""

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if p.shape != (self.n_nodes, self.n_nodes):
            raise ValueError("posterior matrix shape must be (n_nodes, n_nodes)")
        off = ~np.eye(self.n_nodes, dtype=bool)
        vals = p[off]
        if vals.size and (np.isnan(vals).any() or vals.min() < PROB_FLOOR
                          or vals.max() > 1.0 - PROB_FLOOR):
            raise ValueError("off-diagonal posteriors must lie in [floor, 1 - floor]")
        p = p.copy()
        np.fill_diagonal(p, np.nan)
        object.__setattr__(self, "p", p)


@dataclass(frozen=True)
class LikelihoodTable:
    """Measured (t_i, t_j) likelihood grids with an overflow bucket.

    Bucket b < t_limit holds time b+1; the last bucket pools every later or
    censored observation.
    """

    t_limit: int
    p_edge: np.ndarray
    p_noedge: np.ndarray
    counts_edge: np.ndarray = None
    counts_noedge: np.ndarray = None

    def __post_init__(self):
        if self.t_limit < 1:
            raise ValueError("t_limit must be >= 1")
        size = self.t_limit + 1
        for name in ("p_edge", "p_noedge"):
            grid = np.asarray(getattr(self, name), dtype=float)
            if grid.shape != (size, size):
                raise ValueError(f"{name} must have shape ({size}, {size})")
            if abs(grid.sum() - 1.0) > 1e-9:
                raise ValueError(f"{name} must sum to 1")
            if grid.min() <= 0:
                raise ValueError(f"{name} entries must be positive")
            object.__setattr__(self, name, grid)
        for name in ("counts_edge", "counts_noedge"):
            counts = getattr(self, name)
            counts = np.zeros((size, size), dtype=np.int64) if counts is None \
                else np.asarray(counts, dtype=np.int64)
            if counts.shape != (size, size):
                raise ValueError(f"{name} must have shape ({size}, {size})")
            object.__setattr__(self, name, counts)

    @property
    def counts(self) -> dict[str, np.ndarray]:
        return {"edge": self.counts_edge, "noedge": self.counts_noedge}

    def bucketize(self, times: np.ndarray) -> np.ndarray:
        """Map activation times to grid buckets; censored joins the overflow."""
        times = np.asarray(times)
        buckets = np.minimum(times, self.t_limit + 1) - 1
        return np.where(times == CENSORED, self.t_limit, buckets)


@dataclass(frozen=True)
class HeuristicScores:
    """counts[i][j] = number of cascades where j fired exactly one step after i."""

    counts: np.ndarray
    n_cascades: int

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
            raise ValueError("counts must be a square matrix")
        if counts.min() < 0 or counts.max() > self.n_cascades:
            raise ValueError("counts must lie in [0, n_cascades]")
        object.__setattr__(self, "counts", counts.astype(np.int64))


# ---- the three methods ----

def infer_theoretical(traces: CascadeTraceSet, dist: DegreeDistribution,
                      f: ActivationFunction, omega: float) -> EdgePosterior:
    """Bayes fold with model-implied pair likelihoods; censored pairs are skipped."""
    traces = as_trace_set(traces)
    curves = empirical_curves(traces)
    if curves.horizon == 0:
        post = np.full((traces.n_nodes, traces.n_nodes), omega)
        np.fill_diagonal(post, np.nan)
        return EdgePosterior(traces.n_nodes, post, omega, "theoretical")
    l_edge_grid, l_noedge_grid = _pair_likelihood_grids(dist, f, curves, omega)
    ratio_grid = _log_ratio(l_edge_grid, l_noedge_grid)

    def per_cascade(c):
        t = traces.times[c]
        finite = t != CENSORED
        idx = np.where(finite, t - 1, 0)
        return ratio_grid[idx[:, None], idx[None, :]], finite[:, None] & finite[None, :]

    post = _fold_posterior(per_cascade, traces.n_nodes, traces.n_cascades, omega)
    return EdgePosterior(traces.n_nodes, post, omega, "theoretical")


def measure_likelihood_table(surrogate: DirectedGraph, f: ActivationFunction,
                             n_cascades: int, seed: int,
                             step_cap: int = DEFAULT_STEP_CAP,
                             t_limit: int = None,
                             n_noedge_pairs: int = None) -> LikelihoodTable:
    """Measure (t_i, t_j) likelihood grids by simulating cascades on a surrogate.

    Connected ordered pairs feed the edge grid; a uniform sample of unconnected
    ordered pairs (default: as many as there are edges) feeds the no-edge grid.
    Both grids get add-one smoothing so no cell is ever zero. When t_limit is
    not given it covers the 99th percentile of finite activation times: a few
    straggling cascades must not blow up the grid, because the added smoothing
    mass scales with the cell count and would wash out the measurement.
    """
    if surrogate.n_edges == 0:
        raise ValueError("surrogate has no edges; cannot measure the edge likelihood")
    traces = run_experiments(surrogate, f, n_cascades, seed, step_cap)
    if t_limit is None:
        finite = traces.times[traces.times != CENSORED]
        t_limit = int(np.quantile(finite, 0.99)) if finite.size else 1
        t_limit = max(t_limit, 1)
    if t_limit < 1:
        raise ValueError("t_limit must be >= 1")
    size = t_limit + 1
    buckets = np.minimum(traces.times, t_limit + 1) - 1
    buckets = np.where(traces.times == CENSORED, t_limit, buckets)

    src = np.fromiter((s for s, _ in surrogate.edges()), dtype=np.int64,
                      count=surrogate.n_edges)
    dst = np.fromiter((d for _, d in surrogate.edges()), dtype=np.int64,
                      count=surrogate.n_edges)

    def pooled_counts(i_idx, j_idx):
        flat = buckets[:, i_idx] * size + buckets[:, j_idx]
        return np.bincount(flat.ravel(), minlength=size * size).reshape(size, size)

    counts_edge = pooled_counts(src, dst)

    n = surrogate.n_nodes
    connected = np.zeros((n, n), dtype=bool)
    connected[src, dst] = True
    np.fill_diagonal(connected, True)
    free_i, free_j = np.nonzero(~connected)
    if free_i.size == 0:
        raise ValueError("surrogate is complete; no unconnected pairs to measure")
    if n_noedge_pairs is None:
        n_noedge_pairs = surrogate.n_edges
    n_noedge_pairs = min(max(int(n_noedge_pairs), 1), free_i.size)
    pick = np.random.default_rng(seed).choice(free_i.size, size=n_noedge_pairs,
                                              replace=False)
    counts_noedge = pooled_counts(free_i[pick], free_j[pick])

    def smooth(counts):
        probs = (counts + 1.0) / (counts.sum() + size * size)
        return np.clip(probs, PROB_FLOOR, 1.0 - PROB_FLOOR)

    return LikelihoodTable(t_limit, smooth(counts_edge), smooth(counts_noedge),
                           counts_edge, counts_noedge)


def infer_semiempirical(traces: CascadeTraceSet, table: LikelihoodTable,
                        omega: float) -> EdgePosterior:
    """Bayes fold with measured likelihoods; censoring maps to the overflow bucket."""
    traces = as_trace_set(traces)
    buckets = table.bucketize(traces.times)
    ratio_grid = _log_ratio(table.p_edge, table.p_noedge)
    valid = np.ones((traces.n_nodes, traces.n_nodes), dtype=bool)

    def per_cascade(c):
        b = buckets[c]
        return ratio_grid[b[:, None], b[None, :]], valid

    post = _fold_posterior(per_cascade, traces.n_nodes, traces.n_cascades, omega)
    return EdgePosterior(traces.n_nodes, post, omega, "semiempirical")


def score_heuristic(traces: CascadeTraceSet, n_cascades: int = None) -> HeuristicScores:
    """Count consecutive activations: j firing exactly one step after i."""
    traces = as_trace_set(traces)
    if n_cascades is None:
        n_cascades = traces.n_cascades
    if not 1 <= n_cascades <= traces.n_cascades:
        raise ValueError(f"n_cascades must be in [1, {traces.n_cascades}]")
    counts = np.zeros((traces.n_nodes, traces.n_nodes), dtype=np.int64)
    for c in range(n_cascades):
        t = traces.times[c]
        # censored entries are -1; -1 + 1 = 0 never equals a valid time
        counts += t[None, :] == t[:, None] + 1
    return HeuristicScores(counts=counts, n_cascades=n_cascades)


# ---- selection and bootstrap ----

def _score_matrix(scores) -> np.ndarray:
    if isinstance(scores, EdgePosterior):
        return scores.p
    if isinstance(scores, HeuristicScores):
        return scores.counts
    return np.asarray(scores)


def select_edges(scores, n_edges: int) -> set[tuple[int, int]]:
    """The n_edges highest-scoring ordered pairs.

    Diagonal and non-finite entries never qualify; ties break by ascending
    (i, j) so repeated runs select identical sets.
    """
    matrix = np.asarray(_score_matrix(scores), dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError("scores must be a square matrix")
    if n_edges < 0:
        raise ValueError("n_edges must be nonnegative")
    eligible = np.isfinite(matrix)
    np.fill_diagonal(eligible, False)
    i_idx, j_idx = np.nonzero(eligible)
    vals = matrix[i_idx, j_idx]
    order = np.lexsort((j_idx, i_idx, -vals))
    take = order[: min(n_edges, order.size)]
    return {(int(i_idx[o]), int(j_idx[o])) for o in take}


def bootstrap_degree_distribution(traces: CascadeTraceSet, n_edges: int) -> DegreeDistribution:
    """In-degree distribution of the graph implied by the heuristic's top edges.

    Used as the degree input for the likelihood methods when the true
    distribution is unknown.
    """
    traces = as_trace_set(traces)
    scores = score_heuristic(traces)
    edges = select_edges(scores, n_edges)
    implied = DirectedGraph.from_edges(traces.n_nodes, sorted(edges))
    return in_degree_distribution(implied)


# ---- score dumps ----

def save_score_matrix(matrix: np.ndarray, method: str, omega: float, path) -> None:
    """Write a score/posterior matrix: header line, then one row per source node."""
    matrix = np.asarray(matrix, dtype=float)
    lines = [f"# method={method} omega={omega!r}"]
    for row in matrix:
        lines.append("\t".join(repr(float(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_score_matrix(path) -> tuple[str, float, np.ndarray]:
    path = Path(path)
    method, omega = "", float("nan")
    rows = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for token in line[1:].split():
                    key, _, value = token.partition("=")
                    if key == "method":
                        method = value
                    elif key == "omega":
                        omega = float(value)
                continue
            try:
                rows.append([float(tok) for tok in line.split("\t")])
            except ValueError:
                raise ValueError(f"{path}, line {lineno}: malformed score row") from None
    if not rows:
        raise ValueError(f"{path}: no score rows found")
    matrix = np.array(rows, dtype=float)
    if matrix.shape[0] != matrix.shape[1]:
        raise ValueError(f"{path}: score matrix must be square, got {matrix.shape}")
    return method, omega, matrix


# ---- estimator front-ends ----

class _EdgeEstimator(BaseEstimator):
    """Shared plumbing: fit on a times matrix, expose ranked edge selection."""

    def top_edges(self, n_edges: int = None) -> set[tuple[int, int]]:
        if not hasattr(self, "scores_"):
            raise RuntimeError("estimator is not fitted")
        if n_edges is None:
            n_edges = self.n_edges
        if n_edges is None:
            raise ValueError("n_edges must be given here or at construction")
        return select_edges(self.scores_, n_edges)

    def _prior(self, traces):
        if self.n_edges is None:
            raise ValueError("n_edges is required to set the prior")
        return prior_omega(traces.n_nodes, self.n_edges)

    def _degree_input(self, traces):
        if self.dist is not None:
            return self.dist
        return bootstrap_degree_distribution(traces, self.n_edges)


class TheoreticalInference(_EdgeEstimator):
    """Closed-form likelihood route; needs the activation function and edge count.

    When dist is omitted, the in-degree distribution is bootstrapped from the
    consecutive-activation heuristic.
    """

    def __init__(self, f=None, n_edges=None, dist=None):
        self.f = f
        self.n_edges = n_edges
        self.dist = dist

    def fit(self, X, y=None):
        if self.f is None:
            raise ValueError("f (activation function) is required")
        traces = as_trace_set(X)
        omega = self._prior(traces)
        self.posterior_ = infer_theoretical(traces, self._degree_input(traces),
                                            self.f, omega)
        self.scores_ = self.posterior_.p
        self.n_features_in_ = traces.n_nodes
        return self


class SemiempiricalInference(_EdgeEstimator):
    """Surrogate-measured likelihood route.

    Builds a surrogate network matching the degree input, measures likelihood
    tables on it, then folds the observed traces through the same Bayes update.
    """

    def __init__(self, f=None, n_edges=None, dist=None, surrogate_cascades=None,
                 t_limit=None, seed=0, step_cap=DEFAULT_STEP_CAP):
        self.f = f
        self.n_edges = n_edges
        self.dist = dist
        self.surrogate_cascades = surrogate_cascades
        self.t_limit = t_limit
        self.seed = seed
        self.step_cap = step_cap

    def fit(self, X, y=None):
        if self.f is None:
            raise ValueError("f (activation function) is required")
        traces = as_trace_set(X)
        omega = self._prior(traces)
        surrogate = build_surrogate(self._degree_input(traces), traces.n_nodes,
                                    seed=self.seed)
        n_cascades = self.surrogate_cascades or traces.n_cascades
        self.table_ = measure_likelihood_table(surrogate, self.f, n_cascades,
                                               seed=self.seed, step_cap=self.step_cap,
                                               t_limit=self.t_limit)
        self.posterior_ = infer_semiempirical(traces, self.table_, omega)
        self.scores_ = self.posterior_.p
        self.n_features_in_ = traces.n_nodes
        return self


class HeuristicInference(_EdgeEstimator):
    """Consecutive-activation counting; n_cascades limits how many rows are used."""

    def __init__(self, n_edges=None, n_cascades=None):
        self.n_edges = n_edges
        self.n_cascades = n_cascades

    def fit(self, X, y=None):
        traces = as_trace_set(X)
        self.counts_ = score_heuristic(traces, self.n_cascades)
        self.scores_ = self.counts_.counts
        self.n_features_in_ = traces.n_nodes
        return self
