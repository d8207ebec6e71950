"""Cascade dynamics on directed networks.

Activation is permanent and advances in synchronous steps. A node with k
providers, m of them active at the end of the previous step, fires with
probability f(m/k) per step; provider-less nodes use f(0) every step. The
module provides the activation-function families, a vectorized simulator,
observed activation curves, and the mean-field forward prediction used to
sanity-check the dynamics at scale.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .graph import DegreeDistribution, DirectedGraph

# Sentinel for "never activated within the step cap". Stored in the integer
# time matrices, so it must stay a plain negative int.
CENSORED = -1

DEFAULT_STEP_CAP = 10_000


def _check_unit(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must be in [0, 1], got {value}")


class ActivationFunction:
    """Base class: a map from active-provider fraction x in [0, 1] to a probability."""

    def __call__(self, x):
        raise NotImplementedError

    def table(self, max_k: int) -> np.ndarray:
        """Rate lookup F[k, m] = f(m/k) for 0 <= m <= k <= max_k (F[0, 0] = f(0))."""
        out = np.zeros((max_k + 1, max_k + 1))
        out[0, 0] = float(self(0.0))
        for k in range(1, max_k + 1):
            out[k, : k + 1] = self(np.arange(k + 1) / k)
        if out.min() < 0 or out.max() > 1:
            raise ValueError("activation function must return probabilities in [0, 1]")
        return out


@dataclass(frozen=True)
class ThresholdActivation(ActivationFunction):
    """Step function: gamma below the critical fraction, epsilon at or above it."""

    gamma: float
    epsilon: float
    critical_fraction: float

    def __post_init__(self):
        _check_unit("gamma", self.gamma)
        _check_unit("epsilon", self.epsilon)
        _check_unit("critical_fraction", self.critical_fraction)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where(x < self.critical_fraction, self.gamma, self.epsilon)
        return float(out) if out.ndim == 0 else out


_AFFINE_SHAPES = ("linear", "square", "square-complement", "exp")


@dataclass(frozen=True)
class AffineActivation(ActivationFunction):
    """f(x) = base + scale * g(x) for a monotone response g with g(0)=0."""

    base: float
    scale: float
    shape: str = "linear"
    rate: float = 1.0

    def __post_init__(self):
        _check_unit("base", self.base)
        if self.scale < 0 or self.base + self.scale > 1 + 1e-12:
            raise ValueError("need scale >= 0 and base + scale <= 1")
        if self.shape not in _AFFINE_SHAPES:
            raise ValueError(f"shape must be one of {_AFFINE_SHAPES}, got {self.shape!r}")
        if self.shape == "exp" and self.rate <= 0:
            raise ValueError("exp shape needs rate > 0")

    def _g(self, x):
        if self.shape == "linear":
            return x
        if self.shape == "square":
            return x**2
        if self.shape == "square-complement":
            return 1 - (1 - x) ** 2
        # saturating response, normalized so g(1) < 1 but g(0) = 0
        return 1 - np.exp(-self.rate * x)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = self.base + self.scale * self._g(x)
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class TabulatedActivation(ActivationFunction):
    """Piecewise-linear interpolation through (fraction, probability) points."""

    points: dict[float, float]

    def __post_init__(self):
        if not self.points:
            raise ValueError("need at least one interpolation point")
        for x, p in self.points.items():
            _check_unit("interpolation abscissa", x)
            _check_unit("interpolation value", p)
        xs = np.array(sorted(self.points))
        ys = np.array([self.points[x] for x in xs])
        object.__setattr__(self, "_xs", xs)
        object.__setattr__(self, "_ys", ys)

    @classmethod
    def constant(cls, p: float) -> "TabulatedActivation":
        return cls({0.0: p})

    def __call__(self, x):
        out = np.interp(np.asarray(x, dtype=float), self._xs, self._ys)
        return float(out) if out.ndim == 0 else out


def evaluate_f(f: ActivationFunction, m: int, k: int) -> float:
    """Per-step activation probability for a node of in-degree k with m active providers."""
    if m < 0 or k < 0:
        raise ValueError("m and k must be nonnegative")
    if k == 0:
        if m != 0:
            raise ValueError("a node without providers cannot have active providers")
        return float(f(0.0))
    if m > k:
        raise ValueError(f"m={m} exceeds in-degree k={k}")
    return float(f(m / k))


def binomial_weight(m: int, k: int, q: float) -> float:
    """P(m active providers out of k when each is independently active w.p. q)."""
    if not 0 <= m <= k:
        raise ValueError(f"need 0 <= m <= k, got m={m}, k={k}")
    _check_unit("q", q)
    return math.comb(k, m) * q**m * (1.0 - q) ** (k - m)


_COMB_ROWS: dict[int, np.ndarray] = {}


def _comb_row(n: int) -> np.ndarray:
    """Binomial coefficients C(n, 0..n), cached; treat the result as read-only."""
    row = _COMB_ROWS.get(n)
    if row is None:
        row = np.array([math.comb(n, j) for j in range(n + 1)], dtype=float)
        _COMB_ROWS[n] = row
    return row


def recruit_providers(weights: np.ndarray, rate: float) -> np.ndarray:
    """Advance a provider-count distribution one step.

    weights[m] is the probability of m active providers out of len(weights)-1;
    each still-inactive provider independently activates with the given rate.
    """
    total = weights.size - 1
    if rate == 0.0 or total == 0:
        return weights
    out = np.zeros_like(weights)
    for m in range(total + 1):
        if weights[m] == 0.0:
            continue
        rem = total - m
        j = np.arange(rem + 1)
        out[m:] += weights[m] * _comb_row(rem) * rate**j * (1.0 - rate) ** (rem - j)
    return out


# ---- trace sets ----

@dataclass(frozen=True)
class CascadeTraceSet:
    """Activation times from repeated cascades, one row per cascade.

    Entries are integer steps >= 1, or CENSORED for nodes that never fired.
    """

    times: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times)
        if times.ndim != 2:
            raise ValueError("times must be a 2d array (cascades x nodes)")
        if not np.issubdtype(times.dtype, np.integer):
            raise ValueError("times must be integers (use as_trace_set for float input)")
        times = times.astype(np.int64, copy=False)
        bad = (times != CENSORED) & (times < 1)
        if bad.any():
            raise ValueError("activation times must be >= 1 or the censored sentinel")
        object.__setattr__(self, "times", times)

    @property
    def n_cascades(self) -> int:
        return self.times.shape[0]

    @property
    def n_nodes(self) -> int:
        return self.times.shape[1]

    @cached_property
    def t_max(self) -> int:
        finite = self.times[self.times != CENSORED]
        return int(finite.max()) if finite.size else 0


def as_trace_set(x) -> CascadeTraceSet:
    """Coerce raw input to a trace set; NaN in float input marks censored nodes."""
    if isinstance(x, CascadeTraceSet):
        return x
    arr = np.asarray(x)
    if arr.ndim != 2:
        raise ValueError("expected a 2d array of activation times")
    if np.issubdtype(arr.dtype, np.floating):
        out = np.full(arr.shape, CENSORED, dtype=np.int64)
        finite = np.isfinite(arr)
        if not np.all(arr[finite] == np.round(arr[finite])):
            raise ValueError("activation times must be whole numbers")
        out[finite] = arr[finite].astype(np.int64)
        return CascadeTraceSet(out)
    return CascadeTraceSet(arr.astype(np.int64))


# ---- simulation ----

def _provider_matrix(graph: DirectedGraph) -> tuple[np.ndarray, np.ndarray]:
    """Pad each node's provider list to equal width with a dummy index n."""
    k_arr = graph.in_degrees
    width = int(k_arr.max()) if k_arr.size else 0
    prov = np.full((graph.n_nodes, max(width, 1)), graph.n_nodes, dtype=np.int64)
    for dst, srcs in enumerate(graph.providers):
        prov[dst, : srcs.size] = srcs
    return prov, k_arr


def _simulate(prov, k_arr, rates, rng, step_cap) -> np.ndarray:
    n = k_arr.size
    active = np.zeros(n + 1, dtype=bool)  # trailing slot is the padding dummy
    alive = active[:n]
    times = np.full(n, CENSORED, dtype=np.int64)
    for t in range(1, step_cap + 1):
        m = active[prov].sum(axis=1)
        p = rates[k_arr, m]
        fired = ~alive & (rng.random(n) < p)
        if fired.any():
            times[fired] = t
            alive |= fired
            if alive.all():
                break
        elif not (p[~alive] > 0).any():
            break  # no activity and no positive rates left: nothing can change
    return times


def simulate_cascade(graph: DirectedGraph, f: ActivationFunction, seed,
                     step_cap: int = DEFAULT_STEP_CAP) -> np.ndarray:
    """Run one cascade and return per-node activation times (CENSORED if never)."""
    prov, k_arr = _provider_matrix(graph)
    rates = f.table(int(k_arr.max()) if k_arr.size else 0)
    return _simulate(prov, k_arr, rates, np.random.default_rng(seed), step_cap)


def run_experiments(graph: DirectedGraph, f: ActivationFunction, n_cascades: int,
                    seed: int, step_cap: int = DEFAULT_STEP_CAP) -> CascadeTraceSet:
    """Run n_cascades independent cascades.

    Cascade i draws from a stream keyed by (seed, i), so results do not depend
    on batching and batches can be generated in parallel.
    """
    if n_cascades < 1:
        raise ValueError("n_cascades must be positive")
    prov, k_arr = _provider_matrix(graph)
    rates = f.table(int(k_arr.max()) if k_arr.size else 0)
    times = np.empty((n_cascades, graph.n_nodes), dtype=np.int64)
    for i in range(n_cascades):
        rng = np.random.default_rng(np.random.SeedSequence((seed, i)))
        times[i] = _simulate(prov, k_arr, rates, rng, step_cap)
    return CascadeTraceSet(times)


# ---- activation curves ----

@dataclass(frozen=True)
class MeanFieldCurves:
    """Per-step activation fraction d and its cumulative q, indexed from t=1."""

    d: np.ndarray
    q: np.ndarray = field(default=None)

    def __post_init__(self):
        d = np.asarray(self.d, dtype=float)
        q = np.cumsum(d) if self.q is None else np.asarray(self.q, dtype=float)
        if d.shape != q.shape or d.ndim != 1:
            raise ValueError("d and q must be 1d arrays of equal length")
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "q", q)

    @property
    def horizon(self) -> int:
        return len(self.d)

    def _check_t(self, t: int, low: int) -> None:
        if not low <= t <= self.horizon:
            raise ValueError(f"t={t} outside [{low}, {self.horizon}]")

    def d_at(self, t: int) -> float:
        self._check_t(t, 1)
        return float(self.d[t - 1])

    def q_at(self, t: int) -> float:
        """Cumulative fraction active by step t; q_at(0) is 0."""
        self._check_t(t, 0)
        return 0.0 if t == 0 else float(self.q[t - 1])


def empirical_curves(traces: CascadeTraceSet) -> MeanFieldCurves:
    """Observed activation-time distribution pooled over cascades and nodes.

    Censored entries count in the denominator but never in d, so q stays the
    fraction observed active by each step.
    """
    finite = traces.times[traces.times != CENSORED]
    t_max = traces.t_max
    total = traces.times.size
    counts = np.bincount(finite, minlength=t_max + 1)[1:] if t_max else np.zeros(0, dtype=np.int64)
    d = counts / total
    return MeanFieldCurves(d=d, q=np.cumsum(d))


def meanfield_forward(dist: DegreeDistribution, f: ActivationFunction,
                      horizon: int) -> MeanFieldCurves:
    """Predicted activation curve for a large random network with the given in-degree mix.

    Tracks, for each degree class k, the joint state (still inactive, m of k
    providers active). Each step adds the fire probability f(m/k) to d, then
    survivors keep their providers and recruit new ones with the step hazard
    r = (q_new - q) / (1 - q) implied by the curve itself. Provider states
    persist across steps because activation is permanent.
    """
    if horizon < 1:
        raise ValueError("horizon must be positive")
    classes = []
    for k, share in dist.items():
        fk = np.array([f(0.0)]) if k == 0 else np.asarray(f(np.arange(k + 1) / k), dtype=float)
        if fk.min() < 0 or fk.max() > 1:
            raise ValueError("activation function must return probabilities in [0, 1]")
        w = np.zeros(k + 1)
        w[0] = 1.0
        classes.append((k, share, fk, w))
    d_out = np.zeros(horizon)
    q = 0.0
    for t in range(horizon):
        dt = sum(share * float(w @ fk) for _, share, fk, w in classes)
        q_new = min(q + dt, 1.0)
        r = 0.0 if q >= 1.0 else min(max((q_new - q) / (1.0 - q), 0.0), 1.0)
        for idx, (k, share, fk, w) in enumerate(classes):
            classes[idx] = (k, share, fk, recruit_providers(w * (1.0 - fk), r))
        d_out[t] = dt
        q = q_new
    return MeanFieldCurves(d=d_out, q=np.cumsum(d_out))


# ---- trace files ----

def save_traces(traces: CascadeTraceSet, path) -> None:
    """Write a trace set: header line, then one whitespace-separated row per cascade.

    Censored entries are written as '-'.
    """
    rows = [f"# nodes={traces.n_nodes} cascades={traces.n_cascades}"]
    for row in traces.times:
        rows.append("\t".join("-" if t == CENSORED else str(int(t)) for t in row))
    Path(path).write_text("\n".join(rows) + "\n", encoding="utf-8")


def load_traces(path) -> CascadeTraceSet:
    path = Path(path)
    n_nodes = n_cascades = None
    rows = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for token in line[1:].split():
                    key, _, value = token.partition("=")
                    if key == "nodes":
                        n_nodes = int(value)
                    elif key == "cascades":
                        n_cascades = int(value)
                continue
            fields = line.split()
            if n_nodes is not None and len(fields) != n_nodes:
                raise ValueError(f"{path}, line {lineno}: expected {n_nodes} fields, got {len(fields)}")
            try:
                rows.append([CENSORED if tok == "-" else int(tok) for tok in fields])
            except ValueError:
                raise ValueError(f"{path}, line {lineno}: malformed activation time") from None
    if not rows:
        raise ValueError(f"{path}: no trace rows found")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ValueError(f"{path}: inconsistent row widths {sorted(widths)}")
    if n_cascades is not None and len(rows) != n_cascades:
        raise ValueError(f"{path}: header promises {n_cascades} cascades, found {len(rows)}")
    return CascadeTraceSet(np.array(rows, dtype=np.int64))
