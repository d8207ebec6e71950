"""Directed graphs, in-degree distributions, and edge-list files.

Graphs are stored provider-side: ``providers[j]`` holds the sorted in-neighbors
of node ``j``, i.e. the nodes whose activation can push ``j`` over its own
activation threshold. Node ids are dense integers ``0..n_nodes-1``. Graphs are
immutable once built and safe to share across threads.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

_NODES_HEADER = re.compile(r"#\s*nodes\s*=\s*(\d+)")


@dataclass(frozen=True, eq=False)
class DirectedGraph:
    """Simple directed graph (no self-loops, no duplicate edges)."""

    n_nodes: int
    providers: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        if self.n_nodes < 1:
            raise ValueError("graph needs at least one node")
        if len(self.providers) != self.n_nodes:
            raise ValueError("providers must have one entry per node")
        for j, arr in enumerate(self.providers):
            if arr.size == 0:
                continue
            if arr.min() < 0 or arr.max() >= self.n_nodes:
                raise ValueError(f"provider id out of range for node {j}")
            if np.any(arr == j):
                raise ValueError(f"self-loop at node {j}")
            if np.any(np.diff(arr) <= 0):
                raise ValueError(f"providers of node {j} must be sorted and unique")

    @classmethod
    def from_edges(cls, n_nodes: int, edges: Iterable[tuple[int, int]]) -> DirectedGraph:
        by_dst: list[list[int]] = [[] for _ in range(n_nodes)]
        seen: set[tuple[int, int]] = set()
        for src, dst in edges:
            src, dst = int(src), int(dst)
            if not (0 <= src < n_nodes and 0 <= dst < n_nodes):
                raise ValueError(f"edge ({src}, {dst}) out of range for {n_nodes} nodes")
            if src == dst:
                raise ValueError(f"self-loop ({src}, {dst})")
            if (src, dst) in seen:
                raise ValueError(f"duplicate edge ({src}, {dst})")
            seen.add((src, dst))
            by_dst[dst].append(src)
        return cls(
            n_nodes=n_nodes,
            providers=tuple(np.array(sorted(p), dtype=np.int64) for p in by_dst),
        )

    @cached_property
    def n_edges(self) -> int:
        return int(sum(arr.size for arr in self.providers))

    @cached_property
    def in_degrees(self) -> np.ndarray:
        return np.array([arr.size for arr in self.providers], dtype=np.int64)

    def edges(self) -> Iterator[tuple[int, int]]:
        for dst in range(self.n_nodes):
            for src in self.providers[dst]:
                yield int(src), dst

    def edge_set(self) -> set[tuple[int, int]]:
        return set(self.edges())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DirectedGraph):
            return NotImplemented
        return self.n_nodes == other.n_nodes and all(
            np.array_equal(a, b) for a, b in zip(self.providers, other.providers)
        )


@dataclass(frozen=True)
class DegreeDistribution:
    """In-degree distribution: gamma[k] = fraction of nodes with k providers."""

    gamma: dict[int, float]

    def __post_init__(self) -> None:
        for k, frac in self.gamma.items():
            if int(k) != k or k < 0:
                raise ValueError(f"degree {k!r} must be a nonnegative integer")
            if frac < 0:
                raise ValueError(f"fraction for degree {k} is negative")
        if abs(sum(self.gamma.values()) - 1.0) > 1e-9:
            raise ValueError("degree fractions must sum to 1")

    @classmethod
    def from_counts(cls, counts: dict[int, int], n_nodes: int) -> DegreeDistribution:
        return cls({k: c / n_nodes for k, c in sorted(counts.items()) if c > 0})

    def mean(self) -> float:
        return sum(k * frac for k, frac in self.gamma.items())

    def max_degree(self) -> int:
        return max(self.gamma)

    def items(self) -> list[tuple[int, float]]:
        return sorted(self.gamma.items())


def generate_random_graph(n_nodes: int, n_edges: int, seed: int) -> DirectedGraph:
    """Uniform simple directed graph with exactly ``n_edges`` edges.

    Ordered node pairs are encoded as integers in ``[0, n(n-1))`` and sampled
    without replacement by rejection, so every edge set of the requested size
    is equally likely and the result is reproducible per seed.
    """
    capacity = n_nodes * (n_nodes - 1)
    if n_edges < 0:
        raise ValueError("n_edges must be nonnegative")
    if n_edges > capacity:
        raise ValueError(
            f"cannot place {n_edges} edges on {n_nodes} nodes (capacity {capacity})"
        )
    rng = np.random.default_rng(seed)
    chosen: set[int] = set()
    while len(chosen) < n_edges:
        need = n_edges - len(chosen)
        for code in rng.integers(0, capacity, size=need + need // 4 + 8):
            if len(chosen) == n_edges:
                break
            chosen.add(int(code))
    edges = []
    for code in chosen:
        src, r = divmod(code, n_nodes - 1)
        dst = r if r < src else r + 1
        edges.append((src, dst))
    return DirectedGraph.from_edges(n_nodes, edges)


def in_degree_distribution(graph: DirectedGraph) -> DegreeDistribution:
    counts = np.bincount(graph.in_degrees)
    return DegreeDistribution.from_counts(
        {k: int(c) for k, c in enumerate(counts) if c > 0}, graph.n_nodes
    )


def _degree_counts(dist: DegreeDistribution, n_nodes: int) -> dict[int, int]:
    """Integer node counts per degree class, summing exactly to n_nodes.

    Rounds gamma[k]*n_nodes per class, then settles any surplus or deficit on
    the classes with the most favorable rounding remainders (ties broken toward
    smaller k when adding, larger k when removing).
    """
    ks = sorted(dist.gamma)
    raw = {k: dist.gamma[k] * n_nodes for k in ks}
    counts = {k: round(raw[k]) for k in ks}
    diff = n_nodes - sum(counts.values())
    while diff > 0:
        k = min(ks, key=lambda k: (counts[k] - raw[k], k))
        counts[k] += 1
        diff -= 1
    while diff < 0:
        k = min(ks, key=lambda k: (raw[k] - counts[k], -k))
        if counts[k] == 0:
            raise ValueError("degree target cannot be balanced to the node count")
        counts[k] -= 1
        diff += 1
    return {k: c for k, c in counts.items() if c > 0}


def build_surrogate(dist: DegreeDistribution, n_nodes: int, seed: int) -> DirectedGraph:
    """Random graph realizing ``dist`` exactly, providers drawn uniformly.

    Every node is assigned a target in-degree (class counts from the rounded
    distribution) and then wired to that many distinct providers chosen
    uniformly among the other nodes.
    """
    counts = _degree_counts(dist, n_nodes)
    for k in counts:
        if k >= n_nodes:
            raise ValueError(
                f"in-degree {k} is unrealizable with {n_nodes} nodes"
            )
    degrees: list[int] = []
    for k in sorted(counts):
        degrees.extend([k] * counts[k])
    rng = np.random.default_rng(seed)
    providers = []
    for j, k in enumerate(degrees):
        picks = rng.choice(n_nodes - 1, size=k, replace=False)
        picks = np.where(picks >= j, picks + 1, picks)
        providers.append(np.sort(picks.astype(np.int64)))
    return DirectedGraph(n_nodes=n_nodes, providers=tuple(providers))


def save_edge_list(graph: DirectedGraph, path: str | Path) -> None:
    """Write ``src<TAB>dst`` lines with a ``# nodes=N`` header."""
    lines = [f"# nodes={graph.n_nodes}"]
    lines.extend(f"{src}\t{dst}" for src, dst in sorted(graph.edges()))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_edge_list(path: str | Path) -> DirectedGraph:
    """Read an edge list.

    With a ``# nodes=N`` header, tokens must be integer ids in ``[0, N)`` (the
    header is what allows isolated nodes to exist). Without it, tokens may be
    arbitrary labels and are mapped to dense ids in first-appearance order.
    """
    declared: int | None = None
    token_edges: list[tuple[str, str]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, rawline in enumerate(fh, start=1):
            line = rawline.strip()
            if not line:
                continue
            if line.startswith("#"):
                header = _NODES_HEADER.match(line)
                if header and declared is None:
                    declared = int(header.group(1))
                continue
            fields = line.split()
            if len(fields) != 2:
                raise ValueError(
                    f"{path}: line {lineno}: expected 'src<TAB>dst', got {line!r}"
                )
            token_edges.append((fields[0], fields[1]))

    if declared is not None:
        edges = []
        for src_tok, dst_tok in token_edges:
            try:
                edges.append((int(src_tok), int(dst_tok)))
            except ValueError:
                raise ValueError(
                    f"{path}: non-integer node id {src_tok!r}/{dst_tok!r} "
                    "in a file with a nodes= header"
                ) from None
        return DirectedGraph.from_edges(declared, edges)

    ids: dict[str, int] = {}

    def intern(token: str) -> int:
        if token not in ids:
            ids[token] = len(ids)
        return ids[token]

    edges = [(intern(s), intern(d)) for s, d in token_edges]
    if not ids:
        raise ValueError(f"{path}: no edges and no nodes= header")
    return DirectedGraph.from_edges(len(ids), edges)


def save_degree_distribution(dist: DegreeDistribution, path: str | Path) -> None:
    lines = [f"{k}\t{frac!r}" for k, frac in dist.items()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_degree_distribution(path: str | Path) -> DegreeDistribution:
    gamma: dict[int, float] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, rawline in enumerate(fh, start=1):
            line = rawline.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split()
            if len(fields) != 2:
                raise ValueError(
                    f"{path}: line {lineno}: expected 'degree<TAB>fraction'"
                )
            gamma[int(fields[0])] = float(fields[1])
    return DegreeDistribution(gamma)
