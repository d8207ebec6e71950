"""Regenerate the edge lists bundled under src/netcascade/data/.

The karate network is the real Zachary graph (via networkx), with each
undirected friendship written as two arcs. The prison and physician networks
stand in for the classic sociometric datasets of the same sizes: the originals
are not redistributable here, so we generate directed nomination networks with
matching node/arc counts. Every node nominates a couple of others, nominations
concentrate on popular targets, and a nomination is sometimes returned, which
reproduces the skewed in-degrees and partial reciprocity of survey sociograms.
Seeds are fixed; rerunning this script reproduces the files byte for byte.
"""
import sys
from pathlib import Path

import networkx as nx
import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from netcascade.graph import DirectedGraph, save_edge_list

DATA_DIR = Path(__file__).resolve().parent.parent / "src" / "netcascade" / "data"


def karate() -> DirectedGraph:
    g = nx.karate_club_graph()
    arcs = [(u, v) for u, v in g.edges()] + [(v, u) for u, v in g.edges()]
    return DirectedGraph.from_edges(g.number_of_nodes(), arcs)


def sociometric(n_nodes: int, n_arcs: int, seed: int, reciprocity: float = 0.35,
                concentration: float = 4.0) -> DirectedGraph:
    """Directed nomination network: fixed choices per node, popular targets."""
    rng = np.random.default_rng(seed)
    base = n_arcs // n_nodes
    extra = n_arcs - base * n_nodes
    outdeg = np.full(n_nodes, base)
    outdeg[rng.choice(n_nodes, size=extra, replace=False)] += 1
    pop = rng.gamma(concentration, 1.0, size=n_nodes)
    edges: set[tuple[int, int]] = set()
    incoming: list[list[int]] = [[] for _ in range(n_nodes)]
    order = rng.permutation(np.repeat(np.arange(n_nodes), outdeg))
    for i in order:
        placed = False
        if incoming[i] and rng.random() < reciprocity:
            cands = [j for j in incoming[i] if (i, j) not in edges]
            if cands:
                j = cands[int(rng.integers(len(cands)))]
                placed = True
        if not placed:
            w = pop.copy()
            w[i] = 0.0
            for _ in range(200):
                j = int(rng.choice(n_nodes, p=w / w.sum()))
                if (i, j) not in edges:
                    placed = True
                    break
            if not placed:
                continue
        edges.add((i, j))
        incoming[j].append(i)
    return DirectedGraph.from_edges(n_nodes, sorted(edges))


def main() -> None:
    DATA_DIR.mkdir(parents=True, exist_ok=True)
    networks = {
        "karate": karate(),
        "prison": sociometric(67, 182, seed=7),
        "physician_advice": sociometric(246, 480, seed=31),
        "physician_discussion": sociometric(246, 565, seed=32),
    }
    for name, graph in networks.items():
        path = DATA_DIR / f"{name}.tsv"
        save_edge_list(graph, path)
        print(f"{name}: {graph.n_nodes} nodes, {graph.n_edges} arcs -> {path}")


if __name__ == "__main__":
    main()
