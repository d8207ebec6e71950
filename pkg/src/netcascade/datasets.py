"""Bundled example networks, shipped as edge-list files under data/.

karate is the real Zachary karate-club friendship graph; the other networks
are synthetic stand-ins for classic sociometric surveys, generated at the
original node and arc counts (see data/README.md for provenance).
"""
from __future__ import annotations

from importlib import resources
from pathlib import Path

from .graph import DirectedGraph, load_edge_list

_FILES = {
    "karate": "karate.tsv",
    "prison": "prison.tsv",
    "physician-advice": "physician_advice.tsv",
    "physician-discussion": "physician_discussion.tsv",
}


def available_datasets() -> list[str]:
    """Names accepted by dataset_path and load_dataset."""
    return sorted(_FILES)


def dataset_path(name: str) -> Path:
    """Filesystem path of a bundled edge list."""
    if name not in _FILES:
        raise ValueError(f"unknown dataset {name!r}; available: {available_datasets()}")
    path = Path(str(resources.files("netcascade").joinpath("data", _FILES[name])))
    if not path.is_file():
        raise FileNotFoundError(f"bundled dataset file missing: {path}")
    return path


def load_dataset(name: str) -> DirectedGraph:
    """Load a bundled network by name."""
    return load_edge_list(dataset_path(name))
