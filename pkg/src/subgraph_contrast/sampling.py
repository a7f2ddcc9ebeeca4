"""Breadth-first subgraph sampling around center nodes.

Within each BFS frontier the newly discovered neighbors are shuffled by the
supplied random stream before being appended, so repeated epochs see varied
subgraphs while a fixed seed reproduces them exactly. Components smaller than
the node budget yield smaller subgraphs, never padded ones.
"""

from __future__ import annotations

from typing import Optional, Union

import numpy as np

from . import autodiff as ad
from .graphs import Graph, Subgraph, induced_subgraph

# Namespaces for deriving independent child streams from one master seed.
STREAM_INIT = 0
STREAM_CENTERS = 1
STREAM_NEGATIVES = 2
STREAM_BFS = 3
STREAM_SYNTH = 4
STREAM_AUGMENT = 5


def master_stream(seed: int, *namespace: int) -> np.random.Generator:
    """Deterministic child stream for (seed, namespace...)."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(namespace)))


def bfs_order(g: Graph, center: int, k: int, rng: np.random.Generator) -> list[int]:
    """Ordered node ids visited by budgeted BFS with shuffled frontiers."""
    if center < 0 or center >= g.n_nodes:
        raise ValueError(f"bfs_sample: center {center} out of range")
    if k < 1:
        raise ValueError(f"bfs_sample: node budget must be >= 1, got {k}")
    order = [center]
    visited = {center}
    frontier = [center]
    while frontier and len(order) < k:
        discovered = []
        seen_here = set()
        for node in frontier:
            for nb in g.neighbors(node):
                nb = int(nb)
                if nb not in visited and nb not in seen_here:
                    seen_here.add(nb)
                    discovered.append(nb)
        if not discovered:
            break
        perm = rng.permutation(len(discovered))
        level = [discovered[i] for i in perm]
        take = min(len(level), k - len(order))
        level = level[:take]
        order.extend(level)
        visited.update(level)
        frontier = level
    return order


def bfs_sample(
    g: Graph,
    center: int,
    k: int,
    rng: np.random.Generator,
    embeddings: Optional[Union[ad.Tensor, np.ndarray]] = None,
) -> Subgraph:
    """BFS-sample the neighbor subgraph of ``center`` with at most ``k`` nodes.

    ``embeddings`` supplies the node representation matrix whose rows are
    gathered into the subgraph; it defaults to the raw feature matrix.
    """
    nodes = bfs_order(g, center, k, rng)
    if embeddings is None:
        embeddings = g.features
    return induced_subgraph(g, nodes, embeddings)
