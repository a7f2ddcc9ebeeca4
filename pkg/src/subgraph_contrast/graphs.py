"""Attributed graph loading, validation, normalization, and induced subgraphs.

File formats:
    edges    one "src<TAB>dst" pair per line, 0-based ids, undirected
    features N lines of C comma-separated floats
    labels   N lines, one integer per line
    splits   N lines of "node_id<TAB>{train|val|test}"
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
from scipy import sparse

from . import autodiff as ad
from .errors import IngestionError

SPLIT_TAGS = ("train", "val", "test")


@dataclass(frozen=True)
class Graph:
    """Immutable undirected graph with node features and optional labels/splits."""

    adjacency: sparse.csr_array  # N x N, symmetric 0/1, zero diagonal
    features: np.ndarray  # N x C float64
    labels: Optional[np.ndarray] = None  # length N ints
    splits: Optional[np.ndarray] = None  # length N strings from SPLIT_TAGS

    @property
    def n_nodes(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def neighbors(self, node: int) -> np.ndarray:
        """Sorted neighbor ids of a node."""
        lo, hi = self.adjacency.indptr[node], self.adjacency.indptr[node + 1]
        return self.adjacency.indices[lo:hi]

    def degree(self, node: int) -> int:
        return int(self.adjacency.indptr[node + 1] - self.adjacency.indptr[node])


@dataclass(frozen=True)
class NormAdj:
    """Symmetrically normalized adjacency D^{-1/2} (A + I) D^{-1/2}."""

    matrix: sparse.csr_array

    def propagate(self, features: np.ndarray) -> np.ndarray:
        return self.matrix @ features


@dataclass
class Subgraph:
    """Induced subgraph: ordered nodes (center first), 0/1 adjacency, embedding rows."""

    center: int
    nodes: list[int]
    adjacency: np.ndarray  # k' x k' float64, symmetric, zero diagonal
    node_embeddings: ad.Tensor  # k' x F

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)


def graph_from_edges(
    n_nodes: int,
    edges: Sequence[tuple[int, int]],
    features: np.ndarray,
    labels: Optional[np.ndarray] = None,
    splits: Optional[np.ndarray] = None,
) -> Graph:
    """Build a Graph from an in-memory edge list (deduplicated, symmetrized)."""
    features = np.asarray(features, dtype=np.float64)
    if features.shape[0] != n_nodes:
        raise IngestionError(
            f"feature row count {features.shape[0]} does not match node count {n_nodes}"
        )
    pairs = set()
    for u, v in edges:
        if u == v:
            raise IngestionError(f"self-loop on node {u} is not allowed")
        pairs.add((u, v))
        pairs.add((v, u))
    if pairs:
        rows, cols = zip(*sorted(pairs))
        data = np.ones(len(rows))
        adj = sparse.coo_array((data, (rows, cols)), shape=(n_nodes, n_nodes)).tocsr()
    else:
        adj = sparse.csr_array((n_nodes, n_nodes))
    return Graph(adjacency=adj, features=features, labels=labels, splits=splits)


def _read_features(path: str) -> np.ndarray:
    rows = []
    width = None
    try:
        with open(path, "r", encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    values = [float(tok) for tok in line.split(",")]
                except ValueError:
                    raise IngestionError(f"{path}:{lineno}: malformed feature value") from None
                if width is None:
                    width = len(values)
                elif len(values) != width:
                    raise IngestionError(
                        f"{path}:{lineno}: expected {width} features, got {len(values)}"
                    )
                rows.append(values)
    except OSError as e:
        raise IngestionError(f"cannot read features file {path}: {e}") from e
    if not rows:
        raise IngestionError(f"{path}: empty features file")
    return np.asarray(rows, dtype=np.float64)


def _read_edges(path: str, n_nodes: int) -> list[tuple[int, int]]:
    edges = []
    try:
        with open(path, "r", encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                line = line.rstrip("\n")
                if not line.strip():
                    continue
                parts = line.split("\t")
                if len(parts) != 2:
                    raise IngestionError(f"{path}:{lineno}: expected 'src<TAB>dst'")
                try:
                    u, v = int(parts[0]), int(parts[1])
                except ValueError:
                    raise IngestionError(f"{path}:{lineno}: non-integer node id") from None
                if u < 0 or v < 0 or u >= n_nodes or v >= n_nodes:
                    raise IngestionError(
                        f"{path}:{lineno}: node id out of range [0, {n_nodes})"
                    )
                if u == v:
                    raise IngestionError(f"{path}:{lineno}: self-loop on node {u}")
                edges.append((u, v))
    except OSError as e:
        raise IngestionError(f"cannot read edges file {path}: {e}") from e
    return edges


def _read_labels(path: str, n_nodes: int) -> np.ndarray:
    labels = []
    try:
        with open(path, "r", encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    labels.append(int(line))
                except ValueError:
                    raise IngestionError(f"{path}:{lineno}: non-integer label") from None
    except OSError as e:
        raise IngestionError(f"cannot read labels file {path}: {e}") from e
    if len(labels) != n_nodes:
        raise IngestionError(f"{path}: expected {n_nodes} labels, got {len(labels)}")
    return np.asarray(labels, dtype=np.int64)


def _read_splits(path: str, n_nodes: int) -> np.ndarray:
    tags = np.empty(n_nodes, dtype="<U5")
    seen = np.zeros(n_nodes, dtype=bool)
    try:
        with open(path, "r", encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                line = line.rstrip("\n")
                if not line.strip():
                    continue
                parts = line.split("\t")
                if len(parts) != 2 or parts[1] not in SPLIT_TAGS:
                    raise IngestionError(
                        f"{path}:{lineno}: expected 'node_id<TAB>{{train|val|test}}'"
                    )
                try:
                    node = int(parts[0])
                except ValueError:
                    raise IngestionError(f"{path}:{lineno}: non-integer node id") from None
                if node < 0 or node >= n_nodes:
                    raise IngestionError(f"{path}:{lineno}: node id out of range [0, {n_nodes})")
                tags[node] = parts[1]
                seen[node] = True
    except OSError as e:
        raise IngestionError(f"cannot read splits file {path}: {e}") from e
    if not seen.all():
        missing = int(np.flatnonzero(~seen)[0])
        raise IngestionError(f"{path}: node {missing} has no split tag")
    return tags


def load_graph(
    edges_path: str,
    features_path: str,
    labels_path: Optional[str] = None,
    splits_path: Optional[str] = None,
) -> Graph:
    """Load and validate a graph; node count is set by the features file."""
    features = _read_features(features_path)
    n = features.shape[0]
    edges = _read_edges(edges_path, n)
    labels = _read_labels(labels_path, n) if labels_path else None
    splits = _read_splits(splits_path, n) if splits_path else None
    return graph_from_edges(n, edges, features, labels=labels, splits=splits)


def load_graph_dir(data_dir: str) -> Graph:
    """Load a dataset directory with the standard file names.

    edges.tsv and features.csv are required; labels.txt and splits.tsv are
    picked up when present.
    """
    root = Path(data_dir)
    if not root.is_dir():
        raise IngestionError(f"data directory not found: {root}")
    edges_path = root / "edges.tsv"
    features_path = root / "features.csv"
    for required in (features_path, edges_path):
        if not required.is_file():
            raise IngestionError(f"missing data file: {required}")
    labels_path = root / "labels.txt"
    splits_path = root / "splits.tsv"
    return load_graph(
        str(edges_path),
        str(features_path),
        labels_path=str(labels_path) if labels_path.is_file() else None,
        splits_path=str(splits_path) if splits_path.is_file() else None,
    )


def normalize_adjacency(g: Graph) -> NormAdj:
    """D^{-1/2} (A + I) D^{-1/2} with D the degrees of A + I.

    Isolated nodes come out with a lone diagonal entry of 1.
    """
    n = g.n_nodes
    a_hat = (g.adjacency + sparse.eye_array(n, format="csr")).tocsr()
    deg = np.asarray(a_hat.sum(axis=1)).reshape(-1)
    inv_sqrt = 1.0 / np.sqrt(deg)
    d_half = sparse.diags_array(inv_sqrt, format="csr")
    return NormAdj(matrix=(d_half @ a_hat @ d_half).tocsr())


def induced_subgraph(
    g: Graph,
    nodes: Sequence[int],
    embeddings: Union[ad.Tensor, np.ndarray],
) -> Subgraph:
    """Restrict adjacency and embedding rows to ``nodes`` in the given order.

    The first node is taken as the subgraph center. Embedding rows are gathered
    differentiably when ``embeddings`` is a tensor on an active tape.
    """
    nodes = [int(v) for v in nodes]
    if len(set(nodes)) != len(nodes):
        raise ValueError("induced_subgraph: duplicate node in list")
    for v in nodes:
        if v < 0 or v >= g.n_nodes:
            raise ValueError(f"induced_subgraph: node {v} out of range")
    idx = np.asarray(nodes, dtype=np.intp)
    sub_adj = g.adjacency[idx, :][:, idx].toarray().astype(np.float64)
    rows = ad.gather_rows(ad.as_tensor(embeddings), idx)
    return Subgraph(center=nodes[0], nodes=nodes, adjacency=sub_adj, node_embeddings=rows)
