"""Synthetic stochastic block model datasets in the on-disk graph formats.

Features are a one-hot block indicator embedded in the leading coordinates of
a feat_dim-wide vector, with Gaussian noise added to every coordinate, so the
raw features stay informative but noisy while the block structure lives in
the edges.
"""

from __future__ import annotations

from pathlib import Path
from typing import Union

import numpy as np

from .errors import ConfigError
from .sampling import STREAM_SYNTH, master_stream

DEFAULT_BLOCKS = 3
DEFAULT_NODES_PER_BLOCK = 100
DEFAULT_P_IN = 0.1
DEFAULT_P_OUT = 0.01
DEFAULT_FEAT_DIM = 128
DEFAULT_NOISE_SIGMA = 0.5

TRAIN_FRACTION = 0.1
VAL_FRACTION = 0.1


def sbm_edges(
    block_of: np.ndarray,
    p_in: float,
    p_out: float,
    rng: np.random.Generator,
) -> list[tuple[int, int]]:
    """Sample undirected SBM edges over the upper triangle."""
    n = block_of.shape[0]
    iu, ju = np.triu_indices(n, k=1)
    probs = np.where(block_of[iu] == block_of[ju], p_in, p_out)
    keep = rng.random(probs.shape[0]) < probs
    return list(zip(iu[keep].tolist(), ju[keep].tolist()))


def stratified_splits(labels: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """10/10/80 train/val/test split per class, at least one train node each."""
    splits = np.empty(labels.shape[0], dtype=object)
    for cls in np.unique(labels):
        members = np.flatnonzero(labels == cls)
        order = rng.permutation(members)
        n_train = max(1, int(round(TRAIN_FRACTION * order.size)))
        n_val = max(1, int(round(VAL_FRACTION * order.size)))
        if n_train + n_val >= order.size:
            raise ConfigError(
                f"class {cls} has {order.size} nodes, too few for a 10/10/80 split"
            )
        splits[order[:n_train]] = "train"
        splits[order[n_train:n_train + n_val]] = "val"
        splits[order[n_train + n_val:]] = "test"
    return splits


def gen_synth_sbm(
    out_dir: Union[str, Path],
    blocks: int = DEFAULT_BLOCKS,
    nodes_per_block: int = DEFAULT_NODES_PER_BLOCK,
    p_in: float = DEFAULT_P_IN,
    p_out: float = DEFAULT_P_OUT,
    feat_dim: int = DEFAULT_FEAT_DIM,
    noise_sigma: float = DEFAULT_NOISE_SIGMA,
    seed: int = 0,
) -> dict[str, Path]:
    """Write edges.tsv, features.csv, labels.txt, splits.tsv under out_dir."""
    if blocks < 2:
        raise ConfigError(f"blocks must be >= 2, got {blocks}")
    if nodes_per_block < 1:
        raise ConfigError(f"nodes_per_block must be >= 1, got {nodes_per_block}")
    for name, p in (("p_in", p_in), ("p_out", p_out)):
        if not 0.0 <= p <= 1.0:
            raise ConfigError(f"{name} must be a probability in [0, 1], got {p}")
    if p_in <= p_out:
        raise ConfigError(f"p_in ({p_in}) must exceed p_out ({p_out})")
    if feat_dim < blocks:
        raise ConfigError(
            f"feat_dim ({feat_dim}) must be >= blocks ({blocks}) to hold the one-hot part"
        )
    if noise_sigma < 0:
        raise ConfigError(f"noise_sigma must be nonnegative, got {noise_sigma}")

    rng = master_stream(seed, STREAM_SYNTH)
    n = blocks * nodes_per_block
    block_of = np.repeat(np.arange(blocks), nodes_per_block)

    edges = sbm_edges(block_of, p_in, p_out, rng)
    features = np.zeros((n, feat_dim))
    features[np.arange(n), block_of] = 1.0
    if noise_sigma > 0:
        features += noise_sigma * rng.standard_normal((n, feat_dim))
    splits = stratified_splits(block_of, rng)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "edges": out / "edges.tsv",
        "features": out / "features.csv",
        "labels": out / "labels.txt",
        "splits": out / "splits.tsv",
    }
    with open(paths["edges"], "w", encoding="utf-8") as f:
        for u, v in edges:
            f.write(f"{u}\t{v}\n")
    with open(paths["features"], "w", encoding="utf-8") as f:
        for row in features:
            f.write(",".join(f"{x:.17g}" for x in row) + "\n")
    with open(paths["labels"], "w", encoding="utf-8") as f:
        for cls in block_of:
            f.write(f"{cls}\n")
    with open(paths["splits"], "w", encoding="utf-8") as f:
        for node, tag in enumerate(splits):
            f.write(f"{node}\t{tag}\n")
    return paths
