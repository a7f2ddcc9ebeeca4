"""Adaptive counterpart generation for sampled subgraphs.

Each subgraph node is regenerated as an attention-weighted interpolation of
its full 1-hop graph neighborhood (not just neighbors inside the subgraph),
and counterpart edges are the pairwise cosine similarities of the generated
node features. Everything is differentiable with respect to the embeddings
and both generator weights.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from . import autodiff as ad
from .graphs import Graph, Subgraph

LEAKY_SLOPE = 0.2

# Running counters for degenerate inputs worth surfacing in diagnostics.
diagnostics = {"zero_norm_rows": 0}


@dataclass
class GeneratorParams:
    w_theta: ad.Tensor  # 1 x 2F
    w_phi: ad.Tensor  # F x F

    def tensors(self) -> list[ad.Tensor]:
        return [self.w_theta, self.w_phi]


def init_generator_params(dim: int, rng: np.random.Generator) -> GeneratorParams:
    w_theta = ad.Tensor(ad.glorot_uniform((1, 2 * dim), rng), requires_grad=True)
    w_phi = ad.Tensor(ad.glorot_uniform((dim, dim), rng), requires_grad=True)
    return GeneratorParams(w_theta=w_theta, w_phi=w_phi)


def attention_score(
    h_i: Union[ad.Tensor, np.ndarray],
    h_j: Union[ad.Tensor, np.ndarray],
    params: GeneratorParams,
) -> ad.Tensor:
    """LeakyReLU(W_theta [W_phi h_i || W_phi h_j]) for one node pair."""
    hi = ad.as_tensor(h_i)
    hj = ad.as_tensor(h_j)
    dim = params.w_phi.shape[0]
    hi_col = ad.reshape(hi, (dim, 1))
    hj_col = ad.reshape(hj, (dim, 1))
    joint = ad.concat([ad.matmul(params.w_phi, hi_col), ad.matmul(params.w_phi, hj_col)], axis=0)
    return ad.reshape(ad.leaky_relu(ad.matmul(params.w_theta, joint), LEAKY_SLOPE), ())


def relation_weights(
    center: int,
    g: Graph,
    h_all: ad.Tensor,
    params: GeneratorParams,
) -> tuple[ad.Tensor, np.ndarray]:
    """Softmax attention weights over the center's 1-hop graph neighborhood.

    Returns the weight vector and the neighbor ids it is aligned with. An
    isolated center falls back to its own row so every node stays trainable.
    """
    ids = np.asarray(g.neighbors(center), dtype=np.intp)
    if ids.size == 0:
        ids = np.asarray([center], dtype=np.intp)
    h_c = ad.gather_rows(h_all, [center])  # 1 x F
    h_n = ad.gather_rows(h_all, ids)  # d x F
    w_phi_t = ad.transpose(params.w_phi)
    z_c = ad.matmul(h_c, w_phi_t)  # projected center, as a row
    z_n = ad.matmul(h_n, w_phi_t)
    z_c_rep = ad.add(z_c, ad.Tensor(np.zeros((ids.size, 1))))  # broadcast to d x F
    joint = ad.concat([z_c_rep, z_n], axis=1)  # d x 2F
    scores = ad.leaky_relu(ad.matmul(joint, ad.transpose(params.w_theta)), LEAKY_SLOPE)
    weights = ad.softmax(ad.reshape(scores, (ids.size,)))
    return weights, ids


def interpolate_node(
    weights: Union[ad.Tensor, np.ndarray],
    neighbor_rows: Union[ad.Tensor, np.ndarray],
) -> ad.Tensor:
    """Weighted sum of neighbor embedding rows, one weight per row."""
    w = ad.as_tensor(weights)
    rows = ad.as_tensor(neighbor_rows)
    if w.ndim != 1 or rows.ndim != 2 or w.shape[0] != rows.shape[0]:
        raise ValueError(
            f"interpolate_node: weights {w.shape} do not match rows {rows.shape}"
        )
    return ad.reshape(ad.matmul(ad.reshape(w, (1, -1)), rows), (rows.shape[1],))


def generate_edges(node_embeddings: Union[ad.Tensor, np.ndarray]) -> ad.Tensor:
    """Cosine-similarity adjacency over generated node features.

    Zero-norm rows yield zero similarities (counted in ``diagnostics``). The
    result is symmetrized and clamped to [-1, 1] against float drift.
    """
    emb = ad.as_tensor(node_embeddings)
    zero_rows = int(np.count_nonzero(np.sum(emb.data * emb.data, axis=1) == 0.0))
    if zero_rows:
        diagnostics["zero_norm_rows"] += zero_rows
    sim = ad.cosine_matrix(emb, emb)
    sim = ad.mul(ad.add(sim, ad.transpose(sim)), 0.5)
    return ad.clip(sim, -1.0, 1.0)


@dataclass
class GeneratedSubgraph:
    """Counterpart subgraph; row i corresponds to the source subgraph's nodes[i]."""

    center: int
    node_embeddings: ad.Tensor  # k' x F
    adjacency: ad.Tensor  # k' x k' cosine-valued, symmetric, entries in [-1, 1]

    @property
    def n_nodes(self) -> int:
        return self.node_embeddings.shape[0]


def generate_subgraph(
    s: Subgraph,
    g: Graph,
    h_all: ad.Tensor,
    params: GeneratorParams,
) -> GeneratedSubgraph:
    """Generate the contrastive counterpart of a sampled subgraph."""
    rows = []
    for v in s.nodes:
        weights, ids = relation_weights(v, g, h_all, params)
        neighbor_rows = ad.gather_rows(h_all, ids)
        rows.append(ad.reshape(interpolate_node(weights, neighbor_rows), (1, -1)))
    emb = ad.concat(rows, axis=0)
    return GeneratedSubgraph(
        center=s.center,
        node_embeddings=emb,
        adjacency=generate_edges(emb),
    )
