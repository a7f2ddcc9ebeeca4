"""Single-layer graph convolutional encoder with a learnable PReLU."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .graphs import NormAdj


@dataclass
class EncoderParams:
    weight: ad.Tensor  # C x F
    prelu_slope: ad.Tensor  # scalar

    def tensors(self) -> list[ad.Tensor]:
        return [self.weight, self.prelu_slope]


def init_encoder_params(n_features: int, dim: int, rng: np.random.Generator) -> EncoderParams:
    weight = ad.Tensor(ad.glorot_uniform((n_features, dim), rng), requires_grad=True)
    slope = ad.Tensor(np.asarray(0.25), requires_grad=True)
    return EncoderParams(weight=weight, prelu_slope=slope)


def encode(norm_adj: NormAdj, features: np.ndarray, params: EncoderParams) -> ad.Tensor:
    """Node embeddings PReLU(normalized_adjacency @ features @ W), shape N x F.

    The propagation product is a constant of the optimization, so it is
    evaluated once outside the tape; gradients flow into W and the slope.
    """
    if features.shape[1] != params.weight.shape[0]:
        raise ValueError(
            f"encode: feature dim {features.shape[1]} does not match "
            f"weight rows {params.weight.shape[0]}"
        )
    propagated = ad.Tensor(norm_adj.propagate(features))
    return ad.prelu(ad.matmul(propagated, params.weight), params.prelu_slope)
