"""Positive/negative pair construction and the structured contrastive losses.

The anchor of every positive pair is a sampled subgraph and its partner is
the generated counterpart for the same center. Each anchor also gets M
negatives with different centers: one sampled subgraph and one generated
counterpart (alternating pools when M > 2).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from . import autodiff as ad
from .errors import ConfigError
from .generator import GeneratedSubgraph
from .graphs import Subgraph

NEGATIVE_CLAMP = 1.0 - 1e-7
DEFAULT_NEGATIVES = 2
DEFAULT_MIX = 0.5


@dataclass
class ContrastBatch:
    """Aligned sampled/generated subgraphs plus per-anchor negative picks.

    negatives[i] is a list of (pool, index) with pool in {"sampled",
    "generated"} and index != i; the referenced center always differs from
    the anchor's.
    """

    sampled: list[Subgraph]
    generated: list[GeneratedSubgraph]
    negatives: list[list[tuple[str, int]]]

    @property
    def n_anchors(self) -> int:
        return len(self.sampled)

    @property
    def n_negatives(self) -> int:
        return len(self.negatives[0]) if self.negatives else 0


def build_pairs(
    sampled: Sequence[Subgraph],
    generated: Sequence[GeneratedSubgraph],
    rng: np.random.Generator,
    n_negatives: int = DEFAULT_NEGATIVES,
) -> ContrastBatch:
    """Draw per-anchor negatives uniformly from the other batch entries."""
    n = len(sampled)
    if len(generated) != n:
        raise ValueError(
            f"build_pairs: {n} sampled vs {len(generated)} generated subgraphs"
        )
    if n < 2:
        raise ValueError(f"build_pairs: need at least 2 subgraphs for negatives, got {n}")
    if n_negatives < 1:
        raise ValueError(f"build_pairs: n_negatives must be >= 1, got {n_negatives}")
    for s, gsub in zip(sampled, generated):
        if s.center != gsub.center:
            raise ValueError(
                f"build_pairs: misaligned centers {s.center} vs {gsub.center}"
            )
    negatives = []
    pools = ("sampled", "generated")
    for i in range(n):
        others = [j for j in range(n) if j != i]
        picks = []
        for t in range(n_negatives):
            j = int(rng.choice(others))
            picks.append((pools[t % 2], j))
        negatives.append(picks)
    return ContrastBatch(sampled=list(sampled), generated=list(generated), negatives=negatives)


@dataclass
class BatchDistances:
    """Per-anchor positive distance and per-negative distances, one scalar each."""

    wd_pos: list[ad.Tensor]
    wd_neg: list[list[ad.Tensor]]
    gwd_pos: list[ad.Tensor]
    gwd_neg: list[list[ad.Tensor]]


def _contrast_loss(
    pos: Sequence[ad.Tensor],
    neg: Sequence[Sequence[ad.Tensor]],
    tau: float,
) -> ad.Tensor:
    if tau <= 0:
        raise ValueError(f"contrast loss: tau must be positive, got {tau}")
    n = len(pos)
    if n == 0:
        raise ValueError("contrast loss: need at least one anchor")
    if len(neg) != n:
        raise ValueError(f"contrast loss: {n} positives vs {len(neg)} negative groups")
    m = len(neg[0])
    total = None
    for d_pos, d_negs in zip(pos, neg):
        if len(d_negs) != m:
            raise ValueError("contrast loss: ragged negative groups")
        term = ad.mul(d_pos, -1.0 / tau)  # log exp(-D/tau)
        for d_neg in d_negs:
            sim = ad.clip(ad.exp(ad.mul(d_neg, -1.0 / tau)), None, NEGATIVE_CLAMP)
            term = ad.add(term, ad.log(ad.sub(1.0, sim)))
        total = term if total is None else ad.add(total, term)
    return ad.mul(total, -1.0 / (n * (m + 1)))


def wd_loss(distances: BatchDistances, tau: float) -> ad.Tensor:
    """Feature-transport contrastive loss over Wasserstein distances."""
    return _contrast_loss(distances.wd_pos, distances.wd_neg, tau)


def gwd_loss(distances: BatchDistances, tau: float) -> ad.Tensor:
    """Structural contrastive loss over Gromov-Wasserstein distances."""
    return _contrast_loss(distances.gwd_pos, distances.gwd_neg, tau)


def total_loss(
    l1: Union[ad.Tensor, float],
    l2: Union[ad.Tensor, float],
    lam: float = DEFAULT_MIX,
) -> ad.Tensor:
    """Mix lam * l1 + (1 - lam) * l2."""
    if not 0.0 <= lam <= 1.0:
        raise ConfigError(f"lambda must be in [0, 1], got {lam}")
    return ad.add(ad.mul(ad.as_tensor(l1), lam), ad.mul(ad.as_tensor(l2), 1.0 - lam))


@dataclass
class LossValues:
    """Scalar snapshot of one epoch's loss terms."""

    l1: float
    l2: float
    total: float
    lam: float
