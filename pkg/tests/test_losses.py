"""Pair construction and contrastive loss values against direct substitution."""

import math

import numpy as np
import pytest

from subgraph_contrast import autodiff as ad
from subgraph_contrast.errors import ConfigError
from subgraph_contrast.generator import GeneratedSubgraph
from subgraph_contrast.graphs import Subgraph
from subgraph_contrast.losses import (
    NEGATIVE_CLAMP,
    BatchDistances,
    build_pairs,
    gwd_loss,
    total_loss,
    wd_loss,
)


def stub_pair(center, k=3):
    rng = np.random.default_rng(center)
    emb = rng.normal(size=(k, 4))
    s = Subgraph(
        center=center,
        nodes=list(range(center * 10, center * 10 + k)),
        adjacency=np.zeros((k, k)),
        node_embeddings=ad.Tensor(emb),
    )
    gsub = GeneratedSubgraph(
        center=center,
        node_embeddings=ad.Tensor(emb + 0.1),
        adjacency=ad.Tensor(np.eye(k)),
    )
    return s, gsub


def make_batch(n):
    pairs = [stub_pair(i) for i in range(n)]
    return [s for s, _ in pairs], [g for _, g in pairs]


def scalars(values):
    return [ad.Tensor(np.asarray(float(v))) for v in values]


def distances(pos, neg):
    return BatchDistances(
        wd_pos=scalars(pos),
        wd_neg=[scalars(group) for group in neg],
        gwd_pos=scalars(pos),
        gwd_neg=[scalars(group) for group in neg],
    )


# ------------------------------------------------------------- build_pairs


def test_two_anchor_batch_is_forced():
    sampled, generated = make_batch(2)
    batch = build_pairs(sampled, generated, np.random.default_rng(0), n_negatives=2)
    assert batch.n_anchors == 2 and batch.n_negatives == 2
    # with n=2 the only admissible partner index is the other anchor
    assert batch.negatives[0] == [("sampled", 1), ("generated", 1)]
    assert batch.negatives[1] == [("sampled", 0), ("generated", 0)]


def test_negatives_avoid_anchor_and_alternate_pools():
    sampled, generated = make_batch(6)
    batch = build_pairs(sampled, generated, np.random.default_rng(1), n_negatives=4)
    for i, picks in enumerate(batch.negatives):
        assert [pool for pool, _ in picks] == ["sampled", "generated"] * 2
        for _, j in picks:
            assert j != i
            assert sampled[j].center != sampled[i].center


def test_build_pairs_deterministic_under_seed():
    sampled, generated = make_batch(5)
    a = build_pairs(sampled, generated, np.random.default_rng(7)).negatives
    b = build_pairs(sampled, generated, np.random.default_rng(7)).negatives
    assert a == b


def test_build_pairs_validation():
    sampled, generated = make_batch(3)
    with pytest.raises(ValueError, match="at least 2"):
        build_pairs(sampled[:1], generated[:1], np.random.default_rng(0))
    with pytest.raises(ValueError, match="sampled vs"):
        build_pairs(sampled, generated[:2], np.random.default_rng(0))
    swapped = [generated[1], generated[0], generated[2]]
    with pytest.raises(ValueError, match="misaligned centers"):
        build_pairs(sampled, swapped, np.random.default_rng(0))
    with pytest.raises(ValueError, match="n_negatives"):
        build_pairs(sampled, generated, np.random.default_rng(0), n_negatives=0)


# ------------------------------------------------------------- loss values


def expected_loss(pos, neg, tau):
    total = 0.0
    for d_pos, group in zip(pos, neg):
        term = -d_pos / tau
        for d_neg in group:
            sim = min(math.exp(-d_neg / tau), NEGATIVE_CLAMP)
            term += math.log(1.0 - sim)
        total += term
    n, m = len(pos), len(neg[0])
    return -total / (n * (m + 1))


def test_single_anchor_no_negative_identity():
    # D_pos = tau makes the loss exactly 1: -(-tau/tau)/(1*(0+1))
    d = distances([0.5], [[]])
    assert wd_loss(d, 0.5).item() == pytest.approx(1.0, abs=1e-15)


def test_direct_substitution_oracle():
    tau = 0.5
    pos, neg = [0.2], [[1.0, 2.0]]
    got = wd_loss(distances(pos, neg), tau).item()
    assert got == pytest.approx(expected_loss(pos, neg, tau), rel=1e-12)

    pos2, neg2 = [0.1], [[0.8, 1.5]]
    got2 = gwd_loss(distances(pos2, neg2), tau).item()
    assert got2 == pytest.approx(expected_loss(pos2, neg2, tau), rel=1e-12)


def test_multi_anchor_average():
    tau = 0.7
    pos = [0.3, 0.9, 0.4]
    neg = [[1.0, 0.6], [0.5, 2.0], [1.2, 0.8]]
    got = wd_loss(distances(pos, neg), tau).item()
    assert got == pytest.approx(expected_loss(pos, neg, tau), rel=1e-12)


def test_perfect_separation_limit():
    # D_pos = 0 and huge D_neg drive the loss to 0
    got = wd_loss(distances([0.0], [[50.0, 80.0]]), 0.5).item()
    assert got == pytest.approx(0.0, abs=1e-12)


def test_zero_negative_distance_is_clamped_finite():
    got = wd_loss(distances([0.5], [[0.0, 0.0]]), 0.5).item()
    assert math.isfinite(got)
    # clamp pins the similarity at 1 - 1e-7, i.e. log term ~= log(1e-7)
    expect = expected_loss([0.5], [[0.0, 0.0]], 0.5)
    assert got == pytest.approx(expect, rel=1e-12)


def test_loss_monotone_in_distances():
    tau = 0.5
    base = wd_loss(distances([0.5], [[1.0, 1.0]]), tau).item()
    closer_pos = wd_loss(distances([0.3], [[1.0, 1.0]]), tau).item()
    closer_neg = wd_loss(distances([0.5], [[0.7, 1.0]]), tau).item()
    assert closer_pos < base  # tighter positive pair lowers the loss
    assert closer_neg > base  # tighter negative pair raises it


def test_loss_nonnegative_for_positive_distances():
    rng = np.random.default_rng(3)
    for _ in range(20):
        pos = rng.uniform(0.01, 3.0, size=4).tolist()
        neg = rng.uniform(0.01, 3.0, size=(4, 2)).tolist()
        assert wd_loss(distances(pos, neg), 0.5).item() > 0


def test_loss_validation():
    with pytest.raises(ValueError, match="tau"):
        wd_loss(distances([0.5], [[1.0]]), 0.0)
    with pytest.raises(ValueError, match="at least one"):
        wd_loss(distances([], []), 0.5)
    with pytest.raises(ValueError, match="ragged"):
        wd_loss(distances([0.5, 0.6], [[1.0, 2.0], [1.0]]), 0.5)


# ------------------------------------------------------------- total_loss


def test_total_loss_mixes_linearly():
    assert total_loss(2.0, 4.0, 0.5).item() == pytest.approx(3.0, abs=1e-15)
    assert total_loss(2.0, 4.0, 1.0).item() == pytest.approx(2.0, abs=1e-15)
    assert total_loss(2.0, 4.0, 0.0).item() == pytest.approx(4.0, abs=1e-15)


def test_total_loss_rejects_out_of_range_mix():
    with pytest.raises(ConfigError, match="lambda"):
        total_loss(1.0, 1.0, 1.5)
    with pytest.raises(ConfigError, match="lambda"):
        total_loss(1.0, 1.0, -0.1)


def test_total_loss_differentiable():
    a = ad.Tensor(np.asarray(2.0), requires_grad=True)
    b = ad.Tensor(np.asarray(4.0), requires_grad=True)
    with ad.Tape() as tape:
        out = total_loss(a, b, 0.25)
        tape.backward(out)
    assert a.grad == pytest.approx(0.25)
    assert b.grad == pytest.approx(0.75)
