"""Training orchestration: sample, generate, transport, contrast, step.

Every epoch re-encodes the full graph (transductive, desk scale), samples a
batch of BFS subgraphs, generates counterparts, subsamples anchors for the
OT loss, and takes one Adam step. All randomness is drawn from per-purpose,
per-epoch seed streams, so runs are deterministic for a fixed seed.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Union

import numpy as np

from . import autodiff as ad
from . import losses as ls
from . import transport as tp
from .checkpoint import load_checkpoint, save_checkpoint
from .config import TrainConfig
from .encoder import EncoderParams, encode, init_encoder_params
from .errors import CheckpointError
from .generator import GeneratedSubgraph, GeneratorParams, generate_subgraph, init_generator_params
from .graphs import Graph, Subgraph, normalize_adjacency
from .probe import linear_probe
from .sampling import (
    STREAM_AUGMENT,
    STREAM_BFS,
    STREAM_CENTERS,
    STREAM_INIT,
    STREAM_NEGATIVES,
    bfs_sample,
    master_stream,
)

METRICS_HEADER = "epoch\tl1\tl2\ttotal\tmean_dw_pos\tmean_dw_neg"

CounterpartFn = Callable[
    [Subgraph, Graph, ad.Tensor, GeneratorParams, np.random.Generator],
    GeneratedSubgraph,
]
DistanceFn = Callable[..., tp.PairDistances]


@dataclass
class ModelParams:
    encoder: EncoderParams
    generator: GeneratorParams

    def tensors(self) -> list[ad.Tensor]:
        return self.encoder.tensors() + self.generator.tensors()

    def named(self) -> dict[str, ad.Tensor]:
        return {
            "encoder.weight": self.encoder.weight,
            "encoder.prelu_slope": self.encoder.prelu_slope,
            "generator.w_theta": self.generator.w_theta,
            "generator.w_phi": self.generator.w_phi,
        }

    def snapshot(self) -> dict[str, np.ndarray]:
        return {name: t.data.copy() for name, t in self.named().items()}


def init_model(n_features: int, dim: int, seed: int) -> ModelParams:
    rng = master_stream(seed, STREAM_INIT)
    return ModelParams(
        encoder=init_encoder_params(n_features, dim, rng),
        generator=init_generator_params(dim, rng),
    )


def params_from_arrays(arrays: dict[str, np.ndarray]) -> ModelParams:
    """Rebuild trainable parameters from a checkpoint's tensor mapping."""
    expected = ("encoder.weight", "encoder.prelu_slope", "generator.w_theta", "generator.w_phi")
    missing = [name for name in expected if name not in arrays]
    if missing:
        raise CheckpointError(f"checkpoint is missing tensors: {', '.join(missing)}")
    t = {name: ad.Tensor(arrays[name].copy(), requires_grad=True) for name in expected}
    return ModelParams(
        encoder=EncoderParams(weight=t["encoder.weight"], prelu_slope=t["encoder.prelu_slope"]),
        generator=GeneratorParams(w_theta=t["generator.w_theta"], w_phi=t["generator.w_phi"]),
    )


def load_model(path: Union[str, Path]) -> ModelParams:
    return params_from_arrays(load_checkpoint(path))


def default_counterpart(
    s: Subgraph,
    g: Graph,
    h_all: ad.Tensor,
    params: GeneratorParams,
    rng: np.random.Generator,
) -> GeneratedSubgraph:
    del rng  # generation is deterministic given embeddings
    return generate_subgraph(s, g, h_all, params)


@dataclass
class TrainResult:
    params: ModelParams
    best_params: dict[str, np.ndarray]
    best_epoch: int
    loss_history: list[ls.LossValues]
    metrics_lines: list[str]
    val_accuracy: list[float]
    epoch_seconds: list[float]
    artifacts: dict[str, Path] = field(default_factory=dict)


def _format(x: float) -> str:
    return f"{x:.12g}"


def _epoch_distances(
    batch: ls.ContrastBatch,
    anchors: np.ndarray,
    cfg: TrainConfig,
    distance_fn: DistanceFn,
) -> ls.BatchDistances:
    intra_sampled = {}
    intra_generated = {}

    def sampled_intra(i: int) -> ad.Tensor:
        if i not in intra_sampled:
            intra_sampled[i] = tp.intra_distances_sampled(batch.sampled[i], cfg.tau)
        return intra_sampled[i]

    def generated_intra(i: int) -> ad.Tensor:
        if i not in intra_generated:
            intra_generated[i] = tp.intra_distances_generated(batch.generated[i], cfg.tau)
        return intra_generated[i]

    dist = ls.BatchDistances(wd_pos=[], wd_neg=[], gwd_pos=[], gwd_neg=[])
    for i in anchors:
        anchor_emb = batch.sampled[i].node_embeddings
        anchor_intra = sampled_intra(i)
        pos = distance_fn(
            anchor_emb,
            anchor_intra,
            batch.generated[i].node_embeddings,
            generated_intra(i),
        )
        dist.wd_pos.append(pos.wd)
        dist.gwd_pos.append(pos.gwd)
        wd_negs = []
        gwd_negs = []
        for pool, j in batch.negatives[i]:
            if pool == "sampled":
                emb2, intra2 = batch.sampled[j].node_embeddings, sampled_intra(j)
            else:
                emb2, intra2 = batch.generated[j].node_embeddings, generated_intra(j)
            neg = distance_fn(anchor_emb, anchor_intra, emb2, intra2)
            wd_negs.append(neg.wd)
            gwd_negs.append(neg.gwd)
        dist.wd_neg.append(wd_negs)
        dist.gwd_neg.append(gwd_negs)
    return dist


def train(
    g: Graph,
    cfg: TrainConfig,
    out_dir: Optional[Union[str, Path]] = None,
    counterpart_fn: CounterpartFn = default_counterpart,
    distance_fn: Optional[DistanceFn] = None,
) -> TrainResult:
    """Run the self-supervised loop; optionally write artifacts under out_dir.

    counterpart_fn swaps the positive-pair construction (used by augmentation
    ablations); distance_fn swaps the pair distance (defaults to the shared
    plan entropic OT pair).
    """
    cfg.validate()
    n = g.n_nodes
    if n < 2:
        raise ValueError(f"train: need at least 2 nodes, got {n}")
    batch_size = min(cfg.batch_size, n)
    ot_subsample = min(cfg.ot_subsample, batch_size)
    if batch_size < 2:
        raise ValueError("train: batch_size must be at least 2 for negatives")

    if distance_fn is None:

        def distance_fn(emb1, intra1, emb2, intra2):
            return tp.subgraph_distances(
                emb1,
                intra1,
                emb2,
                intra2,
                tau=cfg.tau,
                beta=cfg.beta,
                max_iters=cfg.max_iters,
                tol=cfg.tol,
                differentiate=cfg.sinkhorn_grad == "unroll",
            )

    norm_adj = normalize_adjacency(g)
    model = init_model(g.n_features, cfg.dim, cfg.seed)
    opt = ad.Adam(model.tensors(), lr=cfg.lr)
    has_probe_data = g.labels is not None and g.splits is not None

    loss_history: list[ls.LossValues] = []
    metrics_lines: list[str] = []
    val_accuracy: list[float] = []
    epoch_seconds: list[float] = []
    best_params = model.snapshot()
    best_epoch = 0
    best_val = -np.inf
    best_loss = np.inf

    for epoch in range(1, cfg.epochs + 1):
        started = time.perf_counter()
        centers_rng = master_stream(cfg.seed, STREAM_CENTERS, epoch)
        bfs_rng = master_stream(cfg.seed, STREAM_BFS, epoch)
        neg_rng = master_stream(cfg.seed, STREAM_NEGATIVES, epoch)
        augment_rng = master_stream(cfg.seed, STREAM_AUGMENT, epoch)

        with ad.Tape() as tape:
            h_all = encode(norm_adj, g.features, model.encoder)
            centers = centers_rng.choice(n, size=batch_size, replace=False)
            sampled = [bfs_sample(g, int(c), cfg.k, bfs_rng, embeddings=h_all) for c in centers]
            generated = [
                counterpart_fn(s, g, h_all, model.generator, augment_rng) for s in sampled
            ]
            batch = ls.build_pairs(sampled, generated, neg_rng, cfg.negatives)
            anchors = neg_rng.choice(batch_size, size=ot_subsample, replace=False)
            dist = _epoch_distances(batch, anchors, cfg, distance_fn)
            l1 = ls.wd_loss(dist, cfg.tau)
            l2 = ls.gwd_loss(dist, cfg.tau)
            total = ls.total_loss(l1, l2, cfg.lam)
        tape.backward(total)
        opt.step()

        values = ls.LossValues(l1=l1.item(), l2=l2.item(), total=total.item(), lam=cfg.lam)
        loss_history.append(values)
        mean_pos = float(np.mean([d.item() for d in dist.wd_pos]))
        mean_neg = float(np.mean([d.item() for group in dist.wd_neg for d in group]))
        metrics_lines.append(
            f"{epoch}\t{_format(values.l1)}\t{_format(values.l2)}\t{_format(values.total)}"
            f"\t{_format(mean_pos)}\t{_format(mean_neg)}"
        )

        if has_probe_data:
            h_now = encode(norm_adj, g.features, model.encoder).data
            result = linear_probe(h_now, g.labels, g.splits, eval_split="val")
            val_accuracy.append(result.accuracy)
            if result.accuracy > best_val:
                best_val = result.accuracy
                best_params = model.snapshot()
                best_epoch = epoch
        else:
            if values.total < best_loss:
                best_loss = values.total
                best_params = model.snapshot()
                best_epoch = epoch
        epoch_seconds.append(time.perf_counter() - started)

    result = TrainResult(
        params=model,
        best_params=best_params,
        best_epoch=best_epoch,
        loss_history=loss_history,
        metrics_lines=metrics_lines,
        val_accuracy=val_accuracy,
        epoch_seconds=epoch_seconds,
    )
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        metrics_path = out / "metrics.tsv"
        with open(metrics_path, "w", encoding="utf-8") as f:
            f.write(METRICS_HEADER + "\n")
            for line in metrics_lines:
                f.write(line + "\n")
        final_path = out / "checkpoint.bin"
        best_path = out / "checkpoint_best.bin"
        save_checkpoint(model.named(), final_path)
        save_checkpoint(best_params, best_path)
        result.artifacts = {
            "metrics": metrics_path,
            "checkpoint": final_path,
            "checkpoint_best": best_path,
        }
    return result


def embed(g: Graph, params: ModelParams) -> np.ndarray:
    """Deterministic forward pass producing the N x F embedding matrix."""
    if params.encoder.weight.shape[0] != g.n_features:
        raise CheckpointError(
            f"checkpoint expects {params.encoder.weight.shape[0]} features, "
            f"graph has {g.n_features}"
        )
    norm_adj = normalize_adjacency(g)
    return encode(norm_adj, g.features, params.encoder).data


def write_embeddings(path: Union[str, Path], embeddings: np.ndarray) -> None:
    """Write embeddings in the features CSV format."""
    with open(path, "w", encoding="utf-8") as f:
        for row in embeddings:
            f.write(",".join(f"{x:.17g}" for x in row) + "\n")
