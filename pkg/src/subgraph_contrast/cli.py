"""Command-line surface: train, embed, eval, ot-dist, gen-synth, report.

stdout carries one machine-parsable key=value result line per command;
diagnostics go to stderr. Every artifact-producing run writes a manifest
recording the resolved config, input digests, seed, artifact paths, and
wall-clock timings.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path
from typing import Optional

import numpy as np

from . import synth as sy
from . import training as tr
from . import transport as tp
from .config import TrainConfig, config_lines, load_config, with_overrides
from .errors import CheckpointError, ConfigError, IngestionError, ProbeError
from .graphs import load_graph_dir
from .probe import linear_probe
from .report import render_report
from .sampling import STREAM_BFS, bfs_sample, master_stream


def _eprint(msg: str) -> None:
    print(msg, file=sys.stderr)


def _digest(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _input_digests(paths: dict[str, Optional[Path]]) -> dict[str, str]:
    return {
        name: _digest(p) for name, p in sorted(paths.items()) if p is not None and p.is_file()
    }


def _write_manifest(
    out_dir: Path,
    command: str,
    cfg: Optional[TrainConfig],
    seed: Optional[int],
    inputs: dict[str, Optional[Path]],
    artifacts: dict[str, Path],
    timings: dict[str, float],
) -> Path:
    manifest = {
        "command": command,
        "config": config_lines(cfg) if cfg is not None else None,
        "seed": seed,
        "input_digests": _input_digests(inputs),
        "artifacts": {name: str(p) for name, p in sorted(artifacts.items())},
        "timings_seconds": {name: round(t, 6) for name, t in sorted(timings.items())},
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "manifest.json"
    with open(path, "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def _resolve_config(args) -> TrainConfig:
    cfg = load_config(args.config) if args.config else TrainConfig()
    if getattr(args, "seed", None) is not None:
        cfg = with_overrides(cfg, seed=args.seed)
    return cfg


def _data_paths(data_dir: Path) -> dict[str, Optional[Path]]:
    return {
        "edges": data_dir / "edges.tsv",
        "features": data_dir / "features.csv",
        "labels": data_dir / "labels.txt",
        "splits": data_dir / "splits.tsv",
    }


def _require_data_dir(cfg: TrainConfig) -> Path:
    if cfg.data_dir is None:
        raise ConfigError("data_dir must be set in the config")
    return Path(cfg.data_dir)


def cmd_train(args) -> int:
    cfg = _resolve_config(args)
    data_dir = _require_data_dir(cfg)
    out_dir = Path(args.out)
    started = time.perf_counter()
    g = load_graph_dir(str(data_dir))
    result = tr.train(g, cfg, out_dir=out_dir)
    total_seconds = time.perf_counter() - started
    for epoch, seconds in enumerate(result.epoch_seconds, start=1):
        _eprint(f"epoch {epoch}: {seconds:.3f}s")
    manifest = _write_manifest(
        out_dir,
        "train",
        cfg,
        cfg.seed,
        {"config": Path(args.config) if args.config else None, **_data_paths(data_dir)},
        dict(result.artifacts),
        {"total": total_seconds},
    )
    final_loss = result.loss_history[-1].total if result.loss_history else float("nan")
    print(
        f"checkpoint={result.artifacts['checkpoint']} "
        f"metrics={result.artifacts['metrics']} "
        f"manifest={manifest} "
        f"epochs={cfg.epochs} final_loss={final_loss:.12g} best_epoch={result.best_epoch}"
    )
    return 0


def cmd_embed(args) -> int:
    cfg = _resolve_config(args)
    data_dir = _require_data_dir(cfg)
    out_dir = Path(args.out)
    started = time.perf_counter()
    g = load_graph_dir(str(data_dir))
    params = tr.load_model(args.checkpoint)
    embeddings = tr.embed(g, params)
    out_dir.mkdir(parents=True, exist_ok=True)
    emb_path = out_dir / "embeddings.csv"
    tr.write_embeddings(emb_path, embeddings)
    manifest = _write_manifest(
        out_dir,
        "embed",
        cfg,
        cfg.seed,
        {
            "config": Path(args.config) if args.config else None,
            "checkpoint": Path(args.checkpoint),
            **_data_paths(data_dir),
        },
        {"embeddings": emb_path},
        {"total": time.perf_counter() - started},
    )
    print(
        f"embeddings={emb_path} manifest={manifest} "
        f"rows={embeddings.shape[0]} cols={embeddings.shape[1]}"
    )
    return 0


def cmd_eval(args) -> int:
    cfg = _resolve_config(args)
    data_dir = _require_data_dir(cfg)
    started = time.perf_counter()
    g = load_graph_dir(str(data_dir))
    if g.labels is None or g.splits is None:
        raise IngestionError(f"eval needs labels.txt and splits.tsv in {data_dir}")
    if args.embeddings:
        embeddings = np.loadtxt(args.embeddings, delimiter=",", ndmin=2)
        if embeddings.shape[0] != g.n_nodes:
            raise IngestionError(
                f"{args.embeddings}: {embeddings.shape[0]} rows for {g.n_nodes} nodes"
            )
        source = Path(args.embeddings)
    elif args.checkpoint:
        embeddings = tr.embed(g, tr.load_model(args.checkpoint))
        source = Path(args.checkpoint)
    else:
        raise ConfigError("eval needs --checkpoint or --embeddings")
    result = linear_probe(embeddings, g.labels, g.splits)
    if args.out:
        _write_manifest(
            Path(args.out),
            "eval",
            cfg,
            cfg.seed,
            {
                "config": Path(args.config) if args.config else None,
                "embeddings_source": source,
                **_data_paths(data_dir),
            },
            {},
            {"total": time.perf_counter() - started},
        )
    print(result.summary())
    return 0


def cmd_ot_dist(args) -> int:
    cfg = _resolve_config(args)
    data_dir = _require_data_dir(cfg)
    g = load_graph_dir(str(data_dir))
    if args.checkpoint:
        embeddings = tr.embed(g, tr.load_model(args.checkpoint))
    else:
        embeddings = g.features
    rng = master_stream(cfg.seed, STREAM_BFS)
    s1 = bfs_sample(g, args.center_a, cfg.k, rng, embeddings=embeddings)
    s2 = bfs_sample(g, args.center_b, cfg.k, rng, embeddings=embeddings)
    pair = tp.subgraph_distances(
        s1.node_embeddings,
        tp.intra_distances_sampled(s1, cfg.tau),
        s2.node_embeddings,
        tp.intra_distances_sampled(s2, cfg.tau),
        tau=cfg.tau,
        beta=cfg.beta,
        max_iters=cfg.max_iters,
        tol=cfg.tol,
        differentiate=False,
    )
    if not pair.plan.converged:
        _eprint(f"warning: sinkhorn stopped at max_iters={cfg.max_iters} before tol={cfg.tol}")
    print(
        f"dw={pair.wd.item():.12g} dgw={pair.gwd.item():.12g} "
        f"violation={pair.plan.max_violation:.6g} iterations={pair.plan.iterations}"
    )
    return 0


def cmd_gen_synth(args) -> int:
    cfg = _resolve_config(args)
    out_dir = Path(args.out)
    started = time.perf_counter()
    paths = sy.gen_synth_sbm(
        out_dir,
        blocks=args.blocks,
        nodes_per_block=args.nodes_per_block,
        p_in=args.p_in,
        p_out=args.p_out,
        feat_dim=args.feat_dim,
        noise_sigma=args.noise_sigma,
        seed=cfg.seed,
    )
    with open(paths["edges"], "r", encoding="utf-8") as f:
        n_edges = sum(1 for _ in f)
    manifest = _write_manifest(
        out_dir,
        "gen-synth",
        cfg,
        cfg.seed,
        {"config": Path(args.config) if args.config else None},
        dict(paths),
        {"total": time.perf_counter() - started},
    )
    print(
        f"edges={paths['edges']} features={paths['features']} labels={paths['labels']} "
        f"splits={paths['splits']} manifest={manifest} "
        f"nodes={args.blocks * args.nodes_per_block} edge_lines={n_edges}"
    )
    return 0


def cmd_report(args) -> int:
    started = time.perf_counter()
    out_dir = Path(args.out)
    artifacts = render_report(args.metrics, out_dir)
    manifest = _write_manifest(
        out_dir,
        "report",
        None,
        None,
        {"metrics": Path(args.metrics)},
        dict(artifacts),
        {"total": time.perf_counter() - started},
    )
    print(
        f"loss_curves={artifacts['loss_curves']} distance_means={artifacts['distance_means']} "
        f"summary={artifacts['summary']} manifest={manifest}"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="subgraph-contrast",
        description="Self-supervised subgraph contrast with optimal-transport losses.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, out_default: Optional[str] = None) -> None:
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--seed", type=int, help="override the config seed")
        if out_default is not None:
            p.add_argument("--out", default=out_default, help="artifact directory")

    p_train = sub.add_parser("train", help="run self-supervised training")
    common(p_train, out_default="runs/train")
    p_train.set_defaults(func=cmd_train)

    p_embed = sub.add_parser("embed", help="write embeddings from a checkpoint")
    common(p_embed, out_default="runs/embed")
    p_embed.add_argument("--checkpoint", required=True)
    p_embed.set_defaults(func=cmd_embed)

    p_eval = sub.add_parser("eval", help="linear-probe evaluation")
    common(p_eval)
    p_eval.add_argument("--out", default=None, help="optional manifest directory")
    p_eval.add_argument("--checkpoint", help="encode the graph with this checkpoint")
    p_eval.add_argument("--embeddings", help="probe a precomputed embeddings CSV instead")
    p_eval.set_defaults(func=cmd_eval)

    p_ot = sub.add_parser("ot-dist", help="OT distances between two sampled subgraphs")
    common(p_ot)
    p_ot.add_argument("--center-a", type=int, required=True)
    p_ot.add_argument("--center-b", type=int, required=True)
    p_ot.add_argument("--checkpoint", help="use checkpoint embeddings instead of raw features")
    p_ot.set_defaults(func=cmd_ot_dist)

    p_gen = sub.add_parser("gen-synth", help="write a synthetic SBM dataset")
    common(p_gen, out_default="runs/synth")
    p_gen.add_argument("--blocks", type=int, default=sy.DEFAULT_BLOCKS)
    p_gen.add_argument("--nodes-per-block", type=int, default=sy.DEFAULT_NODES_PER_BLOCK)
    p_gen.add_argument("--p-in", type=float, default=sy.DEFAULT_P_IN)
    p_gen.add_argument("--p-out", type=float, default=sy.DEFAULT_P_OUT)
    p_gen.add_argument("--feat-dim", type=int, default=sy.DEFAULT_FEAT_DIM)
    p_gen.add_argument("--noise-sigma", type=float, default=sy.DEFAULT_NOISE_SIGMA)
    p_gen.set_defaults(func=cmd_gen_synth)

    p_report = sub.add_parser("report", help="render figures from a metrics log")
    common(p_report, out_default="runs/report")
    p_report.add_argument("--metrics", required=True, help="metrics.tsv from a train run")
    p_report.set_defaults(func=cmd_report)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        _eprint(f"config error: {exc}")
        return 2
    except (IngestionError, CheckpointError) as exc:
        _eprint(f"ingestion error: {exc}")
        return 3
    except ProbeError as exc:
        _eprint(f"probe error: {exc}")
        return 1
    except (ValueError, OSError) as exc:
        _eprint(f"error: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
