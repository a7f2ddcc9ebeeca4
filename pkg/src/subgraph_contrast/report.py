"""Render training-curve figures and a summary table from a metrics log."""

from __future__ import annotations

from pathlib import Path
from typing import Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .errors import IngestionError
from .training import METRICS_HEADER

METRIC_COLUMNS = METRICS_HEADER.split("\t")


def read_metrics(path: Union[str, Path]) -> dict[str, np.ndarray]:
    """Parse a metrics TSV into column arrays keyed by header name."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise IngestionError(f"cannot read metrics file {path}: {exc.strerror}") from None
    if not lines or lines[0].split("\t") != METRIC_COLUMNS:
        raise IngestionError(f"{path}: missing metrics header {METRICS_HEADER!r}")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != len(METRIC_COLUMNS):
            raise IngestionError(
                f"{path}:{lineno}: expected {len(METRIC_COLUMNS)} fields, got {len(parts)}"
            )
        try:
            rows.append([float(tok) for tok in parts])
        except ValueError:
            raise IngestionError(f"{path}:{lineno}: malformed metric value") from None
    data = np.asarray(rows, dtype=np.float64).reshape(len(rows), len(METRIC_COLUMNS))
    return {name: data[:, idx] for idx, name in enumerate(METRIC_COLUMNS)}


def render_report(metrics_path: Union[str, Path], out_dir: Union[str, Path]) -> dict[str, Path]:
    """Write loss/distance figures and a summary TSV; returns artifact paths."""
    metrics = read_metrics(metrics_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    epochs = metrics["epoch"]

    loss_png = out / "loss_curves.png"
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(epochs, metrics["l1"], label="feature transport (l1)")
    ax.plot(epochs, metrics["l2"], label="structure transport (l2)")
    ax.plot(epochs, metrics["total"], label="total", linewidth=2, color="black")
    ax.set_xlabel("epoch")
    ax.set_ylabel("loss")
    ax.set_title("Contrastive loss")
    ax.legend()
    fig.tight_layout()
    fig.savefig(loss_png, dpi=150)
    plt.close(fig)

    dist_png = out / "distance_means.png"
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(epochs, metrics["mean_dw_pos"], label="mean positive D_w")
    ax.plot(epochs, metrics["mean_dw_neg"], label="mean negative D_w")
    ax.set_xlabel("epoch")
    ax.set_ylabel("transport distance")
    ax.set_title("Positive vs negative transport distances")
    ax.legend()
    fig.tight_layout()
    fig.savefig(dist_png, dpi=150)
    plt.close(fig)

    summary_tsv = out / "report.tsv"
    with open(summary_tsv, "w", encoding="utf-8") as f:
        f.write("metric\tfirst\tlast\tmin\tmax\n")
        for name in METRIC_COLUMNS[1:]:
            col = metrics[name]
            if col.size:
                f.write(
                    f"{name}\t{col[0]:.12g}\t{col[-1]:.12g}\t{col.min():.12g}\t{col.max():.12g}\n"
                )
    return {"loss_curves": loss_png, "distance_means": dist_png, "summary": summary_tsv}
