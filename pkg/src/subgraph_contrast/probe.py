"""Linear probe: multinomial logistic regression on frozen embeddings.

Deterministic by construction: weights start at zero, full-batch Adam, and
argmax ties resolve to the lowest class id.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .errors import ProbeError

PROBE_LR = 0.01
PROBE_STEPS = 300
PROBE_L2 = 1e-4


@dataclass
class ProbeResult:
    accuracy: float
    micro_f1: float
    class_counts: dict[int, dict[str, int]]  # per class: support, predicted, correct

    def summary(self) -> str:
        return f"accuracy={self.accuracy:.4f} micro_f1={self.micro_f1:.4f}"


def _fit_logistic(
    x: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    lr: float,
    steps: int,
    l2: float,
) -> tuple[np.ndarray, np.ndarray]:
    n, d = x.shape
    w = ad.Tensor(np.zeros((d, n_classes)), requires_grad=True)
    b = ad.Tensor(np.zeros((1, n_classes)), requires_grad=True)
    x_t = ad.Tensor(x)
    one_hot = np.zeros((n, n_classes))
    one_hot[np.arange(n), y] = 1.0
    one_hot_t = ad.Tensor(one_hot)
    opt = ad.Adam([w, b], lr=lr)
    for _ in range(steps):
        with ad.Tape() as tape:
            logits = ad.add(ad.matmul(x_t, w), b)
            lse = ad.logsumexp(logits, axis=1)
            true_logit = ad.tensor_sum(ad.mul(logits, one_hot_t), axis=1)
            nll = ad.tensor_mean(ad.sub(lse, true_logit))
            loss = ad.add(nll, ad.mul(ad.tensor_sum(ad.mul(w, w)), l2))
        tape.backward(loss)
        opt.step()
    return w.data, b.data


def linear_probe(
    embeddings: np.ndarray,
    labels: np.ndarray,
    splits: np.ndarray,
    lr: float = PROBE_LR,
    steps: int = PROBE_STEPS,
    l2: float = PROBE_L2,
    eval_split: str = "test",
) -> ProbeResult:
    """Train on the train split, report accuracy and micro-F1 on eval_split."""
    x = np.asarray(embeddings, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    splits = np.asarray(splits)
    if x.shape[0] != y.shape[0] or x.shape[0] != splits.shape[0]:
        raise ValueError(
            f"linear_probe: {x.shape[0]} embeddings vs {y.shape[0]} labels "
            f"vs {splits.shape[0]} split tags"
        )
    classes = np.unique(y)
    n_classes = int(classes.max()) + 1
    train_mask = splits == "train"
    eval_mask = splits == eval_split
    if not np.any(eval_mask):
        raise ProbeError(f"no nodes tagged {eval_split!r}")
    train_classes = set(np.unique(y[train_mask]).tolist())
    for cls in classes:
        if int(cls) not in train_classes:
            raise ProbeError(f"class {int(cls)} is absent from the train split")

    w, b = _fit_logistic(x[train_mask], y[train_mask], n_classes, lr, steps, l2)
    pred = np.argmax(x[eval_mask] @ w + b, axis=1)  # ties go to the lowest class id
    truth = y[eval_mask]

    counts: dict[int, dict[str, int]] = {}
    for cls in classes:
        cls = int(cls)
        counts[cls] = {
            "support": int(np.sum(truth == cls)),
            "predicted": int(np.sum(pred == cls)),
            "correct": int(np.sum((pred == cls) & (truth == cls))),
        }
    tp = sum(c["correct"] for c in counts.values())
    fp = sum(c["predicted"] - c["correct"] for c in counts.values())
    fn = sum(c["support"] - c["correct"] for c in counts.values())
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    micro_f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return ProbeResult(
        accuracy=float(tp / truth.shape[0]),
        micro_f1=float(micro_f1),
        class_counts=counts,
    )
