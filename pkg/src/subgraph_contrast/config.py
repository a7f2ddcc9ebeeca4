"""Flat key = value run configuration.

One file drives a whole run; sweeps are generated by writing families of
these files. Keys mirror the training hyperparameters; "lambda", "m" and "f"
map to the ``lam``, ``negatives`` and ``dim`` fields.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Optional, Union

from .errors import ConfigError

SINKHORN_GRAD_MODES = ("unroll", "fixed-plan")


@dataclass(frozen=True)
class TrainConfig:
    k: int = 10  # subgraph node budget
    tau: float = 0.5  # temperature shared by costs and losses
    beta: float = 0.05  # Sinkhorn regularizer
    lam: float = 0.5  # loss mix weight
    negatives: int = 2  # negatives per anchor
    dim: int = 64  # embedding width
    lr: float = 1e-4
    epochs: int = 100
    batch_size: int = 32  # subgraphs sampled per epoch
    ot_subsample: int = 16  # anchors per epoch entering the OT loss
    seed: int = 0
    max_iters: int = 500
    tol: float = 1e-6
    sinkhorn_grad: str = "unroll"
    data_dir: Optional[str] = None

    def validate(self) -> "TrainConfig":
        positive = (
            ("k", self.k),
            ("tau", self.tau),
            ("beta", self.beta),
            ("m", self.negatives),
            ("f", self.dim),
            ("lr", self.lr),
            ("batch_size", self.batch_size),
            ("ot_subsample", self.ot_subsample),
            ("max_iters", self.max_iters),
        )
        for key, value in positive:
            if value <= 0:
                raise ConfigError(f"{key} must be positive, got {value}")
        if not 0.0 <= self.lam <= 1.0:
            raise ConfigError(f"lambda must be in [0, 1], got {self.lam}")
        if self.epochs < 0:
            raise ConfigError(f"epochs must be nonnegative, got {self.epochs}")
        if self.tol < 0:
            raise ConfigError(f"tol must be nonnegative, got {self.tol}")
        if self.seed < 0:
            raise ConfigError(f"seed must be nonnegative, got {self.seed}")
        if self.sinkhorn_grad not in SINKHORN_GRAD_MODES:
            raise ConfigError(
                f"sinkhorn_grad must be one of {SINKHORN_GRAD_MODES}, got {self.sinkhorn_grad!r}"
            )
        if self.ot_subsample > self.batch_size:
            raise ConfigError(
                f"ot_subsample ({self.ot_subsample}) cannot exceed batch_size ({self.batch_size})"
            )
        if self.negatives > self.batch_size - 1:
            raise ConfigError(
                f"m ({self.negatives}) needs batch_size >= m + 1, got {self.batch_size}"
            )
        return self


_KEY_TO_FIELD = {
    "k": "k",
    "tau": "tau",
    "beta": "beta",
    "lambda": "lam",
    "m": "negatives",
    "f": "dim",
    "lr": "lr",
    "epochs": "epochs",
    "batch_size": "batch_size",
    "ot_subsample": "ot_subsample",
    "seed": "seed",
    "max_iters": "max_iters",
    "tol": "tol",
    "sinkhorn_grad": "sinkhorn_grad",
    "data_dir": "data_dir",
}

_INT_FIELDS = {"k", "negatives", "dim", "epochs", "batch_size", "ot_subsample", "seed", "max_iters"}
_FLOAT_FIELDS = {"tau", "beta", "lam", "lr", "tol"}


def _coerce(key: str, field_name: str, raw: str):
    if field_name in _INT_FIELDS:
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{key} must be an integer, got {raw!r}") from None
    if field_name in _FLOAT_FIELDS:
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{key} must be a number, got {raw!r}") from None
    return raw


def parse_config_text(text: str, source: str = "<config>") -> TrainConfig:
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source}:{lineno}: expected key = value, got {stripped!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key not in _KEY_TO_FIELD:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        field_name = _KEY_TO_FIELD[key]
        if field_name in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        values[field_name] = _coerce(key, field_name, raw)
    return TrainConfig(**values).validate()


def load_config(path: Union[str, Path]) -> TrainConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config_text(text, source=str(path))


def with_overrides(cfg: TrainConfig, **overrides) -> TrainConfig:
    return replace(cfg, **overrides).validate()


def config_lines(cfg: TrainConfig) -> list[str]:
    """Render the resolved config back to its file format (for manifests)."""
    field_to_key = {v: k for k, v in _KEY_TO_FIELD.items()}
    lines = []
    for f in fields(TrainConfig):
        value = getattr(cfg, f.name)
        if value is None:
            continue
        lines.append(f"{field_to_key[f.name]} = {value}")
    return lines
