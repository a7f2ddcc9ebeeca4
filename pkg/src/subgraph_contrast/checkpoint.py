"""Binary checkpoint format for named parameter tensors.

Layout (all integers little-endian):
    magic "GSC1"
    u32 tensor count
    per tensor: u16 name length, UTF-8 name, u8 rank, u32 per dimension,
                raw float64 little-endian values (row-major)
"""

from __future__ import annotations

import struct
from typing import Mapping, Union

import numpy as np

from .autodiff import Tensor
from .errors import CheckpointError

MAGIC = b"GSC1"


def save_checkpoint(params: Mapping[str, Union[Tensor, np.ndarray]], path: str) -> None:
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(params)))
        for name, value in params.items():
            data = np.asarray(value.data if isinstance(value, Tensor) else value, dtype=np.float64)
            encoded = name.encode("utf-8")
            if len(encoded) > 0xFFFF:
                raise ValueError(f"save_checkpoint: name too long: {name!r}")
            f.write(struct.pack("<H", len(encoded)))
            f.write(encoded)
            f.write(struct.pack("<B", data.ndim))
            for dim in data.shape:
                f.write(struct.pack("<I", dim))
            f.write(data.astype("<f8").tobytes())


def load_checkpoint(path: str) -> dict[str, np.ndarray]:
    try:
        with open(path, "rb") as f:
            blob = f.read()
    except OSError as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}") from e
    if blob[:4] != MAGIC:
        raise CheckpointError(f"{path}: bad magic bytes, not a checkpoint")
    off = 4

    def take(n: int) -> bytes:
        nonlocal off
        if off + n > len(blob):
            raise CheckpointError(f"{path}: truncated checkpoint")
        chunk = blob[off : off + n]
        off += n
        return chunk

    (count,) = struct.unpack("<I", take(4))
    out: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = struct.unpack("<H", take(2))
        name = take(name_len).decode("utf-8")
        (rank,) = struct.unpack("<B", take(1))
        shape = tuple(struct.unpack("<I", take(4))[0] for _ in range(rank))
        n_values = int(np.prod(shape)) if shape else 1
        data = np.frombuffer(take(8 * n_values), dtype="<f8").reshape(shape)
        out[name] = np.array(data, dtype=np.float64)
    if off != len(blob):
        raise CheckpointError(f"{path}: trailing bytes after last tensor")
    return out
