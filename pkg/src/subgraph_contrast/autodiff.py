"""Dense float64 tensors with taped reverse-mode differentiation.

The engine is intentionally small: the primitives below are exactly the
operations needed by the graph encoder, the subgraph generator, the entropic
transport solver, and the contrastive losses. Everything is float64; the
transport solver's exponentials underflow in float32 at small regularization.

Recording model: an operation records onto the innermost active ``Tape`` when
any of its inputs requires gradients. With no active tape, ops compute values
only and their results do not require gradients.
"""

from __future__ import annotations

import math
from typing import Callable, Optional, Sequence, Union

import numpy as np

ArrayLike = Union["Tensor", np.ndarray, float, int, list, tuple]


class Tensor:
    """A dense float64 array plus an optional accumulated gradient."""

    __slots__ = ("data", "requires_grad", "grad")

    def __init__(self, data: ArrayLike, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad: Optional[np.ndarray] = None

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        if self.data.size != 1:
            raise ValueError("item: tensor is not a scalar")
        return float(self.data.reshape(()))

    def detach(self) -> "Tensor":
        """Constant copy sharing no gradient history."""
        return Tensor(self.data)

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.data.shape}{flag})"

    # operator sugar; all gradients go through the module-level ops
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __neg__(self):
        return neg(self)


def as_tensor(x: ArrayLike) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


class Tape:
    """Ordered record of executed differentiable ops.

    Records are appended in execution order, so every op appears after the
    ops that produced its inputs. One tape per thread; tapes nest.
    """

    _stack: list["Tape"] = []

    def __init__(self):
        self._records: list[tuple[Tensor, tuple[Tensor, ...], Callable]] = []
        self._output_ids: set[int] = set()

    @classmethod
    def active(cls) -> Optional["Tape"]:
        return cls._stack[-1] if cls._stack else None

    def __enter__(self) -> "Tape":
        Tape._stack.append(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        popped = Tape._stack.pop()
        assert popped is self

    def __len__(self) -> int:
        return len(self._records)

    def backward(self, root: Tensor) -> None:
        backward(self, root)


def _record(out: Tensor, inputs: tuple[Tensor, ...], vjp: Callable) -> None:
    tape = Tape.active()
    if tape is not None and any(i.requires_grad for i in inputs):
        out.requires_grad = True
        tape._records.append((out, inputs, vjp))
        tape._output_ids.add(id(out))


def backward(tape: Tape, root: Tensor) -> None:
    """Accumulate d(root)/d(leaf) into ``grad`` of every requires_grad leaf.

    ``root`` must be scalar. Gradients add across uses within this call and
    across repeated backward calls; optimizers clear them.
    """
    if root.data.size != 1:
        raise ValueError("backward: root must be a scalar tensor")
    grads: dict[int, np.ndarray] = {id(root): np.ones_like(root.data)}
    if root.requires_grad and id(root) not in tape._output_ids:
        one = np.ones_like(root.data)
        root.grad = one if root.grad is None else root.grad + one
    for out, inputs, vjp in reversed(tape._records):
        g = grads.pop(id(out), None)
        if g is None:
            continue
        parts = vjp(g)
        for inp, part in zip(inputs, parts):
            if part is None or not inp.requires_grad:
                continue
            if id(inp) in tape._output_ids:
                acc = grads.get(id(inp))
                grads[id(inp)] = part if acc is None else acc + part
            else:
                inp.grad = part if inp.grad is None else inp.grad + part


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum gradient over axes that numpy broadcasting expanded."""
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


def _broadcast_op(name, a, b, fwd, vjp_maker):
    a, b = as_tensor(a), as_tensor(b)
    try:
        data = fwd(a.data, b.data)
    except ValueError:
        raise ValueError(f"{name}: incompatible shapes {a.shape} and {b.shape}") from None
    out = Tensor(data)
    _record(out, (a, b), vjp_maker(a.data, b.data))
    return out


def add(a: ArrayLike, b: ArrayLike) -> Tensor:
    def vjp_maker(ad, bd):
        def vjp(g):
            return _unbroadcast(g, ad.shape), _unbroadcast(g, bd.shape)

        return vjp

    return _broadcast_op("add", a, b, np.add, vjp_maker)


def sub(a: ArrayLike, b: ArrayLike) -> Tensor:
    def vjp_maker(ad, bd):
        def vjp(g):
            return _unbroadcast(g, ad.shape), _unbroadcast(-g, bd.shape)

        return vjp

    return _broadcast_op("sub", a, b, np.subtract, vjp_maker)


def mul(a: ArrayLike, b: ArrayLike) -> Tensor:
    def vjp_maker(ad, bd):
        def vjp(g):
            return _unbroadcast(g * bd, ad.shape), _unbroadcast(g * ad, bd.shape)

        return vjp

    return _broadcast_op("mul", a, b, np.multiply, vjp_maker)


def div(a: ArrayLike, b: ArrayLike) -> Tensor:
    def vjp_maker(ad, bd):
        def vjp(g):
            return (
                _unbroadcast(g / bd, ad.shape),
                _unbroadcast(-g * ad / (bd * bd), bd.shape),
            )

        return vjp

    return _broadcast_op("div", a, b, np.divide, vjp_maker)


def neg(a: ArrayLike) -> Tensor:
    a = as_tensor(a)
    out = Tensor(-a.data)
    _record(out, (a,), lambda g: (-g,))
    return out


def matmul(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ValueError(f"matmul: incompatible shapes {a.shape} and {b.shape}")
    out = Tensor(a.data @ b.data)
    ad, bd = a.data, b.data

    def vjp(g):
        return g @ bd.T, ad.T @ g

    _record(out, (a, b), vjp)
    return out


def transpose(a: ArrayLike) -> Tensor:
    a = as_tensor(a)
    if a.ndim != 2:
        raise ValueError(f"transpose: expected a matrix, got shape {a.shape}")
    out = Tensor(a.data.T)
    _record(out, (a,), lambda g: (g.T,))
    return out


def reshape(a: ArrayLike, shape: Sequence[int]) -> Tensor:
    a = as_tensor(a)
    try:
        data = a.data.reshape(shape)
    except ValueError:
        raise ValueError(f"reshape: cannot view shape {a.shape} as {tuple(shape)}") from None
    out = Tensor(data)
    orig = a.data.shape
    _record(out, (a,), lambda g: (g.reshape(orig),))
    return out


def exp(a: ArrayLike) -> Tensor:
    a = as_tensor(a)
    data = np.exp(a.data)
    out = Tensor(data)
    _record(out, (a,), lambda g: (g * data,))
    return out


def log(a: ArrayLike) -> Tensor:
    a = as_tensor(a)
    out = Tensor(np.log(a.data))
    ad = a.data
    _record(out, (a,), lambda g: (g / ad,))
    return out


def sqrt(a: ArrayLike) -> Tensor:
    a = as_tensor(a)
    data = np.sqrt(a.data)
    out = Tensor(data)
    _record(out, (a,), lambda g: (g * 0.5 / data,))
    return out


def absolute(a: ArrayLike) -> Tensor:
    a = as_tensor(a)
    out = Tensor(np.abs(a.data))
    sign = np.sign(a.data)
    _record(out, (a,), lambda g: (g * sign,))
    return out


def leaky_relu(a: ArrayLike, negative_slope: float = 0.2) -> Tensor:
    a = as_tensor(a)
    factor = np.where(a.data >= 0, 1.0, negative_slope)
    out = Tensor(a.data * factor)
    _record(out, (a,), lambda g: (g * factor,))
    return out


def prelu(a: ArrayLike, slope: Tensor) -> Tensor:
    """PReLU with a single learnable slope for negative inputs."""
    a = as_tensor(a)
    if slope.data.size != 1:
        raise ValueError("prelu: slope must be a scalar tensor")
    s = float(slope.data.reshape(()))
    neg_mask = a.data < 0
    out = Tensor(np.where(neg_mask, s * a.data, a.data))
    ad = a.data
    sshape = slope.data.shape

    def vjp(g):
        ga = g * np.where(neg_mask, s, 1.0)
        gs = np.sum(g * np.where(neg_mask, ad, 0.0)).reshape(sshape)
        return ga, gs

    _record(out, (a, slope), vjp)
    return out


def softmax(a: ArrayLike) -> Tensor:
    """Softmax over a 1-D sequence (numerically stabilized)."""
    a = as_tensor(a)
    if a.ndim != 1:
        raise ValueError(f"softmax: expected a vector, got shape {a.shape}")
    shifted = a.data - a.data.max()
    e = np.exp(shifted)
    s = e / e.sum()
    out = Tensor(s)

    def vjp(g):
        return (s * (g - float(g @ s)),)

    _record(out, (a,), vjp)
    return out


def _lse(data: np.ndarray, axis: Optional[int], keepdims: bool) -> np.ndarray:
    m = np.max(data, axis=axis, keepdims=True)
    res = m + np.log(np.sum(np.exp(data - m), axis=axis, keepdims=True))
    if not keepdims and axis is not None:
        res = np.squeeze(res, axis=axis)
    elif not keepdims:
        res = res.reshape(())
    return res


def logsumexp(a: ArrayLike, axis: Optional[int] = None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    out = Tensor(_lse(a.data, axis, keepdims))
    ad = a.data

    def vjp(g):
        lse_k = _lse(ad, axis, True)
        soft = np.exp(ad - lse_k)
        gk = g if keepdims or axis is None else np.expand_dims(g, axis)
        return (gk * soft,)

    _record(out, (a,), vjp)
    return out


def tensor_sum(a: ArrayLike, axis: Optional[int] = None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    out = Tensor(np.sum(a.data, axis=axis, keepdims=keepdims))
    shape = a.data.shape

    def vjp(g):
        gk = g if keepdims or axis is None else np.expand_dims(g, axis)
        return (np.broadcast_to(gk, shape).copy(),)

    _record(out, (a,), vjp)
    return out


def tensor_mean(a: ArrayLike, axis: Optional[int] = None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    out = Tensor(np.mean(a.data, axis=axis, keepdims=keepdims))
    shape = a.data.shape
    count = a.data.size if axis is None else shape[axis]

    def vjp(g):
        gk = g if keepdims or axis is None else np.expand_dims(g, axis)
        return (np.broadcast_to(gk, shape) / count,)

    _record(out, (a,), vjp)
    return out


def concat(parts: Sequence[ArrayLike], axis: int = 0) -> Tensor:
    ts = [as_tensor(p) for p in parts]
    try:
        data = np.concatenate([t.data for t in ts], axis=axis)
    except ValueError:
        raise ValueError(
            f"concat: incompatible shapes {[t.shape for t in ts]} along axis {axis}"
        ) from None
    out = Tensor(data)
    sizes = [t.data.shape[axis] for t in ts]
    offsets = np.cumsum(sizes)[:-1]

    def vjp(g):
        return tuple(np.split(g, offsets, axis=axis))

    _record(out, tuple(ts), vjp)
    return out


def gather_rows(a: ArrayLike, indices) -> Tensor:
    """Select rows of a matrix; the backward pass scatter-adds."""
    a = as_tensor(a)
    if a.ndim != 2:
        raise ValueError(f"gather_rows: expected a matrix, got shape {a.shape}")
    idx = np.asarray(indices, dtype=np.intp)
    out = Tensor(a.data[idx])
    shape = a.data.shape

    def vjp(g):
        z = np.zeros(shape)
        np.add.at(z, idx, g)
        return (z,)

    _record(out, (a,), vjp)
    return out


def clip(a: ArrayLike, lo: Optional[float] = None, hi: Optional[float] = None) -> Tensor:
    """Clamp values; gradient passes wherever lo <= x <= hi held before clamping."""
    a = as_tensor(a)
    out = Tensor(np.clip(a.data, lo, hi))
    mask = np.ones_like(a.data)
    if lo is not None:
        mask = mask * (a.data >= lo)
    if hi is not None:
        mask = mask * (a.data <= hi)
    _record(out, (a,), lambda g: (g * mask,))
    return out


def l2_norm(a: ArrayLike) -> Tensor:
    """Euclidean norm of all entries, as a composite of primitives."""
    a = as_tensor(a)
    return sqrt(tensor_sum(mul(a, a)))


def row_norms_safe(a: ArrayLike) -> Tensor:
    """Per-row Euclidean norms of a matrix, with zero rows mapped to norm 1.

    The guard is added inside the sqrt so the backward pass stays finite at
    all-zero rows (their similarity contributions are zero anyway).
    """
    a = as_tensor(a)
    sq = tensor_sum(mul(a, a), axis=1, keepdims=True)
    guard = (sq.data == 0.0).astype(np.float64)
    if guard.any():
        sq = add(sq, Tensor(guard))
    return sqrt(sq)


def cosine_matrix(a: ArrayLike, b: ArrayLike) -> Tensor:
    """Pairwise cosine similarities between rows of two matrices.

    Zero-norm rows yield zero similarity, including on the diagonal.
    """
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise ValueError(f"cosine_matrix: incompatible shapes {a.shape} and {b.shape}")
    an = div(a, row_norms_safe(a))
    bn = div(b, row_norms_safe(b))
    return matmul(an, transpose(bn))


class Adam:
    """Adam with bias correction over a fixed parameter list.

    Parameters without a gradient are left untouched (they may sit outside
    the current loss graph); all gradients are cleared after the step.
    """

    def __init__(
        self,
        params: Sequence[Tensor],
        lr: float = 1e-4,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]
        self.t = 0

    def step(self) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for p, m, v in zip(self.params, self.m, self.v):
            g = p.grad
            if g is None:
                continue
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            mhat = m / bc1
            vhat = v / bc2
            p.data = p.data - self.lr * mhat / (np.sqrt(vhat) + self.eps)
            p.grad = None


def glorot_uniform(shape: tuple[int, ...], rng: np.random.Generator) -> np.ndarray:
    """Glorot/Xavier uniform init for a 2-D weight."""
    fan_in, fan_out = shape[0], shape[-1]
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)
