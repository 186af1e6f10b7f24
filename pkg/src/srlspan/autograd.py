"""Minimal dense tensors with tape-based reverse-mode differentiation.

The primitive set is exactly what the SRL model needs: matmul, elementwise
add/mul with row/column broadcasting, concat, slicing/gathers, the usual
pointwise nonlinearities, 1-D convolution, max-over-time pooling, embedding
lookup, mask multiplication (dropout), reductions, and row-wise (log)softmax.
No general broadcasting, no GPU, no fusion.

Tape policy: a Tape collects every primitive application executed while it is
the active tape (entered as a context manager). ``backward`` consumes the tape
and clears it; a cleared tape cannot be replayed.
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np

# Flipped on in tests / debug runs: every primitive asserts finite outputs.
DEBUG_CHECK_FINITE = False


class NumericDomainError(ValueError):
    """Raised when an operation receives values outside its numeric domain."""


_TAPE_STACK: list["Tape"] = []


class Tape:
    """Ordered record of primitive applications for one backward pass."""

    def __init__(self):
        self.entries: list[tuple[Tensor, tuple[Tensor, ...], Callable]] = []
        self._closed = False

    def __enter__(self):
        _TAPE_STACK.append(self)
        return self

    def __exit__(self, *exc):
        assert _TAPE_STACK and _TAPE_STACK[-1] is self
        _TAPE_STACK.pop()
        return False

    def record(self, out, inputs, bwd):
        if self._closed:
            raise ValueError("tape already consumed by backward()")
        self.entries.append((out, inputs, bwd))

    def clear(self):
        self.entries.clear()
        self._closed = True


def _active_tape():
    return _TAPE_STACK[-1] if _TAPE_STACK else None


class Tensor:
    __slots__ = ("data", "requires_grad", "grad")

    def __init__(self, data, requires_grad=False, dtype=None):
        arr = np.asarray(data, dtype=dtype)
        if dtype is None and arr.dtype not in (np.float32, np.float64):
            arr = arr.astype(np.float32)
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.grad = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def item(self):
        return float(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return add(self, scale(_as_tensor(other, self.dtype), -1.0))

    def __rsub__(self, other):
        return add(_as_tensor(other, self.dtype), scale(self, -1.0))

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(self, other)

    def __neg__(self):
        return scale(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)


def _as_tensor(x, dtype):
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x, dtype=dtype))


def const(data, dtype=None):
    return Tensor(np.asarray(data, dtype=dtype), requires_grad=False)


def _finite_check(arr):
    if DEBUG_CHECK_FINITE and not np.all(np.isfinite(arr)):
        raise NumericDomainError("non-finite value produced in forward pass")


def _make(out_data, inputs, bwd):
    _finite_check(out_data)
    out = Tensor(out_data)
    tape = _active_tape()
    if tape is not None:
        tape.record(out, tuple(inputs), bwd)
    return out


# ---------------------------------------------------------------------------
# primitives


def add(a: Tensor, b) -> Tensor:
    b = _as_tensor(b, a.dtype)
    out_data = a.data + b.data

    def bwd(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _make(out_data, (a, b), bwd)


def _unbroadcast(g, shape):
    """Sum gradient g down to `shape` (supports the row/column/scalar cases)."""
    if g.shape == shape:
        return g
    if shape == () or shape == (1,):
        return np.asarray(g.sum(), dtype=g.dtype).reshape(shape)
    if len(shape) == 1 and g.ndim == 2 and shape[0] == g.shape[1]:
        return g.sum(axis=0)
    if len(shape) == 2 and g.ndim == 2 and shape == (g.shape[0], 1):
        return g.sum(axis=1, keepdims=True)
    if len(shape) == 2 and g.ndim == 2 and shape == (1, g.shape[1]):
        return g.sum(axis=0, keepdims=True)
    raise ValueError(f"cannot reduce gradient of shape {g.shape} to {shape}")


def mul(a: Tensor, b) -> Tensor:
    if isinstance(b, (int, float)):
        return scale(a, float(b))
    b = _as_tensor(b, a.dtype)
    out_data = a.data * b.data
    a_data, b_data = a.data, b.data

    def bwd(g):
        return _unbroadcast(g * b_data, a.shape), _unbroadcast(g * a_data, b.shape)

    return _make(out_data, (a, b), bwd)


def scale(a: Tensor, c: float) -> Tensor:
    def bwd(g):
        return (g * c,)

    return _make(a.data * c, (a,), bwd)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    out_data = a.data @ b.data
    a_data, b_data = a.data, b.data

    def bwd(g):
        if a_data.ndim == 1 and b_data.ndim == 2:
            ga = g @ b_data.T
            gb = np.outer(a_data, g)
        elif a_data.ndim == 2 and b_data.ndim == 1:
            ga = np.outer(g, b_data)
            gb = a_data.T @ g
        elif a_data.ndim == 1 and b_data.ndim == 1:
            ga = g * b_data
            gb = g * a_data
        else:
            ga = g @ b_data.T
            gb = a_data.T @ g
        return ga, gb

    return _make(out_data, (a, b), bwd)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = list(tensors)
    out_data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]

    def bwd(g):
        grads = []
        off = 0
        for s in sizes:
            sl = [slice(None)] * g.ndim
            sl[axis] = slice(off, off + s)
            grads.append(g[tuple(sl)])
            off += s
        return tuple(grads)

    return _make(out_data, tensors, bwd)


def stack_rows(tensors: Sequence[Tensor]) -> Tensor:
    """Stack 1-D tensors into a matrix, one per row."""
    return concat([reshape(t, (1, t.data.shape[0])) for t in tensors], axis=0)


def narrow(a: Tensor, axis: int, start: int, stop: int) -> Tensor:
    sl = [slice(None)] * a.data.ndim
    sl[axis] = slice(start, stop)
    sl = tuple(sl)
    shape = a.data.shape

    def bwd(g):
        ga = np.zeros(shape, dtype=g.dtype)
        ga[sl] = g
        return (ga,)

    return _make(a.data[sl], (a,), bwd)


def reshape(a: Tensor, shape) -> Tensor:
    old = a.data.shape

    def bwd(g):
        return (g.reshape(old),)

    return _make(a.data.reshape(shape), (a,), bwd)


def gather_rows(a: Tensor, indices) -> Tensor:
    """Select rows (2-D) or elements (1-D) by index; duplicates allowed."""
    idx = np.asarray(indices, dtype=np.intp)
    shape = a.data.shape

    def bwd(g):
        ga = np.zeros(shape, dtype=g.dtype)
        np.add.at(ga, idx, g)
        return (ga,)

    return _make(a.data[idx], (a,), bwd)


def embedding_lookup(table: Tensor, ids) -> Tensor:
    return gather_rows(table, ids)


def gather_elements(a: Tensor, col_indices) -> Tensor:
    """Pick a[i, col[i]] from a 2-D tensor; returns a vector."""
    cols = np.asarray(col_indices, dtype=np.intp)
    rows = np.arange(a.data.shape[0])
    shape = a.data.shape

    def bwd(g):
        ga = np.zeros(shape, dtype=g.dtype)
        np.add.at(ga, (rows, cols), g)
        return (ga,)

    return _make(a.data[rows, cols], (a,), bwd)


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0

    def bwd(g):
        return (g * mask,)

    return _make(np.where(mask, a.data, 0.0), (a,), bwd)


def sigmoid(a: Tensor) -> Tensor:
    out_data = np.where(
        a.data >= 0,
        1.0 / (1.0 + np.exp(-np.abs(a.data))),
        np.exp(-np.abs(a.data)) / (1.0 + np.exp(-np.abs(a.data))),
    ).astype(a.dtype)

    def bwd(g):
        return (g * out_data * (1.0 - out_data),)

    return _make(out_data, (a,), bwd)


def tanh(a: Tensor) -> Tensor:
    out_data = np.tanh(a.data)

    def bwd(g):
        return (g * (1.0 - out_data * out_data),)

    return _make(out_data, (a,), bwd)


def exp(a: Tensor) -> Tensor:
    out_data = np.exp(a.data)

    def bwd(g):
        return (g * out_data,)

    return _make(out_data, (a,), bwd)


def log(a: Tensor) -> Tensor:
    if np.any(a.data <= 0):
        raise NumericDomainError("log requires strictly positive input")
    a_data = a.data

    def bwd(g):
        return (g / a_data,)

    return _make(np.log(a.data), (a,), bwd)


def apply_mask(a: Tensor, mask: np.ndarray) -> Tensor:
    """Multiply by a fixed mask (inverted-dropout masks are built by callers)."""
    mask = np.asarray(mask, dtype=a.dtype)

    def bwd(g):
        return (g * mask,)

    return _make(a.data * mask, (a,), bwd)


def conv1d(x: Tensor, w: Tensor, b: Tensor, window: int) -> Tensor:
    """Valid 1-D convolution over axis 0.

    x: (T, C) inputs, w: (window*C, F) flattened filters, b: (F,).
    Output: (T-window+1, F). Requires T >= window.
    """
    T, C = x.data.shape
    if T < window:
        raise ValueError(f"sequence length {T} shorter than window {window}")
    n_out = T - window + 1
    cols = np.empty((n_out, window * C), dtype=x.dtype)
    for j in range(window):
        cols[:, j * C:(j + 1) * C] = x.data[j:j + n_out]
    out_data = cols @ w.data + b.data

    w_data = w.data

    def bwd(g):
        gw = cols.T @ g
        gb = g.sum(axis=0)
        gcols = g @ w_data.T
        gx = np.zeros((T, C), dtype=g.dtype)
        for j in range(window):
            gx[j:j + n_out] += gcols[:, j * C:(j + 1) * C]
        return gx, gw, gb

    return _make(out_data, (x, w, b), bwd)


def max_over_time(x: Tensor) -> Tensor:
    """Column-wise max of a (T, F) tensor; gradient goes to the first argmax."""
    arg = np.argmax(x.data, axis=0)
    out_data = x.data[arg, np.arange(x.data.shape[1])]
    shape = x.data.shape

    def bwd(g):
        gx = np.zeros(shape, dtype=g.dtype)
        gx[arg, np.arange(shape[1])] = g
        return (gx,)

    return _make(out_data, (x,), bwd)


def reduce_sum(a: Tensor) -> Tensor:
    shape = a.data.shape

    def bwd(g):
        return (np.full(shape, g, dtype=a.dtype),)

    return _make(np.asarray(a.data.sum(), dtype=a.dtype), (a,), bwd)


def reduce_mean(a: Tensor) -> Tensor:
    n = a.data.size
    shape = a.data.shape

    def bwd(g):
        return (np.full(shape, g / n, dtype=a.dtype),)

    return _make(np.asarray(a.data.mean(), dtype=a.dtype), (a,), bwd)


def softmax(a: Tensor) -> Tensor:
    """Stable softmax of a 1-D tensor."""
    if a.data.ndim != 1 or a.data.size < 1:
        raise ValueError("softmax expects a nonempty vector")
    if not np.all(np.isfinite(a.data)):
        raise NumericDomainError("softmax input must be finite")
    shifted = a.data - a.data.max()
    e = np.exp(shifted)
    out_data = e / e.sum()

    def bwd(g):
        dot = float(g @ out_data)
        return (out_data * (g - dot),)

    return _make(out_data, (a,), bwd)


def softmax_rows(a: Tensor) -> Tensor:
    if not np.all(np.isfinite(a.data)):
        raise NumericDomainError("softmax input must be finite")
    shifted = a.data - a.data.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    out_data = e / e.sum(axis=1, keepdims=True)

    def bwd(g):
        dot = (g * out_data).sum(axis=1, keepdims=True)
        return (out_data * (g - dot),)

    return _make(out_data, (a,), bwd)


def log_softmax_rows(a: Tensor) -> Tensor:
    if not np.all(np.isfinite(a.data)):
        raise NumericDomainError("log_softmax input must be finite")
    shifted = a.data - a.data.max(axis=1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    out_data = shifted - lse
    sm = np.exp(out_data)

    def bwd(g):
        return (g - sm * g.sum(axis=1, keepdims=True),)

    return _make(out_data, (a,), bwd)


# ---------------------------------------------------------------------------
# backward pass and gradient checking


def backward(loss: Tensor, tape: Tape, leaves: Iterable[Tensor] = ()):
    """Populate .grad on every requires_grad tensor reached from `loss`.

    Leaves passed explicitly get a zero grad even if they did not contribute.
    The tape is cleared afterwards and cannot be reused.
    """
    if loss.data.size != 1:
        raise ValueError("backward requires a scalar loss")
    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    produced = {id(out) for out, _, _ in tape.entries}
    for out, inputs, bwd in reversed(tape.entries):
        g = grads.pop(id(out), None)
        if g is None:
            continue
        in_grads = bwd(g)
        for t, gi in zip(inputs, in_grads):
            if gi is None:
                continue
            if t.requires_grad or id(t) in produced:
                acc = grads.get(id(t))
                if acc is None:
                    grads[id(t)] = np.array(gi, copy=True)
                else:
                    acc += gi
        if out.requires_grad:
            out.grad = grads.get(id(out), np.zeros_like(out.data))
        # keep leaf grads reachable through `inputs` below
        for t in inputs:
            if t.requires_grad and id(t) in grads:
                t.grad = grads[id(t)]
    for t in leaves:
        if t.requires_grad and t.grad is None:
            t.grad = np.zeros_like(t.data)
    tape.clear()


def finite_diff_check(f: Callable[[Tensor], Tensor], x: Tensor, eps: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients.

    `f` must be deterministic and is evaluated in 64-bit; relative error is
    |analytic - numeric| / max(1, |analytic|), maximized over coordinates.
    """
    if not (1e-6 <= eps <= 1e-3):
        raise ValueError("eps must lie in [1e-6, 1e-3]")
    if x.data.dtype != np.float64:
        raise ValueError("finite_diff_check requires a float64 input tensor")

    y1 = f(x).item()
    y2 = f(x).item()
    if y1 != y2:
        raise ValueError("f is not deterministic; freeze dropout masks first")

    x.grad = None
    tape = Tape()
    with tape:
        loss = f(x)
    backward(loss, tape, leaves=[x])
    analytic = x.grad.reshape(-1)

    flat = x.data.reshape(-1)
    worst = 0.0
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        fp = f(x).item()
        flat[i] = orig - eps
        fm = f(x).item()
        flat[i] = orig
        numeric = (fp - fm) / (2.0 * eps)
        err = abs(analytic[i] - numeric) / max(1.0, abs(analytic[i]))
        worst = max(worst, err)
    return worst
