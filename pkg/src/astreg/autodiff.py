"""Minimal dense-tensor reverse-mode automatic differentiation.

Tensors wrap numpy arrays (float64 by default) and record the operations
applied to them; ``backward()`` on a scalar accumulates gradients into every
reachable tensor with ``requires_grad``.  The op set is exactly what the
models here need: matmul, broadcast add/mul, pointwise nonlinearities,
(masked) softmax, reductions, slicing/gather, concat and the two
normalization primitives.  No op mutates its inputs.
"""

from __future__ import annotations

import numpy as np

DEFAULT_DTYPE = np.float64

# When enabled, every op asserts its output is finite.  Arrays here are tiny,
# so the check is cheap relative to the op itself.
FINITE_GUARD = True

# Optional kink-margin tracking: relu/leaky_relu/max record how far their
# inputs sit from the nondifferentiable point.  Central finite differences
# are only valid at locally smooth points, so grad-check drivers use this to
# pick probe inputs that keep every kink out of perturbation reach.
_kink_margins: list[float] | None = None


class track_kink_margins:
    def __enter__(self):
        global _kink_margins
        _kink_margins = []
        return _kink_margins

    def __exit__(self, *exc):
        global _kink_margins
        _kink_margins = None
        return False


def _note_margin(value: float) -> None:
    if _kink_margins is not None:
        _kink_margins.append(float(value))


class NonFiniteError(FloatingPointError):
    pass


def _guard(data: np.ndarray, op: str) -> None:
    if FINITE_GUARD and not np.all(np.isfinite(data)):
        raise NonFiniteError(f"non-finite values produced by op {op!r}")


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to the original operand shape."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "_op")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        self.data = np.asarray(data, dtype=dtype or DEFAULT_DTYPE)
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self._parents: tuple[Tensor, ...] = ()
        self._backward = None
        self._op = "leaf"

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def item(self) -> float:
        return float(self.data)

    def _accumulate(self, grad: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += grad

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.data)

    def backward(self) -> None:
        if self.data.size != 1:
            raise ValueError(f"backward() requires a scalar, got shape {self.shape}")
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in seen:
                    stack.append((parent, False))
        self._accumulate(np.ones_like(self.data))
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # -- arithmetic -------------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __sub__(self, other):
        return add(self, mul(other, -1.0))

    def __rsub__(self, other):
        return add(other, mul(self, -1.0))

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, op={self._op!r}, requires_grad={self.requires_grad})"


class Parameter(Tensor):
    """A trainable tensor; gradient storage is always allocated."""

    __slots__ = ("name",)

    def __init__(self, data, name: str = "param"):
        super().__init__(data, requires_grad=True)
        self.name = name
        self.grad = np.zeros_like(self.data)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(data: np.ndarray, parents: tuple[Tensor, ...], op: str) -> Tensor:
    _guard(data, op)
    out = Tensor(data, requires_grad=any(p.requires_grad for p in parents))
    if out.requires_grad:
        out._parents = tuple(p for p in parents if p.requires_grad)
        out._op = op
    return out


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = _make(a.data + b.data, (a, b), "add")

    def backward(grad):
        if a.requires_grad:
            a._accumulate(_unbroadcast(grad, a.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(grad, b.shape))

    out._backward = backward
    return out


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = _make(a.data * b.data, (a, b), "mul")

    def backward(grad):
        if a.requires_grad:
            a._accumulate(_unbroadcast(grad * b.data, a.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(grad * a.data, b.shape))

    out._backward = backward
    return out


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.data.ndim > 2 or b.data.ndim > 2 or (a.data.ndim == 1 and b.data.ndim == 1):
        raise ValueError(f"matmul supports matrix/vector operands, got {a.shape} @ {b.shape}")
    try:
        data = a.data @ b.data
    except ValueError as exc:
        raise ValueError(f"matmul shape mismatch: {a.shape} @ {b.shape}") from exc
    out = _make(data, (a, b), "matmul")

    def backward(grad):
        ad, bd = a.data, b.data
        if a.requires_grad:
            if ad.ndim == 2 and bd.ndim == 2:
                ga = grad @ bd.T
            elif ad.ndim == 1 and bd.ndim == 2:
                ga = grad @ bd.T
            else:  # (m,k) @ (k,) -> (m,)
                ga = np.outer(grad, bd)
            a._accumulate(ga.reshape(a.shape))
        if b.requires_grad:
            if ad.ndim == 2 and bd.ndim == 2:
                gb = ad.T @ grad
            elif ad.ndim == 1 and bd.ndim == 2:
                gb = np.outer(ad, grad)
            else:
                gb = ad.T @ grad
            b._accumulate(gb.reshape(b.shape))

    out._backward = backward
    return out


def tanh(a) -> Tensor:
    a = as_tensor(a)
    y = np.tanh(a.data)
    out = _make(y, (a,), "tanh")

    def backward(grad):
        a._accumulate(grad * (1.0 - y * y))

    out._backward = backward
    return out


def relu(a) -> Tensor:
    a = as_tensor(a)
    _note_margin(np.abs(a.data).min() if a.data.size else np.inf)
    out = _make(np.maximum(a.data, 0.0), (a,), "relu")

    def backward(grad):
        a._accumulate(grad * (a.data > 0))

    out._backward = backward
    return out


def leaky_relu(a, slope: float = 0.2) -> Tensor:
    a = as_tensor(a)
    _note_margin(np.abs(a.data).min() if a.data.size else np.inf)
    out = _make(np.where(a.data > 0, a.data, slope * a.data), (a,), "leaky_relu")

    def backward(grad):
        a._accumulate(grad * np.where(a.data > 0, 1.0, slope))

    out._backward = backward
    return out


def square(a) -> Tensor:
    a = as_tensor(a)
    out = _make(a.data * a.data, (a,), "square")

    def backward(grad):
        a._accumulate(grad * 2.0 * a.data)

    out._backward = backward
    return out


def tsum(a, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    out = _make(a.data.sum(axis=axis, keepdims=keepdims), (a,), "sum")

    def backward(grad):
        g = grad
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        a._accumulate(np.broadcast_to(g, a.shape).copy())

    out._backward = backward
    return out


def tmean(a, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    count = a.data.size if axis is None else a.data.shape[axis]
    return mul(tsum(a, axis=axis, keepdims=keepdims), 1.0 / count)


def tmax(a, axis: int = 0) -> Tensor:
    """Max along an axis; gradient routes to the first argmax."""
    a = as_tensor(a)
    idx = np.argmax(a.data, axis=axis)
    if _kink_margins is not None and a.data.shape[axis] > 1:
        # Exact ties are duplicates that co-move under any perturbation, so
        # only the gap to the largest strictly-smaller value matters.
        top = a.data.max(axis=axis, keepdims=True)
        below = np.where(a.data == top, -np.inf, a.data).max(axis=axis, keepdims=True)
        gaps = (top - below)[np.isfinite(below)]
        if gaps.size:
            _note_margin(gaps.min())
    out = _make(a.data.max(axis=axis), (a,), "max")

    def backward(grad):
        g = np.zeros_like(a.data)
        if a.data.ndim == 1:
            g[idx] = grad
        elif axis == 0:
            g[idx, np.arange(a.data.shape[1])] = grad
        else:
            g[np.arange(a.data.shape[0]), idx] = grad
        a._accumulate(g)

    out._backward = backward
    return out


def softmax(a, mask: np.ndarray | None = None) -> Tensor:
    """Softmax over the last axis; masked entries get exactly zero weight.

    ``mask`` is boolean, broadcastable to ``a``, True where keys participate.
    A row with no unmasked entry raises ("empty attention support").
    """
    a = as_tensor(a)
    if mask is None:
        m = np.ones(a.shape, dtype=bool)
    else:
        m = np.broadcast_to(np.asarray(mask, dtype=bool), a.shape)
    if not m.any(axis=-1).all():
        raise ValueError("empty attention support: a softmax row is fully masked")
    shifted = np.where(m, a.data, -np.inf)
    peak = shifted.max(axis=-1, keepdims=True)
    e = np.where(m, np.exp(np.where(m, a.data - peak, 0.0)), 0.0)
    y = e / e.sum(axis=-1, keepdims=True)
    out = _make(y, (a,), "softmax")

    def backward(grad):
        inner = (grad * y).sum(axis=-1, keepdims=True)
        a._accumulate((grad - inner) * y)

    out._backward = backward
    return out


def concat(tensors, axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    out = _make(np.concatenate([t.data for t in tensors], axis=axis), tuple(tensors), "concat")
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def backward(grad):
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            if t.requires_grad:
                sl = [slice(None)] * grad.ndim
                sl[axis] = slice(lo, hi)
                t._accumulate(grad[tuple(sl)])

    out._backward = backward
    return out


def stack_rows(tensors) -> Tensor:
    """Stack equal-shape 1-D tensors into a matrix."""
    tensors = [as_tensor(t) for t in tensors]
    out = _make(np.stack([t.data for t in tensors]), tuple(tensors), "stack_rows")

    def backward(grad):
        for i, t in enumerate(tensors):
            if t.requires_grad:
                t._accumulate(grad[i])

    out._backward = backward
    return out


def transpose(a) -> Tensor:
    a = as_tensor(a)
    out = _make(a.data.T, (a,), "transpose")

    def backward(grad):
        a._accumulate(grad.T)

    out._backward = backward
    return out


def reshape(a, shape) -> Tensor:
    a = as_tensor(a)
    out = _make(a.data.reshape(shape), (a,), "reshape")

    def backward(grad):
        a._accumulate(grad.reshape(a.shape))

    out._backward = backward
    return out


def gather_rows(table, ids) -> Tensor:
    """Embedding lookup: rows of ``table`` selected by an integer id sequence."""
    table = as_tensor(table)
    idx = np.asarray(ids, dtype=np.intp)
    if idx.size and (idx.min() < 0 or idx.max() >= table.shape[0]):
        raise IndexError(f"gather_rows ids out of range for table of {table.shape[0]} rows")
    out = _make(table.data[idx], (table,), "gather_rows")

    def backward(grad):
        g = np.zeros_like(table.data)
        np.add.at(g, idx, grad)
        table._accumulate(g)

    out._backward = backward
    return out


def slice_rows(a, start: int, stop: int) -> Tensor:
    a = as_tensor(a)
    out = _make(a.data[start:stop], (a,), "slice_rows")

    def backward(grad):
        g = np.zeros_like(a.data)
        g[start:stop] = grad
        a._accumulate(g)

    out._backward = backward
    return out


def slice_cols(a, start: int, stop: int) -> Tensor:
    a = as_tensor(a)
    out = _make(a.data[:, start:stop], (a,), "slice_cols")

    def backward(grad):
        g = np.zeros_like(a.data)
        g[:, start:stop] = grad
        a._accumulate(g)

    out._backward = backward
    return out


def dropout(a, rate: float, rng: np.random.Generator, training: bool) -> Tensor:
    """Inverted dropout; identity when not training or rate == 0."""
    a = as_tensor(a)
    if not training or rate <= 0.0:
        return a
    keep = rng.random(a.shape) >= rate
    scale = keep / (1.0 - rate)
    return mul(a, Tensor(scale))


def layer_norm(x, gain, bias, eps: float = 1e-5) -> Tensor:
    """Per-row normalization over the last axis, then affine gain/bias."""
    x, gain, bias = as_tensor(x), as_tensor(gain), as_tensor(bias)
    mu = x.data.mean(axis=-1, keepdims=True)
    var = x.data.var(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mu) * inv_std
    out = _make(xhat * gain.data + bias.data, (x, gain, bias), "layer_norm")

    def backward(grad):
        if gain.requires_grad:
            gain._accumulate(_unbroadcast(grad * xhat, gain.shape))
        if bias.requires_grad:
            bias._accumulate(_unbroadcast(grad, bias.shape))
        if x.requires_grad:
            gx = grad * gain.data
            mean_g = gx.mean(axis=-1, keepdims=True)
            mean_gx = (gx * xhat).mean(axis=-1, keepdims=True)
            x._accumulate(inv_std * (gx - mean_g - xhat * mean_gx))

    out._backward = backward
    return out


def batch_norm(
    x,
    gain,
    bias,
    running_mean: np.ndarray,
    running_var: np.ndarray,
    training: bool,
    momentum: float = 0.1,
    eps: float = 1e-5,
) -> Tensor:
    """Per-column batch normalization over 2-D input.

    Training mode normalizes with batch statistics and folds them into the
    running buffers in place; eval mode uses the running buffers only.
    """
    x, gain, bias = as_tensor(x), as_tensor(gain), as_tensor(bias)
    if training:
        mu = x.data.mean(axis=0)
        var = x.data.var(axis=0)
        running_mean *= 1.0 - momentum
        running_mean += momentum * mu
        running_var *= 1.0 - momentum
        running_var += momentum * var
    else:
        mu, var = running_mean, running_var
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mu) * inv_std
    out = _make(xhat * gain.data + bias.data, (x, gain, bias), "batch_norm")
    n = x.data.shape[0]

    def backward(grad):
        if gain.requires_grad:
            gain._accumulate((grad * xhat).sum(axis=0))
        if bias.requires_grad:
            bias._accumulate(grad.sum(axis=0))
        if x.requires_grad:
            gx = grad * gain.data
            if training:
                mean_g = gx.mean(axis=0)
                mean_gx = (gx * xhat).mean(axis=0)
                x._accumulate(inv_std * (gx - mean_g - xhat * mean_gx))
            else:
                x._accumulate(inv_std * gx)

    out._backward = backward
    return out


def grad_check(
    f,
    params,
    eps: float = 1e-5,
    max_entries_per_param: int | None = None,
    seed: int = 0,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    ``f`` is a deterministic zero-argument callable returning a scalar Tensor.
    Every entry of every parameter is perturbed unless
    ``max_entries_per_param`` caps the (seeded, uniform) sample per parameter.
    The relative-error denominator is max(|analytic|, |numeric|, 1e-8).
    """
    if not 1e-7 <= eps <= 1e-3:
        raise ValueError(f"eps must lie in [1e-7, 1e-3], got {eps}")
    for p in params:
        p.zero_grad()
    loss = f()
    if not np.isfinite(loss.data).all():
        raise NonFiniteError("grad_check objective is non-finite")
    loss.backward()
    analytic = [p.grad.copy().reshape(-1) for p in params]
    rng = np.random.default_rng(seed)
    worst = 0.0
    for p, ana in zip(params, analytic):
        flat = p.data.reshape(-1)
        if max_entries_per_param is not None and flat.size > max_entries_per_param:
            entries = np.sort(rng.choice(flat.size, size=max_entries_per_param, replace=False))
        else:
            entries = np.arange(flat.size)
        for i in entries:
            orig = flat[i]
            flat[i] = orig + eps
            hi = f().item()
            flat[i] = orig - eps
            lo = f().item()
            flat[i] = orig
            numeric = (hi - lo) / (2.0 * eps)
            denom = max(abs(ana[i]), abs(numeric), 1e-8)
            worst = max(worst, abs(ana[i] - numeric) / denom)
    for p in params:
        p.zero_grad()
    return worst
