"""Shared neural building blocks: init, embeddings, attention, FFN, Adam, checkpoints."""

from __future__ import annotations

import json
import logging
import math
from pathlib import Path

import numpy as np

from . import autodiff as ad
from .autodiff import Parameter, Tensor

logger = logging.getLogger(__name__)

CHECKPOINT_SCHEMA = "1.0.0"


def uniform_init(rng: np.random.Generator, shape: tuple[int, ...], name: str) -> Parameter:
    """Weight matrices: uniform(-1/sqrt(fan_in), 1/sqrt(fan_in))."""
    bound = 1.0 / math.sqrt(shape[0])
    return Parameter(rng.uniform(-bound, bound, size=shape), name)


def zeros_init(shape: tuple[int, ...], name: str) -> Parameter:
    return Parameter(np.zeros(shape), name)


def ones_init(shape: tuple[int, ...], name: str) -> Parameter:
    return Parameter(np.ones(shape), name)


def embedding_init(rng: np.random.Generator, shape: tuple[int, ...], name: str) -> Parameter:
    """Embedding and position tables: normal(0, 0.02)."""
    return Parameter(rng.normal(0.0, 0.02, size=shape), name)


def embed_with_positions(ids, token_table: Parameter, position_table: Parameter) -> Tensor:
    """Token-table rows plus learned absolute positions; over-length input truncates."""
    max_len = position_table.shape[0]
    if len(ids) > max_len:
        logger.warning("sequence of %d ids truncated to max length %d", len(ids), max_len)
        ids = ids[:max_len]
    tok = ad.gather_rows(token_table, ids)
    pos = ad.slice_rows(position_table, 0, len(ids))
    return tok + pos


def ffn_forward(x, w1, b1, w2, b2) -> Tensor:
    """max(0, x W1 + b1) W2 + b2."""
    return ad.matmul(ad.relu(ad.matmul(x, w1) + b1), w2) + b2


class LayerNorm:
    def __init__(self, dim: int, name: str):
        self.gain = ones_init((dim,), f"{name}.gain")
        self.bias = zeros_init((dim,), f"{name}.bias")

    def __call__(self, x) -> Tensor:
        return ad.layer_norm(x, self.gain, self.bias)

    def parameters(self) -> list[Parameter]:
        return [self.gain, self.bias]


class MultiHeadAttention:
    """Scaled dot-product attention with h heads and an output projection.

    Self-attention passes the same tensor for queries and keys/values;
    cross-attention passes different sources.  ``key_mask`` marks valid keys;
    masked keys receive exactly zero weight.
    """

    def __init__(self, dim: int, heads: int, rng: np.random.Generator, name: str):
        if dim % heads != 0:
            raise ValueError(f"model dim {dim} not divisible by {heads} heads")
        self.dim = dim
        self.heads = heads
        self.head_dim = dim // heads
        self.wq = uniform_init(rng, (dim, dim), f"{name}.wq")
        self.wk = uniform_init(rng, (dim, dim), f"{name}.wk")
        self.wv = uniform_init(rng, (dim, dim), f"{name}.wv")
        self.wo = uniform_init(rng, (dim, dim), f"{name}.wo")

    def __call__(self, queries_in, keys_values_in, key_mask: np.ndarray | None = None) -> Tensor:
        q = ad.matmul(queries_in, self.wq)
        k = ad.matmul(keys_values_in, self.wk)
        v = ad.matmul(keys_values_in, self.wv)
        scale = 1.0 / math.sqrt(self.head_dim)
        outs = []
        for h in range(self.heads):
            lo, hi = h * self.head_dim, (h + 1) * self.head_dim
            qh = ad.slice_cols(q, lo, hi)
            kh = ad.slice_cols(k, lo, hi)
            vh = ad.slice_cols(v, lo, hi)
            scores = ad.mul(ad.matmul(qh, ad.transpose(kh)), scale)
            weights = ad.softmax(scores, mask=key_mask)
            outs.append(ad.matmul(weights, vh))
        return ad.matmul(ad.concat(outs, axis=1), self.wo)

    def attention_weights(self, queries_in, keys_values_in, key_mask=None) -> list[np.ndarray]:
        """Per-head weight matrices, for inspection and invariants."""
        q = ad.matmul(queries_in, self.wq)
        k = ad.matmul(keys_values_in, self.wk)
        scale = 1.0 / math.sqrt(self.head_dim)
        mats = []
        for h in range(self.heads):
            lo, hi = h * self.head_dim, (h + 1) * self.head_dim
            scores = ad.mul(
                ad.matmul(ad.slice_cols(q, lo, hi), ad.transpose(ad.slice_cols(k, lo, hi))),
                scale,
            )
            mats.append(ad.softmax(scores, mask=key_mask).data)
        return mats

    def parameters(self) -> list[Parameter]:
        return [self.wq, self.wk, self.wv, self.wo]


class FeedForward:
    def __init__(self, dim: int, hidden: int, rng: np.random.Generator, name: str):
        self.w1 = uniform_init(rng, (dim, hidden), f"{name}.w1")
        self.b1 = zeros_init((hidden,), f"{name}.b1")
        self.w2 = uniform_init(rng, (hidden, dim), f"{name}.w2")
        self.b2 = zeros_init((dim,), f"{name}.b2")

    def __call__(self, x) -> Tensor:
        return ffn_forward(x, self.w1, self.b1, self.w2, self.b2)

    def parameters(self) -> list[Parameter]:
        return [self.w1, self.b1, self.w2, self.b2]


class EncoderBlock:
    """Post-norm transformer block: LN(x + MHA(x)), then LN(x + FFN(x))."""

    def __init__(self, dim: int, heads: int, ff_hidden: int, rng: np.random.Generator, name: str):
        self.attention = MultiHeadAttention(dim, heads, rng, f"{name}.mha")
        self.ffn = FeedForward(dim, ff_hidden, rng, f"{name}.ffn")
        self.norm1 = LayerNorm(dim, f"{name}.norm1")
        self.norm2 = LayerNorm(dim, f"{name}.norm2")

    def __call__(
        self,
        x,
        key_mask: np.ndarray | None = None,
        dropout_rate: float = 0.0,
        rng: np.random.Generator | None = None,
        training: bool = False,
    ) -> Tensor:
        attended = self.attention(x, x, key_mask)
        if training and dropout_rate > 0:
            attended = ad.dropout(attended, dropout_rate, rng, training)
        h = self.norm1(x + attended)
        ff = self.ffn(h)
        if training and dropout_rate > 0:
            ff = ad.dropout(ff, dropout_rate, rng, training)
        return self.norm2(h + ff)

    def parameters(self) -> list[Parameter]:
        return (
            self.attention.parameters()
            + self.ffn.parameters()
            + self.norm1.parameters()
            + self.norm2.parameters()
        )


class Adam:
    """Bias-corrected Adam; zeroes gradients after each step."""

    def __init__(self, params: list[Parameter], lr: float = 1e-4,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.first_moment = [np.zeros_like(p.data) for p in self.params]
        self.second_moment = [np.zeros_like(p.data) for p in self.params]

    def step(self) -> None:
        self.step_count += 1
        t = self.step_count
        for i, p in enumerate(self.params):
            g = p.grad
            if not np.all(np.isfinite(g)):
                raise ad.NonFiniteError(f"non-finite gradient in parameter {p.name!r}")
            m = self.first_moment[i]
            v = self.second_moment[i]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            m_hat = m / (1.0 - self.beta1**t)
            v_hat = v / (1.0 - self.beta2**t)
            p.data -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
            p.zero_grad()


def _blob_name(index: int, name: str) -> str:
    safe = "".join(c if c.isalnum() or c in "._-" else "_" for c in name)
    return f"{index:04d}_{safe}.bin"


def save_checkpoint(params: list[Parameter], config: dict, out_dir: str | Path) -> None:
    """One JSON manifest plus a little-endian float64 blob per parameter."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {"schema": CHECKPOINT_SCHEMA, "config": config, "params": []}
    for i, p in enumerate(params):
        blob = _blob_name(i, p.name)
        (out / blob).write_bytes(p.data.astype("<f8").tobytes())
        manifest["params"].append({"name": p.name, "shape": list(p.shape), "file": blob})
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")


def load_checkpoint(params: list[Parameter], in_dir: str | Path) -> dict:
    """Restore parameter values in place; returns the stored config.

    Parameters are matched by order and name; any shape mismatch is an error.
    """
    src = Path(in_dir)
    manifest = json.loads((src / "manifest.json").read_text(encoding="utf-8"))
    entries = manifest["params"]
    if len(entries) != len(params):
        raise ValueError(f"checkpoint has {len(entries)} parameters, model has {len(params)}")
    for p, entry in zip(params, entries):
        shape = tuple(entry["shape"])
        if shape != p.shape:
            raise ValueError(
                f"shape mismatch for {entry['name']!r}: checkpoint {shape}, model {p.shape}"
            )
        raw = np.frombuffer((src / entry["file"]).read_bytes(), dtype="<f8")
        p.data = raw.reshape(shape).astype(ad.DEFAULT_DTYPE).copy()
    return manifest.get("config", {})
