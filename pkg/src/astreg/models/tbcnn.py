"""Tree convolution with position-interpolated weights and max pooling.

Nodes with any child count share one parameter set: each child's effective
matrix blends a left and a right matrix by its relative position, and each
child's contribution is scaled by its share of the subtree's leaves.  A
coding layer re-encodes every node from its children's embeddings, one
convolution window per node (the node plus its direct children) follows,
and elementwise max over windows yields the fixed-size vector for the head.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import autodiff as ad
from ..autodiff import Parameter, Tensor
from ..nn import embedding_init, uniform_init, zeros_init
from ..trees import AstTree, iter_preorder
from ..vocab import build_vocab
from .base import BaseTreeRegressor


def continuous_weights(i: int, n: int) -> tuple[float, float]:
    """(eta_left, eta_right) for child i of n, both 1-indexed; a convex pair."""
    if not 1 <= i <= n:
        raise ValueError(f"child index {i} out of range 1..{n}")
    if n == 1:
        return 0.5, 0.5
    eta_right = (i - 1) / (n - 1)
    return 1.0 - eta_right, eta_right


@dataclass(frozen=True)
class TreeLayout:
    """Per-tree constants for the vectorized coding/convolution passes."""

    label_ids: np.ndarray       # (N,)
    left_coeff: np.ndarray      # (N, N): l_i * eta_left per (parent, child)
    right_coeff: np.ndarray     # (N, N): l_i * eta_right
    internal: np.ndarray        # (N, 1) 1.0 for nodes with children

    @classmethod
    def from_tree(cls, tree: AstTree, lookup) -> "TreeLayout":
        nodes = list(iter_preorder(tree.root))
        index = {id(node): i for i, node in enumerate(nodes)}
        n = len(nodes)
        leaves = {}
        for node in reversed(nodes):  # reverse pre-order visits children first
            leaves[id(node)] = (
                1 if not node.children else sum(leaves[id(c)] for c in node.children)
            )
        left = np.zeros((n, n))
        right = np.zeros((n, n))
        internal = np.zeros((n, 1))
        for node in nodes:
            if not node.children:
                continue
            p = index[id(node)]
            internal[p] = 1.0
            total_leaves = leaves[id(node)]
            if total_leaves == 0:
                raise ValueError("subtree without leaves")
            count = len(node.children)
            for pos, child in enumerate(node.children, start=1):
                c = index[id(child)]
                share = leaves[id(child)] / total_leaves
                eta_l, eta_r = continuous_weights(pos, count)
                left[p, c] = share * eta_l
                right[p, c] = share * eta_r
        return cls(
            label_ids=np.array([lookup(node.type_label) for node in nodes], dtype=np.intp),
            left_coeff=left,
            right_coeff=right,
            internal=internal,
        )


def coding_layer(embeddings, layout: TreeLayout, w_comb1, w_comb2,
                 w_code_left, w_code_right, b_code) -> Tensor:
    """Mix each node with its children's position-weighted embeddings.

    Leaves reduce to embeddings @ w_comb1 (their child sum is empty).
    """
    gathered = (
        ad.matmul(ad.matmul(Tensor(layout.left_coeff), embeddings), w_code_left)
        + ad.matmul(ad.matmul(Tensor(layout.right_coeff), embeddings), w_code_right)
        + b_code
    )
    mixed = ad.mul(ad.matmul(ad.tanh(gathered), w_comb2), Tensor(layout.internal))
    return ad.matmul(embeddings, w_comb1) + mixed


def convolve_and_pool(coded, layout: TreeLayout, w_top, w_left, w_right, b_conv) -> Tensor:
    """One window per node (node + direct children), tanh, elementwise max."""
    windows = ad.tanh(
        ad.matmul(coded, w_top)
        + ad.matmul(ad.matmul(Tensor(layout.left_coeff), coded), w_left)
        + ad.matmul(ad.matmul(Tensor(layout.right_coeff), coded), w_right)
        + b_conv
    )
    return ad.tmax(windows, axis=0)


class TbcnnRegressor(BaseTreeRegressor):
    """Coding layer + tree convolution + dynamic max pooling + linear head."""

    def __init__(
        self,
        embed_dim: int = 100,
        conv_dim: int = 300,
        epochs: int = 100,
        lr: float = 1e-4,
        batch_size: int = 4,
        seed: int = 0,
        stop_loss: float | None = None,
    ):
        self.embed_dim = embed_dim
        self.conv_dim = conv_dim
        self.epochs = epochs
        self.lr = lr
        self.batch_size = batch_size
        self.seed = seed
        self.stop_loss = stop_loss

    def _build(self, records) -> None:
        rng = self.init_rng_
        d, c = self.embed_dim, self.conv_dim
        self.vocab_ = build_vocab(records, source="node_labels")
        self.embedding_ = embedding_init(rng, (len(self.vocab_), d), "node_emb")
        self.w_comb1_ = uniform_init(rng, (d, d), "coding.w_comb1")
        self.w_comb2_ = uniform_init(rng, (d, d), "coding.w_comb2")
        self.w_code_left_ = uniform_init(rng, (d, d), "coding.w_left")
        self.w_code_right_ = uniform_init(rng, (d, d), "coding.w_right")
        self.b_code_ = zeros_init((d,), "coding.bias")
        self.w_top_ = uniform_init(rng, (d, c), "conv.w_top")
        self.w_left_ = uniform_init(rng, (d, c), "conv.w_left")
        self.w_right_ = uniform_init(rng, (d, c), "conv.w_right")
        self.b_conv_ = zeros_init((c,), "conv.bias")
        self.head_w_ = uniform_init(rng, (c, 1), "head.w")
        self.head_b_ = zeros_init((1,), "head.b")

    def _prepare(self, record) -> TreeLayout:
        return TreeLayout.from_tree(record.tree, self.vocab_.lookup)

    def encode(self, layout: TreeLayout) -> Tensor:
        """The pooled convolution vector for one tree."""
        embeddings = ad.gather_rows(self.embedding_, layout.label_ids)
        coded = coding_layer(
            embeddings, layout, self.w_comb1_, self.w_comb2_,
            self.w_code_left_, self.w_code_right_, self.b_code_,
        )
        return convolve_and_pool(
            coded, layout, self.w_top_, self.w_left_, self.w_right_, self.b_conv_
        )

    def _forward(self, prepared: TreeLayout, training: bool, rng=None) -> Tensor:
        pooled = self.encode(prepared)
        pred = ad.matmul(ad.reshape(pooled, (1, -1)), self.head_w_) + self.head_b_
        return ad.reshape(pred, ())

    def parameters_(self) -> list[Parameter]:
        return [
            self.embedding_, self.w_comb1_, self.w_comb2_, self.w_code_left_,
            self.w_code_right_, self.b_code_, self.w_top_, self.w_left_,
            self.w_right_, self.b_conv_, self.head_w_, self.head_b_,
        ]
