"""Message-passing layers over AST node graphs and the pooled regressor.

Trees are treated as undirected graphs for message passing.  Batches are
block-diagonal by construction (edges never cross graphs), so the dense
propagation operators below are exact at the small graph sizes this package
targets.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import autodiff as ad
from ..autodiff import Parameter, Tensor
from ..nn import embedding_init, uniform_init, zeros_init, ones_init
from ..trees import AstTree
from ..vocab import Vocabulary, build_vocab
from .base import BaseTreeRegressor

GNN_KINDS = ("gcn", "gat", "sage", "gin")


@dataclass(frozen=True)
class GraphBatch:
    """Node labels plus dense propagation operators for a batch of trees."""

    label_ids: np.ndarray            # (N,) int
    edges: np.ndarray                # (E, 2) parent, child pairs
    graph_ids: np.ndarray            # (N,) int
    num_graphs: int
    graph_slices: tuple[tuple[int, int], ...]  # contiguous [start, stop) per graph
    gcn_operator: np.ndarray = field(repr=False)    # D^-1/2 (A+I) D^-1/2
    mean_operator: np.ndarray = field(repr=False)   # row-normalized (A+I)
    adjacency: np.ndarray = field(repr=False)       # A, no self-loops
    neighbor_mask: np.ndarray = field(repr=False)   # (A+I) > 0, bool

    @classmethod
    def from_arrays(cls, label_ids, edges, graph_ids) -> "GraphBatch":
        label_ids = np.asarray(label_ids, dtype=np.intp)
        edges = np.asarray(edges, dtype=np.intp).reshape(-1, 2)
        graph_ids = np.asarray(graph_ids, dtype=np.intp)
        n = label_ids.shape[0]
        if edges.size and (edges.min() < 0 or edges.max() >= n):
            raise ValueError("edge endpoint out of range")
        num_graphs = int(graph_ids.max()) + 1 if n else 0
        slices = []
        for g in range(num_graphs):
            idx = np.flatnonzero(graph_ids == g)
            if idx.size == 0:
                raise ValueError(f"graph {g} has no nodes")
            if not np.array_equal(idx, np.arange(idx[0], idx[-1] + 1)):
                raise ValueError("graph_ids must be contiguous per graph")
            slices.append((int(idx[0]), int(idx[-1] + 1)))
            edge_count = sum(
                1 for p, c in edges if idx[0] <= p < idx[-1] + 1
            )
            if edge_count != idx.size - 1:
                raise ValueError(f"graph {g}: edge count {edge_count} != nodes - 1")
        adj = np.zeros((n, n))
        for p, c in edges:
            if graph_ids[p] != graph_ids[c]:
                raise ValueError("edge crosses graphs")
            adj[p, c] = 1.0
            adj[c, p] = 1.0
        a_tilde = adj + np.eye(n)
        deg = a_tilde.sum(axis=1)
        if np.any(deg == 0):
            raise ValueError("zero-degree node")
        inv_sqrt = 1.0 / np.sqrt(deg)
        gcn_op = a_tilde * inv_sqrt[:, None] * inv_sqrt[None, :]
        mean_op = a_tilde / deg[:, None]
        return cls(
            label_ids=label_ids,
            edges=edges,
            graph_ids=graph_ids,
            num_graphs=num_graphs,
            graph_slices=tuple(slices),
            gcn_operator=gcn_op,
            mean_operator=mean_op,
            adjacency=adj,
            neighbor_mask=a_tilde > 0,
        )

    @classmethod
    def from_trees(cls, trees: list[AstTree], vocab: Vocabulary) -> "GraphBatch":
        labels: list[int] = []
        edges: list[tuple[int, int]] = []
        graph_ids: list[int] = []
        offset = 0
        for g, tree in enumerate(trees):
            stack = [(tree.root, -1)]
            local = 0
            order: list = []
            while stack:
                node, parent = stack.pop()
                idx = offset + local
                local += 1
                order.append(node)
                labels.append(vocab.lookup(node.type_label))
                graph_ids.append(g)
                if parent >= 0:
                    edges.append((parent, idx))
                for child in reversed(node.children):
                    stack.append((child, idx))
            offset += local
        return cls.from_arrays(labels, edges, graph_ids)


def one_hot_features(batch: GraphBatch, num_classes: int) -> Tensor:
    eye = np.eye(num_classes)
    return Tensor(eye[batch.label_ids])


def gcn_forward(w: Parameter, features, batch: GraphBatch) -> Tensor:
    """ReLU(D^-1/2 (A+I) D^-1/2 H W)."""
    return ad.relu(ad.matmul(Tensor(batch.gcn_operator), ad.matmul(features, w)))


def gat_forward(w: Parameter, attn: Parameter, features, batch: GraphBatch) -> Tensor:
    """Attention over each node's neighborhood (self included), then ReLU."""
    wh = ad.matmul(features, w)
    d_out = w.shape[1]
    a_src = ad.reshape(ad.slice_rows(attn, 0, d_out), (d_out, 1))
    a_dst = ad.reshape(ad.slice_rows(attn, d_out, 2 * d_out), (d_out, 1))
    src_score = ad.matmul(wh, a_src)                      # (N, 1)
    dst_score = ad.transpose(ad.matmul(wh, a_dst))        # (1, N)
    logits = ad.leaky_relu(src_score + dst_score, slope=0.2)
    alpha = ad.softmax(logits, mask=batch.neighbor_mask)
    return ad.relu(ad.matmul(alpha, wh))


def gat_attention(w: Parameter, attn: Parameter, features, batch: GraphBatch) -> np.ndarray:
    """The (N, N) attention matrix, zero outside each neighborhood."""
    wh = ad.matmul(features, w).data
    d_out = w.shape[1]
    a_src, a_dst = attn.data[:d_out], attn.data[d_out:]
    logits = (wh @ a_src)[:, None] + (wh @ a_dst)[None, :]
    logits = np.where(logits > 0, logits, 0.2 * logits)
    return ad.softmax(Tensor(logits), mask=batch.neighbor_mask).data


def sage_forward(w: Parameter, features, batch: GraphBatch) -> Tensor:
    """ReLU(W . MEAN({h_i} u N(i)))."""
    return ad.relu(ad.matmul(ad.matmul(Tensor(batch.mean_operator), features), w))


def gin_forward(eps: Parameter, mlp, features, batch: GraphBatch) -> Tensor:
    """MLP((1 + eps) h_i + sum of neighbors); eps is a learnable scalar."""
    agg = ad.mul(features, eps + 1.0) + ad.matmul(Tensor(batch.adjacency), features)
    return mlp(agg)


class GinMlp:
    """Two linear layers with an interior ReLU."""

    def __init__(self, d_in: int, d_out: int, rng: np.random.Generator, name: str):
        self.w1 = uniform_init(rng, (d_in, d_out), f"{name}.w1")
        self.b1 = zeros_init((d_out,), f"{name}.b1")
        self.w2 = uniform_init(rng, (d_out, d_out), f"{name}.w2")
        self.b2 = zeros_init((d_out,), f"{name}.b2")

    def __call__(self, x) -> Tensor:
        return ad.matmul(ad.relu(ad.matmul(x, self.w1) + self.b1), self.w2) + self.b2

    def parameters(self) -> list[Parameter]:
        return [self.w1, self.b1, self.w2, self.b2]


class _BatchNorm:
    def __init__(self, dim: int, name: str, momentum: float = 0.1):
        self.gain = ones_init((dim,), f"{name}.gain")
        self.bias = zeros_init((dim,), f"{name}.bias")
        self.running_mean = np.zeros(dim)
        self.running_var = np.ones(dim)
        self.momentum = momentum

    def __call__(self, x, training: bool) -> Tensor:
        return ad.batch_norm(
            x, self.gain, self.bias, self.running_mean, self.running_var,
            training=training, momentum=self.momentum,
        )

    def parameters(self) -> list[Parameter]:
        return [self.gain, self.bias]


class GraphLayer:
    """One convolution of the configured kind, d_in -> d_out."""

    def __init__(self, kind: str, d_in: int, d_out: int, rng: np.random.Generator, name: str):
        self.kind = kind
        self.d_out = d_out
        if kind == "gcn" or kind == "sage":
            self.w = uniform_init(rng, (d_in, d_out), f"{name}.w")
            self._params = [self.w]
        elif kind == "gat":
            self.w = uniform_init(rng, (d_in, d_out), f"{name}.w")
            self.attn = uniform_init(rng, (2 * d_out,), f"{name}.attn")
            self._params = [self.w, self.attn]
        elif kind == "gin":
            self.eps = Parameter(np.zeros(1), f"{name}.eps")
            self.mlp = GinMlp(d_in, d_out, rng, f"{name}.mlp")
            self._params = [self.eps] + self.mlp.parameters()
        else:
            raise ValueError(f"unknown layer kind {kind!r}; expected one of {GNN_KINDS}")

    def __call__(self, features, batch: GraphBatch) -> Tensor:
        if self.kind == "gcn":
            return gcn_forward(self.w, features, batch)
        if self.kind == "gat":
            return gat_forward(self.w, self.attn, features, batch)
        if self.kind == "sage":
            return sage_forward(self.w, features, batch)
        return gin_forward(self.eps, self.mlp, features, batch)

    def parameters(self) -> list[Parameter]:
        return self._params


def pool_mean_max(node_states, batch: GraphBatch) -> Tensor:
    """Per-graph [mean-pool || max-pool] rows, stacked to (num_graphs, 2d)."""
    pooled = []
    for start, stop in batch.graph_slices:
        rows = ad.slice_rows(node_states, start, stop)
        pooled.append(ad.concat([ad.tmean(rows, axis=0), ad.tmax(rows, axis=0)], axis=0))
    return ad.stack_rows(pooled)


class GraphNetRegressor(BaseTreeRegressor):
    """Two graph convolutions, batch-norm, dropout, mean+max pooling, MLP head.

    ``layer_kind`` selects gcn/gat/sage/gin.  Node features are a learned
    embedding of the node type label (``embed_dim``); pass
    ``one_hot=True`` to use one-hot label features instead.
    """

    def __init__(
        self,
        layer_kind: str = "gcn",
        embed_dim: int = 32,
        hidden1: int = 40,
        hidden2: int = 30,
        dropout: float = 0.2,
        one_hot: bool = False,
        epochs: int = 100,
        lr: float = 1e-4,
        batch_size: int = 4,
        seed: int = 0,
        stop_loss: float | None = None,
    ):
        self.layer_kind = layer_kind
        self.embed_dim = embed_dim
        self.hidden1 = hidden1
        self.hidden2 = hidden2
        self.dropout = dropout
        self.one_hot = one_hot
        self.epochs = epochs
        self.lr = lr
        self.batch_size = batch_size
        self.seed = seed
        self.stop_loss = stop_loss

    def _build(self, records) -> None:
        rng = self.init_rng_
        self.vocab_ = build_vocab(records, source="node_labels")
        d_in = len(self.vocab_) if self.one_hot else self.embed_dim
        self.embedding_ = (
            None if self.one_hot else embedding_init(rng, (len(self.vocab_), d_in), "node_emb")
        )
        self.conv1_ = GraphLayer(self.layer_kind, d_in, self.hidden1, rng, "conv1")
        self.conv2_ = GraphLayer(self.layer_kind, self.hidden1, self.hidden2, rng, "conv2")
        self.bn1_ = _BatchNorm(self.hidden1, "bn1")
        self.bn2_ = _BatchNorm(self.hidden2, "bn2")
        self.head_w1_ = uniform_init(rng, (2 * self.hidden2, self.hidden2), "head.w1")
        self.head_b1_ = zeros_init((self.hidden2,), "head.b1")
        self.head_w2_ = uniform_init(rng, (self.hidden2, 1), "head.w2")
        self.head_b2_ = zeros_init((1,), "head.b2")

    def _prepare(self, record) -> GraphBatch:
        return GraphBatch.from_trees([record.tree], self.vocab_)

    def _features(self, batch: GraphBatch) -> Tensor:
        if self.one_hot:
            return one_hot_features(batch, len(self.vocab_))
        return ad.gather_rows(self.embedding_, batch.label_ids)

    def graph_regress(
        self, batch: GraphBatch, training: bool = False,
        rng: np.random.Generator | None = None,
    ) -> Tensor:
        """Per-graph predictions, shape (num_graphs,)."""
        h = self._features(batch)
        h = self.conv1_(h, batch)
        h = self.bn1_(h, training)
        if training and self.dropout > 0:
            h = ad.dropout(h, self.dropout, rng, training)
        h = self.conv2_(h, batch)
        h = self.bn2_(h, training)
        pooled = pool_mean_max(h, batch)
        hidden = ad.relu(ad.matmul(pooled, self.head_w1_) + self.head_b1_)
        return ad.reshape(ad.matmul(hidden, self.head_w2_) + self.head_b2_, (-1,))

    def _forward(self, prepared: GraphBatch, training: bool, rng=None) -> Tensor:
        return ad.reshape(self.graph_regress(prepared, training, rng), ())

    def _batch_loss(self, prepared_batch, targets, rng) -> Tensor:
        # merge the per-record graphs into one block-diagonal batch so
        # batch-norm sees real batch statistics
        merged = _merge_batches(prepared_batch)
        preds = self.graph_regress(merged, training=True, rng=rng)
        err = preds - Tensor(np.asarray(targets))
        return ad.tmean(ad.square(err))

    def parameters_(self) -> list[Parameter]:
        params = [] if self.embedding_ is None else [self.embedding_]
        params += self.conv1_.parameters() + self.conv2_.parameters()
        params += self.bn1_.parameters() + self.bn2_.parameters()
        params += [self.head_w1_, self.head_b1_, self.head_w2_, self.head_b2_]
        return params


def _merge_batches(batches: list[GraphBatch]) -> GraphBatch:
    labels, edges, graph_ids = [], [], []
    offset = 0
    for g, b in enumerate(batches):
        labels.append(b.label_ids)
        if b.edges.size:
            edges.append(b.edges + offset)
        graph_ids.append(np.full(b.label_ids.shape[0], g))
        offset += b.label_ids.shape[0]
    merged_edges = np.concatenate(edges) if edges else np.zeros((0, 2), dtype=np.intp)
    return GraphBatch.from_arrays(np.concatenate(labels), merged_edges, np.concatenate(graph_ids))
