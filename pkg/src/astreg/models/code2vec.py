"""Path-attention regression: embed terminal pairs and their connecting paths,
attend over the contexts, and regress from the attended code vector."""

from __future__ import annotations

import numpy as np

from .. import autodiff as ad
from ..autodiff import Parameter, Tensor
from ..nn import embedding_init, uniform_init, zeros_init
from ..trees import extract_path_contexts
from ..vocab import Vocabulary
from .base import BaseTreeRegressor, derive_seed


class Code2VecRegressor(BaseTreeRegressor):
    """Attention-weighted path contexts feeding a linear head.

    Context extraction caps: ``max_contexts`` per sample (seeded uniform
    sample when exceeded), path length/width per the extractor defaults.
    Unknown values and paths resolve to [UNK]; a tree with fewer than two
    valued terminals contributes a learned fallback vector instead.
    """

    def __init__(
        self,
        embed_dim: int = 128,
        max_contexts: int = 200,
        max_path_length: int = 8,
        max_path_width: int = 2,
        epochs: int = 100,
        lr: float = 1e-4,
        batch_size: int = 4,
        seed: int = 0,
        stop_loss: float | None = None,
    ):
        self.embed_dim = embed_dim
        self.max_contexts = max_contexts
        self.max_path_length = max_path_length
        self.max_path_width = max_path_width
        self.epochs = epochs
        self.lr = lr
        self.batch_size = batch_size
        self.seed = seed
        self.stop_loss = stop_loss

    def _path_params(self, record) -> dict:
        return {
            "max_length": self.max_path_length,
            "max_width": self.max_path_width,
            "max_contexts": self.max_contexts,
            "seed": derive_seed(self.seed, "contexts", record.id),
        }

    def _contexts(self, record):
        return extract_path_contexts(record.tree, **self._path_params(record))

    def _build(self, records) -> None:
        rng = self.init_rng_
        d = self.embed_dim
        starts, paths = [], []
        for record in records:
            for ctx in self._contexts(record):
                starts.append(ctx.start_value)
                starts.append(ctx.end_value)
                paths.append(ctx.path_key)
        self.value_vocab_ = Vocabulary.from_strings(starts)
        self.path_vocab_ = Vocabulary.from_strings(paths)
        self.value_embedding_ = embedding_init(rng, (len(self.value_vocab_), d), "value_emb")
        self.path_embedding_ = embedding_init(rng, (len(self.path_vocab_), d), "path_emb")
        self.combine_w_ = uniform_init(rng, (3 * d, d), "combine.w")
        self.attention_a_ = uniform_init(rng, (d,), "attention.a")
        self.fallback_ = embedding_init(rng, (d,), "fallback")
        self.head_w_ = uniform_init(rng, (d, 1), "head.w")
        self.head_b_ = zeros_init((1,), "head.b")

    def _prepare(self, record):
        contexts = self._contexts(record)
        if not contexts:
            return None
        return (
            np.array([self.value_vocab_.lookup(c.start_value) for c in contexts], dtype=np.intp),
            np.array([self.path_vocab_.lookup(c.path_key) for c in contexts], dtype=np.intp),
            np.array([self.value_vocab_.lookup(c.end_value) for c in contexts], dtype=np.intp),
        )

    def code_vector(self, prepared) -> tuple[Tensor, np.ndarray]:
        """The attended context vector and the attention weights."""
        if prepared is None:
            return self.fallback_, np.zeros(0)
        start_ids, path_ids, end_ids = prepared
        combined = ad.concat(
            [
                ad.gather_rows(self.value_embedding_, start_ids),
                ad.gather_rows(self.path_embedding_, path_ids),
                ad.gather_rows(self.value_embedding_, end_ids),
            ],
            axis=1,
        )
        context = ad.tanh(ad.matmul(combined, self.combine_w_))      # (n, d)
        alpha = ad.softmax(ad.matmul(context, self.attention_a_))    # (n,)
        return ad.matmul(alpha, context), alpha.data

    def _forward(self, prepared, training: bool, rng=None) -> Tensor:
        vector, _ = self.code_vector(prepared)
        pred = ad.matmul(ad.reshape(vector, (1, -1)), self.head_w_) + self.head_b_
        return ad.reshape(pred, ())

    def attention_weights(self, record) -> np.ndarray:
        _, alpha = self.code_vector(self._prepare(record))
        return alpha

    def parameters_(self) -> list[Parameter]:
        return [
            self.value_embedding_, self.path_embedding_, self.combine_w_,
            self.attention_a_, self.fallback_, self.head_w_, self.head_b_,
        ]
