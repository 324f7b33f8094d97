"""Sequence models: a transformer over split-AST node sequences and the
dual-encoder model that cross-attends lexical tokens with AST node labels."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import autodiff as ad
from ..autodiff import Parameter, Tensor
from ..nn import EncoderBlock, LayerNorm, embed_with_positions, embedding_init, uniform_init, zeros_init
from ..trees import iter_preorder, linearize_preorder, split_statement_subtrees
from ..vocab import SEP, Vocabulary, build_vocab
from .base import BaseTreeRegressor

CROSS_DIRECTIONS = ("bi", "code2ast", "ast2code")


@dataclass(frozen=True)
class ModelConfig:
    """Transformer stack dimensions."""

    blocks: int
    dim: int
    heads: int
    max_len: int

    @property
    def ff_hidden(self) -> int:
        return 4 * self.dim

    @classmethod
    def preset(cls, name: str) -> "ModelConfig":
        if name == "tiny":
            return cls(blocks=1, dim=64, heads=4, max_len=256)
        if name == "small":
            return cls(blocks=1, dim=768, heads=8, max_len=2048)
        if name == "large":
            return cls(blocks=12, dim=768, heads=8, max_len=2048)
        raise ValueError(f"unknown preset {name!r}; expected tiny, small or large")


class EncoderStack:
    """Embedding + learned positions + a stack of post-norm encoder blocks."""

    def __init__(self, vocab_size: int, config: ModelConfig, rng: np.random.Generator, name: str):
        self.config = config
        self.token_table = embedding_init(rng, (vocab_size, config.dim), f"{name}.tokens")
        self.position_table = embedding_init(rng, (config.max_len, config.dim), f"{name}.positions")
        self.blocks = [
            EncoderBlock(config.dim, config.heads, config.ff_hidden, rng, f"{name}.block{i}")
            for i in range(config.blocks)
        ]

    def encode(
        self,
        ids: list[int],
        key_mask: np.ndarray | None = None,
        dropout_rate: float = 0.0,
        rng: np.random.Generator | None = None,
        training: bool = False,
    ) -> Tensor:
        if not ids:
            raise ValueError("cannot encode an empty id sequence")
        x = embed_with_positions(ids, self.token_table, self.position_table)
        if key_mask is not None:
            key_mask = key_mask[: x.shape[0]]
        for block in self.blocks:
            x = block(x, key_mask, dropout_rate, rng, training)
        return x

    def parameters(self) -> list[Parameter]:
        params = [self.token_table, self.position_table]
        for block in self.blocks:
            params += block.parameters()
        return params


class CrossAttention:
    """Single-head bidirectional fusion with shared projections.

    Each direction computes Attention(Q_side W_q, other W_k, other W_v) W_o,
    adds the query-side residual and layer-normalizes.  Key-side padding
    masks apply; a fully masked key side is an error.
    """

    def __init__(self, dim: int, rng: np.random.Generator, name: str):
        self.dim = dim
        self.wq = uniform_init(rng, (dim, dim), f"{name}.wq")
        self.wk = uniform_init(rng, (dim, dim), f"{name}.wk")
        self.wv = uniform_init(rng, (dim, dim), f"{name}.wv")
        self.wo = uniform_init(rng, (dim, dim), f"{name}.wo")
        self.ast_norm = LayerNorm(dim, f"{name}.ast_norm")
        self.code_norm = LayerNorm(dim, f"{name}.code_norm")

    def _attend(self, queries, keys_values, key_mask) -> Tensor:
        scores = ad.mul(
            ad.matmul(ad.matmul(queries, self.wq), ad.transpose(ad.matmul(keys_values, self.wk))),
            1.0 / math.sqrt(self.dim),
        )
        weights = ad.softmax(scores, mask=key_mask)
        return ad.matmul(ad.matmul(weights, ad.matmul(keys_values, self.wv)), self.wo)

    def attention_matrix(self, queries, keys_values, key_mask=None) -> np.ndarray:
        scores = (queries.data @ self.wq.data) @ (keys_values.data @ self.wk.data).T
        scores /= math.sqrt(self.dim)
        return ad.softmax(Tensor(scores), mask=key_mask).data

    def __call__(
        self,
        o_code,
        o_ast,
        code_mask: np.ndarray | None = None,
        ast_mask: np.ndarray | None = None,
        direction: str = "bi",
    ) -> tuple[Tensor, Tensor]:
        """Returns (ast_fused, code_fused); an un-fused side passes through its norm."""
        if direction not in CROSS_DIRECTIONS:
            raise ValueError(f"unknown cross direction {direction!r}")
        if direction in ("bi", "ast2code"):
            ast_fused = self.ast_norm(o_ast + self._attend(o_ast, o_code, code_mask))
        else:
            ast_fused = self.ast_norm(o_ast)
        if direction in ("bi", "code2ast"):
            code_fused = self.code_norm(o_code + self._attend(o_code, o_ast, ast_mask))
        else:
            code_fused = self.code_norm(o_code)
        return ast_fused, code_fused

    def parameters(self) -> list[Parameter]:
        return [self.wq, self.wk, self.wv, self.wo] + self.ast_norm.parameters() + self.code_norm.parameters()


def _truncate(ids: list[int], limit: int) -> list[int]:
    return ids if len(ids) <= limit else ids[:limit]


class TbastRegressor(BaseTreeRegressor):
    """Transformer over statement-split AST node sequences.

    Deep trees are cut at statement nodes; each piece is linearized in
    pre-order and the pieces are joined with a [SEP] label.  A single
    self-attention encoder reads the joined sequence and a linear head reads
    position 0.
    """

    def __init__(
        self,
        preset: str = "tiny",
        dropout: float = 0.1,
        epochs: int = 100,
        lr: float = 1e-4,
        batch_size: int = 4,
        seed: int = 0,
        stop_loss: float | None = None,
    ):
        self.preset = preset
        self.dropout = dropout
        self.epochs = epochs
        self.lr = lr
        self.batch_size = batch_size
        self.seed = seed
        self.stop_loss = stop_loss

    @staticmethod
    def sequence_for(record) -> list[str]:
        pieces = split_statement_subtrees(record.tree)
        out: list[str] = []
        for i, piece in enumerate(pieces):
            if i:
                out.append(SEP)
            out.extend(linearize_preorder(piece))
        return out

    def _build(self, records) -> None:
        self.config_ = ModelConfig.preset(self.preset)
        self.vocab_ = Vocabulary.from_strings(
            s for r in records for s in self.sequence_for(r)
        )
        self.encoder_ = EncoderStack(len(self.vocab_), self.config_, self.init_rng_, "tbast")
        self.head_w_ = uniform_init(self.init_rng_, (self.config_.dim, 1), "head.w")
        self.head_b_ = zeros_init((1,), "head.b")

    def _prepare(self, record) -> list[int]:
        return _truncate(self.vocab_.encode(self.sequence_for(record)), self.config_.max_len)

    def _forward(self, prepared: list[int], training: bool, rng=None) -> Tensor:
        states = self.encoder_.encode(
            prepared, dropout_rate=self.dropout, rng=rng, training=training
        )
        first = ad.slice_rows(states, 0, 1)
        return ad.reshape(ad.matmul(first, self.head_w_) + self.head_b_, ())

    def parameters_(self) -> list[Parameter]:
        return self.encoder_.parameters() + [self.head_w_, self.head_b_]


class DualTransformerRegressor(BaseTreeRegressor):
    """Two encoders fused by cross-attention, regression from the AST [CLS].

    The lexical encoder reads the token stream; the AST encoder reads the
    pre-order node labels with [CLS] prepended at position 0.  After fusion
    the [CLS]-position vector feeds a two-layer head.  ``cross_direction``
    selects which side(s) attend to the other; when the AST side is not
    fused ("code2ast") the head reads position 0 of the fused code side.
    """

    def __init__(
        self,
        preset: str = "tiny",
        cross_direction: str = "bi",
        dropout: float = 0.1,
        epochs: int = 100,
        lr: float = 1e-4,
        batch_size: int = 4,
        seed: int = 0,
        stop_loss: float | None = None,
    ):
        self.preset = preset
        self.cross_direction = cross_direction
        self.dropout = dropout
        self.epochs = epochs
        self.lr = lr
        self.batch_size = batch_size
        self.seed = seed
        self.stop_loss = stop_loss

    def _build(self, records) -> None:
        self.config_ = ModelConfig.preset(self.preset)
        rng = self.init_rng_
        self.token_vocab_ = build_vocab(records, source="tokens")
        self.label_vocab_ = build_vocab(records, source="node_labels")
        self.nl_encoder_ = EncoderStack(len(self.token_vocab_), self.config_, rng, "nl")
        self.ast_encoder_ = EncoderStack(len(self.label_vocab_), self.config_, rng, "ast")
        self.cross_ = CrossAttention(self.config_.dim, rng, "cross")
        d = self.config_.dim
        self.head_w1_ = uniform_init(rng, (d, d // 2), "head.w1")
        self.head_b1_ = zeros_init((d // 2,), "head.b1")
        self.head_w2_ = uniform_init(rng, (d // 2, 1), "head.w2")
        self.head_b2_ = zeros_init((1,), "head.b2")

    def _prepare(self, record) -> tuple[list[int], list[int]]:
        if not record.tokens:
            raise ValueError(f"record {record.id!r} has no tokens")
        token_ids = _truncate(self.token_vocab_.encode(record.tokens), self.config_.max_len)
        labels = [n.type_label for n in iter_preorder(record.tree.root)]
        label_ids = [self.label_vocab_.cls_id] + _truncate(
            self.label_vocab_.encode(labels), self.config_.max_len - 1
        )
        return token_ids, label_ids

    def fused_states(
        self,
        prepared,
        training: bool = False,
        rng=None,
        pad_code_to: int | None = None,
    ) -> tuple[Tensor, Tensor, np.ndarray, np.ndarray]:
        """Encode both streams and cross-attend; returns fused states + masks."""
        token_ids, label_ids = prepared
        code_mask = None
        if pad_code_to is not None and pad_code_to > len(token_ids):
            code_mask = np.arange(pad_code_to) < len(token_ids)
            token_ids = token_ids + [self.token_vocab_.pad_id] * (pad_code_to - len(token_ids))
        o_code = self.nl_encoder_.encode(token_ids, code_mask, self.dropout, rng, training)
        o_ast = self.ast_encoder_.encode(label_ids, None, self.dropout, rng, training)
        ast_fused, code_fused = self.cross_(
            o_code, o_ast, code_mask=code_mask, ast_mask=None, direction=self.cross_direction
        )
        return ast_fused, code_fused, code_mask, None

    def _forward(self, prepared, training: bool, rng=None, pad_code_to: int | None = None) -> Tensor:
        ast_fused, code_fused, _, _ = self.fused_states(prepared, training, rng, pad_code_to)
        z = ad.slice_rows(ast_fused if self.cross_direction != "code2ast" else code_fused, 0, 1)
        hidden = ad.relu(ad.matmul(z, self.head_w1_) + self.head_b1_)
        return ad.reshape(ad.matmul(hidden, self.head_w2_) + self.head_b2_, ())

    def predict_record(self, record, pad_code_to: int | None = None) -> float:
        """Eval-mode prediction with optional code-side padding (mask check hook)."""
        return self._forward(self._prepare(record), training=False, pad_code_to=pad_code_to).item()

    def parameters_(self) -> list[Parameter]:
        return (
            self.nl_encoder_.parameters()
            + self.ast_encoder_.parameters()
            + self.cross_.parameters()
            + [self.head_w1_, self.head_b1_, self.head_w2_, self.head_b2_]
        )
