"""Model registry: one estimator per model kind."""

from __future__ import annotations

from .base import BaseTreeRegressor
from .code2vec import Code2VecRegressor
from .gnn import GNN_KINDS, GraphBatch, GraphNetRegressor
from .tbcnn import TbcnnRegressor, continuous_weights
from .transformer import (
    CrossAttention,
    DualTransformerRegressor,
    EncoderStack,
    ModelConfig,
    TbastRegressor,
)

MODEL_KINDS = ("gcn", "gat", "sage", "gin", "tbcnn", "code2vec", "tbast", "dual")

# Desk-scale dimension overrides keyed by (kind, preset); transformer models
# take their dimensions from ModelConfig presets instead.
_TINY_DIMS = {
    "gcn": {"embed_dim": 16},
    "gat": {"embed_dim": 16},
    "sage": {"embed_dim": 16},
    "gin": {"embed_dim": 16},
    "tbcnn": {"embed_dim": 32, "conv_dim": 64},
    "code2vec": {"embed_dim": 48},
}


def build_estimator(
    kind: str,
    preset: str = "tiny",
    epochs: int = 100,
    lr: float = 1e-4,
    batch_size: int = 4,
    seed: int = 0,
    **overrides,
) -> BaseTreeRegressor:
    """Construct the estimator for a model kind with preset-scaled dimensions."""
    if kind not in MODEL_KINDS:
        raise ValueError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")
    common = dict(epochs=epochs, lr=lr, batch_size=batch_size, seed=seed)
    if kind in GNN_KINDS:
        params = dict(common, layer_kind=kind)
        if preset == "tiny":
            params.update(_TINY_DIMS[kind])
        params.update(overrides)
        return GraphNetRegressor(**params)
    if kind in ("tbcnn", "code2vec"):
        params = dict(common)
        if preset == "tiny":
            params.update(_TINY_DIMS[kind])
        params.update(overrides)
        return TbcnnRegressor(**params) if kind == "tbcnn" else Code2VecRegressor(**params)
    params = dict(common, preset=preset)
    params.update(overrides)
    return TbastRegressor(**params) if kind == "tbast" else DualTransformerRegressor(**params)


__all__ = [
    "MODEL_KINDS",
    "BaseTreeRegressor",
    "Code2VecRegressor",
    "CrossAttention",
    "DualTransformerRegressor",
    "EncoderStack",
    "GraphBatch",
    "GraphNetRegressor",
    "ModelConfig",
    "TbastRegressor",
    "TbcnnRegressor",
    "build_estimator",
    "continuous_weights",
]
