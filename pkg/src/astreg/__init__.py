"""Execution-time regression on source-code trees.

Eight regressors over lexical tokens and AST structure (four GNN layer
kinds, tree convolution, path-attention, a transformer over split ASTs and
a dual-encoder cross-attention transformer), plus a reproducible experiment
harness.
"""

from .corpus import (
    SampleRecord,
    SyntheticConfig,
    generate_synthetic,
    load_corpus,
    save_corpus,
)
from .scaling import TargetScaler, fit_and_apply_scaler
from .trees import (
    AstNode,
    AstTree,
    PathContext,
    TreeStats,
    compute_tree_stats,
    extract_path_contexts,
    linearize_preorder,
    split_statement_subtrees,
)
from .vocab import Vocabulary, build_vocab

__all__ = [
    "AstNode",
    "AstTree",
    "PathContext",
    "SampleRecord",
    "SyntheticConfig",
    "TargetScaler",
    "TreeStats",
    "Vocabulary",
    "build_vocab",
    "compute_tree_stats",
    "extract_path_contexts",
    "fit_and_apply_scaler",
    "generate_synthetic",
    "linearize_preorder",
    "load_corpus",
    "save_corpus",
    "split_statement_subtrees",
]

__version__ = "0.1.0"
