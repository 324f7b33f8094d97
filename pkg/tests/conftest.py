import numpy as np
import pytest

from astreg.trees import AstNode, AstTree

LABELS = ("A", "B", "C", "D", "E")


def make_random_tree(rng: np.random.Generator, n: int, value_prob: float = 0.6) -> AstTree:
    """Random tree for oracle tests, independent of the synthetic generator."""
    parents = [-1] + [int(rng.integers(0, i)) for i in range(1, n)]
    children: list[list[int]] = [[] for _ in range(n)]
    for i in range(1, n):
        children[parents[i]].append(i)
    labels = [str(rng.choice(LABELS)) for _ in range(n)]
    values = [
        f"val{i}" if not children[i] and rng.random() < value_prob else None
        for i in range(n)
    ]

    def build(i: int) -> AstNode:
        return AstNode(labels[i], values[i], tuple(build(c) for c in children[i]))

    return AstTree(build(0))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_corpus():
    from astreg.corpus import generate_synthetic
    from astreg.scaling import fit_and_apply_scaler

    records = generate_synthetic(16, seed=11)
    fit_and_apply_scaler(records, [records])
    return records
