"""Rooted labeled trees: the structural input shared by every model.

An AstNode carries a grammar-ish type label, an optional terminal value and
an ordered tuple of children.  AstTree wraps a root with cached node/edge
counts.  Traversals are iterative so deep trees never hit the Python
recursion limit.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

SPLIT_LABEL = "[SPLIT]"

# Labels whose subtrees become standalone sequences when deep trees are cut
# into statement-level pieces.  Any label ending in "Statement" also counts.
DEFAULT_STATEMENT_LABELS = frozenset({"MethodDeclaration", "ConstructorDeclaration"})
STATEMENT_SUFFIX = "Statement"


@dataclass(frozen=True)
class AstNode:
    """One tree node: a type label, an optional terminal value, children."""

    type_label: str
    value: str | None = None
    children: tuple["AstNode", ...] = ()

    def __post_init__(self) -> None:
        if not self.type_label:
            raise ValueError("AstNode.type_label must be non-empty")
        if self.value is not None and self.children:
            raise ValueError(f"valued node {self.type_label!r} must be a terminal")

    def is_leaf(self) -> bool:
        return not self.children


@dataclass(frozen=True)
class AstTree:
    root: AstNode
    node_count: int = field(default=0)
    edge_count: int = field(default=0)

    def __post_init__(self) -> None:
        count = sum(1 for _ in iter_preorder(self.root))
        object.__setattr__(self, "node_count", count)
        object.__setattr__(self, "edge_count", count - 1)


@dataclass(frozen=True)
class TreeStats:
    num_nodes: int
    num_edges: int
    diameter: int
    density: float


@dataclass(frozen=True)
class PathContext:
    """code2vec triplet: two terminal values plus the node-type path linking them."""

    start_value: str
    path_key: str
    end_value: str


def iter_preorder(root: AstNode):
    """Yield nodes depth-first, children in stored order."""
    stack = [root]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(node.children))


def linearize_preorder(tree: AstTree) -> list[str]:
    """Pre-order type labels; a valued terminal contributes its value right after its label."""
    out: list[str] = []
    for node in iter_preorder(tree.root):
        out.append(node.type_label)
        if node.value is not None:
            out.append(node.value)
    return out


def tree_depth(tree: AstTree) -> int:
    """Edges on the longest root-to-leaf path."""
    best = 0
    stack = [(tree.root, 0)]
    while stack:
        node, d = stack.pop()
        if d > best:
            best = d
        for child in node.children:
            stack.append((child, d + 1))
    return best


def _adjacency(root: AstNode) -> list[list[int]]:
    """Undirected adjacency over pre-order node indices."""
    adj: list[list[int]] = []
    stack: list[tuple[AstNode, int]] = [(root, -1)]
    while stack:
        node, parent = stack.pop()
        idx = len(adj)
        adj.append([])
        if parent >= 0:
            adj[parent].append(idx)
            adj[idx].append(parent)
        for child in reversed(node.children):
            stack.append((child, idx))
    return adj


def _bfs_farthest(adj: list[list[int]], start: int) -> tuple[int, int]:
    dist = [-1] * len(adj)
    dist[start] = 0
    queue = deque([start])
    far, far_dist = start, 0
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                if dist[v] > far_dist:
                    far, far_dist = v, dist[v]
                queue.append(v)
    return far, far_dist


def compute_tree_stats(tree: AstTree) -> TreeStats:
    """Node/edge counts, double-BFS diameter and undirected simple-graph density."""
    n = tree.node_count
    if n == 1:
        return TreeStats(num_nodes=1, num_edges=0, diameter=0, density=1.0)
    adj = _adjacency(tree.root)
    far, _ = _bfs_farthest(adj, 0)
    _, diameter = _bfs_farthest(adj, far)
    density = 2.0 * tree.edge_count / (n * (n - 1))
    return TreeStats(num_nodes=n, num_edges=tree.edge_count, diameter=diameter, density=density)


def is_statement_label(label: str, statement_labels: frozenset[str] | set[str]) -> bool:
    return label.endswith(STATEMENT_SUFFIX) or label in statement_labels


def split_statement_subtrees(
    tree: AstTree,
    statement_labels: frozenset[str] | set[str] = DEFAULT_STATEMENT_LABELS,
) -> list[AstTree]:
    """Cut the tree at statement-labeled nodes.

    Every statement-labeled node roots its own subtree (nested statements are
    cut out again and leave a [SPLIT] leaf behind).  Subtrees are returned in
    pre-order of their roots, followed by the residual skeleton.  Non-placeholder
    nodes are conserved: each original node lands in exactly one subtree.
    """
    if not statement_labels:
        raise ValueError("statement_labels must be non-empty")

    statement_roots: list[AstNode] = [
        node
        for node in iter_preorder(tree.root)
        if is_statement_label(node.type_label, statement_labels)
    ]
    if not statement_roots:
        return [tree]

    def build_region(region_root: AstNode) -> AstNode:
        # Copy region_root's subtree, replacing statement-labeled descendants
        # (not the region root itself) by [SPLIT] leaves.  Post-order rebuild.
        copies: dict[int, AstNode] = {}
        stack: list[tuple[AstNode, bool]] = [(region_root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                kids = tuple(
                    AstNode(SPLIT_LABEL)
                    if is_statement_label(ch.type_label, statement_labels)
                    else copies[id(ch)]
                    for ch in node.children
                )
                copies[id(node)] = AstNode(node.type_label, node.value, kids)
            else:
                stack.append((node, True))
                for ch in node.children:
                    if not is_statement_label(ch.type_label, statement_labels):
                        stack.append((ch, False))
        return copies[id(region_root)]

    pieces = [AstTree(build_region(root)) for root in statement_roots]
    if is_statement_label(tree.root.type_label, statement_labels):
        residual = AstTree(AstNode(SPLIT_LABEL))
    else:
        residual = AstTree(build_region(tree.root))
    pieces.append(residual)
    return pieces


def _terminal_entries(root: AstNode) -> list[tuple[int, AstNode, list[AstNode]]]:
    """Valued terminals in pre-order: (pre-order index, node, root-to-node path)."""
    entries = []
    stack: list[tuple[AstNode, list[AstNode]]] = [(root, [])]
    index = 0
    while stack:
        node, ancestors = stack.pop()
        path = ancestors + [node]
        if node.value is not None:
            entries.append((index, node, path))
        index += 1
        for child in reversed(node.children):
            stack.append((child, path))
    # stack order already yields pre-order indices; sort defensively anyway
    entries.sort(key=lambda e: e[0])
    return entries


def _encode_path(path_s: list[AstNode], path_t: list[AstNode]) -> tuple[str, int, int]:
    """Arrow-encoded label path through the LCA plus its length and width inputs.

    Returns (key, length_in_edges, (branch index of s, branch index of t)
    packed as child positions under the LCA).
    """
    lca_depth = 0
    limit = min(len(path_s), len(path_t)) - 1  # leaves are distinct, LCA is strictly above
    while lca_depth < limit and path_s[lca_depth + 1] is path_t[lca_depth + 1]:
        lca_depth += 1
    lca = path_s[lca_depth]
    up = path_s[lca_depth + 1 :]
    down = path_t[lca_depth + 1 :]
    key = "↑".join(n.type_label for n in reversed(up)) + "↑" + lca.type_label
    key += "↓" + "↓".join(n.type_label for n in down)
    length = len(up) + len(down)
    branch_s = lca.children.index(up[0])
    branch_t = lca.children.index(down[0])
    return key, length, branch_t - branch_s


def extract_path_contexts(
    tree: AstTree,
    max_length: int = 8,
    max_width: int = 2,
    max_contexts: int = 200,
    seed: int = 0,
) -> list[PathContext]:
    """All terminal-pair paths through the LCA, filtered by length/width caps.

    One context per pre-order-ordered pair of valued terminals.  When more
    than max_contexts survive the caps, a seeded uniform sample is kept
    (original pair order preserved).
    """
    if max_length < 2 or max_width < 1 or max_contexts < 1:
        raise ValueError("caps must satisfy max_length >= 2, max_width >= 1, max_contexts >= 1")
    terminals = _terminal_entries(tree.root)
    if len(terminals) < 2:
        return []
    contexts: list[PathContext] = []
    for a in range(len(terminals)):
        _, node_s, path_s = terminals[a]
        for b in range(a + 1, len(terminals)):
            _, node_t, path_t = terminals[b]
            key, length, width = _encode_path(path_s, path_t)
            if length <= max_length and width <= max_width:
                contexts.append(PathContext(node_s.value, key, node_t.value))
    if len(contexts) > max_contexts:
        rng = np.random.default_rng(seed)
        keep = np.sort(rng.choice(len(contexts), size=max_contexts, replace=False))
        contexts = [contexts[i] for i in keep]
    return contexts
