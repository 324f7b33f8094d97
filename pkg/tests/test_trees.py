import numpy as np
import pytest

from astreg.trees import (
    SPLIT_LABEL,
    AstNode,
    AstTree,
    compute_tree_stats,
    extract_path_contexts,
    iter_preorder,
    linearize_preorder,
    split_statement_subtrees,
)
from conftest import make_random_tree


def leaf(label, value=None):
    return AstNode(label, value)


class TestAstNode:
    def test_empty_label_rejected(self):
        with pytest.raises(ValueError):
            AstNode("")

    def test_valued_internal_node_rejected(self):
        with pytest.raises(ValueError):
            AstNode("X", "v", (leaf("Y"),))

    def test_counts(self):
        tree = AstTree(AstNode("A", None, (leaf("B"), AstNode("C", None, (leaf("D"),)))))
        assert tree.node_count == 4
        assert tree.edge_count == 3


class TestLinearize:
    def test_hand_traced_preorder(self):
        tree = AstTree(AstNode("A", None, (leaf("B"), AstNode("C", None, (leaf("D"),)))))
        assert linearize_preorder(tree) == ["A", "B", "C", "D"]

    def test_single_valued_node(self):
        assert linearize_preorder(AstTree(leaf("X", "foo"))) == ["X", "foo"]

    def test_length_counts_valued_terminals(self, rng):
        for _ in range(10):
            tree = make_random_tree(rng, 50)
            valued = sum(1 for node in iter_preorder(tree.root) if node.value is not None)
            assert len(linearize_preorder(tree)) == tree.node_count + valued


class TestSplitStatementSubtrees:
    def test_no_split_points(self, rng):
        tree = make_random_tree(rng, 20)  # conftest labels are never statements
        assert split_statement_subtrees(tree) == [tree]

    def test_two_statement_children(self):
        stmt = AstNode("IfStatement", None, (leaf("Cond"),))
        tree = AstTree(AstNode("M", None, (stmt, stmt)))
        pieces = split_statement_subtrees(tree)
        assert len(pieces) == 3
        assert [p.root.type_label for p in pieces] == ["IfStatement", "IfStatement", "M"]
        residual = pieces[-1]
        assert [c.type_label for c in residual.root.children] == [SPLIT_LABEL, SPLIT_LABEL]

    def test_nested_statements_split_again(self):
        inner = AstNode("ForStatement", None, (leaf("Body"),))
        outer = AstNode("IfStatement", None, (inner,))
        tree = AstTree(AstNode("M", None, (outer,)))
        pieces = split_statement_subtrees(tree)
        labels = [p.root.type_label for p in pieces]
        assert labels == ["IfStatement", "ForStatement", "M"]
        # outer piece lost its nested statement to a placeholder
        assert pieces[0].root.children[0].type_label == SPLIT_LABEL

    def test_statement_root(self):
        tree = AstTree(AstNode("MethodDeclaration", None, (leaf("Body"),)))
        pieces = split_statement_subtrees(tree)
        assert [p.root.type_label for p in pieces] == ["MethodDeclaration", SPLIT_LABEL]

    def test_node_multiset_conserved(self, rng):
        # relabel some nodes to statement labels, then count non-placeholders
        for trial in range(10):
            tree = make_random_tree(rng, 100)

            def relabel(node):
                label = "WhileStatement" if rng.random() < 0.15 else node.type_label
                return AstNode(label, node.value, tuple(relabel(c) for c in node.children))

            tree = AstTree(relabel(tree.root))
            original = sorted(
                (n.type_label, n.value or "") for n in iter_preorder(tree.root)
            )
            pieces = split_statement_subtrees(tree)
            kept = sorted(
                (n.type_label, n.value or "")
                for p in pieces
                for n in iter_preorder(p.root)
                if n.type_label != SPLIT_LABEL
            )
            assert kept == original


# -- brute-force oracle for path contexts -----------------------------------


def brute_force_contexts(tree: AstTree, max_length: int, max_width: int):
    """All-pairs LCA enumeration with explicit parent maps."""
    parent: dict[int, AstNode | None] = {}
    order: list[AstNode] = []

    def walk(node, par):
        parent[id(node)] = par
        order.append(node)
        for c in node.children:
            walk(c, node)

    walk(tree.root, None)
    terminals = [n for n in order if n.value is not None]
    out = []
    for i in range(len(terminals)):
        for j in range(i + 1, len(terminals)):
            s, t = terminals[i], terminals[j]
            ancestors_s = []
            cur = s
            while cur is not None:
                ancestors_s.append(cur)
                cur = parent[id(cur)]
            seen = {id(a) for a in ancestors_s}
            cur = t
            up_t = []
            while id(cur) not in seen:
                up_t.append(cur)
                cur = parent[id(cur)]
            lca = cur
            up_s = ancestors_s[: ancestors_s.index(lca)]
            length = len(up_s) + len(up_t)
            branch_s = lca.children.index(up_s[-1])
            branch_t = lca.children.index(up_t[-1])
            width = branch_t - branch_s
            if length <= max_length and width <= max_width:
                key = (
                    "↑".join(n.type_label for n in up_s)
                    + "↑" + lca.type_label + "↓"
                    + "↓".join(n.type_label for n in reversed(up_t))
                )
                out.append((s.value, key, t.value))
    return out


class TestExtractPathContexts:
    def test_single_pair(self):
        tree = AstTree(AstNode("A", None, (leaf("B", "b"), leaf("C", "c"))))
        contexts = extract_path_contexts(tree)
        assert len(contexts) == 1
        ctx = contexts[0]
        assert (ctx.start_value, ctx.path_key, ctx.end_value) == ("b", "B↑A↓C", "c")

    def test_pair_count_with_generous_caps(self):
        k = 6
        tree = AstTree(AstNode("R", None, tuple(leaf(f"T{i}", f"v{i}") for i in range(k))))
        contexts = extract_path_contexts(tree, max_length=10, max_width=10, max_contexts=1000)
        assert len(contexts) == k * (k - 1) // 2

    def test_fewer_than_two_terminals(self):
        assert extract_path_contexts(AstTree(leaf("A"))) == []
        assert extract_path_contexts(AstTree(AstNode("A", None, (leaf("B", "b"),)))) == []

    def test_matches_brute_force_oracle(self, rng):
        for _ in range(100):
            tree = make_random_tree(rng, int(rng.integers(2, 13)))
            got = extract_path_contexts(tree, max_length=8, max_width=2, max_contexts=10_000)
            expected = brute_force_contexts(tree, max_length=8, max_width=2)
            assert [(c.start_value, c.path_key, c.end_value) for c in got] == expected

    def test_sampling_cap_is_deterministic(self, rng):
        tree = AstTree(AstNode("R", None, tuple(leaf(f"T{i}", f"v{i}") for i in range(10))))
        a = extract_path_contexts(tree, max_length=10, max_width=10, max_contexts=5, seed=3)
        b = extract_path_contexts(tree, max_length=10, max_width=10, max_contexts=5, seed=3)
        assert a == b and len(a) == 5


# -- Floyd-Warshall oracle for the diameter ---------------------------------


def floyd_warshall_diameter(tree: AstTree) -> int:
    n = tree.node_count
    dist = np.full((n, n), np.inf)
    np.fill_diagonal(dist, 0)
    index = {}
    order = list(iter_preorder(tree.root))
    for i, node in enumerate(order):
        index[id(node)] = i
    for node in order:
        for child in node.children:
            i, j = index[id(node)], index[id(child)]
            dist[i, j] = dist[j, i] = 1
    for k in range(n):
        dist = np.minimum(dist, dist[:, k : k + 1] + dist[k : k + 1, :])
    return int(dist.max())


class TestTreeStats:
    def test_path_of_three(self):
        tree = AstTree(AstNode("A", None, (AstNode("B", None, (leaf("C"),)),)))
        stats = compute_tree_stats(tree)
        assert (stats.num_nodes, stats.num_edges, stats.diameter) == (3, 2, 2)
        assert stats.density == pytest.approx(2 * 2 / (3 * 2))

    def test_star_of_four(self):
        tree = AstTree(AstNode("R", None, (leaf("A"), leaf("B"), leaf("C"))))
        stats = compute_tree_stats(tree)
        assert stats.diameter == 2
        assert stats.density == pytest.approx(0.5)

    def test_single_node_density_convention(self):
        stats = compute_tree_stats(AstTree(leaf("X")))
        assert (stats.num_nodes, stats.num_edges, stats.diameter, stats.density) == (1, 0, 0, 1.0)

    def test_diameter_matches_floyd_warshall(self, rng):
        for _ in range(50):
            tree = make_random_tree(rng, int(rng.integers(2, 31)))
            assert compute_tree_stats(tree).diameter == floyd_warshall_diameter(tree)
