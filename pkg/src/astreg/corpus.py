"""Sample records, interchange JSON I/O and the synthetic corpus generator.

Interchange format, one record:

    {"id": str, "project": str, "tokens": [str], "runs_ms": [float],
     "ast": {"type": str, "value": str|null, "children": [...]}}

A corpus on disk is either a directory of single-record ``*.json`` files
(plus an optional ``corpus_meta.json`` sidecar) or one JSON-lines file.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .trees import AstNode, AstTree, iter_preorder, linearize_preorder, tree_depth

META_FILENAME = "corpus_meta.json"
LOOP_LABEL = "LOOP"

# Fixed 20-symbol node-type alphabet used by the synthetic generator.
SYNTH_ALPHABET = (
    "LOOP", "IF", "ELSE", "CALL", "ASSIGN", "RETURN", "BLOCK", "DECL",
    "PARAM", "ARG", "BINOP", "UNOP", "LITERAL", "NAME", "INDEX", "FIELD",
    "CAST", "TRY", "THROW", "SWITCH",
)


class CorpusError(Exception):
    """Base class for corpus loading failures."""


class CorpusFormatError(CorpusError):
    """Malformed JSON; message names the file and byte offset."""


class CorpusValidationError(CorpusError):
    """Schema-valid JSON that violates a record invariant; message names the field."""


class EmptyCorpusError(CorpusError):
    """The path yielded zero records."""


@dataclass
class SampleRecord:
    """One source file: token stream, tree, measured durations, normalized target."""

    id: str
    project: str
    tokens: tuple[str, ...]
    tree: AstTree
    runs_ms: tuple[float, ...]
    target: float | None = None

    def raw_target(self) -> float:
        """Median measured duration in milliseconds."""
        return float(np.median(self.runs_ms))


def _node_to_json(node: AstNode) -> dict:
    return {
        "type": node.type_label,
        "value": node.value,
        "children": [_node_to_json(c) for c in node.children],
    }


def _node_from_json(obj, where: str) -> AstNode:
    if not isinstance(obj, dict):
        raise CorpusValidationError(f"{where}: ast node must be an object")
    label = obj.get("type")
    if not isinstance(label, str) or not label:
        raise CorpusValidationError(f"{where}: field 'ast.type' must be a non-empty string")
    value = obj.get("value")
    if value is not None and not isinstance(value, str):
        raise CorpusValidationError(f"{where}: field 'ast.value' must be a string or null")
    children_obj = obj.get("children", [])
    if not isinstance(children_obj, list):
        raise CorpusValidationError(f"{where}: field 'ast.children' must be a list")
    children = tuple(_node_from_json(c, where) for c in children_obj)
    try:
        return AstNode(label, value, children)
    except ValueError as exc:
        raise CorpusValidationError(f"{where}: field 'ast': {exc}") from exc


def record_to_json(record: SampleRecord) -> dict:
    return {
        "id": record.id,
        "project": record.project,
        "tokens": list(record.tokens),
        "runs_ms": list(record.runs_ms),
        "ast": _node_to_json(record.tree.root),
    }


def record_from_json(obj, where: str) -> SampleRecord:
    if not isinstance(obj, dict):
        raise CorpusValidationError(f"{where}: record must be a JSON object")
    rid = obj.get("id")
    if not isinstance(rid, str) or not rid:
        raise CorpusValidationError(f"{where}: field 'id' must be a non-empty string")
    project = obj.get("project")
    if not isinstance(project, str):
        raise CorpusValidationError(f"{where}: field 'project' must be a string")
    tokens = obj.get("tokens")
    if not isinstance(tokens, list) or not tokens or not all(isinstance(t, str) for t in tokens):
        raise CorpusValidationError(f"{where}: field 'tokens' must be a non-empty list of strings")
    runs = obj.get("runs_ms")
    if not isinstance(runs, list) or not runs:
        raise CorpusValidationError(f"{where}: field 'runs_ms' must be a non-empty list")
    for r in runs:
        if not isinstance(r, (int, float)) or isinstance(r, bool) or not math.isfinite(r) or r <= 0:
            raise CorpusValidationError(f"{where}: field 'runs_ms' entries must be finite and > 0")
    if "ast" not in obj:
        raise CorpusValidationError(f"{where}: field 'ast' is missing")
    root = _node_from_json(obj["ast"], where)
    return SampleRecord(
        id=rid,
        project=project,
        tokens=tuple(tokens),
        tree=AstTree(root),
        runs_ms=tuple(float(r) for r in runs),
    )


def _parse_json(text: str, where: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise CorpusFormatError(f"{where}: malformed JSON at byte offset {exc.pos}: {exc.msg}") from exc


def load_corpus(path: str | Path) -> list[SampleRecord]:
    """Load a corpus directory or JSON-lines file, sorted by record id."""
    path = Path(path)
    records: list[SampleRecord] = []
    if path.is_dir():
        for file in sorted(path.glob("*.json")):
            if file.name == META_FILENAME:
                continue
            obj = _parse_json(file.read_text(encoding="utf-8"), str(file))
            records.append(record_from_json(obj, str(file)))
    elif path.is_file():
        offset = 0
        for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
            if line.strip():
                where = f"{path} line {lineno} (byte {offset})"
                records.append(record_from_json(_parse_json(line, where), where))
            offset += len(line.encode("utf-8")) + 1
    else:
        raise CorpusError(f"corpus path does not exist: {path}")
    if not records:
        raise EmptyCorpusError(f"empty corpus: {path}")
    records.sort(key=lambda r: r.id)
    seen: set[str] = set()
    for r in records:
        if r.id in seen:
            raise CorpusValidationError(f"duplicate record id {r.id!r}")
        seen.add(r.id)
    return records


def _safe_filename(record_id: str) -> str:
    return record_id.replace("/", "__").replace("\\", "__")


def save_corpus(records: list[SampleRecord], out_dir: str | Path, meta: dict | None = None) -> None:
    """Write one compact JSON file per record plus an optional metadata sidecar."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for record in records:
        payload = json.dumps(record_to_json(record), ensure_ascii=False, separators=(",", ":"))
        (out / f"{_safe_filename(record.id)}.json").write_text(payload + "\n", encoding="utf-8")
    if meta is not None:
        (out / META_FILENAME).write_text(
            json.dumps(meta, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
        )


def load_corpus_meta(path: str | Path) -> dict | None:
    meta_path = Path(path) / META_FILENAME
    if meta_path.is_file():
        return json.loads(meta_path.read_text(encoding="utf-8"))
    return None


@dataclass(frozen=True)
class SyntheticConfig:
    """Knobs for the planted-function corpus.

    Each run duration is ``a * loop_count + b * depth + c * token_count +
    Normal(0, sigma)``, clamped to a tiny positive floor so durations stay
    valid when a pathological configuration sends them non-positive.  Every
    tree is guaranteed at least one LOOP node.
    """

    min_nodes: int = 20
    max_nodes: int = 45
    a: float = 8.0
    b: float = 1.5
    c: float = 0.05
    sigma: float = 1.0
    runs_per_record: int = 5
    loop_weight: float = 4.0  # sampling weight of LOOP vs 1.0 for other symbols
    value_pool: int = 30

    def planted_meta(self, seed: int) -> dict:
        return {
            "planted": {"a": self.a, "b": self.b, "c": self.c, "sigma": self.sigma},
            "seed": seed,
        }


def _random_tree(rng: np.random.Generator, cfg: SyntheticConfig) -> AstTree:
    n = int(rng.integers(cfg.min_nodes, cfg.max_nodes + 1))
    weights = np.ones(len(SYNTH_ALPHABET))
    weights[SYNTH_ALPHABET.index(LOOP_LABEL)] = cfg.loop_weight
    weights /= weights.sum()
    labels = [str(rng.choice(SYNTH_ALPHABET, p=weights)) for _ in range(n)]
    if LOOP_LABEL not in labels:
        labels[int(rng.integers(0, n))] = LOOP_LABEL
    # Shape mixing: chainy trees (parent = previous node) vs bushy ones
    # (parent = uniform earlier node), so depth varies independently of size.
    chain_prob = float(rng.uniform(0.1, 0.9))
    parents = [-1]
    for i in range(1, n):
        if rng.random() < chain_prob:
            parents.append(i - 1)
        else:
            parents.append(int(rng.integers(0, i)))
    children: list[list[int]] = [[] for _ in range(n)]
    for i in range(1, n):
        children[parents[i]].append(i)
    values = [
        f"v{int(rng.integers(0, cfg.value_pool))}" if not children[i] else None
        for i in range(n)
    ]

    def build(i: int) -> AstNode:
        stack = [(i, False)]
        done: dict[int, AstNode] = {}
        while stack:
            idx, expanded = stack.pop()
            if expanded:
                done[idx] = AstNode(
                    labels[idx], values[idx], tuple(done[c] for c in children[idx])
                )
            else:
                stack.append((idx, True))
                for c in children[idx]:
                    stack.append((c, False))
        return done[i]

    return AstTree(build(0))


def generate_synthetic(
    n: int, seed: int, cfg: SyntheticConfig = SyntheticConfig()
) -> list[SampleRecord]:
    """Deterministic corpus of random trees with a planted duration function."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    records = []
    width = len(str(n - 1))
    for i in range(n):
        tree = _random_tree(rng, cfg)
        tokens = tuple(linearize_preorder(tree))
        loops = sum(1 for node in iter_preorder(tree.root) if node.type_label == LOOP_LABEL)
        base = cfg.a * loops + cfg.b * tree_depth(tree) + cfg.c * len(tokens)
        noise = rng.normal(0.0, cfg.sigma, size=cfg.runs_per_record) if cfg.sigma > 0 else np.zeros(cfg.runs_per_record)
        runs = tuple(max(float(base + e), 1e-6) for e in noise)
        records.append(
            SampleRecord(
                id=f"synth-{i:0{width}d}",
                project="synthetic",
                tokens=tokens,
                tree=tree,
                runs_ms=runs,
            )
        )
    return records


def with_target(record: SampleRecord, target: float) -> SampleRecord:
    return replace(record, target=target)
