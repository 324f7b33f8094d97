"""String-to-index vocabularies with reserved special tokens."""

from __future__ import annotations

from collections import Counter
from collections.abc import Iterable

from .corpus import SampleRecord
from .trees import extract_path_contexts, iter_preorder

PAD, UNK, CLS, SEP = "[PAD]", "[UNK]", "[CLS]", "[SEP]"
SPECIALS = (PAD, UNK, CLS, SEP)

VOCAB_SOURCES = ("tokens", "node_labels", "path_keys", "terminal_values")


class Vocabulary:
    """Dense string->index map; unknown strings resolve to [UNK]."""

    def __init__(self, entries: dict[str, int]):
        self.entries = entries
        self.pad_id = entries[PAD]
        self.unk_id = entries[UNK]
        self.cls_id = entries[CLS]
        self.sep_id = entries[SEP]

    def __len__(self) -> int:
        return len(self.entries)

    def lookup(self, s: str) -> int:
        return self.entries.get(s, self.unk_id)

    def encode(self, strings: Iterable[str]) -> list[int]:
        return [self.lookup(s) for s in strings]

    @classmethod
    def from_strings(cls, strings: Iterable[str], min_freq: int = 1) -> "Vocabulary":
        counts = Counter(strings)
        for special in SPECIALS:
            counts.pop(special, None)
        kept = sorted(
            (s for s, c in counts.items() if c >= min_freq),
            key=lambda s: (-counts[s], s),
        )
        entries = {s: i for i, s in enumerate(SPECIALS)}
        for s in kept:
            entries[s] = len(entries)
        return cls(entries)


def record_strings(record: SampleRecord, source: str, path_params: dict | None = None) -> list[str]:
    """The strings a record contributes to a vocabulary of the given source."""
    if source == "tokens":
        return list(record.tokens)
    if source == "node_labels":
        return [node.type_label for node in iter_preorder(record.tree.root)]
    params = path_params or {}
    contexts = extract_path_contexts(record.tree, **params)
    if source == "path_keys":
        return [c.path_key for c in contexts]
    if source == "terminal_values":
        out = []
        for c in contexts:
            out.append(c.start_value)
            out.append(c.end_value)
        return out
    raise ValueError(f"unknown vocab source {source!r}; expected one of {VOCAB_SOURCES}")


def build_vocab(
    records: list[SampleRecord],
    source: str = "tokens",
    min_freq: int = 1,
    path_params: dict | None = None,
) -> Vocabulary:
    """Frequency-thresholded vocabulary over a corpus field.

    Indices are assigned by descending frequency then lexicographic order,
    after the reserved specials.  ``path_params`` feeds the path-context
    extractor when the source is path-based.
    """
    if not records:
        raise ValueError("records must be non-empty")

    def stream():
        for record in records:
            yield from record_strings(record, source, path_params)

    return Vocabulary.from_strings(stream(), min_freq=min_freq)
