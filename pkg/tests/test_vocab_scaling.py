import logging

import numpy as np
import pytest

from astreg.corpus import generate_synthetic
from astreg.scaling import TargetScaler, fit_and_apply_scaler
from astreg.vocab import CLS, PAD, SEP, SPECIALS, UNK, Vocabulary, build_vocab


class TestVocabulary:
    def test_frequency_threshold(self):
        vocab = Vocabulary.from_strings(["a", "a", "a", "b"], min_freq=2)
        assert "a" in vocab.entries
        assert "b" not in vocab.entries
        assert vocab.lookup("b") == vocab.unk_id

    def test_empty_stream_gives_specials_only(self):
        vocab = Vocabulary.from_strings([])
        assert len(vocab) == len(SPECIALS)
        assert set(vocab.entries) == set(SPECIALS)

    def test_specials_occupy_lowest_indices(self):
        vocab = Vocabulary.from_strings(["x", "y"])
        assert [vocab.entries[s] for s in (PAD, UNK, CLS, SEP)] == [0, 1, 2, 3]
        assert sorted(vocab.entries.values()) == list(range(len(vocab)))

    def test_order_by_frequency_then_lexicographic(self):
        vocab = Vocabulary.from_strings(["b", "b", "a", "a", "c"])
        base = len(SPECIALS)
        assert vocab.entries["a"] == base
        assert vocab.entries["b"] == base + 1
        assert vocab.entries["c"] == base + 2

    def test_node_label_vocab_covers_synthesis_alphabet(self):
        records = generate_synthetic(200, seed=1)
        vocab = build_vocab(records, source="node_labels")
        assert len(vocab) == 20 + len(SPECIALS)

    def test_unknown_source_rejected(self):
        records = generate_synthetic(2, seed=0)
        with pytest.raises(ValueError):
            build_vocab(records, source="bogus")

    def test_path_sources(self):
        records = generate_synthetic(5, seed=2)
        paths = build_vocab(records, source="path_keys")
        values = build_vocab(records, source="terminal_values")
        assert len(paths) > len(SPECIALS)
        assert len(values) > len(SPECIALS)


class TestTargetScaler:
    def test_log_symmetry(self):
        scaler = TargetScaler("log_min_max").fit([10.0, 100.0, 1000.0])
        out = scaler.transform([10.0, 100.0, 1000.0])
        assert out == pytest.approx([0.0, 0.5, 1.0])

    def test_degenerate_range(self, caplog):
        with caplog.at_level(logging.WARNING):
            scaler = TargetScaler("log_min_max").fit([42.0])
        assert scaler.degenerate
        assert scaler.transform([42.0])[0] == 0.5
        assert any("degenerate" in r.message for r in caplog.records)

    def test_round_trip_identity(self, rng):
        for scheme in ("log_min_max", "min_max", "identity"):
            values = rng.uniform(0.5, 5000.0, size=100)
            scaler = TargetScaler(scheme).fit(values)
            back = scaler.inverse_transform(scaler.transform(values))
            assert np.allclose(back, values, rtol=1e-9)

    def test_log_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            TargetScaler("log_min_max").fit([0.0, 1.0])

    def test_unknown_scheme(self):
        with pytest.raises(ValueError):
            TargetScaler("sqrt")


class TestFitAndApply:
    def test_train_only_fit_and_application(self):
        records = generate_synthetic(20, seed=3)
        train, test = records[:15], records[15:]
        scaler = fit_and_apply_scaler(train, [train, test])
        assert all(r.target is not None for r in records)
        t = np.array([r.target for r in train])
        assert t.min() == pytest.approx(0.0) and t.max() == pytest.approx(1.0)

    def test_test_records_do_not_move_fit(self):
        records = generate_synthetic(20, seed=3)
        train, test = records[:15], records[15:]
        clean = fit_and_apply_scaler(train, [train])
        poisoned_test = [r for r in test]
        for r in poisoned_test:
            r.runs_ms = tuple(v * 1e6 for v in r.runs_ms)  # sentinel poisoning
        poisoned = fit_and_apply_scaler(train, [train, poisoned_test])
        assert (clean.fitted_min, clean.fitted_max) == (poisoned.fitted_min, poisoned.fitted_max)
