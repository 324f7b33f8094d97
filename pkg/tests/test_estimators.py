import numpy as np
import pytest
from sklearn.base import clone

from astreg.models import MODEL_KINDS, build_estimator
from astreg.validation import check_records


class TestSklearnProtocol:
    @pytest.mark.parametrize("kind", MODEL_KINDS)
    def test_get_set_params_round_trip(self, kind):
        est = build_estimator(kind, epochs=7, lr=2e-3, seed=4)
        params = est.get_params()
        assert params["epochs"] == 7
        assert params["lr"] == 2e-3
        rebuilt = type(est)(**params)
        assert rebuilt.get_params() == params

    def test_clone_preserves_params(self):
        est = build_estimator("dual", epochs=3, seed=9)
        cloned = clone(est)
        assert cloned.get_params() == est.get_params()

    def test_set_params_chains(self):
        est = build_estimator("gcn")
        est.set_params(epochs=2, lr=0.5)
        assert est.epochs == 2 and est.lr == 0.5

    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="unknown model kind"):
            build_estimator("mlp")


class TestFitPredict:
    def test_predict_before_fit_raises(self, small_corpus):
        est = build_estimator("tbcnn")
        from sklearn.exceptions import NotFittedError

        with pytest.raises(NotFittedError):
            est.predict(small_corpus)

    def test_fit_requires_targets(self):
        from astreg.corpus import generate_synthetic

        raw = generate_synthetic(4, seed=0)  # targets unset
        est = build_estimator("tbcnn", epochs=1)
        with pytest.raises(ValueError, match="target"):
            est.fit(raw)

    def test_empty_records_rejected(self):
        with pytest.raises(ValueError):
            check_records([])

    def test_non_record_input_rejected(self):
        with pytest.raises(TypeError):
            check_records([{"id": "x"}])

    def test_fit_returns_self_and_predicts(self, small_corpus):
        est = build_estimator("code2vec", epochs=1, seed=0)
        assert est.fit(small_corpus) is est
        preds = est.predict(small_corpus)
        assert preds.shape == (len(small_corpus),)
        assert np.isfinite(preds).all()

    def test_score_is_r2(self, small_corpus):
        est = build_estimator("tbcnn", epochs=30, lr=3e-3, seed=0,
                              embed_dim=8, conv_dim=12)
        est.fit(small_corpus)
        targets = np.array([r.target for r in small_corpus])
        score = est.score(small_corpus, targets)
        preds = est.predict(small_corpus)
        expected = 1 - ((targets - preds) ** 2).sum() / ((targets - targets.mean()) ** 2).sum()
        assert score == pytest.approx(expected)

    def test_fine_tune_keeps_vocabulary(self, small_corpus):
        from astreg.corpus import generate_synthetic
        from astreg.scaling import fit_and_apply_scaler

        est = build_estimator("tbcnn", epochs=2, seed=0, embed_dim=8, conv_dim=12)
        est.fit(small_corpus)
        vocab_before = dict(est.vocab_.entries)
        extra = generate_synthetic(6, seed=99)
        fit_and_apply_scaler(extra, [extra])
        history = est.fine_tune(extra, epochs=2)
        assert len(history) == 2
        assert est.vocab_.entries == vocab_before
