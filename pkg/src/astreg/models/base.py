"""Estimator base class: sklearn-style fit/predict over sample records."""

from __future__ import annotations

import zlib

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .. import autodiff as ad
from ..nn import Adam
from ..validation import check_records


def derive_seed(seed: int, *tags) -> int:
    """Stable sub-stream seed from a base seed and string/int tags."""
    h = zlib.crc32(str(seed).encode())
    for tag in tags:
        h = zlib.crc32(str(tag).encode(), h)
    return h & 0x7FFFFFFF


class BaseTreeRegressor(BaseEstimator, RegressorMixin):
    """Common training loop for every model kind.

    Subclasses implement ``_build`` (vocabularies and parameters from the
    training records), ``_prepare`` (record to cached model input),
    ``_forward`` (prepared input to a scalar prediction Tensor) and
    ``parameters_``.  Targets must already be normalized onto the records.

    Follows sklearn conventions: constructor arguments are stored verbatim,
    fitted state carries a trailing underscore, get_params/set_params and
    clone() work.
    """

    # subclass __init__ signatures define the hyperparameters; these names
    # are shared by all of them
    epochs: int
    lr: float
    batch_size: int
    seed: int
    stop_loss: float | None

    def fit(self, records, y=None):
        records = check_records(records, require_target=True)
        self.init_rng_ = np.random.default_rng(derive_seed(self.seed, "init"))
        self._build(records)
        self.loss_history_ = self._run_training(records, self.epochs, self.lr, "fit")
        return self

    def fine_tune(self, records, epochs: int, lr: float | None = None) -> list[float]:
        """Continue training the fitted model on new records; vocabularies are kept.

        Out-of-vocabulary strings in the new records resolve to [UNK].
        Returns the fine-tuning loss history.
        """
        check_is_fitted(self, "loss_history_")
        records = check_records(records, require_target=True)
        return self._run_training(records, epochs, lr if lr is not None else self.lr, "fine_tune")

    def _run_training(self, records, epochs: int, lr: float, stage: str) -> list[float]:
        prepared = [self._prepare(r) for r in records]
        targets = np.array([r.target for r in records], dtype=np.float64)
        optimizer = Adam(self.parameters_(), lr=lr)
        shuffle_rng = np.random.default_rng(derive_seed(self.seed, stage, "shuffle"))
        dropout_rng = np.random.default_rng(derive_seed(self.seed, stage, "dropout"))
        history: list[float] = []
        for _ in range(epochs):
            order = shuffle_rng.permutation(len(prepared))
            sq_sum = 0.0
            for start in range(0, len(order), self.batch_size):
                chunk = order[start : start + self.batch_size]
                loss = self._batch_loss(
                    [prepared[i] for i in chunk], targets[chunk], dropout_rng
                )
                loss.backward()
                optimizer.step()
                sq_sum += loss.item() * len(chunk)
            history.append(sq_sum / len(prepared))
            if self.stop_loss is not None and history[-1] <= self.stop_loss:
                break
        return history

    def predict(self, records) -> np.ndarray:
        check_is_fitted(self, "loss_history_")
        records = check_records(records)
        return np.array(
            [self._forward(self._prepare(r), training=False).item() for r in records]
        )

    def loss_on(self, record) -> ad.Tensor:
        """Eval-mode squared error on one record; the grad-check objective."""
        pred = self._forward(self._prepare(record), training=False)
        return ad.square(pred - float(record.target))

    def _batch_loss(self, prepared_batch, targets, rng) -> ad.Tensor:
        terms = [
            ad.square(self._forward(p, training=True, rng=rng) - float(t))
            for p, t in zip(prepared_batch, targets)
        ]
        total = terms[0]
        for term in terms[1:]:
            total = total + term
        return total * (1.0 / len(terms))

    # -- subclass surface --------------------------------------------------

    def _build(self, records) -> None:
        raise NotImplementedError

    def _prepare(self, record):
        raise NotImplementedError

    def _forward(self, prepared, training: bool, rng: np.random.Generator | None = None) -> ad.Tensor:
        raise NotImplementedError

    def parameters_(self) -> list[ad.Parameter]:
        raise NotImplementedError
