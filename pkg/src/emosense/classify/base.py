from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import Label
from ..errors import DimensionMismatch
from .spec import ClassifierSpec

CLASSES = (Label.LOW, Label.HIGH)


@dataclass(frozen=True)
class Prediction:
    label: Label
    score: float
    tie: bool = False


@dataclass(frozen=True, eq=False)
class Model:
    """State shared by every trained classifier."""

    spec: ClassifierSpec
    target: str
    mask: tuple[str, ...]
    instance_ids: tuple[str, ...]  # training instances, in order

    @property
    def n_features(self) -> int:
        raise NotImplementedError

    def decide(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Vectorised prediction: ``(is_high, score, tie)`` arrays."""
        raise NotImplementedError

    def _check_dim(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.n_features:
            raise DimensionMismatch(f"model expects {self.n_features} features, got {X.shape[1]}")
        return X

    def predict(self, x) -> Prediction:
        high, score, tie = self.decide(self._check_dim(x))
        return Prediction(Label.HIGH if high[0] else Label.LOW, float(score[0]), bool(tie[0]))
