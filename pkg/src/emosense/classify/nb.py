"""Gaussian naive Bayes with a variance floor."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import Model


@dataclass(frozen=True, eq=False)
class NBModel(Model):
    priors: np.ndarray  # [P(Low), P(High)]
    means: np.ndarray  # (2, d)
    variances: np.ndarray  # (2, d)

    @property
    def n_features(self) -> int:
        return self.means.shape[1]

    def log_joint(self, X) -> np.ndarray:
        X = self._check_dim(X)
        with np.errstate(divide="ignore"):
            log_prior = np.log(self.priors)
        ll = -0.5 * (
            np.log(2 * np.pi * self.variances)[None, :, :]
            + (X[:, None, :] - self.means[None, :, :]) ** 2 / self.variances[None, :, :]
        ).sum(axis=2)
        return ll + log_prior[None, :]

    def posteriors(self, X) -> np.ndarray:
        lj = self.log_joint(X)
        m = lj.max(axis=1, keepdims=True)
        p = np.exp(lj - m)
        return p / p.sum(axis=1, keepdims=True)

    def decide(self, X):
        post = self.posteriors(X)
        tie = post[:, 1] == post[:, 0]
        high = post[:, 1] > post[:, 0]
        return high, np.where(high, post[:, 1], post[:, 0]), tie


def fit_nb(X: np.ndarray, y: np.ndarray, variance_floor: float):
    n, d = X.shape
    priors = np.zeros(2)
    means = np.zeros((2, d))
    variances = np.full((2, d), variance_floor)
    for c in (0, 1):
        rows = X[y == c]
        if len(rows) == 0:
            continue
        priors[c] = len(rows) / n
        means[c] = rows.mean(axis=0)
        variances[c] = np.maximum(((rows - means[c]) ** 2).mean(axis=0), variance_floor)
    return priors, means, variances
