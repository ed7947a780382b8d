"""Binary SVM trained with SMO, polynomial kernel ``(x.z + 1) ** e``.

Features are rescaled to [0, 1] with the training min/max; test inputs are
clipped to [-0.05, 1.05] after rescaling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._smo import smo_solve
from .base import Model

CLIP = (-0.05, 1.05)


def poly_kernel(A, B, exponent):
    G = A @ B.T + 1.0
    return G if exponent == 1.0 else np.power(G, exponent)


@dataclass(frozen=True)
class Normalizer:
    minimum: np.ndarray
    scale: np.ndarray  # 1 / range, 0 for constant features

    @classmethod
    def fit(cls, X):
        lo = X.min(axis=0)
        rng = X.max(axis=0) - lo
        scale = np.divide(1.0, rng, out=np.zeros_like(rng), where=rng > 0)
        return cls(lo, scale)

    def __call__(self, X, clip=False):
        Z = (X - self.minimum) * self.scale
        return np.clip(Z, *CLIP) if clip else Z


@dataclass(frozen=True, eq=False)
class SVMModel(Model):
    support_vectors: np.ndarray  # normalised, (m, d)
    coef: np.ndarray  # alpha_i * y_i
    alphas: np.ndarray
    labels: np.ndarray  # +-1
    bias: float
    normalizer: Normalizer
    converged: bool = True

    @property
    def n_features(self) -> int:
        return len(self.normalizer.minimum)

    def decision_function(self, X) -> np.ndarray:
        X = self._check_dim(X)
        Z = self.normalizer(X, clip=True)
        if len(self.coef) == 0:
            return np.full(len(Z), self.bias)
        K = poly_kernel(Z, self.support_vectors, self.spec["kernel_exponent"])
        return K @ self.coef + self.bias

    def decide(self, X):
        f = self.decision_function(X)
        return f > 0, f, f == 0


def fit_svm(X, y01, C=1.0, kernel_exponent=1.0, tolerance=1e-3, max_steps=1_000_000):
    """Train on rows ``X`` with 0/1 labels; returns the full dual solution."""
    norm = Normalizer.fit(X)
    Z = norm(X)
    y = np.where(y01 == 1, 1.0, -1.0)
    K = np.ascontiguousarray(poly_kernel(Z, Z, kernel_exponent))
    alpha, b, converged = smo_solve(K, y, float(C), float(tolerance), int(max_steps))
    return norm, Z, y, alpha, -b, converged, K


def kkt_violations(alpha, y, K, bias, C):
    """Per-example KKT violation of the trained dual solution (0 when satisfied)."""
    margin = y * (K @ (alpha * y) + bias)
    viol = np.zeros_like(margin)
    at_zero = alpha <= 0
    at_c = alpha >= C
    free = ~at_zero & ~at_c
    viol[at_zero] = np.maximum(1 - margin[at_zero], 0)
    viol[at_c] = np.maximum(margin[at_c] - 1, 0)
    viol[free] = np.abs(margin[free] - 1)
    return viol
