"""Linear probing classifier.

A deliberately plain, fully deterministic logistic / multinomial regression
fit by full-batch gradient descent with a fixed L2 penalty. Convexity plus
a Lipschitz step size make the fit reproducible to the bit given identical
inputs, which the benchmark relies on. Follows the scikit-learn estimator
protocol so probes compose with pipelines and model selection.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin


def _softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


class LinearProbe(BaseEstimator, ClassifierMixin):
    """Logistic (binary) or multinomial (multi-class) linear classifier.

    Parameters mirror the benchmark defaults: L2 weight 1e-4, convergence at
    gradient norm 1e-6 or ``max_iter`` sweeps, whichever comes first.
    Features are standardized internally so the step size is well scaled.
    """

    def __init__(self, l2: float = 1e-4, max_iter: int = 4000, tol: float = 1e-6,
                 seed: int = 0, standardize: bool = True):
        self.l2 = l2
        self.max_iter = max_iter
        self.tol = tol
        self.seed = seed
        self.standardize = standardize

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y)
        if X.ndim != 2 or len(X) != len(y):
            raise ValueError("X must be (n_samples, n_features) matching y")
        self.classes_ = np.unique(y)
        if len(self.classes_) < 2:
            raise ValueError("probe training needs at least two classes present")

        if self.standardize:
            self.mean_ = X.mean(axis=0)
            self.scale_ = X.std(axis=0)
            self.scale_[self.scale_ < 1e-12] = 1.0
        else:
            self.mean_ = np.zeros(X.shape[1])
            self.scale_ = np.ones(X.shape[1])
        Xs = (X - self.mean_) / self.scale_

        n, d = Xs.shape
        binary = len(self.classes_) == 2
        n_out = 1 if binary else len(self.classes_)
        targets = (
            (y == self.classes_[1]).astype(np.float64)[:, None]
            if binary
            else np.eye(len(self.classes_))[np.searchsorted(self.classes_, y)]
        )

        # 1 / L step size from the logistic-Hessian bound c * lam_max(X^T X) / n + l2
        gram_eig = float(np.linalg.eigvalsh(Xs.T @ Xs / n)[-1])
        curvature = 0.25 if binary else 0.5
        lr = 1.0 / (curvature * gram_eig + self.l2 + 1e-12)

        W = np.zeros((d, n_out))
        b = np.zeros(n_out)
        for iteration in range(self.max_iter):
            logits = Xs @ W + b
            probs = 1.0 / (1.0 + np.exp(-logits)) if binary else _softmax(logits)
            err = (probs - targets) / n
            grad_w = Xs.T @ err + self.l2 * W
            grad_b = err.sum(axis=0)
            norm = np.sqrt((grad_w**2).sum() + (grad_b**2).sum())
            if norm < self.tol:
                break
            W -= lr * grad_w
            b -= lr * grad_b
        self.coef_ = W
        self.intercept_ = b
        self.n_iter_ = iteration + 1
        return self

    def decision_function(self, X):
        X = np.asarray(X, dtype=np.float64)
        Xs = (X - self.mean_) / self.scale_
        logits = Xs @ self.coef_ + self.intercept_
        return logits[:, 0] if logits.shape[1] == 1 else logits

    def predict_proba(self, X):
        logits = self.decision_function(X)
        if logits.ndim == 1:
            p1 = 1.0 / (1.0 + np.exp(-logits))
            return np.stack([1.0 - p1, p1], axis=1)
        return _softmax(logits)

    def predict(self, X):
        return self.classes_[self.predict_proba(X).argmax(axis=1)]

    def positive_scores(self, X) -> np.ndarray:
        """Ranking scores for the positive (respectively max) class."""
        logits = self.decision_function(X)
        return logits if logits.ndim == 1 else logits.max(axis=1)


def train_linear_probe(X, y, seed: int = 0, l2: float = 1e-4,
                       max_iter: int = 4000) -> LinearProbe:
    """Benchmark entry point: fit a probe with the standard settings."""
    return LinearProbe(l2=l2, max_iter=max_iter, seed=seed).fit(X, y)
