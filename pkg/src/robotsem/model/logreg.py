"""L2-regularised logistic regression baseline fitted by Newton iterations."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gbdt import SingleClassInput


@dataclass
class LogRegModel:
    coef: np.ndarray
    intercept: float
    mean: np.ndarray
    scale: np.ndarray

    def decision_function(self, X):
        Z = (np.asarray(X, dtype=np.float64) - self.mean) / self.scale
        return Z @ self.coef + self.intercept

    def predict_proba(self, X):
        return 1.0 / (1.0 + np.exp(-self.decision_function(X)))

    def predict(self, X):
        return (self.predict_proba(X) >= 0.5).astype(np.int64)


def train_logreg(X, y, l2: float = 1.0, max_iter: int = 50, tol: float = 1e-10) -> LogRegModel:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(np.unique(y)) < 2:
        raise SingleClassInput("logistic regression needs two classes")
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale == 0] = 1.0
    Z = np.hstack([(X - mean) / scale, np.ones((len(X), 1))])
    w = np.zeros(Z.shape[1])
    reg = np.full(Z.shape[1], l2)
    reg[-1] = 0.0  # intercept is not penalised
    for _ in range(max_iter):
        p = 1.0 / (1.0 + np.exp(-(Z @ w)))
        grad = Z.T @ (p - y) + reg * w
        H = (Z * (p * (1 - p))[:, None]).T @ Z + np.diag(reg) + 1e-9 * np.eye(len(w))
        step = np.linalg.solve(H, grad)
        w -= step
        if np.abs(step).max() < tol:
            break
    return LogRegModel(w[:-1], float(w[-1]), mean, scale)
