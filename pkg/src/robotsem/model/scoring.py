"""Univariate feature scores: one-way ANOVA F and the frequency chi-square."""

from __future__ import annotations

import numpy as np

from .gbdt import SingleClassInput


class NegativeFeature(ValueError):
    def __init__(self, name: str):
        super().__init__(f"feature {name!r} has negative values")
        self.name = name


def f_scores(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Per-column F = between-group mean square / within-group mean square.

    0/0 (a constant column) scores 0; zero within-group variance with
    separated means scores +inf.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    classes = np.unique(y)
    if len(classes) < 2:
        raise SingleClassInput("F-test needs two classes")
    n, g = X.shape[0], len(classes)
    grand = X.mean(axis=0)
    ss_between = np.zeros(X.shape[1])
    ss_within = np.zeros(X.shape[1])
    for c in classes:
        Xc = X[y == c]
        mc = Xc.mean(axis=0)
        ss_between += len(Xc) * (mc - grand) ** 2
        ss_within += ((Xc - mc) ** 2).sum(axis=0)
    msb = ss_between / (g - 1)
    msw = ss_within / (n - g)
    with np.errstate(divide="ignore", invalid="ignore"):
        F = msb / msw
    F[(msb == 0) | ~np.isfinite(msb)] = 0.0
    # a tiny msb/msw pair left over from float cancellation is still 0/0
    F[np.isnan(F)] = 0.0
    return F


def chi2_stats(X: np.ndarray, y: np.ndarray, names=None) -> np.ndarray:
    """Sum over classes of (observed - expected)^2 / expected, using feature sums."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if (X < 0).any():
        col = int(np.flatnonzero((X < 0).any(axis=0))[0])
        raise NegativeFeature(names[col] if names is not None else f"f{col}")
    classes = np.unique(y)
    if len(classes) < 2:
        raise SingleClassInput("chi-square needs two classes")
    observed = np.stack([X[y == c].sum(axis=0) for c in classes])
    class_prob = np.array([np.mean(y == c) for c in classes])
    expected = class_prob[:, None] * X.sum(axis=0)[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(expected > 0, (observed - expected) ** 2 / expected, 0.0)
    return terms.sum(axis=0)


def _ranked(names, scores) -> list[tuple[str, float]]:
    order = sorted(range(len(names)), key=lambda i: (-scores[i], i))
    return [(names[i], float(scores[i])) for i in order]


def anova_f_scores(ds) -> list[tuple[str, float]]:
    """Descending (feature, F) pairs for a LabeledDataset."""
    return _ranked(ds.feature_names, f_scores(ds.imputed(), ds.y))


def chi2_scores(ds) -> list[tuple[str, float]]:
    return _ranked(ds.feature_names, chi2_stats(ds.imputed(), ds.y, ds.feature_names))
