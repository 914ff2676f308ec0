"""Balanced-accuracy learning curve over time-ordered training prefixes."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dataset import LabeledDataset, time_ordered_split
from .gbdt import GBDTParams, predict, train_gbdt
from .metrics import evaluate

log = logging.getLogger(__name__)

DEFAULT_FRACTIONS = tuple(round(0.1 * i, 1) for i in range(1, 11))


@dataclass(frozen=True)
class CurvePoint:
    fraction: float
    n_train: int
    train_metric: float
    test_metric: float


def fit_and_score(train: LabeledDataset, test: LabeledDataset, params: GBDTParams, backend=None):
    """Train on ``train`` and return (model, train Metrics, test Metrics)."""
    model = train_gbdt(train.imputed(), train.y, params, train.feature_names, backend=backend)
    return (model,
            evaluate(predict(model, train.imputed()), train.y),
            evaluate(predict(model, test.imputed()), test.y))


def learning_curve(
    ds: LabeledDataset,
    params: GBDTParams = GBDTParams(),
    fractions: Sequence[float] = DEFAULT_FRACTIONS,
    train_frac: float = 0.7,
    backend: str | None = None,
) -> list[CurvePoint]:
    train, test = time_ordered_split(ds, train_frac)
    points = []
    for frac in fractions:
        n = min(len(train), max(1, math.ceil(frac * len(train) - 1e-9)))
        sub = train.take(np.arange(n))  # train is already time-ordered
        if len(np.unique(sub.y)) < 2:
            log.warning("skipping fraction %.2f: %d rows hold a single class", frac, n)
            continue
        _, m_train, m_test = fit_and_score(sub, test, params, backend)
        points.append(CurvePoint(float(frac), n, m_train.balanced_accuracy, m_test.balanced_accuracy))
    return points
