"""Confusion-matrix metrics with robot as the positive class."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np


class LengthMismatch(ValueError):
    pass


def _ratio(a: float, b: float) -> float:
    return a / b if b else 0.0


@dataclass(frozen=True)
class Metrics:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def precision(self) -> float:
        return _ratio(self.tp, self.tp + self.fp)

    @property
    def recall(self) -> float:
        return _ratio(self.tp, self.tp + self.fn)

    tpr = recall

    @property
    def tnr(self) -> float:
        return _ratio(self.tn, self.tn + self.fp)

    @property
    def f_measure(self) -> float:
        return _ratio(2 * self.precision * self.recall, self.precision + self.recall)

    @property
    def balanced_accuracy(self) -> float:
        return (self.tpr + self.tnr) / 2

    @property
    def g_mean(self) -> float:
        return math.sqrt(self.tpr * self.tnr)

    def as_dict(self) -> dict:
        return {**asdict(self), "precision": self.precision, "recall": self.recall,
                "tnr": self.tnr, "f_measure": self.f_measure,
                "balanced_accuracy": self.balanced_accuracy, "g_mean": self.g_mean}


def _as_binary(v) -> np.ndarray:
    arr = np.asarray(v)
    if arr.dtype.kind in "US":
        return (arr == "robot").astype(np.int64)
    return arr.astype(np.int64)


def evaluate(preds, truth) -> Metrics:
    p, t = _as_binary(preds), _as_binary(truth)
    if p.shape != t.shape:
        raise LengthMismatch(f"{p.shape[0]} predictions vs {t.shape[0]} labels")
    if p.size == 0:
        raise LengthMismatch("nothing to evaluate")
    return Metrics(
        tp=int(np.sum((p == 1) & (t == 1))),
        fp=int(np.sum((p == 1) & (t == 0))),
        tn=int(np.sum((p == 0) & (t == 0))),
        fn=int(np.sum((p == 0) & (t == 1))),
    )


def format_report(sections: dict[str, Metrics], extra: dict[str, object] | None = None) -> str:
    """key=value lines, one block per named section."""
    lines = [f"{k}={v}" for k, v in sorted((extra or {}).items())]
    for name, m in sections.items():
        for key, val in m.as_dict().items():
            lines.append(f"{name}.{key}={val!r}" if isinstance(val, float) else f"{name}.{key}={val}")
    return "\n".join(lines) + "\n"


def parse_report(text: str) -> dict[str, str]:
    out = {}
    for line in text.splitlines():
        if line and not line.startswith("#"):
            k, _, v = line.partition("=")
            out[k] = v
    return out


def report_json(sections: dict[str, Metrics], extra: dict[str, object] | None = None) -> str:
    return json.dumps({"meta": extra or {}, "metrics": {k: m.as_dict() for k, m in sections.items()}},
                      indent=2, sort_keys=True) + "\n"
