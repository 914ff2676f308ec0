"""Session feature tables, the labeled dataset, and the time-ordered split."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ..semantic_features import SEMANTIC_FEATURE_NAMES
from ..simple_features import SIMPLE_FEATURE_NAMES

FEATURE_NAMES: tuple[str, ...] = SIMPLE_FEATURE_NAMES + SEMANTIC_FEATURE_NAMES
FEATURE_SETS = {
    "simple": SIMPLE_FEATURE_NAMES,
    "semantic": SEMANTIC_FEATURE_NAMES,
    "all": FEATURE_NAMES,
}
TABLE_MAGIC = "# robotsem-dataset 1"
PS_IMPUTE = 1.0


class EmptyDataset(ValueError):
    pass


@dataclass
class FeatureTable:
    """All sessions with their 18 features; ``label`` may be ``unlabeled``."""

    session_ids: list[str]
    timestamps: np.ndarray  # session start, epoch seconds
    X: np.ndarray  # (n, 18), NaN marks a missing value
    label: list[str]
    label_stage: list[str]
    label_evidence: list[str]
    coverage: np.ndarray
    feature_names: tuple[str, ...] = FEATURE_NAMES
    meta: dict[str, str] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.session_ids)

    @property
    def missing(self) -> np.ndarray:
        return np.isnan(self.X)

    def take(self, idx: Sequence[int] | np.ndarray) -> "FeatureTable":
        idx = np.asarray(idx, dtype=np.int64)
        return FeatureTable(
            [self.session_ids[i] for i in idx], self.timestamps[idx], self.X[idx],
            [self.label[i] for i in idx], [self.label_stage[i] for i in idx],
            [self.label_evidence[i] for i in idx], self.coverage[idx],
            self.feature_names, dict(self.meta))

    def labeled(self) -> "LabeledDataset":
        keep = [i for i, lab in enumerate(self.label) if lab in ("robot", "human")]
        t = self.take(keep)
        y = np.array([1 if lab == "robot" else 0 for lab in t.label], dtype=np.int64)
        return LabeledDataset(t.session_ids, t.timestamps, t.X, y, t.feature_names)


@dataclass
class LabeledDataset:
    session_ids: list[str]
    timestamps: np.ndarray
    X: np.ndarray
    y: np.ndarray  # 1 = robot (positive class), 0 = human
    feature_names: tuple[str, ...] = FEATURE_NAMES

    def __post_init__(self):
        if not set(np.unique(self.y)) <= {0, 1}:
            raise ValueError("labels must be binary 0/1")
        if self.X.shape != (len(self.session_ids), len(self.feature_names)):
            raise ValueError("feature matrix shape does not match ids/feature names")

    def __len__(self) -> int:
        return len(self.session_ids)

    @property
    def missing(self) -> np.ndarray:
        return np.isnan(self.X)

    def take(self, idx) -> "LabeledDataset":
        idx = np.asarray(idx, dtype=np.int64)
        return LabeledDataset([self.session_ids[i] for i in idx], self.timestamps[idx],
                              self.X[idx], self.y[idx], self.feature_names)

    def select(self, names: Sequence[str] | str) -> "LabeledDataset":
        """Restrict to a named feature set or an explicit list of feature names."""
        if isinstance(names, str):
            names = FEATURE_SETS[names]
        cols = [self.feature_names.index(n) for n in names]
        return LabeledDataset(self.session_ids, self.timestamps, self.X[:, cols], self.y, tuple(names))

    def imputed(self) -> np.ndarray:
        """Feature matrix with missing page similarity set to 1.0."""
        X = self.X.copy()
        if "page_similarity" in self.feature_names:
            j = self.feature_names.index("page_similarity")
            X[np.isnan(X[:, j]), j] = PS_IMPUTE
        if np.isnan(X).any():
            raise ValueError("unexpected missing values outside page_similarity")
        return X


def time_ordered_split(ds: LabeledDataset, train_frac: float = 0.7) -> tuple[LabeledDataset, LabeledDataset]:
    if len(ds) == 0:
        raise EmptyDataset("cannot split an empty dataset")
    if not 0 < train_frac < 1:
        raise ValueError("train_frac must lie in (0, 1)")
    order = np.argsort(ds.timestamps, kind="stable")
    # guard against 0.7 * N landing a hair above an integer
    n_train = min(len(ds), math.ceil(train_frac * len(ds) - 1e-9))
    return ds.take(order[:n_train]), ds.take(order[n_train:])


# --------------------------------------------------------------------------
# table IO: a '#' provenance line, then a tab-separated header and rows.
# Missing values are empty cells.

_TAIL = ("label", "label_stage", "label_evidence", "timestamp", "coverage")


def _fmt(v: float) -> str:
    if math.isnan(v):
        return ""
    if float(v).is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def write_table(table: FeatureTable, path: str | Path, **meta) -> None:
    info = {**table.meta, **{k: str(v) for k, v in meta.items()}}
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(TABLE_MAGIC + "".join(f" {k}={v}" for k, v in sorted(info.items())) + "\n")
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(("session_id",) + tuple(table.feature_names) + _TAIL)
        for i, sid in enumerate(table.session_ids):
            w.writerow([sid] + [_fmt(v) for v in table.X[i]] + [
                table.label[i], table.label_stage[i], table.label_evidence[i],
                str(int(table.timestamps[i])), repr(float(table.coverage[i]))])


def read_table(path: str | Path) -> FeatureTable:
    with open(path, encoding="utf-8", newline="") as fh:
        first = fh.readline().rstrip("\n")
        if not first.startswith(TABLE_MAGIC):
            raise ValueError(f"{path}: not a robotsem dataset table")
        meta = dict(kv.split("=", 1) for kv in first[len(TABLE_MAGIC):].split())
        rows = list(csv.reader(fh, delimiter="\t"))
    header = rows[0]
    names = tuple(header[1:-len(_TAIL)])
    if tuple(header[-len(_TAIL):]) != _TAIL:
        raise ValueError(f"{path}: unexpected trailing columns {header[-len(_TAIL):]}")
    body = rows[1:]
    nf = len(names)
    X = np.array([[float(c) if c != "" else math.nan for c in r[1:1 + nf]] for r in body],
                 dtype=np.float64).reshape(len(body), nf)
    return FeatureTable(
        session_ids=[r[0] for r in body],
        timestamps=np.array([int(r[1 + nf + 3]) for r in body], dtype=np.int64),
        X=X,
        label=[r[1 + nf] for r in body],
        label_stage=[r[1 + nf + 1] for r in body],
        label_evidence=[r[1 + nf + 2] for r in body],
        coverage=np.array([float(r[1 + nf + 4]) for r in body]),
        feature_names=names,
        meta=meta,
    )
