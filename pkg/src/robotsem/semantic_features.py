"""Topic-coherence features of a session's requested documents."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .sessionize import Session
from .topic_model import SparseTopicVector

SEMANTIC_FEATURE_NAMES = (
    "total_topics",
    "unique_topics",
    "page_similarity",
    "page_variance",
    "boolean_page_variance",
)


@dataclass(frozen=True)
class SemanticFeatures:
    total_topics: int
    unique_topics: int
    page_similarity: float | None  # None when total_topics == 0
    page_variance: float
    boolean_page_variance: float
    coverage: float = 1.0

    def as_floats(self) -> list[float]:
        ps = math.nan if self.page_similarity is None else self.page_similarity
        return [float(self.total_topics), float(self.unique_topics), ps,
                self.page_variance, self.boolean_page_variance]


def _mean_distance(rows: list[dict[int, float]], support: list[int]) -> float:
    n = len(rows)
    # fsum is correctly rounded, which makes the result exactly invariant
    # under row permutation and row duplication
    mean = {j: math.fsum(r.get(j, 0.0) for r in rows) / n for j in support}
    dists = (math.sqrt(math.fsum((r.get(j, 0.0) - mean[j]) ** 2 for j in support)) for r in rows)
    return math.fsum(dists) / n


def extract_semantic(vectors: Sequence[SparseTopicVector], n_requests: int | None = None) -> SemanticFeatures:
    """Features over the mapped pages only; ``n_requests`` feeds ``coverage``."""
    if n_requests is None:
        n_requests = len(vectors)
    if not vectors:
        return SemanticFeatures(0, 0, None, 0.0, 0.0, 0.0)

    rows = [{t: p for t, p in v.entries if p != 0} for v in vectors]
    tt = sum(len(r) for r in rows)
    support = sorted(set().union(*rows))
    ut = len(support)
    pv = _mean_distance(rows, support)
    bpv = _mean_distance([dict.fromkeys(r, 1.0) for r in rows], support)
    return SemanticFeatures(
        total_topics=tt,
        unique_topics=ut,
        page_similarity=ut / tt if tt else None,
        page_variance=pv,
        boolean_page_variance=bpv,
        coverage=len(vectors) / n_requests if n_requests else 0.0,
    )


def session_semantics(session: Session, table: Mapping[str, SparseTopicVector]) -> SemanticFeatures:
    vectors = [table[rc.article_id] for _, rc in session.requests
               if rc.article_id is not None and rc.article_id in table]
    return extract_semantic(vectors, session.n)
