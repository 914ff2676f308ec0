"""Classical per-session features (timing, repetition, status mix, content)."""

from __future__ import annotations

import math
from dataclasses import astuple, dataclass, fields

from .log_ingest import ResourceKind
from .sessionize import Session


@dataclass(frozen=True)
class SimpleFeatures:
    total_requests: int
    session_duration: float
    avg_time: float
    std_time: float
    repeated_requests: float
    http_2xx: float
    http_3xx: float
    http_4xx: float
    http_5xx: float
    pdf_requests: float
    unique_content: int
    multiple_countries: bool
    web_service: bool

    def as_floats(self) -> list[float]:
        return [float(v) for v in astuple(self)]


SIMPLE_FEATURE_NAMES = tuple(f.name for f in fields(SimpleFeatures))


def extract_simple(session: Session, repeat_includes_query: bool = True) -> SimpleFeatures:
    entries = session.entries
    n = len(entries)
    times = [e.epoch for e in entries]
    gaps = [b - a for a, b in zip(times, times[1:])]
    if gaps:
        avg = sum(gaps) / len(gaps)
        # population std over the observed gaps
        std = math.sqrt(sum((g - avg) ** 2 for g in gaps) / len(gaps))
    else:
        avg = std = 0.0

    seen: set[tuple[str, str]] = set()
    repeats = 0
    for e in entries:
        ident = (e.path if repeat_includes_query else e.path.split("?", 1)[0], e.method)
        if ident in seen:
            repeats += 1
        else:
            seen.add(ident)

    buckets = [0, 0, 0, 0]
    for e in entries:
        b = e.status // 100 - 2
        if 0 <= b < 4:
            buckets[b] += 1

    pdf = sum(1 for _, rc in session.requests if rc.kind is ResourceKind.FullTextPdf)
    articles = {rc.article_id for _, rc in session.requests if rc.article_id is not None}
    countries = {e.country for e in entries if e.country is not None}

    return SimpleFeatures(
        total_requests=n,
        session_duration=float(times[-1] - times[0]) if n else 0.0,
        avg_time=float(avg),
        std_time=float(std),
        repeated_requests=repeats / n if n else 0.0,
        http_2xx=buckets[0] / n if n else 0.0,
        http_3xx=buckets[1] / n if n else 0.0,
        http_4xx=buckets[2] / n if n else 0.0,
        http_5xx=buckets[3] / n if n else 0.0,
        pdf_requests=pdf / n if n else 0.0,
        unique_content=len(articles),
        multiple_countries=len(countries) > 1,
        web_service=any(e.via_web_service for e in entries),
    )
