"""Timeout-based session identification keyed on (IP, user-agent)."""

from __future__ import annotations

import hashlib
import statistics
from dataclasses import dataclass
from typing import Sequence

from .log_ingest import LogEntry, ResourceClass

DEFAULT_TIMEOUT = 1800
DEFAULT_MIN_REQUESTS = 3


class EmptyInput(ValueError):
    pass


@dataclass(frozen=True, order=True)
class UserKey:
    ip: str
    user_agent: str

    @classmethod
    def of(cls, entry: LogEntry) -> "UserKey":
        return cls(entry.ip, entry.user_agent or "")


def session_id(key: UserKey, first_epoch: int) -> str:
    h = hashlib.sha1(f"{key.ip}\x00{key.user_agent}\x00{first_epoch}".encode("utf-8"))
    return h.hexdigest()[:16]


@dataclass(frozen=True)
class Session:
    id: str
    key: UserKey
    requests: tuple[tuple[LogEntry, ResourceClass], ...]
    indexes: tuple[int, ...]  # ordinal positions in the sessionized input

    @property
    def n(self) -> int:
        return len(self.requests)

    @property
    def start(self) -> int:
        return self.requests[0][0].epoch

    @property
    def end(self) -> int:
        return self.requests[-1][0].epoch

    @property
    def entries(self) -> list[LogEntry]:
        return [e for e, _ in self.requests]


def sessionize(
    entries: Sequence[tuple[LogEntry, ResourceClass]],
    timeout: int = DEFAULT_TIMEOUT,
    min_requests: int = DEFAULT_MIN_REQUESTS,
) -> list[Session]:
    """Split each key's click stream where the gap strictly exceeds ``timeout``.

    Groups shorter than ``min_requests`` are dropped after splitting.
    """
    buckets: dict[UserKey, list[int]] = {}
    for i, (entry, _) in enumerate(entries):
        buckets.setdefault(UserKey.of(entry), []).append(i)

    sessions: list[Session] = []
    for key in sorted(buckets):
        idx = sorted(buckets[key], key=lambda i: entries[i][0].epoch)  # stable
        group = [idx[0]]
        groups = [group]
        for prev, cur in zip(idx, idx[1:]):
            if entries[cur][0].epoch - entries[prev][0].epoch > timeout:
                group = [cur]
                groups.append(group)
            else:
                group.append(cur)
        for g in groups:
            if len(g) < min_requests:
                continue
            reqs = tuple(entries[i] for i in g)
            sessions.append(Session(session_id(key, reqs[0][0].epoch), key, reqs, tuple(g)))
    return sessions


@dataclass(frozen=True)
class SummaryStats:
    sessions: int
    mean_requests: float
    median_requests: float
    mean_duration: float
    median_duration: float
    mean_gap: float
    unique_articles: int


def session_stats(sessions: Sequence[Session]) -> SummaryStats:
    if not sessions:
        raise EmptyInput("no sessions")
    counts = [s.n for s in sessions]
    durations = [s.end - s.start for s in sessions]
    gaps = [b[0].epoch - a[0].epoch for s in sessions for a, b in zip(s.requests, s.requests[1:])]
    articles = {rc.article_id for s in sessions for _, rc in s.requests if rc.article_id is not None}
    return SummaryStats(
        sessions=len(sessions),
        mean_requests=statistics.fmean(counts),
        median_requests=float(statistics.median(counts)),
        mean_duration=statistics.fmean(durations),
        median_duration=float(statistics.median(durations)),
        mean_gap=statistics.fmean(gaps) if gaps else 0.0,
        unique_articles=len(articles),
    )
