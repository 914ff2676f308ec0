"""Robot / human ground truth for sessions.

Stages, in order: the offline user-agent class database (Crawler -> robot),
the robot regex lists, the manual verdicts for Unknown user-agents, and
finally logged-in-user evidence for humans. Robot evidence always wins.
"""

from __future__ import annotations

import enum
import logging
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .sessionize import Session

log = logging.getLogger(__name__)


class UAClass(enum.Enum):
    CloudClient = "CloudClient"
    Console = "Console"
    OfflineBrowser = "OfflineBrowser"
    LinkChecker = "LinkChecker"
    Crawler = "Crawler"
    FeedFetcher = "FeedFetcher"
    Library = "Library"
    MobileBrowser = "MobileBrowser"
    Validator = "Validator"
    Browser = "Browser"
    Unknown = "Unknown"
    Other = "Other"


class Verdict(enum.Enum):
    Robot = "robot"
    Human = "human"
    Unlabeled = "unlabeled"


class Stage(enum.Enum):
    UAClassifier = "UAClassifier"
    RobotList = "RobotList"
    ManualList = "ManualList"
    LoggedInUser = "LoggedInUser"
    NONE = "None"


class InvalidRegex(ValueError):
    pass


@dataclass(frozen=True)
class SessionLabel:
    verdict: Verdict
    stage: Stage
    evidence: str = ""

    def __post_init__(self):
        if self.verdict is Verdict.Robot and self.stage not in (
                Stage.UAClassifier, Stage.RobotList, Stage.ManualList):
            raise ValueError("robot verdict needs a robot stage")
        if self.verdict is Verdict.Human and self.stage is not Stage.LoggedInUser:
            raise ValueError("human verdict needs logged-in evidence")


def _data_lines(name: str) -> list[str]:
    return resources.files("robotsem.data").joinpath(name).read_text(encoding="utf-8").splitlines()


def _lines(source: str | Path | Iterable[str]) -> list[str]:
    if isinstance(source, (str, Path)):
        return Path(source).read_text(encoding="utf-8").splitlines()
    return list(source)


def _compile(pattern: str) -> re.Pattern:
    try:
        return re.compile(pattern, re.IGNORECASE)
    except re.error as exc:
        raise InvalidRegex(f"{pattern!r}: {exc}") from None


@dataclass
class UAPatternDB:
    patterns: list[tuple[UAClass, re.Pattern]]

    @classmethod
    def load(cls, source: str | Path | Iterable[str] | None = None) -> "UAPatternDB":
        lines = _data_lines("ua_patterns.tsv") if source is None else _lines(source)
        pats = []
        for line in lines:
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            name, _, regex = line.partition("\t")
            try:
                ua_class = UAClass[name.strip()]
            except KeyError:
                raise ValueError(f"unknown user-agent class {name!r}") from None
            pats.append((ua_class, _compile(regex.strip())))
        return cls(pats)


def classify_user_agent(ua: str | None, db: UAPatternDB) -> UAClass:
    if not ua:
        return UAClass.Unknown
    for ua_class, rx in db.patterns:
        if rx.search(ua):
            return ua_class
    return UAClass.Unknown


@dataclass
class RobotLists:
    """Ordered named regex lists with exclusions already removed."""

    lists: list[tuple[str, list[tuple[str, re.Pattern]]]]
    excluded: list[str] = field(default_factory=list)

    @classmethod
    def load(
        cls,
        sources: Sequence[tuple[str, str | Path | Iterable[str]]] | None = None,
        exclusions: str | Path | Iterable[str] | None = None,
    ) -> "RobotLists":
        if sources is None:
            sources = [("counter", _data_lines("counter_robots.txt")),
                       ("analytics", _data_lines("analytics_bots.txt"))]
        excl_lines = _data_lines("robot_exclusions.txt") if exclusions is None else _lines(exclusions)
        excl = {ln.strip() for ln in excl_lines if ln.strip() and not ln.lstrip().startswith("#")}
        for e in excl:
            _compile(e)
        out, removed = [], []
        for name, src in sources:
            pats = []
            for ln in _lines(src):
                ln = ln.strip()
                if not ln or ln.startswith("#"):
                    continue
                if ln in excl:
                    removed.append(ln)
                    continue
                pats.append((ln, _compile(ln)))
            out.append((name, pats))
        return cls(out, removed)


def match_robot_lists(ua: str | None, lists: RobotLists) -> str | None:
    """First matching pattern across the lists, as ``list:pattern``."""
    if ua is None:
        ua = ""
    for name, pats in lists.lists:
        for text, rx in pats:
            if rx.search(ua):
                return f"{name}:{text}"
    return None


def load_manual_map(source: str | Path | Iterable[str] | None = None) -> dict[str, Verdict]:
    lines = _data_lines("manual_labels.tsv") if source is None else _lines(source)
    out = {}
    for ln in lines:
        if not ln.strip() or ln.startswith("#"):
            continue
        ua, _, verdict = ln.rstrip("\n").rpartition("\t")
        out[ua] = Verdict(verdict.strip().lower())
    return out


@dataclass
class LabelReport:
    robot: int = 0
    human: int = 0
    unlabeled: int = 0
    conflicts: int = 0  # robot evidence and a logged-in user on the same session
    by_stage: dict[str, int] = field(default_factory=dict)


def label_one(
    ua: str | None,
    logged_in: bool,
    db: UAPatternDB,
    lists: RobotLists,
    manual_map: Mapping[str, Verdict],
) -> SessionLabel:
    ua_class = classify_user_agent(ua, db)
    if ua_class is UAClass.Crawler:
        return SessionLabel(Verdict.Robot, Stage.UAClassifier, ua_class.value)
    hit = match_robot_lists(ua, lists)
    if hit is not None:
        return SessionLabel(Verdict.Robot, Stage.RobotList, hit)
    if ua_class is UAClass.Unknown and manual_map.get(ua or "") is Verdict.Robot:
        return SessionLabel(Verdict.Robot, Stage.ManualList, ua or "")
    if logged_in:
        return SessionLabel(Verdict.Human, Stage.LoggedInUser, "username")
    # browser-looking agents without login stay unlabeled: agents can be spoofed
    return SessionLabel(Verdict.Unlabeled, Stage.NONE, ua_class.value)


def label_sessions(
    sessions: Sequence[Session],
    db: UAPatternDB | None = None,
    lists: RobotLists | None = None,
    manual_map: Mapping[str, Verdict] | None = None,
    app_evidence: Sequence[bool] | None = None,
) -> tuple[list[SessionLabel], LabelReport]:
    """Label every session; ``app_evidence[i]`` overrides username detection."""
    db = db or UAPatternDB.load()
    lists = lists or RobotLists.load()
    manual_map = load_manual_map() if manual_map is None else manual_map
    report = LabelReport()
    labels = []
    for i, s in enumerate(sessions):
        logged_in = (app_evidence[i] if app_evidence is not None
                     else any(e.username for e in s.entries))
        lab = label_one(s.key.user_agent, logged_in, db, lists, manual_map)
        if lab.verdict is Verdict.Robot and logged_in:
            report.conflicts += 1
        setattr(report, lab.verdict.value, getattr(report, lab.verdict.value) + 1)
        report.by_stage[lab.stage.value] = report.by_stage.get(lab.stage.value, 0) + 1
        labels.append(lab)
    if report.conflicts:
        log.info("%d sessions had both robot and logged-in evidence; labeled robot", report.conflicts)
    return labels, report
