"""Access-log parsing and article-request filtering.

Lines follow the combined log format. The ``extended`` dialect accepts three
optional trailing application columns::

    ... "referer" "user-agent" "country" "username" web_service

where ``country`` and ``username`` are quoted (``"-"`` when absent) and
``web_service`` is ``0`` or ``1``.
"""

from __future__ import annotations

import enum
import gzip
import io
import re
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from importlib import resources
from pathlib import Path
from typing import IO, Iterable, Iterator, Sequence


class MalformedLine(ValueError):
    """A log record that cannot be parsed; ingest skips and counts it."""

    def __init__(self, column: str, reason: str):
        super().__init__(f"{column}: {reason}")
        self.column = column
        self.reason = reason


class InvalidRule(ValueError):
    pass


@dataclass(frozen=True)
class LogDialect:
    name: str = "combined"
    app_columns: bool = False


COMBINED = LogDialect("combined", app_columns=False)
EXTENDED = LogDialect("extended", app_columns=True)
DIALECTS = {d.name: d for d in (COMBINED, EXTENDED)}


@dataclass(frozen=True)
class LogEntry:
    ip: str
    timestamp: datetime  # tz-aware, UTC
    method: str
    path: str
    protocol: str
    status: int
    bytes: int | None
    referer: str | None = None
    user_agent: str | None = None
    country: str | None = None
    username: str | None = None
    via_web_service: bool = False
    tz_offset: int = 0  # original zone offset in seconds east of UTC

    @property
    def epoch(self) -> int:
        return int(self.timestamp.timestamp())


class ResourceKind(enum.Enum):
    AbstractHtml = "AbstractHtml"
    FullTextHtml = "FullTextHtml"
    FullTextPdf = "FullTextPdf"
    ReferencesHtml = "ReferencesHtml"
    SupplementaryHtml = "SupplementaryHtml"
    Other = "Other"


@dataclass(frozen=True)
class ResourceClass:
    kind: ResourceKind
    article_id: str | None = None

    def __post_init__(self):
        if (self.kind is ResourceKind.Other) != (self.article_id is None):
            raise ValueError("article_id must be set exactly when kind is not Other")


OTHER = ResourceClass(ResourceKind.Other)


# --------------------------------------------------------------------------
# line grammar

_QUOTED = r'"((?:[^"\\]|\\.)*)"'
_LINE_RE = re.compile(
    r"^(\S+) (\S+) (\S+) \[([^\]]+)\] "
    + _QUOTED
    + r" (\S+) (\S+) "
    + _QUOTED
    + " "
    + _QUOTED
    + r"(?: " + _QUOTED + " " + _QUOTED + r" (\S+))?\s*$"
)
_TIME_FMT = "%d/%b/%Y:%H:%M:%S %z"
_TOKEN_RE = re.compile(r"^[!#$%&'*+.^_`|~0-9A-Za-z-]+$")
_MONTHS = ("Jan", "Feb", "Mar", "Apr", "May", "Jun",
           "Jul", "Aug", "Sep", "Oct", "Nov", "Dec")


def _unescape(s: str) -> str:
    return re.sub(r"\\(.)", r"\1", s)


def _escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


def _opt(s: str) -> str | None:
    return None if s == "-" else _unescape(s)


def _parse_time(raw: str) -> tuple[datetime, int]:
    try:
        local = datetime.strptime(raw, _TIME_FMT)
    except ValueError as exc:
        raise MalformedLine("timestamp", str(exc)) from None
    offset = int(local.utcoffset().total_seconds())
    return local.astimezone(timezone.utc), offset


def format_time(ts: datetime, tz_offset: int = 0) -> str:
    local = ts.astimezone(timezone(timedelta(seconds=tz_offset)))
    sign = "+" if tz_offset >= 0 else "-"
    hh, mm = divmod(abs(tz_offset) // 60, 60)
    return (f"{local.day:02d}/{_MONTHS[local.month - 1]}/{local.year:04d}:"
            f"{local.hour:02d}:{local.minute:02d}:{local.second:02d} {sign}{hh:02d}{mm:02d}")


def parse_line(line: str, dialect: LogDialect = COMBINED) -> LogEntry:
    m = _LINE_RE.match(line.rstrip("\r\n"))
    if m is None:
        raise MalformedLine("line", "does not match the combined log grammar")
    (ip, _ident, authuser, raw_time, request, raw_status, raw_bytes,
     referer, agent, country, username, web_service) = m.groups()

    has_app = country is not None
    if has_app and not dialect.app_columns:
        raise MalformedLine("line", "trailing application columns in combined dialect")

    timestamp, offset = _parse_time(raw_time)

    parts = _unescape(request).split(" ")
    if len(parts) < 3:
        raise MalformedLine("request", "expected 'METHOD PATH PROTOCOL'")
    method, protocol = parts[0], parts[-1]
    path = " ".join(parts[1:-1])
    if not _TOKEN_RE.match(method):
        raise MalformedLine("method", "not an HTTP token")
    if not protocol.startswith("HTTP/"):
        raise MalformedLine("protocol", f"unexpected protocol {protocol!r}")
    if not path:
        raise MalformedLine("request", "empty path")

    if not raw_status.isdigit():
        raise MalformedLine("status", "not an integer")
    status = int(raw_status)
    if not 100 <= status <= 599:
        raise MalformedLine("status", "out of range")

    if raw_bytes == "-":
        nbytes = None
    elif raw_bytes.isdigit():
        nbytes = int(raw_bytes)
    else:
        raise MalformedLine("bytes", "not a non-negative integer")

    user = _opt(authuser)
    via_ws = False
    cc = None
    if has_app:
        cc = _opt(country)
        if username != "-":
            user = _unescape(username)
        if web_service not in ("0", "1"):
            raise MalformedLine("web_service", "expected 0 or 1")
        via_ws = web_service == "1"

    return LogEntry(
        ip=ip,
        timestamp=timestamp,
        method=method,
        path=path,
        protocol=protocol,
        status=status,
        bytes=nbytes,
        referer=_opt(referer),
        user_agent=_opt(agent),
        country=cc,
        username=user,
        via_web_service=via_ws,
        tz_offset=offset,
    )


def render_line(entry: LogEntry, dialect: LogDialect = COMBINED) -> str:
    """Inverse of :func:`parse_line` for the given dialect."""

    def q(v: str | None) -> str:
        return '"-"' if v is None else f'"{_escape(v)}"'

    user = "-" if entry.username is None else entry.username
    nbytes = "-" if entry.bytes is None else str(entry.bytes)
    line = (f"{entry.ip} - {user} [{format_time(entry.timestamp, entry.tz_offset)}] "
            f'"{_escape(f"{entry.method} {entry.path} {entry.protocol}")}" '
            f"{entry.status} {nbytes} {q(entry.referer)} {q(entry.user_agent)}")
    if dialect.app_columns:
        line += f" {q(entry.country)} {q(entry.username)} {int(entry.via_web_service)}"
    return line


# --------------------------------------------------------------------------
# resource rules


@dataclass(frozen=True)
class ResourceRule:
    pattern: str
    kind: ResourceKind
    regex: re.Pattern = field(compare=False, repr=False)
    with_query: bool = False

    @classmethod
    def compile(cls, pattern: str, kind: ResourceKind | str) -> "ResourceRule":
        if isinstance(kind, str):
            try:
                kind = ResourceKind[kind]
            except KeyError:
                raise InvalidRule(f"unknown resource class {kind!r}") from None
        if kind is ResourceKind.Other:
            raise InvalidRule("rules cannot map to Other")
        if pattern.count("{id}") != 1:
            raise InvalidRule(f"pattern {pattern!r} must contain exactly one {{id}}")
        if not pattern.startswith("/"):
            raise InvalidRule(f"pattern {pattern!r} must start with '/'")
        head, tail = pattern.split("{id}")
        # a literal '?' in the template opts the rule into query-string matching
        regex = re.compile(re.escape(head) + r"(.+?)" + re.escape(tail))
        return cls(pattern, kind, regex, with_query="?" in pattern)


ResourceRuleSet = Sequence[ResourceRule]


def load_rules(source: str | Path | Iterable[str] | None = None) -> list[ResourceRule]:
    """Read ``pattern TAB class`` lines; ``None`` loads the bundled defaults."""
    if source is None:
        lines = resources.files("robotsem.data").joinpath("resource_rules.tsv").read_text().splitlines()
    elif isinstance(source, (str, Path)):
        lines = Path(source).read_text().splitlines()
    else:
        lines = list(source)
    rules = []
    for lineno, line in enumerate(lines, 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != 2:
            raise InvalidRule(f"line {lineno}: expected 'pattern<TAB>class'")
        rules.append(ResourceRule.compile(cols[0].strip(), cols[1].strip()))
    return rules


def classify_resource(path: str, rules: ResourceRuleSet) -> ResourceClass:
    bare = path.split("?", 1)[0]
    for rule in rules:
        m = rule.regex.fullmatch(path if rule.with_query else bare)
        if m:
            return ResourceClass(rule.kind, m.group(1))
    return OTHER


# --------------------------------------------------------------------------
# ingest


@dataclass
class IngestReport:
    read: int = 0
    kept: int = 0
    dropped: int = 0
    malformed: int = 0
    malformed_columns: Counter = field(default_factory=Counter)

    def as_lines(self) -> list[str]:
        lines = [f"read={self.read}", f"kept={self.kept}",
                 f"dropped={self.dropped}", f"malformed={self.malformed}"]
        lines += [f"malformed.{col}={n}" for col, n in sorted(self.malformed_columns.items())]
        return lines


class IngestError(IOError):
    """Stream failure mid-ingest; ``report`` holds the counts so far."""

    def __init__(self, message: str, report: IngestReport):
        super().__init__(message)
        self.report = report


def ingest(
    stream: Iterable[str],
    dialect: LogDialect = COMBINED,
    rules: ResourceRuleSet | None = None,
) -> tuple[list[tuple[LogEntry, ResourceClass]], IngestReport]:
    if rules is None:
        rules = load_rules()
    report = IngestReport()
    out: list[tuple[LogEntry, ResourceClass]] = []
    it = iter(stream)
    while True:
        try:
            line = next(it)
        except StopIteration:
            break
        except (OSError, EOFError, UnicodeDecodeError) as exc:
            raise IngestError(str(exc), report) from exc
        if not line.strip():
            continue
        report.read += 1
        try:
            entry = parse_line(line, dialect)
        except MalformedLine as exc:
            report.malformed += 1
            report.malformed_columns[exc.column] += 1
            continue
        rc = classify_resource(entry.path, rules)
        if rc.kind is ResourceKind.Other:
            report.dropped += 1
        else:
            report.kept += 1
            out.append((entry, rc))
    return out, report


def open_log(path: str | Path) -> IO[str]:
    """Open a log file as text, transparently gunzipping on magic bytes."""
    raw = open(path, "rb")
    head = raw.peek(2)[:2] if hasattr(raw, "peek") else b""
    if head == b"\x1f\x8b":
        return io.TextIOWrapper(gzip.GzipFile(fileobj=raw), encoding="utf-8", errors="replace")
    return io.TextIOWrapper(raw, encoding="utf-8", errors="replace")


def iter_log_lines(paths: Iterable[str | Path]) -> Iterator[str]:
    for p in paths:
        with open_log(p) as fh:
            yield from fh
