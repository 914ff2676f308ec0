from __future__ import annotations

from datetime import datetime, timezone

import pytest
from hypothesis import settings

from robotsem.log_ingest import LogEntry, classify_resource, load_rules

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")

RULES = load_rules()
T0 = 1388534400  # 2014-01-01T00:00:00Z


def entry(t, path="/doi/abs/10.1/a", *, ip="10.0.0.1", ua="Mozilla/5.0", method="GET",
          status=200, country=None, username=None, ws=False):
    e = LogEntry(ip=ip, timestamp=datetime.fromtimestamp(T0 + t, tz=timezone.utc), method=method,
                 path=path, protocol="HTTP/1.1", status=status, bytes=100, user_agent=ua,
                 country=country, username=username, via_web_service=ws)
    return e, classify_resource(path, RULES)


@pytest.fixture
def rules():
    return RULES


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(mod.RESULTS, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
