import gzip
import random
import re
from datetime import datetime, timedelta, timezone

import pytest
from hypothesis import given, strategies as st

from robotsem.log_ingest import (COMBINED, EXTENDED, InvalidRule, LogEntry, MalformedLine,
                                 ResourceClass, ResourceKind, ResourceRule, classify_resource,
                                 ingest, iter_log_lines, load_rules, parse_line, render_line)

LINE = '10.0.0.1 - - [05/Jan/2014:10:00:00 +0200] "GET /doi/abs/10.1/j.1 HTTP/1.1" 200 5120 "-" "Mozilla/5.0"'


def test_parse_example():
    e = parse_line(LINE)
    assert e.ip == "10.0.0.1"
    assert e.timestamp == datetime(2014, 1, 5, 8, 0, 0, tzinfo=timezone.utc)
    assert e.tz_offset == 7200
    assert (e.method, e.path, e.protocol) == ("GET", "/doi/abs/10.1/j.1", "HTTP/1.1")
    assert e.status == 200 and e.bytes == 5120
    assert e.referer is None and e.user_agent == "Mozilla/5.0"
    assert e.country is None and e.username is None and not e.via_web_service


def test_dash_bytes_is_absent_not_zero():
    e = parse_line(LINE.replace(" 5120 ", " - "))
    assert e.bytes is None
    assert parse_line(LINE.replace(" 5120 ", " 0 ")).bytes == 0


@pytest.mark.parametrize("status", ["700", "099", "abc"])
def test_bad_status(status):
    with pytest.raises(MalformedLine) as exc:
        parse_line(LINE.replace(" 200 ", f" {status} "))
    assert exc.value.column in ("status", "line")
    if status == "700":
        assert exc.value.column == "status" and exc.value.reason == "out of range"


@pytest.mark.parametrize("line", [
    "",
    "garbage",
    LINE.replace("[05/Jan/2014:10:00:00 +0200]", "[05/Foo/2014:10:00:00 +0200]"),
    LINE.replace('"GET /doi/abs/10.1/j.1 HTTP/1.1"', '"-"'),
    LINE.replace("HTTP/1.1", "FTP/1"),
    LINE + ' "GR" "alice" 1',  # application columns are not part of the combined dialect
])
def test_malformed(line):
    with pytest.raises(MalformedLine):
        parse_line(line)


def test_extended_columns():
    e = parse_line(LINE + ' "GR" "alice" 1', EXTENDED)
    assert (e.country, e.username, e.via_web_service) == ("GR", "alice", True)
    e = parse_line(LINE + ' "-" "-" 0', EXTENDED)
    assert (e.country, e.username, e.via_web_service) == (None, None, False)
    # extended dialect also accepts plain combined lines
    assert parse_line(LINE, EXTENDED) == parse_line(LINE)
    with pytest.raises(MalformedLine):
        parse_line(LINE + ' "GR" "alice" yes', EXTENDED)


def test_authuser_is_username():
    e = parse_line(LINE.replace("- - [", "- bob ["))
    assert e.username == "bob"


def test_escaped_quotes_in_agent():
    e = parse_line(LINE.replace('"Mozilla/5.0"', r'"Evil \"agent\""'))
    assert e.user_agent == 'Evil "agent"'
    assert parse_line(render_line(e)) == e


# -- independent single-regex oracle ------------------------------------------

_ORACLE = re.compile(
    r'^(?P<ip>[^ ]+) [^ ]+ (?P<user>[^ ]+) '
    r'\[(?P<d>\d\d)/(?P<mon>[A-Z][a-z]{2})/(?P<y>\d{4}):(?P<H>\d\d):(?P<M>\d\d):(?P<S>\d\d) '
    r'(?P<sign>[+-])(?P<oh>\d\d)(?P<om>\d\d)\] '
    r'"(?P<method>[A-Z]+) (?P<path>[^ "]+) (?P<proto>HTTP/[0-9.]+)" '
    r'(?P<status>\d{3}) (?P<bytes>\d+|-) "(?P<ref>[^"]*)" "(?P<ua>[^"]*)"$')
_MON = "Jan Feb Mar Apr May Jun Jul Aug Sep Oct Nov Dec".split()


def oracle(line):
    m = _ORACLE.match(line)
    if not m:
        return None
    g = m.groupdict()
    status = int(g["status"])
    if not 100 <= status <= 599:
        return None
    off = (int(g["oh"]) * 3600 + int(g["om"]) * 60) * (1 if g["sign"] == "+" else -1)
    local = datetime(int(g["y"]), _MON.index(g["mon"]) + 1, int(g["d"]), int(g["H"]), int(g["M"]), int(g["S"]))
    utc = (local - timedelta(seconds=off)).replace(tzinfo=timezone.utc)
    dash = lambda v: None if v == "-" else v  # noqa: E731
    return dict(ip=g["ip"], timestamp=utc, tz_offset=off, method=g["method"], path=g["path"],
                protocol=g["proto"], status=status, bytes=None if g["bytes"] == "-" else int(g["bytes"]),
                referer=dash(g["ref"]), user_agent=dash(g["ua"]), username=dash(g["user"]))


def _random_line(rng):
    ip = rng.choice(["10.0.0.%d" % rng.randint(1, 254), "2001:db8::%x" % rng.randint(1, 9999),
                     "192.168.%d.%d" % (rng.randint(0, 255), rng.randint(0, 255))])
    user = rng.choice(["-", "-", "alice", "bob"])
    when = datetime(2014, 1, 1) + timedelta(seconds=rng.randint(0, 86400 * 400))
    off = rng.choice(["+0000", "+0200", "-0500", "+0530", "-1130"])
    method = rng.choice(["GET", "POST", "HEAD", "PUT"])
    path = rng.choice(["/doi/abs/10.%d/j.%d", "/doi/pdf/10.%d/x%d", "/search?q=%d&p=%d", "/img/%d/%d.png"])
    path = path % (rng.randint(1, 999), rng.randint(1, 999))
    status = rng.choice(["200", "304", "404", "500", "301", "700", "099", "2x0"])
    nbytes = rng.choice(["-", "0", str(rng.randint(1, 10**7)), "-5"])
    ref = rng.choice(["-", "http://example.org/a", ""])
    ua = rng.choice(["-", "Mozilla/5.0 (X11; Linux x86_64)", "curl/7.5", "Googlebot/2.1 (+http://www.google.com/bot.html)"])
    stamp = f"{when.day:02d}/{_MON[when.month - 1]}/{when.year}:{when:%H:%M:%S} {off}"
    line = f'{ip} - {user} [{stamp}] "{method} {path} HTTP/1.{rng.randint(0, 1)}" {status} {nbytes} "{ref}" "{ua}"'
    if rng.random() < 0.05:
        line = line[: rng.randint(0, len(line) - 1)]
    return line


def test_parse_matches_regex_oracle():
    rng = random.Random(1234)
    checked = malformed = 0
    for _ in range(3000):
        line = _random_line(rng)
        want = oracle(line)
        if want is None:
            with pytest.raises(MalformedLine):
                parse_line(line)
            malformed += 1
            continue
        got = parse_line(line)
        assert {k: getattr(got, k) for k in want} == want, line
        checked += 1
    assert checked >= 1000 and malformed > 100


# -- round trip ---------------------------------------------------------------

_text = st.text(st.characters(min_codepoint=32, max_codepoint=126), min_size=1, max_size=30)


@st.composite
def log_entries(draw):
    off = draw(st.integers(-12 * 60, 14 * 60)) * 60
    ts = datetime(2000, 1, 1, tzinfo=timezone.utc) + timedelta(seconds=draw(st.integers(0, 10**9)))
    return LogEntry(
        ip=draw(st.from_regex(r"[0-9a-f.:]{3,20}", fullmatch=True)),
        timestamp=ts,
        method=draw(st.sampled_from(["GET", "POST", "HEAD", "OPTIONS"])),
        path="/" + draw(st.text(st.characters(min_codepoint=33, max_codepoint=126), max_size=40)),
        protocol=draw(st.sampled_from(["HTTP/1.0", "HTTP/1.1", "HTTP/2.0"])),
        status=draw(st.integers(100, 599)),
        bytes=draw(st.none() | st.integers(0, 10**9)),
        referer=draw(st.none() | _text.filter(lambda s: s != "-")),
        user_agent=draw(st.none() | _text.filter(lambda s: s != "-")),
        country=draw(st.none() | st.sampled_from(["GR", "US", "DE"])),
        username=draw(st.none() | st.from_regex(r"[a-z]{1,8}", fullmatch=True)),
        via_web_service=draw(st.booleans()),
        tz_offset=off,
    )


@given(log_entries())
def test_round_trip_extended(e):
    assert parse_line(render_line(e, EXTENDED), EXTENDED) == e


@given(log_entries())
def test_round_trip_combined(e):
    e = LogEntry(**{**e.__dict__, "country": None, "via_web_service": False})
    assert parse_line(render_line(e, COMBINED), COMBINED) == e


# -- resource rules -----------------------------------------------------------


def test_classify_examples(rules):
    rule = ResourceRule.compile("/doi/abs/{id}", "AbstractHtml")
    assert classify_resource("/doi/abs/10.1/j.1", [rule]) == ResourceClass(ResourceKind.AbstractHtml, "10.1/j.1")
    assert classify_resource("/search?q=x", rules).kind is ResourceKind.Other
    assert classify_resource("/search?q=x", rules).article_id is None
    assert classify_resource("/doi/pdf/10.1/j.2", rules) == ResourceClass(ResourceKind.FullTextPdf, "10.1/j.2")
    # the query string is ignored unless the rule opts in
    assert classify_resource("/doi/pdf/10.1/j.2?download=true", rules).article_id == "10.1/j.2"


def test_first_rule_wins_and_query_opt_in():
    rules = load_rules(["/doi/{id}/refs\tReferencesHtml", "/doi/{id}\tAbstractHtml",
                        "/view?doi={id}\tFullTextHtml"])
    assert classify_resource("/doi/x/refs", rules).kind is ResourceKind.ReferencesHtml
    assert classify_resource("/doi/x", rules) == ResourceClass(ResourceKind.AbstractHtml, "x")
    assert classify_resource("/view?doi=10.1/z", rules) == ResourceClass(ResourceKind.FullTextHtml, "10.1/z")


@pytest.mark.parametrize("line", ["/doi/abs\tAbstractHtml", "/doi/{id}/{id}\tAbstractHtml",
                                  "/doi/{id}\tNoSuchClass", "/doi/{id}\tOther", "doi/{id}\tAbstractHtml",
                                  "/doi/{id}"])
def test_invalid_rules(line):
    with pytest.raises(InvalidRule):
        load_rules([line])


def test_resource_class_invariant():
    with pytest.raises(ValueError):
        ResourceClass(ResourceKind.Other, "x")
    with pytest.raises(ValueError):
        ResourceClass(ResourceKind.FullTextPdf, None)


@given(st.text(max_size=40))
def test_classification_is_total_and_stable(path):
    a, b = classify_resource(path, load_rules()), classify_resource(path, load_rules())
    assert a == b
    assert (a.article_id is None) == (a.kind is ResourceKind.Other)


# -- ingest ---------------------------------------------------------------------

ARTICLE = LINE
OTHER = LINE.replace("/doi/abs/10.1/j.1", "/search?q=x")


def test_ingest_counts(rules):
    lines = [ARTICLE, OTHER, ARTICLE.replace("j.1", "j.2"), OTHER, ARTICLE.replace("abs", "pdf")]
    kept, rep = ingest(lines, COMBINED, rules)
    assert (rep.read, rep.kept, rep.dropped, rep.malformed) == (5, 3, 2, 0)
    assert [rc.article_id for _, rc in kept] == ["10.1/j.1", "10.1/j.2", "10.1/j.1"]


def test_ingest_empty(rules):
    kept, rep = ingest([], COMBINED, rules)
    assert kept == [] and (rep.read, rep.kept, rep.dropped, rep.malformed) == (0, 0, 0, 0)


def test_ingest_malformed_skipped(rules):
    kept, rep = ingest([ARTICLE, "junk line", ARTICLE, OTHER], COMBINED, rules)
    assert rep.malformed == 1 and rep.kept + rep.dropped == 3 and len(kept) == 2
    assert rep.malformed_columns == {"line": 1}


@given(st.lists(st.sampled_from([ARTICLE, OTHER, "junk", LINE.replace(" 200 ", " 900 ")]), max_size=30))
def test_ingest_partition(lines):
    kept, rep = ingest(lines, COMBINED, load_rules())
    assert rep.kept + rep.dropped + rep.malformed == rep.read == len(lines)
    assert len(kept) == rep.kept


def test_ingest_stream_error_keeps_partial_report(rules):
    from robotsem.log_ingest import IngestError

    def stream():
        yield ARTICLE
        yield OTHER
        raise OSError("disk went away")

    with pytest.raises(IngestError) as exc:
        ingest(stream(), COMBINED, rules)
    assert exc.value.report.read == 2 and exc.value.report.kept == 1


def test_gzip_detected_by_magic(tmp_path):
    plain = tmp_path / "a.log"
    plain.write_text(ARTICLE + "\n" + OTHER + "\n")
    packed = tmp_path / "b.data"  # no .gz suffix on purpose
    with gzip.open(packed, "wt") as fh:
        fh.write(ARTICLE + "\n")
    lines = list(iter_log_lines([plain, packed]))
    assert [ln.rstrip("\n") for ln in lines] == [ARTICLE, OTHER, ARTICLE]
