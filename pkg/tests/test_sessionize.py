import random

import pytest
from hypothesis import given, strategies as st

from conftest import entry
from oracles import brute_sessionize, random_stream
from robotsem.sessionize import EmptyInput, UserKey, session_id, session_stats, sessionize


def _shape(sessions):
    return [(s.id, (s.key.ip, s.key.user_agent), s.indexes) for s in sessions]


def test_example_gaps():
    t = [0, 10, 10 + 29 * 60, 10 + 29 * 60 + 31 * 60, 10 + 29 * 60 + 31 * 60 + 5]
    out = sessionize([entry(x) for x in t])
    assert len(out) == 1 and out[0].n == 3 and out[0].indexes == (0, 1, 2)


def test_single_request():
    assert sessionize([entry(0)]) == []


def test_boundary_is_strict():
    assert [s.n for s in sessionize([entry(0), entry(10), entry(1810)])] == [3]
    assert sessionize([entry(0), entry(10), entry(1811)]) == []


def test_empty_input():
    assert sessionize([]) == []


def test_unsorted_input_and_stable_ties():
    es = [entry(20, "/doi/abs/10.1/c"), entry(0, "/doi/abs/10.1/a"), entry(0, "/doi/abs/10.1/b")]
    (s,) = sessionize(es)
    assert s.indexes == (1, 2, 0)
    assert [rc.article_id for _, rc in s.requests] == ["10.1/a", "10.1/b", "10.1/c"]


def test_keys_separate_and_missing_ua():
    es = [entry(i, ua=None) for i in range(3)] + [entry(i, ua="") for i in range(3, 6)] + \
         [entry(i, ip="10.0.0.2", ua=None) for i in range(3)]
    out = sessionize(es)
    # None and "" normalize to the same key
    assert [(s.key, s.n) for s in out] == [(UserKey("10.0.0.1", ""), 6), (UserKey("10.0.0.2", ""), 3)]


def test_session_id_is_deterministic_hash():
    k = UserKey("1.2.3.4", "ua")
    assert session_id(k, 5) == session_id(UserKey("1.2.3.4", "ua"), 5)
    assert session_id(k, 5) != session_id(k, 6)
    assert len(session_id(k, 5)) == 16


def test_matches_brute_force_splitter():
    rng = random.Random(7)
    for _ in range(500):
        stream = random_stream(rng)
        assert _shape(sessionize(stream)) == brute_sessionize(stream)


def test_matches_brute_force_other_params():
    rng = random.Random(8)
    for _ in range(100):
        stream = random_stream(rng)
        timeout, mr = rng.choice([(600, 1), (60, 2), (3600, 4)])
        assert _shape(sessionize(stream, timeout, mr)) == brute_sessionize(stream, timeout, mr)


_streams = st.lists(st.tuples(st.integers(0, 20000), st.sampled_from(["a", "b"]), st.sampled_from(["X", "Y"])),
                    max_size=40).map(lambda xs: [entry(t, ip=ip, ua=ua) for t, ip, ua in xs])


@given(_streams)
def test_session_invariants(stream):
    out = sessionize(stream)
    for s in out:
        ts = [e.epoch for e in s.entries]
        assert s.n >= 3 and ts == sorted(ts)
        assert all(b - a <= 1800 for a, b in zip(ts, ts[1:]))
    # consecutive sessions of a key cannot be merged
    for a, b in zip(out, out[1:]):
        if a.key == b.key:
            assert b.start - a.end > 1800
    assert _shape(sessionize(stream)) == _shape(out)


@given(_streams)
def test_partition_with_short_groups(stream):
    kept = sessionize(stream)
    everything = sessionize(stream, min_requests=1)
    assert sorted(i for s in everything for i in s.indexes) == list(range(len(stream)))
    assert [s for s in everything if s.n >= 3] == kept


def test_stats_examples():
    def sess(times, ids):
        es = [entry(t, f"/doi/abs/10.1/{a}") for t, a in zip(times, ids)]
        return sessionize(es, min_requests=1)[0]

    st_ = session_stats([sess([0, 1, 2], "aaa"), sess([0, 1, 2, 3], "aaaa"), sess([0, 1, 2, 3, 4], "aaaaa")])
    assert st_.mean_requests == 4 and st_.median_requests == 4
    st_ = session_stats([sess([5, 5, 5], "abc")])
    assert st_.mean_duration == 0 and st_.mean_gap == 0
    st_ = session_stats([sess([0, 1], "ab"), sess([0, 1], "bc")])
    assert st_.unique_articles == 3
    assert session_stats([sess([0, 1, 2], "aaa"), sess([0, 1, 2, 3], "aaaa")]).median_requests == 3.5
    with pytest.raises(EmptyInput):
        session_stats([])
