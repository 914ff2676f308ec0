import math
import random

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import entry
from oracles import random_vectors, semantic_oracle
from robotsem.semantic_features import extract_semantic, session_semantics
from robotsem.sessionize import sessionize
from robotsem.topic_model import SparseTopicVector

A = SparseTopicVector(((1, 0.5), (2, 0.5)))
B = SparseTopicVector(((3, 1.0),))


def test_worked_example():
    f = extract_semantic([A, A, B])
    assert (f.total_topics, f.unique_topics) == (5, 3)
    assert f.page_similarity == pytest.approx(0.6)
    assert f.page_variance == pytest.approx((2 * math.sqrt(1 / 6) + math.sqrt(2 / 3)) / 3, abs=1e-12)
    assert f.page_variance == pytest.approx(0.5443, abs=5e-5)
    assert f.boolean_page_variance == pytest.approx((2 * math.sqrt(1 / 3) + math.sqrt(4 / 3)) / 3, abs=1e-12)
    assert f.boolean_page_variance == pytest.approx(0.7698, abs=5e-5)


def test_identical_pages():
    f = extract_semantic([A, A, A])
    assert (f.total_topics, f.unique_topics, f.page_variance, f.boolean_page_variance) == (6, 2, 0, 0)
    assert f.page_similarity == pytest.approx(1 / 3)


def test_single_page():
    f = extract_semantic([B])
    assert (f.total_topics, f.unique_topics, f.page_similarity, f.page_variance, f.boolean_page_variance) == \
        (1, 1, 1.0, 0.0, 0.0)


def test_empty():
    f = extract_semantic([], n_requests=4)
    assert (f.total_topics, f.unique_topics, f.page_similarity, f.page_variance,
            f.boolean_page_variance, f.coverage) == (0, 0, None, 0, 0, 0)
    assert math.isnan(f.as_floats()[2])


def test_dense_oracle():
    rng = np.random.default_rng(3)
    for _ in range(1000):
        vecs, k = random_vectors(rng)
        f = extract_semantic(vecs)
        tt, ut, ps, pv, bpv = semantic_oracle(vecs, k)
        assert (f.total_topics, f.unique_topics) == (tt, ut)
        assert f.page_similarity == pytest.approx(ps, abs=1e-9)
        assert f.page_variance == pytest.approx(pv, abs=1e-9)
        assert f.boolean_page_variance == pytest.approx(bpv, abs=1e-9)
        assert f.unique_topics <= min(f.total_topics, k)


@given(st.integers(0, 2**32 - 1), st.randoms(use_true_random=False))
def test_permutation_and_duplication(seed, shuffler):
    vecs, _ = random_vectors(np.random.default_rng(seed))
    f = extract_semantic(vecs)
    perm = list(vecs)
    shuffler.shuffle(perm)
    assert extract_semantic(perm) == f
    d = extract_semantic(vecs + vecs)
    assert d.total_topics == 2 * f.total_topics and d.unique_topics == f.unique_topics
    assert d.page_similarity == f.page_similarity / 2
    assert d.page_variance == f.page_variance and d.boolean_page_variance == f.boolean_page_variance


@given(st.integers(0, 2**32 - 1))
def test_zero_variance_iff_identical(seed):
    vecs, _ = random_vectors(np.random.default_rng(seed))
    f = extract_semantic(vecs)
    same = len({v.entries for v in vecs}) == 1
    assert f.page_variance >= 0 and f.boolean_page_variance >= 0
    assert (f.page_variance == 0) == same
    assert (f.boolean_page_variance == 0) == (len({frozenset(t for t, _ in v.entries) for v in vecs}) == 1)
    assert f.total_topics <= len(vecs) * 10


def test_session_coverage_skips_unknown_documents():
    es = [entry(0, "/doi/abs/10.1/a"), entry(1, "/doi/abs/10.1/zzz"), entry(2, "/doi/pdf/10.1/a"),
          entry(3, "/search?q=1")]
    (s,) = sessionize(es, min_requests=1)
    f = session_semantics(s, {"10.1/a": A})
    assert f.coverage == 0.5 and f.total_topics == 4 and f.page_variance == 0
