"""Acceptance criteria 1-9.

Each criterion prints one ``criterion N: PASS|FAIL`` line (collected into the
pytest terminal summary).  Run directly with ``python tests/test_acceptance.py``
to print the lines without pytest.
"""

from __future__ import annotations

import math
import random
import sys
import tempfile
import time
from functools import lru_cache
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oracles import (brute_chi2, brute_f, brute_sessionize, cluster_separation, random_session_entries,  # noqa: E402
                     random_stream, random_vectors, semantic_oracle, simple_oracle, two_cluster_corpus)
from conftest import entry  # noqa: E402
from robotsem import pipeline  # noqa: E402
from robotsem.labeling import (RobotLists, Stage, UAClass, UAPatternDB, Verdict, classify_user_agent,  # noqa: E402
                               label_one, load_manual_map, match_robot_lists)
from robotsem.model import FEATURE_SETS, LabeledDataset, evaluate  # noqa: E402
from robotsem.model.scoring import chi2_stats, f_scores  # noqa: E402
from robotsem.semantic_features import SEMANTIC_FEATURE_NAMES, extract_semantic  # noqa: E402
from robotsem.sessionize import sessionize  # noqa: E402
from robotsem.simple_features import SIMPLE_FEATURE_NAMES, extract_simple  # noqa: E402
from robotsem.synth import BOT_AGENTS, SynthConfig, generate, write_output  # noqa: E402
from robotsem.topic_model import SparseTopicVector, train_lda  # noqa: E402

FIX = Path(__file__).parent / "fixtures"
RESULTS: list[str] = []


def _close(a, b, tol=1e-9):
    if a is None or b is None:
        return a is b
    return a == b or abs(a - b) <= tol


# -- criterion bodies; each returns (ok, detail) ----------------------------------------

def criterion_1():
    t0 = time.perf_counter()
    A = SparseTopicVector(((1, 0.5), (2, 0.5)))
    B = SparseTopicVector(((3, 1.0),))
    f = extract_semantic([A, A, B])
    worked = ((f.total_topics, f.unique_topics) == (5, 3) and _close(f.page_similarity, 0.6)
              and _close(f.page_variance, (2 * math.sqrt(1 / 6) + math.sqrt(2 / 3)) / 3)
              and abs(f.page_variance - 0.5443) < 5e-5
              and _close(f.boolean_page_variance, (2 * math.sqrt(1 / 3) + math.sqrt(4 / 3)) / 3))
    rng = np.random.default_rng(2024)
    bad = 0
    for _ in range(1000):
        vecs, k = random_vectors(rng)
        got = extract_semantic(vecs)
        tt, ut, ps, pv, bpv = semantic_oracle(vecs, k)
        ok = ((got.total_topics, got.unique_topics) == (tt, ut) and _close(got.page_similarity, ps)
              and _close(got.page_variance, pv) and _close(got.boolean_page_variance, bpv))
        bad += not ok
    secs = time.perf_counter() - t0
    return worked and bad == 0 and secs < 10, f"worked example ok={worked}, mismatches={bad}/1000, {secs:.1f}s"


def criterion_2():
    t0 = time.perf_counter()
    rng = random.Random(2024)
    bad = 0
    for _ in range(500):
        stream = random_stream(rng)
        got = [(s.id, (s.key.ip, s.key.user_agent), s.indexes) for s in sessionize(stream)]
        bad += got != brute_sessionize(stream)
    secs = time.perf_counter() - t0
    return bad == 0 and secs < 10, f"mismatches={bad}/500, {secs:.1f}s"


def criterion_3():
    rng = random.Random(2024)
    bad = 0
    for _ in range(500):
        (s,) = sessionize(random_session_entries(rng), timeout=10**9, min_requests=1)
        got, want = extract_simple(s), simple_oracle(s)
        bad += any(abs(float(getattr(got, n)) - float(want[n])) > 1e-9 for n in SIMPLE_FEATURE_NAMES)
    boundary = True
    for n in (3, 7, 20):
        (s,) = sessionize([entry(10 * i) for i in range(n)], min_requests=1)
        f = extract_simple(s)
        boundary &= f.repeated_requests == (n - 1) / n and f.std_time == 0
    return bad == 0 and boundary, f"mismatches={bad}/500, boundary cases exact={boundary}"


def criterion_4():
    t0 = time.perf_counter()
    corpus = two_cluster_corpus()
    consistent = []
    kw = dict(k=2, alpha=0.1, iterations=200, seed=7)
    a = train_lda(corpus, **kw, on_sweep=lambda it, s: consistent.append(s.counts_consistent()))
    b = train_lda(corpus, **kw)
    same = np.array_equal(a.doc_topic, b.doc_topic) and np.array_equal(a.topic_word, b.topic_word)
    frac = cluster_separation(a)
    secs = time.perf_counter() - t0
    ok = frac >= 0.95 and len(consistent) == 200 and all(consistent) and same and secs < 60
    return ok, (f"separated={frac:.2%}, consistent sweeps={sum(consistent)}/200, "
                f"bit-identical={same}, {secs:.1f}s")


def criterion_5():
    m = evaluate([1, 1, 1, 0, 0, 1, 0, 0, 0, 0], [1] * 5 + [0] * 5)
    metrics_ok = ((m.tp, m.fp, m.tn, m.fn) == (3, 1, 4, 2) and _close(m.balanced_accuracy, 0.7)
                  and _close(m.g_mean, math.sqrt(0.48)) and abs(m.g_mean - 0.6928) < 5e-5
                  and _close(m.f_measure, 2 / 3))
    rng = np.random.default_rng(2024)
    y = np.array([0] * 10 + [1] * 10)
    X = np.column_stack([np.r_[rng.normal(0, 1, 10), rng.normal(1, 1, 10)], rng.uniform(0, 3, 20),
                         y.astype(float), np.ones(20)])
    F = f_scores(X, y)
    chi = chi2_stats(np.abs(X), y)
    f_ok = all(_close(F[j], brute_f(X[:, j], y), 1e-9 * max(1, F[j])) for j in range(3)) and F[2] == math.inf and F[3] == 0
    chi_ok = all(_close(chi[j], brute_chi2(np.abs(X[:, j]), y), 1e-9 * max(1, chi[j])) for j in range(4))
    scale_ok = all(np.allclose(f_scores(a * X[:, :2], y), F[:2], rtol=1e-9, atol=0) for a in (1e-3, 0.5, 7.0, 1e4))
    ok = metrics_ok and f_ok and chi_ok and scale_ok
    return ok, f"metrics={metrics_ok}, anova={f_ok}, chi2={chi_ok}, F(a*x)=F(x)={scale_ok}"


@lru_cache(maxsize=1)
def synthetic_run():
    """Full default pipeline on default synthetic data; cached across criteria 6-8."""
    t0 = time.perf_counter()
    root = Path(tempfile.mkdtemp(prefix="robotsem-accept-"))
    cfg = SynthConfig()
    write_output(generate(cfg), root / "synth", cfg)
    res = pipeline.run_pipeline(pipeline.PipelineConfig(
        logs=[str(root / "synth" / "access.log")], corpus=str(root / "synth" / "corpus.tsv"),
        out_dir=str(root / "out"), seed=cfg.seed))
    return res, time.perf_counter() - t0


def criterion_6():
    res, secs = synthetic_run()
    ba = {k: res.metrics[f"gb.{k}"].balanced_accuracy for k in FEATURE_SETS}
    ds: LabeledDataset = res.dataset.labeled()
    ut = ds.X[:, ds.feature_names.index("unique_topics")]
    ut_bot, ut_human = ut[ds.y == 1].mean(), ut[ds.y == 0].mean()
    ok = (ba["all"] >= 0.90 and ba["all"] >= ba["simple"] and ba["semantic"] >= 0.75
          and ut_bot > 1.5 * ut_human and secs < 300)
    return ok, (f"BA all={ba['all']:.4f} simple={ba['simple']:.4f} semantic={ba['semantic']:.4f}, "
                f"UT bot/human={ut_bot:.2f}/{ut_human:.2f}, {secs:.0f}s")


def criterion_7():
    res, _ = synthetic_run()
    ranked = [name for name, _ in res.f_scores]
    top = set(ranked[: len(ranked) // 2])
    hits = [n for n in SEMANTIC_FEATURE_NAMES if n in top]
    return len(hits) >= 3, f"semantic in top {len(ranked) // 2} of {len(ranked)}: {hits}"


def criterion_8():
    res, _ = synthetic_run()
    curve = res.curve
    full = curve[-1]
    plain = res.metrics["gb.all"].balanced_accuracy
    via_files = pipeline.stage_evaluate(res.paths["model"], res.paths["test"],
                                        Path(tempfile.mkdtemp()) / "m.txt").balanced_accuracy
    tests = [p.test_metric for p in curve]
    first, last = float(np.mean(tests[:3])), float(np.mean(tests[-3:]))
    ok = full.fraction == 1.0 and full.test_metric == plain == via_files and last >= first and len(curve) >= 6
    return ok, f"BA(1.0)={full.test_metric:.4f} evaluate={plain:.4f}, first3={first:.4f} last3={last:.4f}"


def criterion_9():
    import csv

    db, lists = UAPatternDB.load(), RobotLists.load()
    manual = load_manual_map(FIX / "manual_labels.tsv")
    with open(FIX / "label_cases.tsv", encoding="utf-8", newline="") as fh:
        rows = [r for r in csv.reader(fh, delimiter="\t", quoting=csv.QUOTE_NONE) if not r[0].startswith("#")]
    wrong = 0
    for ua, logged, verdict, stage, evidence in rows:
        lab = label_one(ua, logged == "1", db, lists, manual)
        wrong += (lab.verdict.value, lab.stage.value, lab.evidence) != (verdict, stage, evidence)
    bots_ok = 0
    for ua in BOT_AGENTS:
        lab = label_one(ua, False, db, lists, {})
        if lab.verdict is Verdict.Robot:
            if lab.stage is Stage.UAClassifier:
                bots_ok += classify_user_agent(ua, db) is UAClass.Crawler and lab.evidence == "Crawler"
            else:
                bots_ok += lab.stage is Stage.RobotList and lab.evidence == match_robot_lists(ua, lists)
    ok = len(rows) == 50 and wrong == 0 and bots_ok == len(BOT_AGENTS)
    return ok, f"fixture mismatches={wrong}/{len(rows)}, bot agents recovered={bots_ok}/{len(BOT_AGENTS)}"


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7,
            criterion_8, criterion_9]


def _line(n, ok, detail):
    return f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"


@pytest.mark.slow
@pytest.mark.parametrize("n", range(1, 10))
def test_criterion(n):
    ok, detail = CRITERIA[n - 1]()
    line = _line(n, ok, detail)
    RESULTS.append(line)
    print(line)
    assert ok, line


if __name__ == "__main__":
    status = 0
    for i, fn in enumerate(CRITERIA, 1):
        ok, detail = fn()
        print(_line(i, ok, detail), flush=True)
        status |= not ok
    sys.exit(status)
