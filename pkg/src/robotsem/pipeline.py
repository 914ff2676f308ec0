"""Stage functions with file handoff, and the end-to-end pipeline driver.

Every stage output starts with a header naming its format version, its
parameters, and the SHA-256 of the inputs it was derived from.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field, fields
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import labeling, log_ingest, topic_model
from .log_ingest import DIALECTS, LogEntry, ResourceClass, ResourceKind
from .model import (FEATURE_NAMES, FEATURE_SETS, FeatureTable, GBDTParams, LabeledDataset,
                    Metrics, anova_f_scores, chi2_scores, evaluate, learning_curve, load_gbdt,
                    predict, read_table, save_gbdt, time_ordered_split, train_gbdt, train_logreg,
                    write_table)
from .model.metrics import format_report, report_json
from .semantic_features import session_semantics
from .sessionize import Session, UserKey, sessionize
from .simple_features import extract_simple

log = logging.getLogger(__name__)


class StageError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


class ProvenanceError(StageError):
    pass


def file_digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()[:16]


def _require(stage: str, *paths: str | Path | None) -> None:
    for p in paths:
        if p is None or not Path(p).is_file():
            raise StageError(stage, f"missing input file: {p}")


# --------------------------------------------------------------------------
# entries file: JSON lines, a header object then one array per kept entry

ENTRY_FIELDS = ("ip", "epoch", "tz_offset", "method", "path", "protocol", "status", "bytes",
                "referer", "user_agent", "country", "username", "via_web_service", "kind", "article_id")


def write_entries(path, entries: Sequence[tuple[LogEntry, ResourceClass]], **header) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"format": "robotsem-entries", "version": 1, "fields": ENTRY_FIELDS,
                             **header}, sort_keys=True) + "\n")
        for e, rc in entries:
            fh.write(json.dumps([e.ip, e.epoch, e.tz_offset, e.method, e.path, e.protocol, e.status,
                                 e.bytes, e.referer, e.user_agent, e.country, e.username,
                                 e.via_web_service, rc.kind.value, rc.article_id]) + "\n")


def read_entries(path) -> tuple[dict, list[tuple[LogEntry, ResourceClass]]]:
    with open(path, encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        if header.get("format") != "robotsem-entries":
            raise ValueError(f"{path}: not an entries file")
        out = []
        for line in fh:
            (ip, epoch, off, method, p, proto, status, nbytes, ref, ua, cc, user, ws, kind,
             aid) = json.loads(line)
            e = LogEntry(ip, datetime.fromtimestamp(epoch, tz=timezone.utc), method, p, proto, status,
                         nbytes, ref, ua, cc, user, ws, off)
            out.append((e, ResourceClass(ResourceKind(kind), aid)))
    return header, out


def write_sessions(path, sessions: Sequence[Session], **header) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"format": "robotsem-sessions", "version": 1, **header}, sort_keys=True) + "\n")
        for s in sessions:
            fh.write(json.dumps({"id": s.id, "ip": s.key.ip, "user_agent": s.key.user_agent,
                                 "entries": list(s.indexes)}) + "\n")


def read_sessions(path, entries: Sequence[tuple[LogEntry, ResourceClass]]) -> tuple[dict, list[Session]]:
    with open(path, encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        if header.get("format") != "robotsem-sessions":
            raise ValueError(f"{path}: not a sessions file")
        out = []
        for line in fh:
            rec = json.loads(line)
            idx = tuple(rec["entries"])
            out.append(Session(rec["id"], UserKey(rec["ip"], rec["user_agent"]),
                               tuple(entries[i] for i in idx), idx))
    return header, out


def _check_provenance(stage: str, header: dict, key: str, path) -> None:
    want = header.get(key)
    if want is not None and want != file_digest(path):
        raise ProvenanceError(stage, f"{path} does not match the digest recorded in the upstream header")


# --------------------------------------------------------------------------
# stages


def stage_ingest(logs: Sequence[str | Path], out: str | Path, rules=None, dialect: str = "extended"):
    _require("ingest", *logs)
    if rules is not None:
        _require("ingest", rules)
    entries, report = log_ingest.ingest(log_ingest.iter_log_lines(logs), DIALECTS[dialect],
                                        log_ingest.load_rules(rules))
    write_entries(out, entries, dialect=dialect, rules=str(rules or "bundled"),
                  sources=[file_digest(p) for p in logs])
    return report


def stage_sessionize(entries_path, out, timeout: int = 1800, min_requests: int = 3) -> list[Session]:
    _require("sessionize", entries_path)
    _, entries = read_entries(entries_path)
    sessions = sessionize(entries, timeout, min_requests)
    write_sessions(out, sessions, timeout=timeout, min_requests=min_requests,
                   entries_digest=file_digest(entries_path))
    return sessions


def stage_lda_train(corpus_path, out, k=50, alpha=None, beta=0.01, iterations=500, seed=0,
                    stopwords=None, backend=None) -> topic_model.TopicModel:
    _require("lda-train", corpus_path)
    sw = None
    if stopwords is not None:
        _require("lda-train", stopwords)
        sw = frozenset(Path(stopwords).read_text().split())
    corpus = topic_model.build_corpus(topic_model.read_corpus_file(corpus_path), sw)
    model = topic_model.train_lda(corpus, k, alpha, beta, iterations, seed, backend=backend)
    topic_model.save_model(model, out)
    return model


def stage_topics_export(model_path, out, top_m: int = 10) -> None:
    _require("topics-export", model_path)
    topic_model.export_topic_table(topic_model.load_model(model_path), out, top_m)


def build_feature_table(sessions: Sequence[Session], table) -> FeatureTable:
    rows, cov = [], []
    for s in sessions:
        sem = session_semantics(s, table)
        rows.append(extract_simple(s).as_floats() + sem.as_floats())
        cov.append(sem.coverage)
    n = len(sessions)
    return FeatureTable(
        session_ids=[s.id for s in sessions],
        timestamps=np.array([s.start for s in sessions], dtype=np.int64),
        X=np.array(rows, dtype=np.float64).reshape(n, len(FEATURE_NAMES)),
        label=["unlabeled"] * n, label_stage=["None"] * n, label_evidence=[""] * n,
        coverage=np.array(cov, dtype=np.float64),
    )


def stage_features(entries_path, sessions_path, topics_path, out) -> FeatureTable:
    _require("features", entries_path, sessions_path, topics_path)
    _, entries = read_entries(entries_path)
    header, sessions = read_sessions(sessions_path, entries)
    _check_provenance("features", header, "entries_digest", entries_path)
    ft = build_feature_table(sessions, topic_model.load_topic_table(topics_path))
    write_table(ft, out, stage="features", sessions_digest=file_digest(sessions_path),
                topics_digest=file_digest(topics_path))
    return ft


def load_labelers(ua_db=None, robot_lists=None, exclusions=None, manual=None):
    db = labeling.UAPatternDB.load(ua_db)
    lists = labeling.RobotLists.load(
        None if robot_lists is None else [(Path(p).stem, p) for p in robot_lists], exclusions)
    return db, lists, labeling.load_manual_map(manual)


def stage_label(features_path, entries_path, sessions_path, out, ua_db=None, robot_lists=None,
                exclusions=None, manual=None) -> tuple[FeatureTable, labeling.LabelReport]:
    _require("label", features_path, entries_path, sessions_path,
             *[p for p in (ua_db, exclusions, manual) if p is not None], *(robot_lists or ()))
    ft = read_table(features_path)
    _check_provenance("label", ft.meta, "sessions_digest", sessions_path)
    _, entries = read_entries(entries_path)
    _, sessions = read_sessions(sessions_path, entries)
    by_id = {s.id: s for s in sessions}
    missing = [sid for sid in ft.session_ids if sid not in by_id]
    if missing:
        raise StageError("label", f"{len(missing)} feature rows have no session, e.g. {missing[0]}")
    db, lists, manual_map = load_labelers(ua_db, robot_lists, exclusions, manual)
    labels, report = labeling.label_sessions([by_id[sid] for sid in ft.session_ids], db, lists, manual_map)
    ft.label = [lab.verdict.value for lab in labels]
    ft.label_stage = [lab.stage.value for lab in labels]
    ft.label_evidence = [lab.evidence for lab in labels]
    write_table(ft, out, stage="label", features_digest=file_digest(features_path),
                conflicts=report.conflicts)
    return ft, report


def _as_table(ds: LabeledDataset) -> FeatureTable:
    n = len(ds)
    return FeatureTable(list(ds.session_ids), ds.timestamps, ds.X,
                        ["robot" if v else "human" for v in ds.y], ["-"] * n, ["-"] * n,
                        np.ones(n), ds.feature_names)


def stage_split(dataset_path, train_out, test_out, train_frac: float = 0.7):
    _require("split", dataset_path)
    ds = read_table(dataset_path).labeled()
    train, test = time_ordered_split(ds, train_frac)
    digest = file_digest(dataset_path)
    write_table(_as_table(train), train_out, stage="split", part="train", train_frac=train_frac,
                dataset_digest=digest)
    write_table(_as_table(test), test_out, stage="split", part="test", train_frac=train_frac,
                dataset_digest=digest)
    return train, test


def stage_train(train_path, out, params: GBDTParams = GBDTParams(), feature_set: str = "all",
                backend=None):
    _require("train", train_path)
    ds = read_table(train_path).labeled().select(feature_set)
    model = train_gbdt(ds.imputed(), ds.y, params, ds.feature_names, backend=backend)
    save_gbdt(model, out)
    return model


def stage_evaluate(model_path, test_path, out, json_out=None) -> Metrics:
    _require("evaluate", model_path, test_path)
    model = load_gbdt(model_path)
    ds = read_table(test_path).labeled().select(model.feature_names)
    m = evaluate(predict(model, ds.imputed()), ds.y)
    extra = {"model_digest": file_digest(model_path), "test_digest": file_digest(test_path)}
    Path(out).write_text(format_report({"gb": m}, extra))
    if json_out:
        Path(json_out).write_text(report_json({"gb": m}, extra))
    return m


def stage_score_features(dataset_path, out):
    _require("score-features", dataset_path)
    ds = read_table(dataset_path).labeled()
    f, c = anova_f_scores(ds), chi2_scores(ds)
    with open(out, "w", encoding="utf-8") as fh:
        fh.write("rank\tf_feature\tf_score\tchi2_feature\tchi2_score\n")
        for r, ((fn, fs), (cn, cs)) in enumerate(zip(f, c), 1):
            fh.write(f"{r}\t{fn}\t{fs!r}\t{cn}\t{cs!r}\n")
    return f, c


def stage_learning_curve(dataset_path, out, params: GBDTParams = GBDTParams(), train_frac=0.7,
                         feature_set="all", backend=None):
    _require("learning-curve", dataset_path)
    ds = read_table(dataset_path).labeled().select(feature_set)
    pts = learning_curve(ds, params, train_frac=train_frac, backend=backend)
    with open(out, "w", encoding="utf-8") as fh:
        fh.write("fraction\tn_train\ttrain_balanced_accuracy\ttest_balanced_accuracy\n")
        for p in pts:
            fh.write(f"{p.fraction!r}\t{p.n_train}\t{p.train_metric!r}\t{p.test_metric!r}\n")
    return pts


# --------------------------------------------------------------------------
# end to end


@dataclass
class PipelineConfig:
    logs: list[str] = field(default_factory=list)
    corpus: str | None = None
    out_dir: str = "robotsem-out"
    rules: str | None = None
    dialect: str = "extended"
    ua_db: str | None = None
    robot_lists: list[str] | None = None
    exclusions: str | None = None
    manual_labels: str | None = None
    stopwords: str | None = None
    timeout_secs: int = 1800
    min_requests: int = 3
    lda_k: int = 50
    lda_alpha: float | None = None  # None -> 50 / k
    lda_beta: float = 0.01
    lda_iterations: int = 500
    top_m: int = 10
    n_trees: int = 200
    max_depth: int = 3
    learning_rate: float = 0.1
    min_leaf: int = 5
    subsample: float = 1.0
    train_frac: float = 0.7
    feature_set: str = "all"
    seed: int = 0
    backend: str = "auto"

    def validate(self) -> None:
        if self.dialect not in DIALECTS:
            raise ValueError(f"dialect must be one of {sorted(DIALECTS)}")
        if self.feature_set not in FEATURE_SETS:
            raise ValueError(f"feature_set must be one of {sorted(FEATURE_SETS)}")
        if not 0 < self.train_frac < 1:
            raise ValueError("train_frac must lie in (0, 1)")
        if self.timeout_secs <= 0 or self.min_requests < 1:
            raise ValueError("timeout_secs must be > 0 and min_requests >= 1")
        if self.lda_k < 1 or self.lda_iterations < 1 or self.top_m < 1:
            raise ValueError("lda_k, lda_iterations and top_m must be >= 1")
        if self.n_trees < 0 or self.max_depth < 0 or self.min_leaf < 1 or self.learning_rate <= 0:
            raise ValueError("invalid GBDT parameters")
        if self.backend not in ("auto", "numba", "numpy"):
            raise ValueError("backend must be auto, numba or numpy")

    @property
    def gbdt_params(self) -> GBDTParams:
        return GBDTParams(self.n_trees, self.max_depth, self.learning_rate, self.min_leaf,
                          self.subsample, self.seed)

    @classmethod
    def from_file(cls, path: str | Path, **overrides) -> "PipelineConfig":
        data = json.loads(Path(path).read_text())
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        data.update({k: v for k, v in overrides.items() if v is not None})
        cfg = cls(**data)
        cfg.validate()
        return cfg


@dataclass
class PipelineResult:
    paths: dict[str, Path]
    metrics: dict[str, Metrics]
    f_scores: list[tuple[str, float]]
    chi2_scores: list[tuple[str, float]]
    curve: list
    dataset: FeatureTable


def run_pipeline(cfg: PipelineConfig) -> PipelineResult:
    cfg.validate()
    if not cfg.logs:
        raise StageError("pipeline", "no log files configured")
    if cfg.corpus is None:
        raise StageError("pipeline", "no corpus configured")
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    p = {name: out / fname for name, fname in (
        ("entries", "entries.jsonl"), ("ingest_report", "ingest_report.txt"),
        ("sessions", "sessions.jsonl"), ("lda", "model.lda"), ("topics", "topics.tsv"),
        ("features", "features.tsv"), ("dataset", "dataset.tsv"), ("train", "train.tsv"),
        ("test", "test.tsv"), ("model", "model.gbdt"), ("metrics", "metrics.txt"),
        ("metrics_json", "metrics.json"), ("scores", "feature_scores.tsv"),
        ("curve", "learning_curve.tsv"))}
    backend = cfg.backend

    report = stage_ingest(cfg.logs, p["entries"], cfg.rules, cfg.dialect)
    p["ingest_report"].write_text("\n".join(report.as_lines()) + "\n")
    log.info("ingest: %s", " ".join(report.as_lines()))
    sessions = stage_sessionize(p["entries"], p["sessions"], cfg.timeout_secs, cfg.min_requests)
    log.info("sessionize: %d sessions", len(sessions))
    stage_lda_train(cfg.corpus, p["lda"], cfg.lda_k, cfg.lda_alpha, cfg.lda_beta, cfg.lda_iterations,
                    cfg.seed, cfg.stopwords, backend)
    stage_topics_export(p["lda"], p["topics"], cfg.top_m)
    stage_features(p["entries"], p["sessions"], p["topics"], p["features"])
    table, lab_report = stage_label(p["features"], p["entries"], p["sessions"], p["dataset"],
                                    cfg.ua_db, cfg.robot_lists, cfg.exclusions, cfg.manual_labels)
    log.info("label: robot=%d human=%d unlabeled=%d conflicts=%d", lab_report.robot,
             lab_report.human, lab_report.unlabeled, lab_report.conflicts)
    train, test = stage_split(p["dataset"], p["train"], p["test"], cfg.train_frac)
    params = cfg.gbdt_params
    stage_train(p["train"], p["model"], params, cfg.feature_set, backend)

    metrics: dict[str, Metrics] = {}
    for name, names in FEATURE_SETS.items():
        tr, te = train.select(names), test.select(names)
        model = train_gbdt(tr.imputed(), tr.y, params, tr.feature_names, backend=backend)
        metrics[f"gb.{name}"] = evaluate(predict(model, te.imputed()), te.y)
        lr = train_logreg(tr.imputed(), tr.y)
        metrics[f"lr.{name}"] = evaluate(lr.predict(te.imputed()), te.y)
    extra = {"train_rows": len(train), "test_rows": len(test), "seed": cfg.seed,
             "sessions": len(sessions), "labeled": len(train) + len(test),
             "dataset_digest": file_digest(p["dataset"])}
    p["metrics"].write_text(format_report(metrics, extra))
    p["metrics_json"].write_text(report_json(metrics, extra))
    f, c = stage_score_features(p["dataset"], p["scores"])
    curve = stage_learning_curve(p["dataset"], p["curve"], params, cfg.train_frac, cfg.feature_set, backend)
    (out / "config.json").write_text(json.dumps(asdict(cfg), indent=2, sort_keys=True) + "\n")
    return PipelineResult(p, metrics, f, c, curve, table)
