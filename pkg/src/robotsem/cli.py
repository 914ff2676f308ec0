"""Command-line entry point: one subcommand per pipeline stage plus ``pipeline``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from . import __version__, pipeline, synth
from .model import GBDTParams, FEATURE_SETS

log = logging.getLogger("robotsem")


_FMT = argparse.ArgumentDefaultsHelpFormatter


def _gbdt_args(p: argparse.ArgumentParser) -> None:
    d = GBDTParams()
    p.add_argument("--n-trees", type=int, default=d.n_trees)
    p.add_argument("--max-depth", type=int, default=d.max_depth)
    p.add_argument("--learning-rate", type=float, default=d.learning_rate)
    p.add_argument("--min-leaf", type=int, default=d.min_leaf)
    p.add_argument("--subsample", type=float, default=d.subsample)


def _params(a) -> GBDTParams:
    return GBDTParams(a.n_trees, a.max_depth, a.learning_rate, a.min_leaf, a.subsample, a.seed)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="robotsem", description=__doc__, formatter_class=_FMT)
    ap.add_argument("--version", action="version", version=f"robotsem {__version__}")
    ap.add_argument("--seed", type=int, default=0, help="seed for every stochastic stage")
    ap.add_argument("--backend", choices=("auto", "numba", "numpy"), default="auto",
                    help="kernel backend; auto honours ROBOTSEM_DISABLE_NUMBA")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse logs and keep article requests", formatter_class=_FMT)
    p.add_argument("logs", nargs="+", help="log files (gzip detected automatically)")
    p.add_argument("-o", "--output", required=True, help="entries file (JSON lines)")
    p.add_argument("--rules", help="resource rule file; bundled /doi/ rules when omitted")
    p.add_argument("--dialect", choices=sorted(pipeline.DIALECTS), default="extended")
    p.add_argument("--report", help="write the key=value ingest report here instead of stderr")

    p = sub.add_parser("sessionize", help="group entries into sessions", formatter_class=_FMT)
    p.add_argument("entries")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--timeout-secs", type=int, default=1800)
    p.add_argument("--min-requests", type=int, default=3)

    p = sub.add_parser("lda-train", help="train the topic model on the corpus", formatter_class=_FMT)
    p.add_argument("corpus", help="doc_id<TAB>text per line")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--k", type=int, default=50)
    p.add_argument("--alpha", type=float, default=None, help="document-topic prior; None means 50/k")
    p.add_argument("--beta", type=float, default=0.01)
    p.add_argument("--iterations", type=int, default=500)
    p.add_argument("--stopwords", help="whitespace-separated stop-word file; bundled list when omitted")

    p = sub.add_parser("topics-export", help="write the top-m topic table", formatter_class=_FMT)
    p.add_argument("model")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--top-m", type=int, default=10)

    p = sub.add_parser("features", help="compute the 18 session features", formatter_class=_FMT)
    p.add_argument("--entries", required=True)
    p.add_argument("--sessions", required=True)
    p.add_argument("--topics", required=True)
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("label", help="attach robot/human/unlabeled labels", formatter_class=_FMT)
    p.add_argument("features")
    p.add_argument("--entries", required=True)
    p.add_argument("--sessions", required=True)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--ua-db", help="user-agent class database; bundled when omitted")
    p.add_argument("--robot-list", action="append", dest="robot_lists",
                   help="robot regex list (repeatable); bundled lists when omitted")
    p.add_argument("--exclusions", help="patterns removed from the robot lists")
    p.add_argument("--manual", help="ua<TAB>robot|human verdicts for Unknown agents")

    p = sub.add_parser("split", help="time-ordered train/test split", formatter_class=_FMT)
    p.add_argument("dataset")
    p.add_argument("--train-out", required=True)
    p.add_argument("--test-out", required=True)
    p.add_argument("--train-frac", type=float, default=0.7)

    p = sub.add_parser("train", help="fit the gradient boosted trees", formatter_class=_FMT)
    p.add_argument("train")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--feature-set", choices=sorted(FEATURE_SETS), default="all")
    _gbdt_args(p)

    p = sub.add_parser("evaluate", help="score a model on a test table", formatter_class=_FMT)
    p.add_argument("model")
    p.add_argument("test")
    p.add_argument("-o", "--output", required=True, help="key=value metrics report")
    p.add_argument("--json", help="also write the structured JSON report")

    p = sub.add_parser("score-features", help="F-test and chi-square feature scores", formatter_class=_FMT)
    p.add_argument("dataset")
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("learning-curve", help="balanced accuracy vs training size", formatter_class=_FMT)
    p.add_argument("dataset")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--train-frac", type=float, default=0.7)
    p.add_argument("--feature-set", choices=sorted(FEATURE_SETS), default="all")
    _gbdt_args(p)

    p = sub.add_parser("synth", help="generate a labeled synthetic benchmark", formatter_class=_FMT)
    p.add_argument("-o", "--output", required=True, help="target directory")
    d = synth.SynthConfig()
    p.add_argument("--n-docs", type=int, default=d.n_docs)
    p.add_argument("--n-clusters", type=int, default=d.n_clusters)
    p.add_argument("--n-human", type=int, default=d.n_human_sessions)
    p.add_argument("--n-bot", type=int, default=d.n_bot_sessions)
    p.add_argument("--stickiness", type=float, default=d.human_cluster_stickiness)
    p.add_argument("--bot-uniformity", type=float, default=d.bot_uniformity)
    p.add_argument("--login-fraction", type=float, default=d.login_fraction)
    p.add_argument("--mask-bots", action="store_true", help="give robots browser user-agents")

    p = sub.add_parser("pipeline", help="run every stage end to end", formatter_class=_FMT,
                       description="Runs all stages. Settings come from --config (JSON with "
                                   "PipelineConfig keys) and are overridden by flags.")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--logs", nargs="+")
    p.add_argument("--corpus")
    p.add_argument("--synth-dir", help="use access.log and corpus.tsv from a synth directory")
    p.add_argument("--out-dir")
    p.add_argument("--lda-k", type=int)
    p.add_argument("--lda-iterations", type=int)
    p.add_argument("--n-trees", type=int)
    p.add_argument("--timeout-secs", type=int)
    p.add_argument("--min-requests", type=int)
    p.add_argument("--train-frac", type=float)
    _document_defaults(ap)
    return ap


def _document_defaults(parser: argparse.ArgumentParser) -> None:
    """Give help text to bare options so --help shows every default."""
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            for sub in action.choices.values():
                _document_defaults(sub)
        elif action.help is None and action.option_strings and action.default not in (None, False):
            action.help = "(default: %(default)s)"


def _pipeline_config(a) -> pipeline.PipelineConfig:
    overrides = {
        "logs": a.logs, "corpus": a.corpus, "out_dir": a.out_dir, "lda_k": a.lda_k,
        "lda_iterations": a.lda_iterations, "n_trees": a.n_trees, "timeout_secs": a.timeout_secs,
        "min_requests": a.min_requests, "train_frac": a.train_frac, "seed": a.seed,
        "backend": a.backend,
    }
    if a.synth_dir:
        d = Path(a.synth_dir)
        overrides["logs"] = overrides["logs"] or [str(d / "access.log")]
        overrides["corpus"] = overrides["corpus"] or str(d / "corpus.tsv")
    if a.config:
        return pipeline.PipelineConfig.from_file(a.config, **overrides)
    cfg = pipeline.PipelineConfig(**{k: v for k, v in overrides.items() if v is not None})
    cfg.validate()
    return cfg


def run(a) -> int:
    backend = a.backend
    cmd = a.command
    if cmd == "ingest":
        report = pipeline.stage_ingest(a.logs, a.output, a.rules, a.dialect)
        text = "\n".join(report.as_lines()) + "\n"
        if a.report:
            Path(a.report).write_text(text)
        else:
            sys.stderr.write(text)
    elif cmd == "sessionize":
        s = pipeline.stage_sessionize(a.entries, a.output, a.timeout_secs, a.min_requests)
        log.info("%d sessions", len(s))
    elif cmd == "lda-train":
        pipeline.stage_lda_train(a.corpus, a.output, a.k, a.alpha, a.beta, a.iterations, a.seed,
                                 a.stopwords, backend)
    elif cmd == "topics-export":
        pipeline.stage_topics_export(a.model, a.output, a.top_m)
    elif cmd == "features":
        pipeline.stage_features(a.entries, a.sessions, a.topics, a.output)
    elif cmd == "label":
        _, rep = pipeline.stage_label(a.features, a.entries, a.sessions, a.output, a.ua_db,
                                      a.robot_lists, a.exclusions, a.manual)
        sys.stderr.write(f"robot={rep.robot}\nhuman={rep.human}\nunlabeled={rep.unlabeled}\n"
                         f"conflicts={rep.conflicts}\n")
    elif cmd == "split":
        pipeline.stage_split(a.dataset, a.train_out, a.test_out, a.train_frac)
    elif cmd == "train":
        pipeline.stage_train(a.train, a.output, _params(a), a.feature_set, backend)
    elif cmd == "evaluate":
        pipeline.stage_evaluate(a.model, a.test, a.output, a.json)
    elif cmd == "score-features":
        pipeline.stage_score_features(a.dataset, a.output)
    elif cmd == "learning-curve":
        pipeline.stage_learning_curve(a.dataset, a.output, _params(a), a.train_frac, a.feature_set, backend)
    elif cmd == "synth":
        cfg = dataclasses.replace(
            synth.SynthConfig(), n_docs=a.n_docs, n_clusters=a.n_clusters,
            n_human_sessions=a.n_human, n_bot_sessions=a.n_bot,
            human_cluster_stickiness=a.stickiness, bot_uniformity=a.bot_uniformity,
            login_fraction=a.login_fraction, mask_bots=a.mask_bots, seed=a.seed)
        synth.write_output(synth.generate(cfg), a.output, cfg)
    elif cmd == "pipeline":
        res = pipeline.run_pipeline(_pipeline_config(a))
        sys.stdout.write(json.dumps({k: round(m.balanced_accuracy, 4) for k, m in res.metrics.items()})
                         + "\n")
    return 0


def main(argv=None) -> int:
    a = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return run(a)
    except pipeline.StageError as exc:
        print(f"robotsem: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"robotsem {a.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
