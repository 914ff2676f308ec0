"""LDA over the article corpus via collapsed Gibbs sampling, plus top-m export."""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
from scipy.special import gammaln

from ._accel import resolve_backend
from ._lda_kernels import KERNELS

MODEL_MAGIC = "robotsem-lda"
MODEL_VERSION = 1
DEFAULT_TOP_M = 10


class EmptyCorpus(ValueError):
    pass


class EmptyDocument(ValueError):
    pass


class InvalidHyperparameter(ValueError):
    pass


@dataclass
class Corpus:
    doc_ids: list[str]
    documents: list[np.ndarray]  # int64 vocabulary indexes per document
    vocabulary: list[str]

    def __post_init__(self):
        if len(set(self.doc_ids)) != len(self.doc_ids):
            raise ValueError("doc_ids must be unique")
        V = len(self.vocabulary)
        for doc_id, toks in zip(self.doc_ids, self.documents):
            if len(toks) == 0:
                raise ValueError(f"document {doc_id!r} is empty")
            if toks.min() < 0 or toks.max() >= V:
                raise ValueError(f"document {doc_id!r} has out-of-range token ids")

    def __len__(self) -> int:
        return len(self.doc_ids)

    @property
    def n_tokens(self) -> int:
        return int(sum(len(d) for d in self.documents))


def default_stopwords() -> frozenset[str]:
    text = resources.files("robotsem.data").joinpath("stopwords.txt").read_text()
    return frozenset(w.strip() for w in text.split() if w.strip())


_SPLIT = re.compile(r"[^0-9a-z]+")


def tokenize(text: str, stopwords: frozenset[str] = frozenset(), min_len: int = 3) -> list[str]:
    return [t for t in _SPLIT.split(text.lower()) if len(t) >= min_len and t not in stopwords]


def build_corpus(
    raw: Iterable[tuple[str, str]],
    stopwords: frozenset[str] | None = None,
    min_len: int = 3,
    min_df: int = 2,
) -> Corpus:
    """Tokenize ``(doc_id, text)`` pairs; drop rare terms and then empty documents."""
    if stopwords is None:
        stopwords = default_stopwords()
    ids, toks = [], []
    df: Counter = Counter()
    for doc_id, text in raw:
        t = tokenize(text, stopwords, min_len)
        ids.append(doc_id)
        toks.append(t)
        df.update(set(t))
    vocab = sorted(w for w, c in df.items() if c >= min_df)
    index = {w: i for i, w in enumerate(vocab)}
    keep_ids, docs = [], []
    for doc_id, t in zip(ids, toks):
        arr = np.array([index[w] for w in t if w in index], dtype=np.int64)
        if len(arr):
            keep_ids.append(doc_id)
            docs.append(arr)
    if not docs:
        raise EmptyCorpus("no documents survive preprocessing")
    return Corpus(keep_ids, docs, vocab)


def read_corpus_file(path: str | Path) -> list[tuple[str, str]]:
    """``doc_id TAB text`` per line."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line.strip():
                continue
            doc_id, _, text = line.partition("\t")
            out.append((doc_id, text))
    return out


@dataclass
class TopicModel:
    k: int
    alpha: float
    beta: float
    seed: int
    iterations: int
    vocabulary: list[str]
    doc_ids: list[str]
    topic_word: np.ndarray  # (k, V)
    doc_topic: np.ndarray  # (D, k)
    loglik: list[float] = field(default_factory=list)

    @property
    def V(self) -> int:
        return len(self.vocabulary)

    def theta(self, doc_id: str) -> np.ndarray:
        return self.doc_topic[self.doc_ids.index(doc_id)]


@dataclass
class GibbsState:
    """Mutable sampler state, exposed to per-sweep callbacks."""

    words: np.ndarray
    docs: np.ndarray
    z: np.ndarray
    n_dk: np.ndarray
    n_wk: np.ndarray
    n_k: np.ndarray

    def counts_consistent(self) -> bool:
        N = len(self.words)
        return (
            int(self.n_wk.sum()) == N
            and int(self.n_dk.sum()) == N
            and int(self.n_k.sum()) == N
            and bool((self.n_wk.sum(axis=0) == self.n_k).all())
            and bool((self.n_dk >= 0).all() and (self.n_wk >= 0).all())
        )


def _check_hyper(k: int, alpha: float, beta: float, iterations: int) -> None:
    if k < 1:
        raise InvalidHyperparameter("k must be >= 1")
    if not (alpha > 0 and beta > 0):
        raise InvalidHyperparameter("alpha and beta must be > 0")
    if iterations < 1:
        raise InvalidHyperparameter("iterations must be >= 1")


def joint_loglik(state: GibbsState, alpha: float, beta: float) -> float:
    """log p(w, z) under the collapsed model."""
    V, k = state.n_wk.shape
    D = state.n_dk.shape[0]
    n_d = state.n_dk.sum(axis=1)
    lw = (k * (gammaln(V * beta) - V * gammaln(beta))
          + gammaln(state.n_wk + beta).sum() - gammaln(state.n_k + V * beta).sum())
    lz = (D * (gammaln(k * alpha) - k * gammaln(alpha))
          + gammaln(state.n_dk + alpha).sum() - gammaln(n_d + k * alpha).sum())
    return float(lw + lz)


def train_lda(
    corpus: Corpus,
    k: int = 50,
    alpha: float | None = None,
    beta: float = 0.01,
    iterations: int = 500,
    seed: int = 0,
    backend: str | None = None,
    on_sweep: Callable[[int, GibbsState], None] | None = None,
    track_loglik: bool = True,
) -> TopicModel:
    if len(corpus) == 0:
        raise EmptyCorpus("corpus has no documents")
    if alpha is None:
        alpha = 50.0 / k if k >= 1 else 0.0
    _check_hyper(k, alpha, beta, iterations)
    sweep, _ = KERNELS[resolve_backend(backend)]

    V = len(corpus.vocabulary)
    D = len(corpus)
    words = np.concatenate(corpus.documents).astype(np.int64)
    docs = np.repeat(np.arange(D, dtype=np.int64), [len(d) for d in corpus.documents])
    rng = np.random.default_rng(seed)
    z = rng.integers(0, k, size=len(words)).astype(np.int64)

    n_dk = np.zeros((D, k), dtype=np.int64)
    n_wk = np.zeros((V, k), dtype=np.int64)
    np.add.at(n_dk, (docs, z), 1)
    np.add.at(n_wk, (words, z), 1)
    n_k = n_wk.sum(axis=0)
    state = GibbsState(words, docs, z, n_dk, n_wk, n_k)

    loglik = []
    vbeta = V * beta
    for it in range(iterations):
        sweep(words, docs, z, n_dk, n_wk, n_k, float(alpha), float(beta), float(vbeta),
              rng.random(len(words)))
        if track_loglik:
            loglik.append(joint_loglik(state, alpha, beta))
        if on_sweep is not None:
            on_sweep(it, state)

    doc_topic = (n_dk + alpha) / (n_dk.sum(axis=1, keepdims=True) + k * alpha)
    topic_word = (n_wk.T + beta) / (n_k[:, None] + vbeta)
    return TopicModel(k, float(alpha), float(beta), seed, iterations,
                      list(corpus.vocabulary), list(corpus.doc_ids),
                      topic_word, doc_topic, loglik)


def infer_doc_topics(
    model: TopicModel,
    tokens: Sequence[int],
    iterations: int = 100,
    seed: int = 0,
    burn_in: int | None = None,
    backend: str | None = None,
) -> np.ndarray:
    """Fold a new document in against the trained topic-word matrix."""
    words = np.asarray(tokens, dtype=np.int64)
    if words.size == 0:
        raise EmptyDocument("cannot infer topics of an empty document")
    if words.min() < 0 or words.max() >= model.V:
        raise ValueError("token index out of vocabulary range")
    if model.k == 1:
        return np.ones(1)
    if burn_in is None:
        burn_in = iterations // 2
    _, fold_in = KERNELS[resolve_backend(backend)]
    rng = np.random.default_rng(seed)
    z = rng.integers(0, model.k, size=len(words)).astype(np.int64)
    n_k_doc = np.bincount(z, minlength=model.k).astype(np.int64)
    phi = np.ascontiguousarray(model.topic_word.T)
    uniforms = rng.random(iterations * len(words))
    theta = fold_in(words, z, n_k_doc, phi, model.alpha, uniforms, iterations, burn_in)
    return theta / theta.sum()


# --------------------------------------------------------------------------
# sparse top-m vectors


@dataclass(frozen=True)
class SparseTopicVector:
    entries: tuple[tuple[int, float], ...]

    def __post_init__(self):
        ids = [t for t, _ in self.entries]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate topic ids")

    def as_dict(self) -> dict[int, float]:
        return dict(self.entries)

    def __len__(self) -> int:
        return len(self.entries)


def truncate_top_m(theta: Sequence[float] | np.ndarray | Mapping[int, float], m: int = DEFAULT_TOP_M) -> SparseTopicVector:
    """Keep the ``m`` most probable topics (ties to the lower id); no renormalization."""
    if m < 1:
        raise ValueError("m must be >= 1")
    items = theta.items() if isinstance(theta, Mapping) else enumerate(theta)
    nonzero = [(int(t), float(p)) for t, p in items if p > 0]
    nonzero.sort(key=lambda tp: (-tp[1], tp[0]))
    return SparseTopicVector(tuple(nonzero[:m]))


# --------------------------------------------------------------------------
# persistence
#
# Model file (UTF-8 text, one record per line, floats in repr form):
#   robotsem-lda 1
#   k=<int> alpha=<float> beta=<float> seed=<int> iterations=<int> V=<int> D=<int>
#   V lines:  vocabulary term
#   k lines:  topic_word row, V space-separated floats
#   D lines:  doc_id TAB doc_topic row (k space-separated floats)


def save_model(model: TopicModel, path: str | Path) -> None:
    D = len(model.doc_ids)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{MODEL_MAGIC} {MODEL_VERSION}\n")
        fh.write(f"k={model.k} alpha={model.alpha!r} beta={model.beta!r} seed={model.seed} "
                 f"iterations={model.iterations} V={model.V} D={D}\n")
        for term in model.vocabulary:
            fh.write(term + "\n")
        for row in model.topic_word:
            fh.write(" ".join(repr(float(x)) for x in row) + "\n")
        for doc_id, row in zip(model.doc_ids, model.doc_topic):
            fh.write(doc_id + "\t" + " ".join(repr(float(x)) for x in row) + "\n")


def load_model(path: str | Path) -> TopicModel:
    with open(path, encoding="utf-8") as fh:
        magic = fh.readline().split()
        if len(magic) != 2 or magic[0] != MODEL_MAGIC:
            raise ValueError(f"{path}: not a topic model file")
        if int(magic[1]) != MODEL_VERSION:
            raise ValueError(f"{path}: unsupported model version {magic[1]}")
        hdr = dict(kv.split("=", 1) for kv in fh.readline().split())
        k, V, D = int(hdr["k"]), int(hdr["V"]), int(hdr["D"])
        vocab = [fh.readline().rstrip("\n") for _ in range(V)]
        tw = np.array([[float(x) for x in fh.readline().split()] for _ in range(k)])
        ids, rows = [], []
        for _ in range(D):
            doc_id, _, vals = fh.readline().rstrip("\n").partition("\t")
            ids.append(doc_id)
            rows.append([float(x) for x in vals.split()])
    return TopicModel(k, float(hdr["alpha"]), float(hdr["beta"]), int(hdr["seed"]),
                      int(hdr["iterations"]), vocab, ids, tw.reshape(k, V),
                      np.array(rows).reshape(D, k))


def export_topic_table(model: TopicModel, path: str | Path, m: int = DEFAULT_TOP_M) -> None:
    """``doc_id TAB topic:prob,...`` with the top-m topics of each document."""
    with open(path, "w", encoding="utf-8") as fh:
        for doc_id, row in zip(model.doc_ids, model.doc_topic):
            vec = truncate_top_m(row, m)
            fh.write(doc_id + "\t" + ",".join(f"{t}:{p!r}" for t, p in vec.entries) + "\n")


def load_topic_table(path: str | Path) -> dict[str, SparseTopicVector]:
    table = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            doc_id, _, pairs = line.partition("\t")
            entries = []
            for item in filter(None, pairs.split(",")):
                t, p = item.split(":")
                entries.append((int(t), float(p)))
            table[doc_id] = SparseTopicVector(tuple(entries))
    return table
