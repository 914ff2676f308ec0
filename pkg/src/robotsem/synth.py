"""Labeled synthetic corpora and access logs.

Humans take sticky walks inside one topical cluster with irregular timing;
robots sample articles across the whole library at near-constant pace. A
configurable share of robots copies human timing so that the classical
features alone cannot separate every robot.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .log_ingest import EXTENDED, LogEntry, render_line
from .sessionize import UserKey, session_id


class InvalidConfig(ValueError):
    pass


@dataclass(frozen=True)
class SynthConfig:
    n_docs: int = 1000
    vocab_size: int = 2000
    n_clusters: int = 5
    subtopics_per_cluster: int = 4
    doc_length: int = 120
    background_weight: float = 0.1
    n_human_sessions: int = 500
    n_bot_sessions: int = 500
    human_cluster_stickiness: float = 0.9
    human_subtopic_stickiness: float = 0.6
    human_same_article: float = 0.35
    bot_uniformity: float = 0.9
    human_length_mean: float = 7.0
    bot_length_mean: float = 10.0
    human_gap_median: float = 90.0
    human_gap_sigma: float = 1.0
    bot_gap_range: tuple[float, float] = (2.0, 60.0)
    bot_gap_jitter: float = 0.1
    bot_human_timing: float = 0.35
    revisit_prob: float = 0.08
    noise_requests: float = 0.3
    login_fraction: float = 1.0
    sessions_per_user: float = 1.4
    mask_bots: bool = False
    start: str = "2014-01-01T00:00:00+00:00"
    days: int = 31
    tz_offset: int = 7200
    seed: int = 0

    def validate(self) -> None:
        for name in ("n_docs", "vocab_size", "n_clusters", "subtopics_per_cluster", "doc_length", "days"):
            if getattr(self, name) < 1:
                raise InvalidConfig(f"{name} must be >= 1")
        for name in ("n_human_sessions", "n_bot_sessions"):
            if getattr(self, name) < 0:
                raise InvalidConfig(f"{name} must be >= 0")
        if self.n_human_sessions + self.n_bot_sessions < 1:
            raise InvalidConfig("need at least one session")
        for name in ("background_weight", "human_cluster_stickiness", "human_subtopic_stickiness",
                     "human_same_article", "bot_uniformity", "bot_human_timing", "revisit_prob",
                     "login_fraction", "bot_gap_jitter"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InvalidConfig(f"{name} must lie in [0, 1]")
        if self.n_docs < self.n_clusters:
            raise InvalidConfig("need at least one document per cluster")
        if self.vocab_size < 4 * self.n_clusters * self.subtopics_per_cluster:
            raise InvalidConfig("vocab_size too small for the requested topic structure")
        lo, hi = self.bot_gap_range
        if not 0 < lo <= hi < 1800:
            raise InvalidConfig("bot_gap_range must satisfy 0 < lo <= hi < 1800")
        if self.human_length_mean < 3 or self.bot_length_mean < 3:
            raise InvalidConfig("mean session lengths must be >= 3")
        if self.sessions_per_user < 1:
            raise InvalidConfig("sessions_per_user must be >= 1")


HUMAN_AGENTS = (
    "Mozilla/5.0 (Windows NT 10.0; Win64; x64) AppleWebKit/537.36 (KHTML, like Gecko) Chrome/55.0.2883.87 Safari/537.36",
    "Mozilla/5.0 (Windows NT 6.1; WOW64; rv:50.0) Gecko/20100101 Firefox/50.0",
    "Mozilla/5.0 (Macintosh; Intel Mac OS X 10_12_2) AppleWebKit/602.3.12 (KHTML, like Gecko) Version/10.0.2 Safari/602.3.12",
    "Mozilla/5.0 (Windows NT 10.0; Win64; x64) AppleWebKit/537.36 (KHTML, like Gecko) Chrome/51.0.2704.79 Safari/537.36 Edge/14.14393",
    "Mozilla/5.0 (Windows NT 6.1; WOW64; Trident/7.0; rv:11.0) like Gecko MSIE 11.0",
    "Mozilla/5.0 (X11; Linux x86_64) AppleWebKit/537.36 (KHTML, like Gecko) Chrome/54.0.2840.100 Safari/537.36",
    "Mozilla/5.0 (X11; Ubuntu; Linux x86_64; rv:49.0) Gecko/20100101 Firefox/49.0",
    "Mozilla/5.0 (iPhone; CPU iPhone OS 10_2 like Mac OS X) AppleWebKit/602.3.12 (KHTML, like Gecko) Version/10.0 Mobile/14C92 Safari/602.1",
    "Mozilla/5.0 (Linux; Android 6.0.1; SM-G920F Build/MMB29K) AppleWebKit/537.36 (KHTML, like Gecko) Chrome/55.0.2883.91 Mobile Safari/537.36",
    "Mozilla/5.0 (iPad; CPU OS 10_2 like Mac OS X) AppleWebKit/602.3.12 (KHTML, like Gecko) Version/10.0 Mobile/14C92 Safari/602.1",
)

BOT_AGENTS = (
    "Mozilla/5.0 (compatible; Googlebot/2.1; +http://www.google.com/bot.html)",
    "Googlebot/2.1 (+http://www.google.com/bot.html)",
    "Mozilla/5.0 (compatible; bingbot/2.0; +http://www.bing.com/bingbot.htm)",
    "Mozilla/5.0 (compatible; Yahoo! Slurp; http://help.yahoo.com/help/us/ysearch/slurp)",
    "Mozilla/5.0 (compatible; Baiduspider/2.0; +http://www.baidu.com/search/spider.html)",
    "Mozilla/5.0 (compatible; YandexBot/3.0; +http://yandex.com/bots)",
    "Mozilla/5.0 (compatible; AhrefsBot/5.2; +http://ahrefs.com/robot/)",
    "Mozilla/5.0 (compatible; SemrushBot/1.2~bl; +http://www.semrush.com/bot.html)",
    "Sogou web spider/4.0(+http://www.sogou.com/docs/help/webmasters.htm#07)",
    "curl/7.47.0",
    "Wget/1.17.1 (linux-gnu)",
    "python-requests/2.12.4",
    "Python-urllib/3.5",
    "Java/1.8.0_111",
    "libwww-perl/6.15",
    "Apache-HttpClient/4.5.2 (Java/1.8.0_111)",
    "Go-http-client/1.1",
    "Scrapy/1.3.0 (+http://scrapy.org)",
    "Zotero/4.0",
    "WordPress/4.7; http://blog.example.org",
    "Mendeley Desktop/1.17.6",
    "okhttp/3.5.0",
    "Feedly/1.0 (+http://www.feedly.com/fetcher.html; like FeedFetcher-Google)",
    "HTTrack Website Copier/3.x",
)

COUNTRIES = ("GR", "US", "GB", "DE", "FR", "CN", "IN", "JP", "BR", "NL", "IT", "ES")

# resource kind -> (path prefix, human weight, bot weight)
_KINDS = (
    ("abs", 0.45, 0.55),
    ("full", 0.2, 0.1),
    ("pdf", 0.25, 0.3),
    ("ref", 0.05, 0.03),
    ("suppl", 0.05, 0.02),
)
_NOISE_PATHS = ("/", "/search?q=", "/action/showLogin", "/about", "/toc/journal/")


def _make_vocabulary(rng: np.random.Generator, size: int) -> list[str]:
    cons, vows = "bcdfghklmnprstvz", "aeiou"
    words: set[str] = set()
    while len(words) < size:
        n_syl = int(rng.integers(2, 4))
        w = "".join(cons[rng.integers(len(cons))] + vows[rng.integers(len(vows))] for _ in range(n_syl))
        words.add(w + cons[rng.integers(len(cons))])
    return sorted(words)


@dataclass
class SynthSession:
    session_id: str
    label: str  # robot | human
    ip: str
    user_agent: str
    start: int
    entries: list[LogEntry] = field(repr=False)
    clusters: list[int] = field(repr=False)


@dataclass
class SynthOutput:
    corpus: list[tuple[str, str]]
    doc_cluster: list[int]
    sessions: list[SynthSession]
    log_lines: list[str]

    def label_lines(self) -> list[str]:
        return [f"{s.session_id}\t{s.label}\t{s.ip}\t{s.user_agent}\t{s.start}" for s in self.sessions]


class _Generator:
    def __init__(self, cfg: SynthConfig):
        self.cfg = cfg
        self.rng = np.random.default_rng(cfg.seed)
        self.t0 = int(datetime.fromisoformat(cfg.start).astimezone(timezone.utc).timestamp())

    # -- corpus -------------------------------------------------------------
    def corpus(self):
        cfg, rng = self.cfg, self.rng
        vocab = _make_vocabulary(rng, cfg.vocab_size)
        n_sub = cfg.n_clusters * cfg.subtopics_per_cluster
        n_background = max(1, cfg.vocab_size // 10)
        background = np.arange(n_background)
        blocks = np.array_split(np.arange(n_background, cfg.vocab_size), n_sub)
        zipf = [1.0 / np.arange(1, len(b) + 1) ** 0.8 for b in blocks]
        zipf = [z / z.sum() for z in zipf]

        doc_cluster = [i % cfg.n_clusters for i in range(cfg.n_docs)]
        rng.shuffle(doc_cluster)
        docs, doc_sub = [], []
        for i in range(cfg.n_docs):
            c = doc_cluster[i]
            mix = rng.dirichlet(np.full(cfg.subtopics_per_cluster, 0.3))
            length = max(20, int(rng.poisson(cfg.doc_length)))
            is_bg = rng.random(length) < cfg.background_weight
            subs = c * cfg.subtopics_per_cluster + rng.choice(cfg.subtopics_per_cluster, size=length, p=mix)
            ids = rng.choice(background, size=length)
            for s in np.unique(subs[~is_bg]):
                sel = ~is_bg & (subs == s)
                ids[sel] = blocks[s][rng.choice(len(blocks[s]), size=int(sel.sum()), p=zipf[s])]
            docs.append((f"10.5555/syn.{i:05d}", " ".join(vocab[j] for j in ids)))
            doc_sub.append(int(np.argmax(mix)))
        self.doc_ids = [d for d, _ in docs]
        self.doc_cluster = np.array(doc_cluster)
        self.doc_sub = np.array(doc_sub)
        self.by_cluster = [np.flatnonzero(self.doc_cluster == c) for c in range(cfg.n_clusters)]
        return docs

    # -- traffic ------------------------------------------------------------
    def _unique_ip(self, seen: set[str], bot: bool) -> str:
        while True:
            a = (66, 157, 207, 40)[int(self.rng.integers(4))] if bot else int(self.rng.integers(11, 223))
            ip = f"{a}.{self.rng.integers(256)}.{self.rng.integers(256)}.{self.rng.integers(1, 255)}"
            if ip not in seen:
                seen.add(ip)
                return ip

    def _length(self, mean: float) -> int:
        return 3 + int(self.rng.geometric(1.0 / (mean - 2.0))) - 1

    def _human_gaps(self, n: int) -> np.ndarray:
        g = self.rng.lognormal(np.log(self.cfg.human_gap_median), self.cfg.human_gap_sigma, size=n)
        return np.clip(np.round(g), 1, 1500).astype(np.int64)

    def _bot_gaps(self, n: int) -> np.ndarray:
        lo, hi = self.cfg.bot_gap_range
        base = self.rng.uniform(lo, hi)
        g = base * (1.0 + self.cfg.bot_gap_jitter * self.rng.uniform(-1, 1, size=n))
        return np.clip(np.round(g), 1, 1500).astype(np.int64)

    def _kind(self, bot: bool) -> str:
        w = np.array([b if bot else h for _, h, b in _KINDS])
        return _KINDS[int(self.rng.choice(len(_KINDS), p=w / w.sum()))][0]

    def _human_pages(self, n: int) -> list[int]:
        cfg, rng = self.cfg, self.rng
        cluster = int(rng.integers(cfg.n_clusters))
        doc = int(rng.choice(self.by_cluster[cluster]))
        pages = [doc]
        while len(pages) < n:
            u = rng.random()
            if u < cfg.human_same_article:
                pass  # another format of the same article
            elif rng.random() < cfg.human_cluster_stickiness:
                pool = self.by_cluster[cluster]
                if rng.random() < cfg.human_subtopic_stickiness:
                    same = pool[self.doc_sub[pool] == self.doc_sub[doc]]
                    pool = same if len(same) else pool
                doc = int(rng.choice(pool))
            else:
                cluster = int(rng.integers(cfg.n_clusters))
                doc = int(rng.choice(self.by_cluster[cluster]))
            pages.append(doc)
        return pages

    def _bot_pages(self, n: int) -> list[int]:
        cfg, rng = self.cfg, self.rng
        home = int(rng.integers(cfg.n_clusters))
        return [int(rng.integers(cfg.n_docs)) if rng.random() < cfg.bot_uniformity
                else int(rng.choice(self.by_cluster[home])) for _ in range(n)]

    def _status(self, bot: bool) -> int:
        p = (0.85, 0.05, 0.09, 0.01) if bot else (0.93, 0.04, 0.028, 0.002)
        bucket = int(self.rng.choice(4, p=p))
        return (200, 301, 404, 503)[bucket] if bucket else (200 if self.rng.random() < 0.9 else 206)

    def sessions(self) -> tuple[list[SynthSession], list[tuple[int, int, LogEntry]]]:
        cfg, rng = self.cfg, self.rng
        span = cfg.days * 86400
        seen_ips: set[str] = set()
        out: list[SynthSession] = []
        noise: list[tuple[int, int, LogEntry]] = []
        for bot, count in ((False, cfg.n_human_sessions), (True, cfg.n_bot_sessions)):
            n_users = max(1, int(round(count / cfg.sessions_per_user))) if count else 0
            owners = np.sort(np.concatenate([np.arange(n_users), rng.integers(0, n_users, size=count - n_users)])
                             if count > n_users else np.arange(count))
            users = {}
            for u in np.unique(owners):
                if bot and not cfg.mask_bots:
                    ua = BOT_AGENTS[int(rng.integers(len(BOT_AGENTS)))]
                else:
                    ua = HUMAN_AGENTS[int(rng.integers(len(HUMAN_AGENTS)))]
                users[int(u)] = dict(
                    ip=self._unique_ip(seen_ips, bot), ua=ua,
                    country=COUNTRIES[int(rng.integers(len(COUNTRIES)))],
                    username=None if bot or rng.random() >= cfg.login_fraction else f"user{len(seen_ips):05d}",
                    clock=self.t0 + int(rng.integers(0, span // 2)),
                    mimic=bot and rng.random() < cfg.bot_human_timing,
                    api=rng.random() < (0.15 if bot else 0.02),
                    roaming=bot and rng.random() < 0.1,
                )
            for u in owners:
                user = users[int(u)]
                n = self._length(cfg.bot_length_mean if bot else cfg.human_length_mean)
                pages = self._bot_pages(n) if bot else self._human_pages(n)
                gaps = self._human_gaps(n - 1) if (not bot or user["mimic"]) else self._bot_gaps(n - 1)
                times = user["clock"] + np.concatenate([[0], np.cumsum(gaps)])
                entries = []
                prev = []
                for i, (doc, t) in enumerate(zip(pages, times)):
                    kind = self._kind(bot)
                    path = f"/doi/{kind}/{self.doc_ids[doc]}"
                    if prev and rng.random() < cfg.revisit_prob:
                        path = prev[int(rng.integers(len(prev)))]
                    prev.append(path)
                    country = (COUNTRIES[int(rng.integers(len(COUNTRIES)))] if user["roaming"]
                               else user["country"])
                    entries.append(self._entry(user, int(t), path, self._status(bot), country, bot))
                    if not bot and i + 1 < n and rng.random() < cfg.noise_requests:
                        mid = int(t) + int(rng.integers(0, max(1, gaps[i])))
                        npath = _NOISE_PATHS[int(rng.integers(len(_NOISE_PATHS)))]
                        if npath.endswith("="):
                            npath += "term" + str(int(rng.integers(100)))
                        noise.append((mid, -1, self._entry(user, mid, npath, 200, user["country"], bot)))
                start = int(times[0])
                sid = session_id(UserKey(user["ip"], user["ua"]), start)
                out.append(SynthSession(sid, "robot" if bot else "human", user["ip"], user["ua"], start,
                                        entries, [int(self.doc_cluster[d]) for d in pages]))
                # next session of this user starts well past the inactivity timeout
                user["clock"] = int(times[-1]) + 7200 + int(rng.exponential(2 * 86400))
        out.sort(key=lambda s: (s.start, s.session_id))
        return out, noise

    def _entry(self, user, t, path, status, country, bot) -> LogEntry:
        return LogEntry(
            ip=user["ip"],
            timestamp=datetime.fromtimestamp(t, tz=timezone.utc),
            method="HEAD" if bot and self.rng.random() < 0.05 else "GET",
            path=path,
            protocol="HTTP/1.1",
            status=status,
            bytes=None if status in (301, 304) else int(self.rng.integers(2_000, 900_000)),
            referer=None if bot else "https://www.example-publisher.org/",
            user_agent=user["ua"],
            country=country,
            username=user["username"],
            via_web_service=bool(user["api"]),
            tz_offset=self.cfg.tz_offset,
        )


def generate(cfg: SynthConfig = SynthConfig()) -> SynthOutput:
    cfg.validate()
    gen = _Generator(cfg)
    corpus = gen.corpus()
    sessions, noise = gen.sessions()
    stamped = [(e.epoch, k, e) for k, s in enumerate(sessions) for e in s.entries] + noise
    stamped.sort(key=lambda x: (x[0], x[1]))
    lines = [render_line(e, EXTENDED) for _, _, e in stamped]
    return SynthOutput(corpus, [int(c) for c in gen.doc_cluster], sessions, lines)


def write_output(out: SynthOutput, directory: str | Path, cfg: SynthConfig | None = None) -> dict[str, Path]:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    paths = {"corpus": d / "corpus.tsv", "log": d / "access.log", "labels": d / "labels.tsv"}
    paths["corpus"].write_text("".join(f"{i}\t{t}\n" for i, t in out.corpus), encoding="utf-8")
    paths["log"].write_text("\n".join(out.log_lines) + "\n", encoding="utf-8")
    paths["labels"].write_text("".join(line + "\n" for line in out.label_lines()), encoding="utf-8")
    if cfg is not None:
        (d / "synth_config.json").write_text(json.dumps(asdict(cfg), indent=2, sort_keys=True) + "\n")
    return paths


def read_labels(path: str | Path) -> dict[str, str]:
    out = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            cols = line.split("\t")
            out[cols[0]] = cols[1]
    return out
