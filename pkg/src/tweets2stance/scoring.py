"""Zero-shot classifier abstraction: hypotheses, score providers, cache.

The classifier itself lives behind the ScoreProvider protocol; this module
only knows that a provider maps (premise tweet, hypothesis text) pairs to
scores in [0, 1]. Scores are persisted in an append-only JSONL cache keyed
by (tweet_id, hypothesis_id, model) so any experiment can be replayed
without re-running inference.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterator, Optional, Protocol, Sequence

import requests

from .corpus import CleanTweet
from .errors import MissingScoreError, ProviderError, ProviderProtocolError
from .statements import Statement

logger = logging.getLogger(__name__)

PIVOT_TRANSLATED = "pivot_translated"
SOURCE_LANGUAGE = "source_language"
LANGUAGE_MODES = (PIVOT_TRANSLATED, SOURCE_LANGUAGE)

#: Language the translated timelines are in (hypotheses follow suit).
PIVOT_LANG = "en"

#: Language modes mandated for the three standard classifier backends.
KNOWN_MODEL_MODES = {
    "BART": PIVOT_TRANSLATED,
    "XRoberta_1": SOURCE_LANGUAGE,
    "XRoberta_2": SOURCE_LANGUAGE,
}

#: Hypothesis templates used for topic scoring, keyed by language tag.
#: Languages without an entry fall back to the pivot-language template.
DEFAULT_TOPIC_TEMPLATES = {
    "en": "This text is about {topic}.",
    "it": "Questo testo parla di {topic}.",
}

TOPIC = "topic"
SENTENCE = "sentence"


@dataclass(frozen=True)
class ModelId:
    """A classifier backend plus the language mode it must run in."""

    name: str
    language_mode: str

    def __post_init__(self) -> None:
        if self.language_mode not in LANGUAGE_MODES:
            raise ValueError(f"language_mode must be one of {LANGUAGE_MODES}, got {self.language_mode!r}")
        required = KNOWN_MODEL_MODES.get(self.name)
        if required is not None and self.language_mode != required:
            raise ValueError(f"model {self.name!r} requires language_mode {required!r}")

    @classmethod
    def named(cls, name: str, language_mode: Optional[str] = None) -> "ModelId":
        """Build a ModelId; known backend names fix their language mode."""
        mode = KNOWN_MODEL_MODES.get(name, language_mode or SOURCE_LANGUAGE)
        if language_mode is not None and mode != language_mode:
            raise ValueError(f"model {name!r} requires language_mode {mode!r}")
        return cls(name=name, language_mode=mode)

    @property
    def use_translated(self) -> bool:
        return self.language_mode == PIVOT_TRANSLATED


@dataclass(frozen=True)
class Hypothesis:
    """One classifier hypothesis: a topic reformulation or a verbatim sentence."""

    id: str
    kind: str
    text: str


def topic_hypothesis(
    statement: Statement,
    lang: str,
    templates: Optional[dict[str, str]] = None,
) -> Hypothesis:
    """Topic hypothesis for a statement: the language's template with the
    topic slotted in (pivot-language default: "This text is about {topic}.")."""
    topic = statement.topic_in(lang)
    if not topic:
        raise ValueError(f"statement {statement.nr} has an empty topic for {lang!r}")
    table = dict(DEFAULT_TOPIC_TEMPLATES)
    if templates:
        table.update(templates)
    template = table.get(lang, table[PIVOT_LANG])
    return Hypothesis(id=f"{statement.nr}:{TOPIC}", kind=TOPIC, text=template.format(topic=topic))


def sentence_hypothesis(statement: Statement, lang: str) -> Hypothesis:
    """Sentence hypothesis: the statement text itself, unreformulated."""
    text = statement.sentence_in(lang)
    if not text:
        raise ValueError(f"statement {statement.nr} has an empty sentence for {lang!r}")
    return Hypothesis(id=f"{statement.nr}:{SENTENCE}", kind=SENTENCE, text=text)


def statement_hypotheses(
    statements: Sequence[Statement],
    lang: str,
    templates: Optional[dict[str, str]] = None,
) -> list[Hypothesis]:
    """Topic + sentence hypotheses for a whole catalog, in catalog order."""
    out: list[Hypothesis] = []
    for statement in statements:
        out.append(topic_hypothesis(statement, lang, templates))
        out.append(sentence_hypothesis(statement, lang))
    return out


def _check_score(score: float, context: str) -> float:
    if not (isinstance(score, (int, float)) and math.isfinite(score) and 0.0 <= score <= 1.0):
        raise ValueError(f"score for {context} must lie in [0,1], got {score!r}")
    return float(score)


@dataclass(frozen=True)
class ScoreRecord:
    """One persisted classifier score (a cache/replay JSONL line)."""

    tweet_id: str
    hypothesis_id: str
    model: str
    score: float

    @property
    def key(self) -> "CacheKey":
        return (self.tweet_id, self.hypothesis_id, self.model)

    def to_json(self) -> str:
        return json.dumps(
            {"tweet_id": self.tweet_id, "hypothesis_id": self.hypothesis_id,
             "model": self.model, "score": self.score},
            ensure_ascii=False,
        )

    @classmethod
    def from_line(cls, line: str, context: str) -> "ScoreRecord":
        """Parse one JSONL line; raises ValueError on any malformation."""
        try:
            obj = json.loads(line)
            record = cls(
                tweet_id=obj["tweet_id"],
                hypothesis_id=obj["hypothesis_id"],
                model=obj["model"],
                score=_check_score(obj["score"], context),
            )
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ValueError(f"{context}: {exc}") from None
        if not (isinstance(record.tweet_id, str) and isinstance(record.hypothesis_id, str)
                and isinstance(record.model, str)):
            raise ValueError(f"{context}: ids and model must be strings")
        return record


class ScoreMatrix:
    """(tweet_id, hypothesis_id) -> score, for a single model."""

    def __init__(self, model: ModelId):
        self.model = model
        self._scores: dict[tuple[str, str], float] = {}

    def put(self, tweet_id: str, hypothesis_id: str, score: float) -> None:
        self._scores[(tweet_id, hypothesis_id)] = _check_score(score, f"({tweet_id}, {hypothesis_id})")

    def get(self, tweet_id: str, hypothesis_id: str) -> Optional[float]:
        return self._scores.get((tweet_id, hypothesis_id))

    def require(self, tweet_id: str, hypothesis_id: str) -> float:
        score = self._scores.get((tweet_id, hypothesis_id))
        if score is None:
            raise MissingScoreError(
                f"no score for pair ({tweet_id!r}, {hypothesis_id!r}) under model {self.model.name!r}"
            )
        return score

    def __contains__(self, key: tuple[str, str]) -> bool:
        return key in self._scores

    def __len__(self) -> int:
        return len(self._scores)

    def items(self) -> Iterator[tuple[tuple[str, str], float]]:
        return iter(sorted(self._scores.items()))

    def as_dict(self) -> dict[tuple[str, str], float]:
        return dict(self._scores)


CacheKey = tuple[str, str, str]  # (tweet_id, hypothesis_id, model name)


class ScoreCache:
    """Durable append-only JSONL score store under a cache directory.

    Concurrent readers are free; appends are serialized by a lock. Corrupt
    lines are skipped with a warning, never fatal.
    """

    FILENAME = "scores.jsonl"

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.path = self.directory / self.FILENAME
        self._mem: dict[CacheKey, float] = {}
        self._lock = threading.Lock()
        self.corrupt_lines = 0
        self._load()

    def _load(self) -> None:
        if not self.path.exists():
            return
        with open(self.path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    record = ScoreRecord.from_line(line, f"cache line {lineno}")
                except ValueError:
                    self.corrupt_lines += 1
                    logger.warning("%s:%d: corrupt cache line skipped", self.path, lineno)
                    continue
                self._mem[record.key] = record.score

    def get(self, key: CacheKey) -> Optional[float]:
        return self._mem.get(key)

    def put(self, key: CacheKey, score: float) -> None:
        record = ScoreRecord(key[0], key[1], key[2], _check_score(score, repr(key)))
        line = record.to_json() + "\n"
        with self._lock:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(line)
            self._mem[key] = record.score

    def __len__(self) -> int:
        return len(self._mem)


class ScoreProvider(Protocol):
    def score_pairs(
        self, model: ModelId, pairs: Sequence[tuple[CleanTweet, Hypothesis]]
    ) -> list[float]:
        """Scores aligned with ``pairs``, each in [0, 1]."""
        ...


def _hash_unit(parts: Sequence[str]) -> float:
    digest = hashlib.sha256("\x1f".join(parts).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") / 2**64


class MockProvider:
    """Deterministic scores computed from (tweet_id, hypothesis_id); for tests
    and dry runs. ``calls`` / ``pairs_scored`` count provider traffic."""

    def __init__(self, fn: Optional[Callable[[str, str], float]] = None):
        self.fn = fn or (lambda tweet_id, hyp_id: _hash_unit((tweet_id, hyp_id)))
        self.calls = 0
        self.pairs_scored = 0

    def score_pairs(self, model, pairs):
        self.calls += 1
        self.pairs_scored += len(pairs)
        return [float(self.fn(tweet.id, hyp.id)) for tweet, hyp in pairs]


class FileReplayProvider:
    """Serves scores recorded in a JSONL score file; a miss is an error.

    The file uses the cache line format, so a populated cache file can be
    replayed directly.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._scores: dict[CacheKey, float] = {}
        self.corrupt_lines = 0
        with open(self.path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    record = ScoreRecord.from_line(line, f"replay line {lineno}")
                except ValueError:
                    self.corrupt_lines += 1
                    logger.warning("%s:%d: corrupt replay line skipped", self.path, lineno)
                    continue
                self._scores[record.key] = record.score

    def has(self, model: ModelId, tweet_id: str, hypothesis_id: str) -> bool:
        return (tweet_id, hypothesis_id, model.name) in self._scores

    def score_pairs(self, model, pairs):
        missing = [
            (tweet.id, hyp.id)
            for tweet, hyp in pairs
            if (tweet.id, hyp.id, model.name) not in self._scores
        ]
        if missing:
            shown = ", ".join(f"({t!r}, {h!r})" for t, h in missing[:10])
            more = "" if len(missing) <= 10 else f" (+{len(missing) - 10} more)"
            raise MissingScoreError(
                f"{self.path}: no replay score under model {model.name!r} for {shown}{more}"
            )
        return [self._scores[(tweet.id, hyp.id, model.name)] for tweet, hyp in pairs]


class RemoteProvider:
    """Scores fetched from the inference sidecar's POST /score endpoint.

    Transient failures (connection errors, 5xx, 429) are retried with
    exponential backoff; other HTTP errors fail immediately.
    """

    def __init__(
        self,
        base_url: str,
        *,
        timeout: float = 60.0,
        retries: int = 3,
        backoff: float = 0.5,
        session: Optional[requests.Session] = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff
        self.session = session or requests.Session()

    def score_pairs(self, model, pairs):
        payload = {
            "model": model.name,
            "pairs": [{"premise": tweet.text, "hypothesis": hyp.text} for tweet, hyp in pairs],
        }
        last_error: Optional[str] = None
        for attempt in range(self.retries):
            if attempt:
                time.sleep(self.backoff * 2 ** (attempt - 1))
            try:
                resp = self.session.post(
                    f"{self.base_url}/score", json=payload, timeout=self.timeout
                )
            except requests.RequestException as exc:
                last_error = str(exc)
                continue
            if resp.status_code in (429,) or resp.status_code >= 500:
                last_error = f"HTTP {resp.status_code}"
                continue
            if resp.status_code != 200:
                raise ProviderError(
                    f"{self.base_url}/score answered HTTP {resp.status_code}: {resp.text[:200]}"
                )
            try:
                scores = resp.json()["scores"]
            except (ValueError, KeyError):
                raise ProviderProtocolError(
                    f"{self.base_url}/score returned a malformed body"
                ) from None
            if not isinstance(scores, list) or len(scores) != len(pairs):
                raise ProviderProtocolError(
                    f"{self.base_url}/score returned {len(scores) if isinstance(scores, list) else 'no'}"
                    f" scores for {len(pairs)} pairs"
                )
            return [float(s) for s in scores]
        unmet = ", ".join(f"({tweet.id!r}, {hyp.id!r})" for tweet, hyp in pairs[:10])
        more = "" if len(pairs) <= 10 else f" (+{len(pairs) - 10} more)"
        raise ProviderError(
            f"{self.base_url}/score unreachable after {self.retries} attempts"
            f" ({last_error}); unmet pairs: {unmet}{more}"
        )


def score_batch(
    provider: ScoreProvider,
    premises: Sequence[CleanTweet],
    hypotheses: Sequence[Hypothesis],
    model: ModelId,
    *,
    cache: Optional[ScoreCache] = None,
    batch_size: int = 16,
    jobs: int = 1,
) -> ScoreMatrix:
    """Score every (premise, hypothesis) pair, consulting the cache first.

    Only cache misses reach the provider (in chunks of ``batch_size``,
    optionally ``jobs``-way parallel); fresh scores are validated to [0, 1]
    and appended to the cache. Returns the complete matrix.
    """
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    matrix = ScoreMatrix(model)
    pending: list[tuple[CleanTweet, Hypothesis]] = []
    for tweet in premises:
        for hyp in hypotheses:
            if (tweet.id, hyp.id) in matrix:
                continue
            cached = cache.get((tweet.id, hyp.id, model.name)) if cache else None
            if cached is not None:
                matrix.put(tweet.id, hyp.id, cached)
            else:
                pending.append((tweet, hyp))

    if not pending:
        return matrix
    chunks = [pending[i : i + batch_size] for i in range(0, len(pending), batch_size)]
    if jobs > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = pool.map(lambda chunk: provider.score_pairs(model, chunk), chunks)
            scored = zip(chunks, results)
            _consume(scored, matrix, model, cache)
    else:
        scored = ((chunk, provider.score_pairs(model, chunk)) for chunk in chunks)
        _consume(scored, matrix, model, cache)
    return matrix


def _consume(scored, matrix: ScoreMatrix, model: ModelId, cache: Optional[ScoreCache]) -> None:
    for chunk, scores in scored:
        if len(scores) != len(chunk):
            raise ProviderProtocolError(
                f"provider returned {len(scores)} scores for {len(chunk)} pairs"
            )
        for (tweet, hyp), score in zip(chunk, scores):
            if not (isinstance(score, (int, float)) and math.isfinite(score) and 0.0 <= score <= 1.0):
                raise ProviderProtocolError(
                    f"provider returned score {score!r} outside [0,1]"
                    f" for ({tweet.id!r}, {hyp.id!r})"
                )
            matrix.put(tweet.id, hyp.id, float(score))
            if cache is not None:
                cache.put((tweet.id, hyp.id, model.name), float(score))
