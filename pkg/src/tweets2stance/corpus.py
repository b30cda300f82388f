"""Tweet corpus handling: dump loading, text cleaning, timeline windowing.

Raw tweets arrive as JSONL dumps (one object per line). Cleaning strips
everything with no predictive value (links, retweet prefixes, hashtags,
emoji, markup leftovers) and drops tweets that end up shorter than four
words. Timelines are per-author, date-windowed, chronologically sorted
lists of cleaned tweets.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass
from datetime import date, datetime, timezone
from pathlib import Path
from typing import Iterable, Optional

from .errors import MissingTranslationError

logger = logging.getLogger(__name__)

TWEET_KINDS = ("original", "retweet", "reply", "quote")

#: Tweets with fewer words than this after cleaning are dropped.
MIN_WORDS = 4

#: Scheme form is unanchored: scraped text often glues links to words.
URL_RE = re.compile(r"https?://\S*|\bwww\.\S+|\bt\.co/\S+")
RT_PREFIX_RE = re.compile(r"^RT @\w+:\s*")
REPLY_MENTIONS_RE = re.compile(r"^(?:@\w+\s+)+")
HASHTAG_RE = re.compile(r"#\w+")
# Pictographs, misc symbols/dingbats, arrows/stars, technical symbols,
# variation selectors, skin-tone modifiers (inside the pictograph plane),
# zero-width joiner and combining keycap.
EMOJI_RE = re.compile(
    "["
    "\U0001F000-\U0001FAFF"
    "\U00002600-\U000027BF"
    "\U00002B00-\U00002BFF"
    "\U00002300-\U000023FF"
    "\U0000FE00-\U0000FE0F"
    "\U0000200D"
    "\U000020E3"
    "]+"
)
WS_RUN_RE = re.compile(r"\s+")

#: Markup leftovers removed verbatim, in this order.
LITERAL_NOISE = ("++", "&gt", "&lt")


@dataclass(frozen=True)
class RawTweet:
    """A tweet as found in a dump, before any cleaning."""

    id: str
    author: str
    created_at: datetime
    text: str
    kind: str = "original"
    text_translated: Optional[str] = None


@dataclass(frozen=True)
class CleanTweet:
    """A tweet that survived cleaning; ``text`` holds the cleaned form."""

    id: str
    author: str
    created_at: datetime
    text: str
    word_count: int


@dataclass(frozen=True)
class Timeline:
    """One author's cleaned tweets, ascending by (created_at, id)."""

    author: str
    tweets: tuple[CleanTweet, ...]

    def __len__(self) -> int:
        return len(self.tweets)


@dataclass(frozen=True)
class DatasetWindow:
    """A named observation period; bounds are inclusive calendar dates."""

    name: str
    start: date
    end: date

    def __post_init__(self) -> None:
        if self.start >= self.end:
            raise ValueError(f"window {self.name!r}: start {self.start} must precede end {self.end}")

    def contains(self, ts: datetime) -> bool:
        return self.start <= as_utc(ts).date() <= self.end

    @classmethod
    def named(cls, name: str) -> "DatasetWindow":
        try:
            return WINDOWS[name]
        except KeyError:
            raise ValueError(f"unknown window {name!r}; expected one of {sorted(WINDOWS)}") from None


#: The four standard observation windows (months of tweets before the vote).
WINDOWS = {
    "D3": DatasetWindow("D3", date(2019, 3, 1), date(2019, 5, 25)),
    "D4": DatasetWindow("D4", date(2019, 2, 1), date(2019, 5, 25)),
    "D5": DatasetWindow("D5", date(2019, 1, 1), date(2019, 5, 25)),
    "D7": DatasetWindow("D7", date(2018, 11, 1), date(2019, 5, 25)),
}


def as_utc(ts: datetime) -> datetime:
    """Normalize a datetime to offset-aware UTC (naive input assumed UTC)."""
    if ts.tzinfo is None:
        return ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def parse_utc(value: str) -> datetime:
    """Parse an ISO-8601 timestamp ('Z' suffix accepted) into UTC."""
    s = value.strip()
    if s.endswith(("Z", "z")):
        s = s[:-1] + "+00:00"
    return as_utc(datetime.fromisoformat(s))


def _clean_once(text: str, kind: str) -> str:
    t = URL_RE.sub("", text)
    for token in LITERAL_NOISE:
        t = t.replace(token, "")
    # Newlines separate words; turning them into spaces (instead of deleting
    # them) keeps "must\nchange" from collapsing into one token.
    t = t.replace("\n", " ")
    t = RT_PREFIX_RE.sub("", t)
    if kind == "reply":
        t = REPLY_MENTIONS_RE.sub("", t)
    t = HASHTAG_RE.sub("", t)
    t = EMOJI_RE.sub("", t)
    t = t.lstrip()
    return WS_RUN_RE.sub(" ", t)


def clean_text(raw: str, kind: str = "original") -> Optional[str]:
    """Clean one tweet's text; return None when nothing useful remains.

    Applies, in order: URL removal; literal noise tokens ("++", "&gt",
    "&lt") and newlines; the leading "RT @user: " prefix; leading mentions
    (replies only); whole hashtag tokens; emoji; leading whitespace;
    whitespace-run collapse. Removals can expose new prefixes or hashtag
    tokens, so the pass is repeated until the text stops changing. Tweets
    with fewer than four remaining words are dropped (None).
    """
    t = raw
    for _ in range(64):  # fixpoint; each changing pass shrinks the text
        step = _clean_once(t, kind)
        if step == t:
            break
        t = step
    t = t.strip()
    if len(t.split()) < MIN_WORDS:
        return None
    return t


@dataclass
class DumpLoadResult:
    """Parsed tweets plus per-line skip diagnostics (line number, reason)."""

    tweets: list[RawTweet]
    skipped: list[tuple[int, str]]


def _tweet_from_obj(obj: dict) -> RawTweet:
    if not isinstance(obj, dict):
        raise ValueError("not a JSON object")
    tweet_id = obj.get("id")
    if not isinstance(tweet_id, str) or not tweet_id:
        raise ValueError("missing or empty 'id'")
    author = obj.get("author")
    if not isinstance(author, str) or not author:
        raise ValueError("missing or empty 'author'")
    text = obj.get("text")
    if not isinstance(text, str):
        raise ValueError("missing 'text'")
    kind = obj.get("kind", "original")
    if kind not in TWEET_KINDS:
        raise ValueError(f"unknown kind {kind!r}")
    translated = obj.get("text_translated")
    if translated is not None and not isinstance(translated, str):
        raise ValueError("'text_translated' must be a string")
    created_raw = obj.get("created_at")
    if not isinstance(created_raw, str):
        raise ValueError("missing 'created_at'")
    try:
        created = parse_utc(created_raw)
    except ValueError:
        raise ValueError(f"unparseable 'created_at' {created_raw!r}") from None
    return RawTweet(
        id=tweet_id,
        author=author,
        created_at=created,
        text=text,
        kind=kind,
        text_translated=translated,
    )


def load_dump(path: str | Path) -> DumpLoadResult:
    """Load a JSONL tweet dump, skipping (and tallying) malformed lines.

    An unreadable file raises; a bad line is recorded in ``skipped`` with
    its 1-based line number. Duplicate ids count as malformed records.
    """
    tweets: list[RawTweet] = []
    skipped: list[tuple[int, str]] = []
    seen_ids: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                tweet = _tweet_from_obj(obj)
            except (json.JSONDecodeError, ValueError) as exc:
                skipped.append((lineno, str(exc)))
                continue
            if tweet.id in seen_ids:
                skipped.append((lineno, f"duplicate id {tweet.id!r}"))
                continue
            seen_ids.add(tweet.id)
            tweets.append(tweet)
    if skipped:
        logger.warning("%s: skipped %d malformed line(s)", path, len(skipped))
    return DumpLoadResult(tweets=tweets, skipped=skipped)


def build_timeline(
    tweets: Iterable[RawTweet],
    author: str,
    window: DatasetWindow,
    use_translated: bool = False,
) -> Timeline:
    """Window, clean and sort one author's tweets into a Timeline.

    With ``use_translated`` the translated text is cleaned instead of the
    original; a selected tweet without a translation is an error.
    """
    cleaned: list[CleanTweet] = []
    for tweet in tweets:
        if tweet.author != author or not window.contains(tweet.created_at):
            continue
        if use_translated:
            if tweet.text_translated is None:
                raise MissingTranslationError(
                    f"tweet {tweet.id!r} has no text_translated but translated text was requested"
                )
            raw = tweet.text_translated
        else:
            raw = tweet.text
        text = clean_text(raw, kind=tweet.kind)
        if text is None:
            continue
        cleaned.append(
            CleanTweet(
                id=tweet.id,
                author=tweet.author,
                created_at=as_utc(tweet.created_at),
                text=text,
                word_count=len(text.split()),
            )
        )
    cleaned.sort(key=lambda c: (c.created_at, c.id))
    return Timeline(author=author, tweets=tuple(cleaned))
