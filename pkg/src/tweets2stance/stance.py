"""Agreement prediction core: topic filtering and the four aggregation
algorithms that turn per-tweet classifier scores into one 1..5 label.

Every algorithm answers 3 ("neither disagree, nor agree") when there is no
usable evidence: an empty in-topic set, or fewer in-topic tweets than the
min-support variant demands.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Optional, Sequence

from .corpus import DatasetWindow, Timeline
from .scoring import (
    PIVOT_LANG,
    PIVOT_TRANSLATED,
    Hypothesis,
    ModelId,
    ScoreMatrix,
    sentence_hypothesis,
    topic_hypothesis,
)
from .statements import Statement

NEUTRAL = 3

ALGORITHMS = ("alg1", "alg2", "alg3", "alg4")

#: Default minimum number of in-topic tweets for the min-support variant.
DEFAULT_MIN_SUPPORT = 3

#: Default topic-filtering thresholds swept by the grid search.
DEFAULT_THRESHOLDS = (0.5, 0.6, 0.7, 0.8, 0.9)


@dataclass(frozen=True)
class InTopicSet:
    """Tweets whose topic score cleared the threshold, with their aligned
    topic and sentence scores, in timeline order."""

    tweet_ids: tuple[str, ...]
    topic_scores: tuple[float, ...]
    sentence_scores: tuple[float, ...]

    def __post_init__(self) -> None:
        if not (len(self.tweet_ids) == len(self.topic_scores) == len(self.sentence_scores)):
            raise ValueError("tweet_ids, topic_scores and sentence_scores must align")

    def __len__(self) -> int:
        return len(self.tweet_ids)


EMPTY_IN_TOPIC = InTopicSet((), (), ())


@dataclass(frozen=True)
class PredictorConfig:
    """One point of the (model, window, algorithm, threshold) space."""

    model: ModelId
    window: DatasetWindow
    algorithm: str
    threshold: float
    min_support: int = DEFAULT_MIN_SUPPORT
    alg1_swap_weights: bool = False

    def __post_init__(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if not (0.0 <= self.threshold <= 1.0):
            raise ValueError(f"threshold must lie in [0,1], got {self.threshold}")
        if self.min_support < 1:
            raise ValueError(f"min_support must be >= 1, got {self.min_support}")


@dataclass(frozen=True)
class PredictionRecord:
    """A predicted agreement label for one (party, statement) cell."""

    party: str
    statement_nr: int
    label: int
    in_topic_count: int
    config: Optional[PredictorConfig] = None


def _check_unit(value: float, what: str) -> float:
    if not (math.isfinite(value) and 0.0 <= value <= 1.0):
        raise ValueError(f"{what} must lie in [0,1], got {value!r}")
    return float(value)


def round_half_away(x: float) -> int:
    """Nearest integer; ties (.5 fraction) round away from zero."""
    if x >= 0:
        return int(math.floor(x + 0.5))
    return int(math.ceil(x - 0.5))


def map_m1(score: float) -> int:
    """Five-level step mapping: [0,.2)->1, [.2,.4)->2, [.4,.6)->3,
    [.6,.8)->4, [.8,1]->5."""
    s = _check_unit(score, "score")
    if s < 0.2:
        return 1
    if s < 0.4:
        return 2
    if s < 0.6:
        return 3
    if s < 0.8:
        return 4
    return 5


def map_m2(score: float) -> int:
    """Four-level step mapping: [0,.25)->1, [.25,.5)->2, [.5,.75)->3,
    [.75,1]->4. Levels 3 and 4 stand for agree / completely agree."""
    s = _check_unit(score, "score")
    if s < 0.25:
        return 1
    if s < 0.5:
        return 2
    if s < 0.75:
        return 3
    return 4


def filter_topic(
    matrix: ScoreMatrix,
    timeline: Timeline,
    topic_hyp: Hypothesis,
    sentence_hyp: Hypothesis,
    th: float,
) -> InTopicSet:
    """Keep the tweets whose topic score is >= th (inclusive), in timeline
    order, pairing each with its topic and sentence scores.

    Raises MissingScoreError naming the first absent (tweet, hypothesis)
    pair.
    """
    _check_unit(th, "threshold")
    ids: list[str] = []
    topic_scores: list[float] = []
    sentence_scores: list[float] = []
    for tweet in timeline.tweets:
        topic_score = matrix.require(tweet.id, topic_hyp.id)
        if topic_score >= th:
            ids.append(tweet.id)
            topic_scores.append(topic_score)
            sentence_scores.append(matrix.require(tweet.id, sentence_hyp.id))
    return InTopicSet(tuple(ids), tuple(topic_scores), tuple(sentence_scores))


def alg1(in_topic: InTopicSet, swap_weights: bool = False) -> int:
    """Weighted-mean aggregation: the mean of the topic scores weighted by
    the sentence scores, pushed through the five-level mapping.

    ``swap_weights`` flips the roles (mean of sentence scores weighted by
    topic scores); off by default. Zero total weight yields the neutral 3.
    """
    if len(in_topic) == 0:
        return NEUTRAL
    numerator = sum(s * t for s, t in zip(in_topic.sentence_scores, in_topic.topic_scores))
    denominator = sum(in_topic.topic_scores) if swap_weights else sum(in_topic.sentence_scores)
    if denominator == 0:
        return NEUTRAL
    # The quotient is a convex combination; min() guards float overshoot.
    return map_m1(min(numerator / denominator, 1.0))


def alg2(in_topic: InTopicSet) -> int:
    """Rounded mean of the per-tweet five-level labels."""
    if len(in_topic) == 0:
        return NEUTRAL
    labels = [map_m1(s) for s in in_topic.sentence_scores]
    return round_half_away(sum(labels) / len(labels))


def _majority_else_rounded_mean(labels: Sequence[int]) -> int:
    votes = Counter(labels)
    top = max(votes.values())
    leaders = [label for label, count in votes.items() if count == top]
    if len(leaders) == 1:
        return leaders[0]
    return round_half_away(sum(labels) / len(labels))


def alg3(in_topic: InTopicSet) -> int:
    """Majority vote over the per-tweet five-level labels; a tie for the
    top vote count falls back to the rounded mean."""
    if len(in_topic) == 0:
        return NEUTRAL
    labels = [map_m1(s) for s in in_topic.sentence_scores]
    return _majority_else_rounded_mean(labels)


def alg4(in_topic: InTopicSet, m: int = DEFAULT_MIN_SUPPORT) -> int:
    """Min-support variant: neutral unless at least ``m`` in-topic tweets,
    then majority-vote-else-rounded-mean over four-level labels, remapping
    the two agreement levels {3,4} up to {4,5}."""
    if m < 1:
        raise ValueError(f"min support must be >= 1, got {m}")
    if len(in_topic) < m:
        return NEUTRAL
    labels = [map_m2(s) for s in in_topic.sentence_scores]
    intermediate = _majority_else_rounded_mean(labels)
    return intermediate if intermediate <= 2 else intermediate + 1


def run_algorithm(config: PredictorConfig, in_topic: InTopicSet) -> int:
    if config.algorithm == "alg1":
        return alg1(in_topic, swap_weights=config.alg1_swap_weights)
    if config.algorithm == "alg2":
        return alg2(in_topic)
    if config.algorithm == "alg3":
        return alg3(in_topic)
    return alg4(in_topic, m=config.min_support)


def predict(
    timeline: Timeline,
    statement: Statement,
    matrix: ScoreMatrix,
    config: PredictorConfig,
    *,
    pivot_lang: str = PIVOT_LANG,
    source_lang: str = "it",
    topic_templates: Optional[dict[str, str]] = None,
) -> PredictionRecord:
    """Predict one (party, statement) agreement label: topic-filter the
    timeline at the configured threshold, then run the configured
    aggregation algorithm."""
    lang = pivot_lang if config.model.language_mode == PIVOT_TRANSLATED else source_lang
    topic_hyp = topic_hypothesis(statement, lang, topic_templates)
    sentence_hyp = sentence_hypothesis(statement, lang)
    in_topic = filter_topic(matrix, timeline, topic_hyp, sentence_hyp, config.threshold)
    label = run_algorithm(config, in_topic)
    return PredictionRecord(
        party=timeline.author,
        statement_nr=statement.nr,
        label=label,
        in_topic_count=len(in_topic),
        config=config,
    )
