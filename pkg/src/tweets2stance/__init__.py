"""Unsupervised agreement-level prediction from social-media timelines.

The pipeline: clean a user's tweet timeline, score every tweet against a
topic hypothesis and a statement hypothesis with a zero-shot entailment
classifier (behind a pluggable provider), keep the tweets that clear a
topic threshold, and aggregate their scores into a 1..5 agreement label.
"""

from .corpus import (
    CleanTweet,
    DatasetWindow,
    RawTweet,
    Timeline,
    WINDOWS,
    build_timeline,
    clean_text,
    load_dump,
)
from .errors import (
    MissingEmbeddingError,
    MissingScoreError,
    MissingTranslationError,
    ProviderError,
    ProviderProtocolError,
    T2SError,
)
from .scoring import (
    FileReplayProvider,
    Hypothesis,
    MockProvider,
    ModelId,
    RemoteProvider,
    ScoreCache,
    ScoreMatrix,
    ScoreRecord,
    score_batch,
    sentence_hypothesis,
    topic_hypothesis,
)
from .stance import (
    InTopicSet,
    PredictionRecord,
    PredictorConfig,
    alg1,
    alg2,
    alg3,
    alg4,
    filter_topic,
    map_m1,
    map_m2,
    predict,
    round_half_away,
)
from .statements import GroundTruth, Statement, load_ground_truth, load_statements
from .evaluation import (
    EvalPair,
    EvalReport,
    GridAxes,
    GridPoint,
    build_report,
    f1_weighted,
    mae,
    run_grid,
)

__version__ = "0.1.0"
