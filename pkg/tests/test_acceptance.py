"""Acceptance suite: one test (and one printed PASS/FAIL line) per release
criterion. Run with ``pytest tests/test_acceptance.py -s`` to see the lines.

The full-scale benchmark at the end needs the real tweet datasets, the
external ground-truth CSV and a live scoring service; it is skipped unless
the T2S_DUMP / T2S_GROUND_TRUTH / T2S_PROVIDER_URL environment variables
are all set.
"""

import itertools
import os
import random
from contextlib import contextmanager
from datetime import datetime, timedelta, timezone

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
import synthetic
from conftest import DATA
from tweets2stance.corpus import (
    DatasetWindow,
    RawTweet,
    build_timeline,
    clean_text,
)
from tweets2stance.evaluation import (
    EvalPair,
    GridAxes,
    build_report,
    f1_weighted,
    grid_to_csv,
    mae,
    pair_up,
    run_grid,
)
from tweets2stance.scoring import ModelId, score_batch, statement_hypotheses
from tweets2stance.stance import (
    DEFAULT_THRESHOLDS,
    InTopicSet,
    PredictorConfig,
    alg1,
    alg2,
    alg3,
    alg4,
    filter_topic,
    map_m1,
    map_m2,
    predict,
)
from test_stance import TOPIC_HYP, SENT_HYP, matrix_for, timeline_of


@contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {name}: FAIL", flush=True)
        raise
    print(f"ACCEPTANCE {name}: PASS", flush=True)


# --- 1. mapping-function conformance ---------------------------------------


def test_mapping_function_conformance():
    with criterion("mapping-conformance"):
        # all bin edges, exact equality
        assert map_m1(0.0) == 1
        assert map_m1(0.2) == 2
        assert map_m1(0.4) == 3
        assert map_m1(0.6) == 4
        assert map_m1(0.8) == 5
        assert map_m1(1.0) == 5
        assert map_m2(0.0) == 1
        assert map_m2(0.25) == 2
        assert map_m2(0.5) == 3
        assert map_m2(0.75) == 4
        assert map_m2(1.0) == 4
        # just below each edge stays in the lower bin
        eps = 1e-12
        assert map_m1(0.2 - eps) == 1
        assert map_m1(0.4 - eps) == 2
        assert map_m1(0.6 - eps) == 3
        assert map_m1(0.8 - eps) == 4
        assert map_m2(0.25 - eps) == 1
        assert map_m2(0.5 - eps) == 2
        assert map_m2(0.75 - eps) == 3


# --- 2. algorithm oracle equivalence ---------------------------------------


def in_topic(sentence_scores, topic_scores):
    return InTopicSet(
        tweet_ids=tuple(str(i) for i in range(len(sentence_scores))),
        topic_scores=tuple(topic_scores),
        sentence_scores=tuple(sentence_scores),
    )


def test_algorithm_oracle_equivalence():
    grid = [round(i * 0.05, 2) for i in range(21)]
    with criterion("algorithm-oracle-equivalence"):
        checked = 0
        for size in range(6):
            for scores in itertools.combinations_with_replacement(grid, size):
                scores = list(scores)
                reversed_scores = list(reversed(scores))
                with_self = in_topic(scores, scores)
                with_reversed = in_topic(scores, reversed_scores)
                assert alg1(with_self) == oracles.oracle_alg1(scores, scores)
                assert alg1(with_reversed) == oracles.oracle_alg1(scores, reversed_scores)
                assert alg1(with_reversed, swap_weights=True) == oracles.oracle_alg1(
                    scores, reversed_scores, swap_weights=True
                )
                assert alg2(with_self) == oracles.oracle_alg2(scores)
                assert alg3(with_self) == oracles.oracle_alg3(scores)
                for m in (1, 2, 3):
                    assert alg4(with_self, m=m) == oracles.oracle_alg4(scores, m)
                checked += 1
        assert checked == sum(
            len(list(itertools.combinations_with_replacement(grid, k))) for k in range(6)
        )
        print(f"  ({checked} score multisets, 100% agreement)", flush=True)


# --- 3. invariant suite (property-based, >= 10^4 cases total) ---------------

SCORES = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)
PAIR_LISTS = st.lists(st.tuples(SCORES, SCORES), max_size=8)


def _in_topic_from_pairs(pairs):
    return in_topic([s for s, _ in pairs], [t for _, t in pairs])


@settings(max_examples=2000)
@given(pairs=PAIR_LISTS, m=st.integers(1, 4))
def _prop_output_range(pairs, m):
    scores = _in_topic_from_pairs(pairs)
    for label in (alg1(scores), alg2(scores), alg3(scores), alg4(scores, m=m)):
        assert label in (1, 2, 3, 4, 5)


@settings(max_examples=1000)
@given(m=st.integers(1, 64), swap=st.booleans())
def _prop_empty_set_is_neutral(m, swap):
    empty = in_topic([], [])
    assert alg1(empty, swap_weights=swap) == 3
    assert alg2(empty) == 3
    assert alg3(empty) == 3
    assert alg4(empty, m=m) == 3


@settings(max_examples=1000)
@given(pairs=PAIR_LISTS, extra=st.integers(1, 10))
def _prop_below_min_support_is_neutral(pairs, extra):
    scores = _in_topic_from_pairs(pairs)
    assert alg4(scores, m=len(scores) + extra) == 3


@settings(max_examples=2000)
@given(pairs=PAIR_LISTS, seed=st.integers(0, 2**32 - 1), m=st.integers(1, 4))
def _prop_permutation_invariance(pairs, seed, m):
    base = _in_topic_from_pairs(pairs)
    shuffled_pairs = list(pairs)
    random.Random(seed).shuffle(shuffled_pairs)
    shuffled = _in_topic_from_pairs(shuffled_pairs)
    assert alg1(base) == alg1(shuffled)
    assert alg2(base) == alg2(shuffled)
    assert alg3(base) == alg3(shuffled)
    assert alg4(base, m=m) == alg4(shuffled, m=m)


@settings(max_examples=1500)
@given(
    pairs=st.lists(st.tuples(SCORES, SCORES), max_size=8),
    th_a=SCORES,
    th_b=SCORES,
)
def _prop_threshold_monotonicity(pairs, th_a, th_b):
    low, high = sorted((th_a, th_b))
    matrix = matrix_for([t for _, t in pairs], [s for s, _ in pairs])
    timeline = timeline_of(len(pairs))
    wide = filter_topic(matrix, timeline, TOPIC_HYP, SENT_HYP, low)
    narrow = filter_topic(matrix, timeline, TOPIC_HYP, SENT_HYP, high)
    assert set(narrow.tweet_ids) <= set(wide.tweet_ids)


NOISE_FRAGMENTS = [
    "https://t.co/abc123", "http://example.com/x?y=1", "www.example.org/page",
    "#hashtag", "#eu", "@someone", "@other", "RT @user:", "++", "&gt", "&lt",
    "\n", "  ", "\t", "\U0001F600", "\U0001F1EE\U0001F1F9", "✊", "️",
    "plain", "words", "Europe", "vote", "really", "matters", "sì", "più",
]


NOISY_TEXTS = st.one_of(
    st.text(max_size=60),
    st.builds(lambda parts, glue: glue.join(parts),
              st.lists(st.sampled_from(NOISE_FRAGMENTS), max_size=12),
              st.sampled_from([" ", "", "  "])),
)


@settings(max_examples=2500)
@given(raw=NOISY_TEXTS, kind=st.sampled_from(["original", "retweet", "reply", "quote"]))
def _prop_clean_text_idempotent(raw, kind):
    once = clean_text(raw, kind=kind)
    if once is None:
        return
    assert clean_text(once, kind=kind) == once
    # cleaned-output invariants
    assert len(once.split()) >= 4
    assert "http://" not in once and "https://" not in once
    assert not once.startswith("RT @")
    assert not any(token.startswith("#") and len(token) > 1 and token[1:].isalnum()
                   for token in once.split())
    assert once == once.lstrip()
    assert "  " not in once and "\n" not in once


WINDOW_CHAIN = [DatasetWindow.named(n) for n in ("D3", "D4", "D5", "D7")]


@settings(max_examples=1000)
@given(
    offsets=st.lists(st.integers(0, 250), min_size=1, max_size=30),
    pick=st.integers(0, 2),
)
def _prop_window_subset_monotone(offsets, pick):
    base = datetime(2018, 10, 1, tzinfo=timezone.utc)
    tweets = [
        RawTweet(id=f"t{i:03d}", author="p", created_at=base + timedelta(days=off),
                 text="sufficient words to survive cleaning")
        for i, off in enumerate(offsets)
    ]
    inner, outer = WINDOW_CHAIN[pick], WINDOW_CHAIN[pick + 1]
    inner_ids = {t.id for t in build_timeline(tweets, "p", inner).tweets}
    outer_ids = {t.id for t in build_timeline(tweets, "p", outer).tweets}
    assert inner_ids <= outer_ids


INVARIANT_PROPERTIES = [
    ("output-range", _prop_output_range, 2000),
    ("empty-set-neutral", _prop_empty_set_is_neutral, 1000),
    ("min-support-neutral", _prop_below_min_support_is_neutral, 1000),
    ("permutation-invariance", _prop_permutation_invariance, 2000),
    ("threshold-monotonicity", _prop_threshold_monotonicity, 1500),
    ("clean-text-idempotence", _prop_clean_text_idempotent, 2500),
    ("window-subset-monotonicity", _prop_window_subset_monotone, 1000),
]


@pytest.mark.parametrize("name,prop,cases", INVARIANT_PROPERTIES,
                         ids=[name for name, _, _ in INVARIANT_PROPERTIES])
def test_invariant_suite(name, prop, cases):
    with criterion(f"invariant-suite/{name} ({cases} cases)"):
        prop()


def test_invariant_suite_case_budget():
    with criterion("invariant-suite total >= 10^4 cases"):
        assert sum(cases for _, _, cases in INVARIANT_PROPERTIES) >= 10_000


# --- 4. metric correctness ---------------------------------------------------


def test_metric_correctness():
    def pairs_of(preds, truths):
        return [EvalPair(p, t, "p", i + 1) for i, (p, t) in enumerate(zip(preds, truths))]

    with criterion("metric-correctness"):
        assert abs(mae(pairs_of([1, 3, 5], [1, 3, 5])) - 0.0) < 1e-9
        assert abs(mae(pairs_of([5, 1], [1, 5])) - 4.0) < 1e-9
        assert abs(mae(pairs_of([5, 5, 3], [5, 4, 3])) - 1 / 3) < 1e-9
        assert abs(f1_weighted(pairs_of([4, 4], [4, 4])) - 1.0) < 1e-9
        assert abs(f1_weighted(pairs_of([5, 5, 3], [5, 4, 3])) - 5 / 9) < 1e-9
        assert abs(f1_weighted(pairs_of([3] * 5, [1, 2, 3, 4, 5])) - 1 / 15) < 1e-9


# --- 5. end-to-end synthetic recovery ---------------------------------------


def test_end_to_end_synthetic_recovery():
    with criterion("end-to-end-synthetic-recovery"):
        catalog = synthetic.catalog(DATA)
        truth = synthetic.ground_truth()
        tweets = synthetic.tweets()
        provider = synthetic.provider()
        model = ModelId.named("mock")
        window = DatasetWindow.named("D4")
        config = PredictorConfig(model=model, window=window, algorithm="alg3", threshold=0.6)
        hypotheses = statement_hypotheses(catalog, "it")

        predictions = []
        for party in synthetic.PARTIES:
            timeline = build_timeline(tweets, party, window)
            matrix = score_batch(provider, timeline.tweets, hypotheses, model)
            for statement in catalog:
                predictions.append(predict(timeline, statement, matrix, config))

        assert len(predictions) == 6 * 20
        for record in predictions:
            assert record.label == synthetic.planted_label(record.party, record.statement_nr)
        pairs = pair_up(predictions, truth)
        assert mae(pairs) == 0.0
        assert f1_weighted(pairs) == 1.0
        report = build_report(predictions, truth)
        assert all(err == 0 for err in report.per_sentence_errors.values())


# --- 6. grid cardinality and determinism -------------------------------------


def test_grid_cardinality_and_determinism(tmp_path):
    with criterion("grid-cardinality-and-determinism"):
        catalog = synthetic.catalog(DATA)
        truth = synthetic.ground_truth()
        tweets = synthetic.tweets()
        models = tuple(ModelId.named(n) for n in ("BART", "XRoberta_1", "XRoberta_2"))
        axes = GridAxes(
            models=models,
            windows=tuple(DatasetWindow.named(n) for n in ("D3", "D4", "D5", "D7")),
            algorithms=("alg1", "alg2", "alg3", "alg4"),
            thresholds=DEFAULT_THRESHOLDS,
        )
        outputs = []
        for run in range(2):
            providers = {m.name: synthetic.provider() for m in models}
            points = run_grid(tweets, synthetic.PARTIES, catalog, truth, axes, providers, jobs=2)
            assert len(points) == 3 * 4 * 4 * 5 == 240
            path = tmp_path / f"grid-run{run}.csv"
            grid_to_csv(points, path)
            outputs.append(path.read_bytes())
        assert outputs[0] == outputs[1]


# --- 7. full-scale benchmark (requires external assets; excluded from CI) ----

FULL_SCALE_VARS = ("T2S_DUMP", "T2S_GROUND_TRUTH", "T2S_PROVIDER_URL")
HAVE_FULL_SCALE = all(os.environ.get(v) for v in FULL_SCALE_VARS)


@pytest.mark.skipif(not HAVE_FULL_SCALE,
                    reason=f"full-scale assets not configured ({', '.join(FULL_SCALE_VARS)})")
def test_full_scale_optimal_setup_benchmark(tmp_path):
    """Non-gating: needs the published tweet datasets, the external
    ground-truth CSV and a live scoring service."""
    from tweets2stance.corpus import load_dump
    from tweets2stance.scoring import RemoteProvider, ScoreCache
    from tweets2stance.statements import load_ground_truth, load_statements

    with criterion("full-scale-optimal-setup"):
        dump = load_dump(os.environ["T2S_DUMP"])
        truth = load_ground_truth(os.environ["T2S_GROUND_TRUTH"])
        catalog = load_statements(os.environ.get("T2S_STATEMENTS", str(DATA / "statements.csv")))
        window = DatasetWindow.named("D4")

        in_window = [t for t in dump.tweets if window.contains(t.created_at)]
        assert len(in_window) == 25_979  # four-month window, pre-cleaning

        model = ModelId.named("BART")
        provider = RemoteProvider(os.environ["T2S_PROVIDER_URL"])
        cache = ScoreCache(os.environ.get("T2S_CACHE_DIR", tmp_path / "cache"))
        config = PredictorConfig(model=model, window=window, algorithm="alg3", threshold=0.6)
        hypotheses = statement_hypotheses(catalog, "en")
        parties = sorted({g.party for g in truth})
        predictions = []
        for party in parties:
            timeline = build_timeline(dump.tweets, party, window, use_translated=True)
            matrix = score_batch(provider, timeline.tweets, hypotheses, model,
                                 cache=cache, jobs=4)
            for statement in catalog:
                predictions.append(predict(timeline, statement, matrix, config))
        pairs = pair_up(predictions, truth)
        assert mae(pairs) <= 1.30
        assert f1_weighted(pairs) >= 0.30
