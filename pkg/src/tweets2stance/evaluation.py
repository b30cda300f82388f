"""Metrics (MAE, weighted F1), grid search and report generation."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence

from .corpus import DatasetWindow, RawTweet, Timeline, build_timeline
from .errors import MissingScoreError, T2SError
from .scoring import (
    ModelId,
    ScoreCache,
    ScoreMatrix,
    ScoreProvider,
    statement_hypotheses,
    score_batch,
)
from .stance import (
    ALGORITHMS,
    DEFAULT_MIN_SUPPORT,
    DEFAULT_THRESHOLDS,
    PredictionRecord,
    PredictorConfig,
    predict,
)
from .statements import LABELS, GroundTruth, Statement, check_label


@dataclass(frozen=True)
class EvalPair:
    """One (predicted, truth) label pair for a (party, statement) cell."""

    predicted: int
    truth: int
    party: str
    statement_nr: int

    def __post_init__(self) -> None:
        check_label(self.predicted, "predicted")
        check_label(self.truth, "truth")


@dataclass(frozen=True)
class GridPoint:
    """Metrics for one predictor configuration."""

    config: Optional[PredictorConfig]
    mae: float
    f1_weighted: float
    n_pairs: int


def mae(pairs: Sequence[EvalPair]) -> float:
    """Mean absolute error between predicted and true labels."""
    if not pairs:
        raise ValueError("mae of an empty pair list is undefined")
    return sum(abs(p.predicted - p.truth) for p in pairs) / len(pairs)


def f1_weighted(pairs: Sequence[EvalPair]) -> float:
    """Per-class F1 over labels 1..5, averaged with weights proportional to
    each class's true-label support. Zero-support classes carry no weight;
    a class with no predictions and no hits scores 0."""
    if not pairs:
        raise ValueError("f1_weighted of an empty pair list is undefined")
    # Single division at the end keeps the perfect case at exactly 1.0.
    weighted_sum = 0.0
    for label in LABELS:
        tp = sum(1 for p in pairs if p.predicted == label and p.truth == label)
        fp = sum(1 for p in pairs if p.predicted == label and p.truth != label)
        fn = sum(1 for p in pairs if p.truth == label and p.predicted != label)
        support = tp + fn
        if support == 0:
            continue
        denom = 2 * tp + fp + fn
        f1 = (2 * tp / denom) if denom else 0.0
        weighted_sum += support * f1
    return weighted_sum / len(pairs)


def pair_up(
    predictions: Sequence[PredictionRecord],
    ground_truth: Sequence[GroundTruth],
) -> list[EvalPair]:
    """Join predictions with ground truth over the truth universe; missing
    prediction cells are fatal and enumerated."""
    by_cell = {(p.party, p.statement_nr): p for p in predictions}
    missing = [
        (g.party, g.statement_nr)
        for g in ground_truth
        if (g.party, g.statement_nr) not in by_cell
    ]
    if missing:
        shown = ", ".join(map(str, missing[:10]))
        more = "" if len(missing) <= 10 else f" (+{len(missing) - 10} more)"
        raise T2SError(f"predictions missing for ground-truth cell(s): {shown}{more}")
    return [
        EvalPair(
            predicted=by_cell[(g.party, g.statement_nr)].label,
            truth=g.label,
            party=g.party,
            statement_nr=g.statement_nr,
        )
        for g in ground_truth
    ]


@dataclass(frozen=True)
class GridAxes:
    """The four swept parameter lists plus the min-support setting."""

    models: tuple[ModelId, ...]
    windows: tuple[DatasetWindow, ...]
    algorithms: tuple[str, ...] = ALGORITHMS
    thresholds: tuple[float, ...] = DEFAULT_THRESHOLDS
    min_support: int = DEFAULT_MIN_SUPPORT
    alg1_swap_weights: bool = False

    def __post_init__(self) -> None:
        if not (self.models and self.windows and self.algorithms and self.thresholds):
            raise ValueError("every grid axis must be non-empty")

    def configs(self) -> list[PredictorConfig]:
        return [
            PredictorConfig(
                model=model,
                window=window,
                algorithm=algorithm,
                threshold=threshold,
                min_support=self.min_support,
                alg1_swap_weights=self.alg1_swap_weights,
            )
            for model in self.models
            for window in self.windows
            for algorithm in self.algorithms
            for threshold in self.thresholds
        ]


def _rank_key(point: GridPoint):
    cfg = point.config
    return (
        point.mae,
        -point.f1_weighted,
        cfg.model.name,
        cfg.window.name,
        cfg.algorithm,
        cfg.threshold,
    )


def run_grid(
    tweets: Sequence[RawTweet],
    parties: Sequence[str],
    statements: Sequence[Statement],
    ground_truth: Sequence[GroundTruth],
    axes: GridAxes,
    providers: Mapping[str, ScoreProvider],
    *,
    cache: Optional[ScoreCache] = None,
    pivot_lang: str = "en",
    source_lang: str = "it",
    topic_templates: Optional[dict[str, str]] = None,
    batch_size: int = 16,
    jobs: int = 1,
) -> list[GridPoint]:
    """Evaluate every grid configuration over the (party, statement)
    universe and rank the results by (MAE ascending, F1 descending).

    All scores are gathered up front (cache first, then the per-model
    provider); any unservable pair aborts the run before evaluation
    starts. The returned ranking is deterministic.
    """
    truth_index = {(g.party, g.statement_nr): g for g in ground_truth}
    missing_truth = [
        (party, st.nr)
        for party in parties
        for st in statements
        if (party, st.nr) not in truth_index
    ]
    if missing_truth:
        shown = ", ".join(map(str, missing_truth[:10]))
        more = "" if len(missing_truth) <= 10 else f" (+{len(missing_truth) - 10} more)"
        raise T2SError(f"ground truth missing for cell(s): {shown}{more}")
    universe_truth = [truth_index[(party, st.nr)] for party in parties for st in statements]

    for model in axes.models:
        if model.name not in providers:
            raise T2SError(f"no score provider configured for model {model.name!r}")

    # Timelines depend only on (translated-or-not, party, window).
    timelines: dict[tuple[bool, str, str], Timeline] = {}
    for translated in {m.use_translated for m in axes.models}:
        for party in parties:
            for window in axes.windows:
                timelines[(translated, party, window.name)] = build_timeline(
                    tweets, party, window, use_translated=translated
                )

    # Scoring phase: one matrix per model over the union of its timelines.
    matrices: dict[str, ScoreMatrix] = {}
    for model in axes.models:
        lang = pivot_lang if model.use_translated else source_lang
        hypotheses = statement_hypotheses(statements, lang, topic_templates)
        premises_by_id = {}
        for party in parties:
            for window in axes.windows:
                for tweet in timelines[(model.use_translated, party, window.name)].tweets:
                    premises_by_id.setdefault(tweet.id, tweet)
        premises = [premises_by_id[tid] for tid in sorted(premises_by_id)]
        provider = providers[model.name]
        # Replay-style providers can be probed up front, so every gap is
        # reported at once instead of failing on the first missing chunk.
        if hasattr(provider, "has"):
            gaps = [
                (tweet.id, hyp.id)
                for tweet in premises
                for hyp in hypotheses
                if not provider.has(model, tweet.id, hyp.id)
                and (cache is None or cache.get((tweet.id, hyp.id, model.name)) is None)
            ]
            if gaps:
                shown = ", ".join(map(str, gaps[:10]))
                more = "" if len(gaps) <= 10 else f" (+{len(gaps) - 10} more)"
                raise MissingScoreError(
                    f"{len(gaps)} score(s) unavailable for model {model.name!r}: {shown}{more}"
                )
        matrices[model.name] = score_batch(
            provider,
            premises,
            hypotheses,
            model,
            cache=cache,
            batch_size=batch_size,
            jobs=jobs,
        )

    def evaluate(config: PredictorConfig) -> GridPoint:
        matrix = matrices[config.model.name]
        predictions = [
            predict(
                timelines[(config.model.use_translated, party, config.window.name)],
                statement,
                matrix,
                config,
                pivot_lang=pivot_lang,
                source_lang=source_lang,
                topic_templates=topic_templates,
            )
            for party in parties
            for statement in statements
        ]
        pairs = pair_up(predictions, universe_truth)
        return GridPoint(
            config=config, mae=mae(pairs), f1_weighted=f1_weighted(pairs), n_pairs=len(pairs)
        )

    configs = axes.configs()
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            points = list(pool.map(evaluate, configs))
    else:
        points = [evaluate(config) for config in configs]
    return sorted(points, key=_rank_key)


@dataclass(frozen=True)
class ReportCell:
    party: str
    statement_nr: int
    predicted: int
    truth: int
    in_topic_count: int

    @property
    def abs_error(self) -> int:
        return abs(self.predicted - self.truth)


@dataclass
class EvalReport:
    """Overall metrics, per-party metrics, and the two per-cell matrices
    (absolute error and in-topic tweet counts)."""

    overall: GridPoint
    per_party: dict[str, tuple[float, float]]
    cells: list[ReportCell] = field(default_factory=list)

    @property
    def per_sentence_errors(self) -> dict[tuple[str, int], int]:
        return {(c.party, c.statement_nr): c.abs_error for c in self.cells}

    @property
    def in_topic_counts(self) -> dict[tuple[str, int], int]:
        return {(c.party, c.statement_nr): c.in_topic_count for c in self.cells}


def build_report(
    predictions: Sequence[PredictionRecord],
    ground_truth: Sequence[GroundTruth],
) -> EvalReport:
    """Assemble the full evaluation report over the ground-truth universe."""
    pairs = pair_up(predictions, ground_truth)
    by_cell = {(p.party, p.statement_nr): p for p in predictions}
    configs = {p.config for p in predictions if p.config is not None}
    overall = GridPoint(
        config=configs.pop() if len(configs) == 1 else None,
        mae=mae(pairs),
        f1_weighted=f1_weighted(pairs),
        n_pairs=len(pairs),
    )
    parties = sorted({g.party for g in ground_truth})
    per_party = {}
    for party in parties:
        party_pairs = [p for p in pairs if p.party == party]
        per_party[party] = (mae(party_pairs), f1_weighted(party_pairs))
    cells = [
        ReportCell(
            party=g.party,
            statement_nr=g.statement_nr,
            predicted=by_cell[(g.party, g.statement_nr)].label,
            truth=g.label,
            in_topic_count=by_cell[(g.party, g.statement_nr)].in_topic_count,
        )
        for g in sorted(ground_truth, key=lambda g: (g.party, g.statement_nr))
    ]
    return EvalReport(overall=overall, per_party=per_party, cells=cells)


def _atomic_write_text(path: str | Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _config_json(config: Optional[PredictorConfig]):
    if config is None:
        return None
    return {
        "model": config.model.name,
        "language_mode": config.model.language_mode,
        "window": config.window.name,
        "window_start": config.window.start.isoformat(),
        "window_end": config.window.end.isoformat(),
        "algorithm": config.algorithm,
        "threshold": config.threshold,
        "min_support": config.min_support,
        "alg1_swap_weights": config.alg1_swap_weights,
    }


def grid_to_csv(points: Sequence[GridPoint], path: str | Path) -> None:
    """Write the ranked grid as CSV (metrics to 4 decimal places)."""
    lines = ["model,window,algorithm,threshold,m,mae,f1_weighted,n_pairs"]
    for point in points:
        cfg = point.config
        lines.append(
            f"{cfg.model.name},{cfg.window.name},{cfg.algorithm},{cfg.threshold!r},"
            f"{cfg.min_support},{point.mae:.4f},{point.f1_weighted:.4f},{point.n_pairs}"
        )
    _atomic_write_text(path, "\n".join(lines) + "\n")


def report_to_json(report: EvalReport, path: str | Path) -> None:
    """Write the full report (full float precision) as JSON."""
    doc = {
        "overall": {
            "mae": report.overall.mae,
            "f1_weighted": report.overall.f1_weighted,
            "n_pairs": report.overall.n_pairs,
            "config": _config_json(report.overall.config),
        },
        "per_party": {
            party: {"mae": m, "f1_weighted": f} for party, (m, f) in report.per_party.items()
        },
        "per_sentence_errors": {
            party: {
                str(c.statement_nr): c.abs_error for c in report.cells if c.party == party
            }
            for party in report.per_party
        },
        "in_topic_counts": {
            party: {
                str(c.statement_nr): c.in_topic_count for c in report.cells if c.party == party
            }
            for party in report.per_party
        },
    }
    _atomic_write_text(path, json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n")


def report_to_csv(report: EvalReport, path: str | Path) -> None:
    """Write the per-cell long-format table as CSV."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["party", "statement_nr", "predicted", "truth", "abs_error", "in_topic_count"])
    for c in report.cells:
        writer.writerow([c.party, c.statement_nr, c.predicted, c.truth, c.abs_error, c.in_topic_count])
    _atomic_write_text(path, buf.getvalue())
