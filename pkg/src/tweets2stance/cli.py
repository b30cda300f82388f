"""Command-line entry point: clean, score, predict, grid, report.

Runs are described by a JSON manifest plus flag overrides (flags win).
Every failure exits non-zero with a machine-readable JSON object on the
last line of stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import baselines, corpus, evaluation, scoring, stance, statements
from .errors import T2SError

logger = logging.getLogger(__name__)

PROVIDER_URL_ENV = "T2S_PROVIDER_URL"

MANIFEST_KEYS = {
    "dump", "statements", "ground_truth", "cache_dir", "output_dir", "provider",
    "models", "windows", "algorithms", "thresholds", "min_support",
    "source_lang", "pivot_lang", "jobs", "batch_size", "embed_model",
    "topic_templates",
}


class CliError(T2SError):
    def __init__(self, message: str, code: int = 1):
        super().__init__(message)
        self.code = code


@dataclass
class RunManifest:
    """Validated run description; see MANIFEST_KEYS for the file schema."""

    dump: Optional[Path] = None
    statements: Optional[Path] = None
    ground_truth: Optional[Path] = None
    cache_dir: Optional[Path] = None
    output_dir: Optional[Path] = None
    provider: Optional[str] = None
    models: list[str] = field(default_factory=lambda: ["BART", "XRoberta_1", "XRoberta_2"])
    windows: list[str] = field(default_factory=lambda: ["D3", "D4", "D5", "D7"])
    algorithms: list[str] = field(default_factory=lambda: list(stance.ALGORITHMS))
    thresholds: list[float] = field(default_factory=lambda: list(stance.DEFAULT_THRESHOLDS))
    min_support: int = stance.DEFAULT_MIN_SUPPORT
    source_lang: str = "it"
    pivot_lang: str = scoring.PIVOT_LANG
    jobs: int = 0  # 0 -> number of available processors
    batch_size: int = 16
    embed_model: str = "hash"
    topic_templates: dict = field(default_factory=dict)  # lang -> template with {topic}

    @classmethod
    def from_file(cls, path: str | Path) -> "RunManifest":
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        if not isinstance(raw, dict):
            raise CliError(f"{path}: manifest must be a JSON object", code=2)
        unknown = set(raw) - MANIFEST_KEYS
        if unknown:
            raise CliError(f"{path}: unknown manifest key(s) {sorted(unknown)}", code=2)
        manifest = cls()
        for key, value in raw.items():
            if key in ("dump", "statements", "ground_truth", "cache_dir", "output_dir"):
                value = Path(value)
            setattr(manifest, key, value)
        return manifest

    def validate(self, require: Sequence[str]) -> None:
        for name in require:
            value = getattr(self, name)
            if value is None:
                raise CliError(f"missing required setting {name!r} (flag or manifest)", code=2)
            if name in ("dump", "statements", "ground_truth") and not Path(value).exists():
                raise CliError(f"{name} path does not exist: {value}", code=2)
        if not (self.models and self.windows and self.algorithms and self.thresholds):
            raise CliError("grid axes (models/windows/algorithms/thresholds) must be non-empty", code=2)
        for th in self.thresholds:
            _check_threshold(th)
        if self.min_support < 1:
            raise CliError(f"min_support must be >= 1, got {self.min_support}", code=2)

    @property
    def effective_jobs(self) -> int:
        return self.jobs if self.jobs > 0 else (os.cpu_count() or 1)


def _check_threshold(th: float) -> float:
    if not 0.0 <= th <= 1.0:
        raise CliError(f"threshold must lie in [0,1], got {th}", code=2)
    return th


def _window(name: str) -> corpus.DatasetWindow:
    try:
        return corpus.DatasetWindow.named(name)
    except ValueError as exc:
        raise CliError(str(exc), code=2) from None


def make_provider(spec: str) -> scoring.ScoreProvider:
    """Build a provider from a spec string: 'mock', 'replay:<path>' or a URL."""
    if spec == "mock":
        return scoring.MockProvider()
    if spec.startswith("replay:"):
        path = spec[len("replay:"):]
        if not Path(path).exists():
            raise CliError(f"replay score file does not exist: {path}", code=2)
        return scoring.FileReplayProvider(path)
    if spec.startswith(("http://", "https://")):
        return scoring.RemoteProvider(spec)
    raise CliError(
        f"provider must be 'mock', 'replay:<path>' or an http(s) URL, got {spec!r}", code=2
    )


def resolve_provider_spec(flag_value: Optional[str], manifest: RunManifest) -> str:
    """Precedence: --provider flag, then T2S_PROVIDER_URL, then manifest."""
    spec = flag_value or os.environ.get(PROVIDER_URL_ENV) or manifest.provider
    if not spec:
        raise CliError(
            f"no provider configured (use --provider, {PROVIDER_URL_ENV} or the manifest)", code=2
        )
    return str(spec)


def _manifest_from_args(args: argparse.Namespace) -> RunManifest:
    manifest = RunManifest.from_file(args.manifest) if getattr(args, "manifest", None) else RunManifest()
    overrides = {
        "dump": "dump", "statements": "statements", "ground_truth": "ground_truth",
        "cache": "cache_dir", "out_dir": "output_dir", "source_lang": "source_lang",
        "pivot_lang": "pivot_lang", "jobs": "jobs", "batch_size": "batch_size",
        "min_support": "min_support", "embed_model": "embed_model",
    }
    for arg_name, manifest_name in overrides.items():
        value = getattr(args, arg_name, None)
        if value is not None:
            if manifest_name in ("dump", "statements", "ground_truth", "cache_dir", "output_dir"):
                value = Path(value)
            setattr(manifest, manifest_name, value)
    for axis in ("models", "windows", "algorithms", "thresholds"):
        value = getattr(args, axis, None)
        if value:
            setattr(manifest, axis, list(value))
    return manifest


def _model_id(name: str) -> scoring.ModelId:
    """Parse 'BART' or a custom 'name:pivot_translated' / 'name:source_language'."""
    if ":" in name:
        model_name, _, mode = name.partition(":")
        return scoring.ModelId.named(model_name, mode)
    return scoring.ModelId.named(name)


def _open_cache(manifest: RunManifest) -> Optional[scoring.ScoreCache]:
    return scoring.ScoreCache(manifest.cache_dir) if manifest.cache_dir else None


# --- subcommands -----------------------------------------------------------


def cmd_clean(args: argparse.Namespace) -> int:
    result = corpus.load_dump(args.dump)
    kept = 0
    dropped = 0
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", encoding="utf-8") as fh:
        for tweet in result.tweets:
            text = corpus.clean_text(tweet.text, kind=tweet.kind)
            if text is None:
                dropped += 1
                continue
            record = {
                "id": tweet.id,
                "author": tweet.author,
                "created_at": tweet.created_at.isoformat().replace("+00:00", "Z"),
                "text": text,
                "kind": tweet.kind,
                "word_count": len(text.split()),
            }
            if tweet.text_translated is not None:
                translated = corpus.clean_text(tweet.text_translated, kind=tweet.kind)
                if translated is not None:
                    record["text_translated"] = translated
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
            kept += 1
    stats = {
        "read": len(result.tweets) + len(result.skipped),
        "malformed": len(result.skipped),
        "dropped_short": dropped,
        "written": kept,
    }
    print(json.dumps(stats, sort_keys=True))
    return 0


def _premises_for_model(tweets: Sequence[corpus.RawTweet], model: scoring.ModelId) -> list[corpus.CleanTweet]:
    """Turn dump records into premises, selecting the model's text field.

    Input is expected to be already cleaned (cmd_clean output); texts are
    used as-is.
    """
    premises = []
    for tweet in tweets:
        if model.use_translated:
            if tweet.text_translated is None:
                raise T2SError(
                    f"tweet {tweet.id!r} has no text_translated but model "
                    f"{model.name!r} runs on translated text"
                )
            text = tweet.text_translated
        else:
            text = tweet.text
        premises.append(
            corpus.CleanTweet(
                id=tweet.id,
                author=tweet.author,
                created_at=tweet.created_at,
                text=text,
                word_count=len(text.split()),
            )
        )
    return premises


def cmd_score(args: argparse.Namespace) -> int:
    manifest = _manifest_from_args(args)
    manifest.validate(require=["dump", "statements", "cache_dir"])
    model = _model_id(args.model)
    provider = make_provider(resolve_provider_spec(args.provider, manifest))
    cache = _open_cache(manifest)
    catalog = statements.load_statements(manifest.statements)
    if not catalog:
        raise CliError(f"statement catalog {manifest.statements} is empty", code=2)
    dump = corpus.load_dump(manifest.dump)
    premises = _premises_for_model(dump.tweets, model)
    lang = manifest.pivot_lang if model.use_translated else manifest.source_lang
    hypotheses = scoring.statement_hypotheses(catalog, lang, manifest.topic_templates)
    matrix = scoring.score_batch(
        provider, premises, hypotheses, model,
        cache=cache, batch_size=manifest.batch_size, jobs=manifest.effective_jobs,
    )
    print(json.dumps({"tweets": len(premises), "hypotheses": len(hypotheses),
                      "scores": len(matrix), "cache": str(cache.path)}, sort_keys=True))
    return 0


def _predictions_to_csv(records: Sequence[stance.PredictionRecord], path: Path) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["party", "statement_nr", "label", "in_topic_count"])
    for record in records:
        writer.writerow([record.party, record.statement_nr, record.label, record.in_topic_count])
    evaluation._atomic_write_text(path, buf.getvalue())


def load_predictions_csv(path: str | Path) -> list[stance.PredictionRecord]:
    records = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        expected = ("party", "statement_nr", "label", "in_topic_count")
        if reader.fieldnames is None or tuple(reader.fieldnames) != expected:
            raise T2SError(f"{path}: expected header {','.join(expected)}")
        for row in reader:
            records.append(
                stance.PredictionRecord(
                    party=row["party"],
                    statement_nr=int(row["statement_nr"]),
                    label=int(row["label"]),
                    in_topic_count=int(row["in_topic_count"]),
                )
            )
    return records


def _baseline_predictions(
    args: argparse.Namespace,
    manifest: RunManifest,
    parties: list[str],
    catalog: list[statements.Statement],
    dump_tweets: list[corpus.RawTweet],
    window: corpus.DatasetWindow,
) -> list[stance.PredictionRecord]:
    config = baselines.BaselineConfig(
        kind=args.baseline,
        seed=args.seed if args.seed is not None else baselines.DEFAULT_SEED,
        top_k=args.top_k if args.top_k is not None else baselines.DEFAULT_TOP_K,
    )
    records = []
    if config.kind == "random":
        rng = np.random.default_rng(config.seed)
        for party in parties:
            for statement in catalog:
                records.append(stance.PredictionRecord(
                    party=party, statement_nr=statement.nr,
                    label=baselines.baseline_random(rng), in_topic_count=0,
                ))
    elif config.kind == "predict3":
        for party in parties:
            for statement in catalog:
                records.append(stance.PredictionRecord(
                    party=party, statement_nr=statement.nr,
                    label=baselines.baseline_predict3(), in_topic_count=0,
                ))
    else:  # sentence_embed
        use_translated = bool(args.use_translated)
        lang = manifest.pivot_lang if use_translated else manifest.source_lang
        embedder = _make_embedder(args, manifest)
        for party in parties:
            timeline = corpus.build_timeline(dump_tweets, party, window, use_translated)
            tweet_vecs = embedder.embed(
                manifest.embed_model, [(t.id, t.text) for t in timeline.tweets]
            )
            for statement in catalog:
                sentence = statement.sentence_in(lang)
                if timeline.tweets:
                    (sentence_vec,) = embedder.embed(
                        manifest.embed_model, [(f"{statement.nr}:sentence:{lang}", sentence)]
                    )
                    label = baselines.baseline_sentence_embed(tweet_vecs, sentence_vec, config.top_k)
                else:
                    label = stance.NEUTRAL
                records.append(stance.PredictionRecord(
                    party=party, statement_nr=statement.nr,
                    label=label, in_topic_count=len(timeline),
                ))
    return records


def _make_embedder(args: argparse.Namespace, manifest: RunManifest):
    spec = getattr(args, "embed_provider", None) or os.environ.get(PROVIDER_URL_ENV) or manifest.provider or "mock"
    if spec == "mock":
        return baselines.MockEmbeddings()
    if spec.startswith("replay:"):
        return baselines.FileReplayEmbeddings(spec[len("replay:"):])
    if spec.startswith(("http://", "https://")):
        return baselines.RemoteEmbeddings(spec)
    raise CliError(f"embed provider must be 'mock', 'replay:<path>' or a URL, got {spec!r}", code=2)


def cmd_predict(args: argparse.Namespace) -> int:
    manifest = _manifest_from_args(args)
    manifest.validate(require=["dump", "statements"])
    _check_threshold(args.th)
    window = _window(args.window)
    catalog = statements.load_statements(manifest.statements)
    if not catalog:
        raise CliError(f"statement catalog {manifest.statements} is empty", code=2)
    dump = corpus.load_dump(manifest.dump)
    parties = sorted({t.author for t in dump.tweets})
    out_path = Path(args.out) if args.out else (manifest.output_dir or Path(".")) / "predictions.csv"

    if args.baseline:
        records = _baseline_predictions(args, manifest, parties, catalog, dump.tweets, window)
        _predictions_to_csv(records, out_path)
        print(json.dumps({"predictions": len(records), "out": str(out_path)}, sort_keys=True))
        return 0

    model = _model_id(args.model)
    config = stance.PredictorConfig(
        model=model,
        window=window,
        algorithm=args.alg,
        threshold=args.th,
        min_support=manifest.min_support,
        alg1_swap_weights=bool(args.alg1_swap_weights),
    )
    provider = make_provider(resolve_provider_spec(args.provider, manifest))
    cache = _open_cache(manifest)
    lang = manifest.pivot_lang if model.use_translated else manifest.source_lang
    hypotheses = scoring.statement_hypotheses(catalog, lang, manifest.topic_templates)
    records = []
    for party in parties:
        timeline = corpus.build_timeline(dump.tweets, party, window, model.use_translated)
        matrix = scoring.score_batch(
            provider, timeline.tweets, hypotheses, model,
            cache=cache, batch_size=manifest.batch_size, jobs=manifest.effective_jobs,
        )
        for statement in catalog:
            records.append(stance.predict(
                timeline, statement, matrix, config,
                pivot_lang=manifest.pivot_lang, source_lang=manifest.source_lang,
                topic_templates=manifest.topic_templates,
            ))
    _predictions_to_csv(records, out_path)
    print(json.dumps({"predictions": len(records), "out": str(out_path)}, sort_keys=True))
    return 0


def cmd_grid(args: argparse.Namespace) -> int:
    manifest = _manifest_from_args(args)
    manifest.validate(require=["dump", "statements", "ground_truth", "output_dir"])
    catalog = statements.load_statements(manifest.statements)
    truth = statements.load_ground_truth(manifest.ground_truth)
    dump = corpus.load_dump(manifest.dump)
    parties = sorted({g.party for g in truth})
    provider_spec = resolve_provider_spec(args.provider, manifest)
    models = tuple(_model_id(name) for name in manifest.models)
    providers = {model.name: make_provider(provider_spec) for model in models}
    axes = evaluation.GridAxes(
        models=models,
        windows=tuple(_window(name) for name in manifest.windows),
        algorithms=tuple(manifest.algorithms),
        thresholds=tuple(manifest.thresholds),
        min_support=manifest.min_support,
    )
    cache = _open_cache(manifest)
    points = evaluation.run_grid(
        dump.tweets, parties, catalog, truth, axes, providers,
        cache=cache,
        pivot_lang=manifest.pivot_lang, source_lang=manifest.source_lang,
        topic_templates=manifest.topic_templates,
        batch_size=manifest.batch_size, jobs=manifest.effective_jobs,
    )
    out_dir = Path(manifest.output_dir)
    evaluation.grid_to_csv(points, out_dir / "grid.csv")

    # Re-run the best configuration to produce the detailed report.
    best = points[0]
    matrix_provider = providers[best.config.model.name]
    lang = manifest.pivot_lang if best.config.model.use_translated else manifest.source_lang
    hypotheses = scoring.statement_hypotheses(catalog, lang, manifest.topic_templates)
    records = []
    for party in parties:
        timeline = corpus.build_timeline(
            dump.tweets, party, best.config.window, best.config.model.use_translated
        )
        matrix = scoring.score_batch(
            matrix_provider, timeline.tweets, hypotheses, best.config.model,
            cache=cache, batch_size=manifest.batch_size, jobs=manifest.effective_jobs,
        )
        for statement in catalog:
            records.append(stance.predict(
                timeline, statement, matrix, best.config,
                pivot_lang=manifest.pivot_lang, source_lang=manifest.source_lang,
                topic_templates=manifest.topic_templates,
            ))
    report = evaluation.build_report(records, truth)
    _predictions_to_csv(records, out_dir / "predictions.csv")
    evaluation.report_to_json(report, out_dir / "report.json")
    evaluation.report_to_csv(report, out_dir / "report.csv")
    print(json.dumps({
        "grid_points": len(points),
        "best": evaluation._config_json(best.config),
        "best_mae": round(best.mae, 4),
        "best_f1_weighted": round(best.f1_weighted, 4),
        "out_dir": str(out_dir),
    }, sort_keys=True))
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    manifest = _manifest_from_args(args)
    manifest.validate(require=["ground_truth"])
    predictions = load_predictions_csv(args.predictions)
    truth = statements.load_ground_truth(manifest.ground_truth)
    report = evaluation.build_report(predictions, truth)
    out_dir = Path(manifest.output_dir or ".")
    evaluation.report_to_json(report, out_dir / "report.json")
    evaluation.report_to_csv(report, out_dir / "report.csv")
    print(json.dumps({
        "mae": round(report.overall.mae, 4),
        "f1_weighted": round(report.overall.f1_weighted, 4),
        "n_pairs": report.overall.n_pairs,
        "out_dir": str(out_dir),
    }, sort_keys=True))
    return 0


# --- parser ----------------------------------------------------------------


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--manifest", help="JSON run manifest; flags override its values")
    parser.add_argument("--statements", help="statement catalog CSV")
    parser.add_argument("--ground-truth", dest="ground_truth", help="ground truth CSV")
    parser.add_argument("--cache", help="score cache directory")
    parser.add_argument("--provider", help="'mock', 'replay:<path>' or sidecar URL")
    parser.add_argument("--out-dir", dest="out_dir", help="output directory")
    parser.add_argument("--source-lang", dest="source_lang", help="source language tag (default it)")
    parser.add_argument("--pivot-lang", dest="pivot_lang", help="pivot language tag (default en)")
    parser.add_argument("--jobs", type=int, help="parallel workers (default: CPU count)")
    parser.add_argument("--batch-size", dest="batch_size", type=int, help="pairs per provider request")
    parser.add_argument("--verbose", action="store_true", help="log at INFO level")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="t2s",
        description="Predict agreement levels (1..5) from social-media timelines "
        "with zero-shot entailment scoring.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_clean = sub.add_parser("clean", help="clean a raw tweet dump into a cleaned JSONL")
    p_clean.add_argument("--dump", required=True)
    p_clean.add_argument("--out", required=True)
    p_clean.add_argument("--verbose", action="store_true")
    p_clean.set_defaults(func=cmd_clean)

    p_score = sub.add_parser("score", help="populate the score cache for a model")
    _add_common(p_score)
    p_score.add_argument("--dump", help="cleaned tweet JSONL")
    p_score.add_argument("--model", required=True, help="BART | XRoberta_1 | XRoberta_2 | name[:mode]")
    p_score.set_defaults(func=cmd_score)

    p_predict = sub.add_parser("predict", help="predict agreement labels for every author")
    _add_common(p_predict)
    p_predict.add_argument("--dump", help="tweet dump JSONL")
    p_predict.add_argument("--model", default="BART")
    p_predict.add_argument("--window", default="D4", help="D3 | D4 | D5 | D7")
    p_predict.add_argument("--alg", default="alg3", choices=list(stance.ALGORITHMS))
    p_predict.add_argument("--th", type=float, default=0.6)
    p_predict.add_argument("--m", dest="min_support", type=int, help="min in-topic tweets (alg4)")
    p_predict.add_argument("--alg1-swap-weights", dest="alg1_swap_weights", action="store_true")
    p_predict.add_argument("--baseline", choices=list(baselines.BASELINE_KINDS))
    p_predict.add_argument("--seed", type=int, help="random baseline seed (default 42)")
    p_predict.add_argument("--top-k", dest="top_k", type=int, help="sentence_embed top-K (default 10)")
    p_predict.add_argument("--use-translated", dest="use_translated", action="store_true",
                           help="embed translated text in the sentence_embed baseline")
    p_predict.add_argument("--embed-provider", dest="embed_provider",
                           help="'mock', 'replay:<path>' or sidecar URL for embeddings")
    p_predict.add_argument("--embed-model", dest="embed_model", help="embedding model id")
    p_predict.add_argument("--out", help="predictions CSV path")
    p_predict.set_defaults(func=cmd_predict)

    p_grid = sub.add_parser("grid", help="grid search; writes grid.csv and the best-config report")
    _add_common(p_grid)
    p_grid.add_argument("--dump", help="tweet dump JSONL")
    p_grid.add_argument("--models", nargs="+", help="model ids to sweep")
    p_grid.add_argument("--windows", nargs="+", help="window names to sweep")
    p_grid.add_argument("--algorithms", nargs="+", choices=list(stance.ALGORITHMS))
    p_grid.add_argument("--thresholds", nargs="+", type=float)
    p_grid.add_argument("--m", dest="min_support", type=int)
    p_grid.set_defaults(func=cmd_grid)

    p_report = sub.add_parser("report", help="build report.json/report.csv from predictions")
    _add_common(p_report)
    p_report.add_argument("--predictions", required=True, help="predictions CSV")
    p_report.set_defaults(func=cmd_report)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except CliError as exc:
        print(json.dumps({"error": "usage", "message": str(exc)}), file=sys.stderr)
        return exc.code
    except T2SError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    except Exception as exc:  # the stderr contract beats a traceback here
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
