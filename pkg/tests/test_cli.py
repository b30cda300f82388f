import csv
import json
import shutil
import subprocess
import sys

import pytest

import synthetic
from conftest import DATA
from tweets2stance.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def last_json(stream):
    lines = [line for line in stream.strip().splitlines() if line.strip()]
    return json.loads(lines[-1])


@pytest.fixture
def universe(tmp_path):
    dump = synthetic.write_dump(tmp_path / "dump.jsonl")
    truth = synthetic.write_ground_truth(tmp_path / "ground_truth.csv")
    replay = synthetic.write_score_replay(
        tmp_path / "replay.jsonl", ["BART", "XRoberta_1", "XRoberta_2", "mock"]
    )
    return {
        "dump": dump,
        "truth": truth,
        "replay": replay,
        "statements": DATA / "statements.csv",
        "out": tmp_path / "out",
        "cache": tmp_path / "cache",
    }


class TestClean:
    def test_empty_dump(self, tmp_path, capsys):
        dump = tmp_path / "dump.jsonl"
        dump.write_text("")
        out = tmp_path / "clean.jsonl"
        code, stdout, _ = run_cli(capsys, "clean", "--dump", str(dump), "--out", str(out))
        assert code == 0
        assert last_json(stdout) == {"read": 0, "malformed": 0, "dropped_short": 0, "written": 0}
        assert out.read_text() == ""

    def test_droppable_tweets_counted(self, tmp_path, capsys):
        rows = []
        for i in range(10):
            text = "#tag only https://x.io" if i < 4 else "plenty of words to keep here"
            rows.append({"id": str(i), "author": "a", "created_at": "2019-03-02T10:00:00Z",
                         "text": text, "kind": "original"})
        dump = tmp_path / "dump.jsonl"
        dump.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
        out = tmp_path / "clean.jsonl"
        code, stdout, _ = run_cli(capsys, "clean", "--dump", str(dump), "--out", str(out))
        assert code == 0
        stats = last_json(stdout)
        assert stats["written"] == 6 and stats["dropped_short"] == 4
        assert len(out.read_text().splitlines()) == 6

    def test_cleaning_is_idempotent(self, universe, tmp_path, capsys):
        once = tmp_path / "once.jsonl"
        twice = tmp_path / "twice.jsonl"
        assert run_cli(capsys, "clean", "--dump", str(universe["dump"]), "--out", str(once))[0] == 0
        assert run_cli(capsys, "clean", "--dump", str(once), "--out", str(twice))[0] == 0
        assert once.read_text() == twice.read_text()


class TestScore:
    def test_cache_coverage_counts(self, tmp_path, capsys):
        tweets = synthetic.tweets(parties=["partyA"], statement_nrs=[1], per_cell=3)
        dump = synthetic.write_dump(tmp_path / "dump.jsonl", tweets)
        statements = tmp_path / "statements.csv"
        statements.write_text(
            "nr,lang,sentence,topic\n"
            "1,it,frase uno,tema uno\n2,it,frase due,tema due\n"
        )
        cache = tmp_path / "cache"
        code, stdout, _ = run_cli(
            capsys, "score", "--dump", str(dump), "--statements", str(statements),
            "--model", "mock", "--provider", "mock", "--cache", str(cache),
        )
        assert code == 0
        stats = last_json(stdout)
        assert stats["scores"] == 12  # 3 tweets x 2 statements x 2 hypotheses
        cache_lines = (cache / "scores.jsonl").read_text().splitlines()
        assert len(cache_lines) == 12

    def test_rerun_hits_cache_only(self, tmp_path, capsys):
        tweets = synthetic.tweets(parties=["partyA"], statement_nrs=[1], per_cell=3)
        dump = synthetic.write_dump(tmp_path / "dump.jsonl", tweets)
        cache = tmp_path / "cache"
        args = ["score", "--dump", str(dump), "--statements", str(DATA / "statements.csv"),
                "--model", "mock", "--provider", "mock", "--cache", str(cache)]
        assert run_cli(capsys, *args)[0] == 0
        first = (cache / "scores.jsonl").read_text()
        assert run_cli(capsys, *args)[0] == 0
        assert (cache / "scores.jsonl").read_text() == first  # no new appends

    def test_missing_translation_in_pivot_mode(self, tmp_path, capsys):
        rows = [{"id": "t-no-translation", "author": "a",
                 "created_at": "2019-03-02T10:00:00Z",
                 "text": "solo testo in lingua originale", "kind": "original"}]
        dump = tmp_path / "dump.jsonl"
        dump.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
        code, _, stderr = run_cli(
            capsys, "score", "--dump", str(dump), "--statements", str(DATA / "statements.csv"),
            "--model", "BART", "--provider", "mock", "--cache", str(tmp_path / "cache"),
        )
        assert code != 0
        err = last_json(stderr)
        assert "t-no-translation" in err["message"]


class TestPredict:
    def test_optimal_setup_flags(self, universe, capsys):
        out = universe["out"] / "predictions.csv"
        code, stdout, _ = run_cli(
            capsys, "predict",
            "--dump", str(universe["dump"]), "--statements", str(universe["statements"]),
            "--model", "BART", "--window", "D4", "--alg", "alg3", "--th", "0.6",
            "--provider", f"replay:{universe['replay']}", "--out", str(out),
        )
        assert code == 0
        rows = list(csv.DictReader(out.open()))
        assert len(rows) == 120  # 6 parties x 20 statements
        # planted labels are recovered exactly
        for row in rows:
            expected = synthetic.planted_label(row["party"], int(row["statement_nr"]))
            assert int(row["label"]) == expected
            assert int(row["in_topic_count"]) == 3

    def test_threshold_out_of_range_is_usage_error(self, universe, capsys):
        code, _, stderr = run_cli(
            capsys, "predict", "--dump", str(universe["dump"]),
            "--statements", str(universe["statements"]),
            "--th", "1.5", "--provider", "mock",
        )
        assert code == 2
        assert last_json(stderr)["error"] == "usage"

    def test_rerun_is_byte_identical(self, universe, capsys):
        out = universe["out"] / "predictions.csv"
        args = ["predict", "--dump", str(universe["dump"]),
                "--statements", str(universe["statements"]),
                "--provider", f"replay:{universe['replay']}", "--out", str(out)]
        assert run_cli(capsys, *args)[0] == 0
        first = out.read_bytes()
        assert run_cli(capsys, *args)[0] == 0
        assert out.read_bytes() == first

    def test_env_var_provider_fallback(self, universe, capsys, monkeypatch):
        monkeypatch.setenv("T2S_PROVIDER_URL", f"replay:{universe['replay']}")
        out = universe["out"] / "predictions.csv"
        code, _, _ = run_cli(
            capsys, "predict", "--dump", str(universe["dump"]),
            "--statements", str(universe["statements"]), "--out", str(out),
        )
        assert code == 0

    def test_baseline_predict3(self, universe, capsys):
        out = universe["out"] / "baseline3.csv"
        code, _, _ = run_cli(
            capsys, "predict", "--dump", str(universe["dump"]),
            "--statements", str(universe["statements"]),
            "--baseline", "predict3", "--out", str(out),
        )
        assert code == 0
        rows = list(csv.DictReader(out.open()))
        assert len(rows) == 120 and all(r["label"] == "3" for r in rows)

    def test_baseline_random_seeded(self, universe, capsys):
        out1 = universe["out"] / "r1.csv"
        out2 = universe["out"] / "r2.csv"
        for out in (out1, out2):
            code, _, _ = run_cli(
                capsys, "predict", "--dump", str(universe["dump"]),
                "--statements", str(universe["statements"]),
                "--baseline", "random", "--seed", "42", "--out", str(out),
            )
            assert code == 0
        assert out1.read_bytes() == out2.read_bytes()
        labels = {int(r["label"]) for r in csv.DictReader(out1.open())}
        assert labels <= {1, 2, 3, 4, 5} and len(labels) > 1

    def test_baseline_sentence_embed_mock(self, universe, capsys):
        out = universe["out"] / "se.csv"
        code, _, _ = run_cli(
            capsys, "predict", "--dump", str(universe["dump"]),
            "--statements", str(universe["statements"]),
            "--baseline", "sentence_embed", "--embed-provider", "mock",
            "--out", str(out),
        )
        assert code == 0
        rows = list(csv.DictReader(out.open()))
        assert len(rows) == 120
        assert all(1 <= int(r["label"]) <= 5 for r in rows)


class TestGrid:
    def manifest(self, universe, tmp_path, **overrides):
        doc = {
            "dump": str(universe["dump"]),
            "statements": str(universe["statements"]),
            "ground_truth": str(universe["truth"]),
            "output_dir": str(universe["out"]),
            "provider": f"replay:{universe['replay']}",
            "models": ["mock"],
            "windows": ["D4"],
            "algorithms": ["alg2", "alg3"],
            "thresholds": [0.6, 0.9],
            "jobs": 2,
        }
        doc.update(overrides)
        path = tmp_path / "manifest.json"
        path.write_text(json.dumps(doc))
        return path

    def test_grid_outputs_and_best_config(self, universe, tmp_path, capsys):
        manifest = self.manifest(universe, tmp_path)
        code, stdout, _ = run_cli(capsys, "grid", "--manifest", str(manifest))
        assert code == 0
        summary = last_json(stdout)
        assert summary["grid_points"] == 4
        assert summary["best_mae"] == 0.0 and summary["best_f1_weighted"] == 1.0
        out = universe["out"]
        assert (out / "grid.csv").exists()
        assert (out / "predictions.csv").exists()
        assert (out / "report.json").exists()
        assert (out / "report.csv").exists()
        report = json.loads((out / "report.json").read_text())
        assert report["overall"]["mae"] == 0.0

    def test_flags_override_manifest(self, universe, tmp_path, capsys):
        manifest = self.manifest(universe, tmp_path, thresholds=[0.6])
        code, stdout, _ = run_cli(
            capsys, "grid", "--manifest", str(manifest),
            "--thresholds", "0.5", "0.6", "0.7",
        )
        assert code == 0
        assert last_json(stdout)["grid_points"] == 6  # 2 algorithms x 3 thresholds

    def test_unknown_manifest_key_rejected(self, universe, tmp_path, capsys):
        path = tmp_path / "manifest.json"
        path.write_text(json.dumps({"dump": str(universe["dump"]), "typo_key": 1}))
        code, _, stderr = run_cli(capsys, "grid", "--manifest", str(path))
        assert code == 2
        assert "typo_key" in last_json(stderr)["message"]

    def test_grid_rerun_byte_identical(self, universe, tmp_path, capsys):
        manifest = self.manifest(universe, tmp_path)
        assert run_cli(capsys, "grid", "--manifest", str(manifest))[0] == 0
        first = (universe["out"] / "grid.csv").read_bytes()
        assert run_cli(capsys, "grid", "--manifest", str(manifest))[0] == 0
        assert (universe["out"] / "grid.csv").read_bytes() == first


class TestReport:
    def test_report_from_predictions(self, universe, tmp_path, capsys):
        out = universe["out"] / "predictions.csv"
        assert run_cli(
            capsys, "predict", "--dump", str(universe["dump"]),
            "--statements", str(universe["statements"]),
            "--provider", f"replay:{universe['replay']}", "--out", str(out),
        )[0] == 0
        code, stdout, _ = run_cli(
            capsys, "report", "--predictions", str(out),
            "--ground-truth", str(universe["truth"]),
            "--out-dir", str(universe["out"]),
        )
        assert code == 0
        summary = last_json(stdout)
        assert summary["mae"] == 0.0 and summary["n_pairs"] == 120

    def test_missing_ground_truth_path(self, universe, capsys):
        code, _, stderr = run_cli(
            capsys, "report", "--predictions", "nope.csv",
            "--ground-truth", "missing.csv",
        )
        assert code == 2
        assert last_json(stderr)["error"] == "usage"


class TestErrorContract:
    def test_badly_typed_manifest_value_still_yields_error_json(self, universe, tmp_path, capsys):
        path = tmp_path / "manifest.json"
        path.write_text(json.dumps({
            "dump": str(universe["dump"]),
            "statements": str(universe["statements"]),
            "ground_truth": str(universe["truth"]),
            "output_dir": str(universe["out"]),
            "provider": "mock",
            "thresholds": ["not-a-number"],
        }))
        code, _, stderr = run_cli(capsys, "grid", "--manifest", str(path))
        assert code != 0
        assert "error" in last_json(stderr)

    def test_stderr_json_is_last_line(self, universe, capsys):
        code, _, stderr = run_cli(
            capsys, "predict", "--dump", "does-not-exist.jsonl",
            "--statements", str(universe["statements"]), "--provider", "mock",
        )
        assert code != 0
        last_json(stderr)  # parses


def test_console_script_installed():
    exe = shutil.which("t2s")
    if exe is None:
        pytest.skip("console script not on PATH")
    proc = subprocess.run([exe, "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    for command in ("clean", "score", "predict", "grid", "report"):
        assert command in proc.stdout


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "tweets2stance.cli", "clean", "--help"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
