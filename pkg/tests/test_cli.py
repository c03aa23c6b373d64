import csv
import json
import shutil
from pathlib import Path

import pytest

from musictrunc import cli
from musictrunc.corpus import load_scores
from musictrunc.corpus.io import load_token_sequences

FIXTURES = Path(__file__).parent / "fixtures"


def write_config(path: Path, **overrides) -> Path:
    cfg = {
        "corpus": {"toy": {"n_tunes": 60, "seed": 1}},
        "split_seed": 0,
        "model": {"order": 3, "alpha": 0.01},
        "degradations": [{"mode": "none"}],
        "strategies": ["conventional"],
        "taus": [0.6, 1.0],
        "samples_per_cell": 3,
        "seed": 5,
        "max_lag": 6,
        "output_dir": str(path.parent / "out"),
    }
    cfg.update(overrides)
    path.write_text(json.dumps(cfg))
    return path


def read_rows(path: Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestIngest:
    def test_all_good(self, tmp_path, capsys):
        out = tmp_path / "s.jsonl"
        assert cli.main(["ingest", str(FIXTURES / "golden.abc"), "--format", "abc", "-o", str(out)]) == 0
        assert len(load_scores(out)) == 4
        assert "4 ok, 0 failed" in capsys.readouterr().err

    def test_bad_tune_reported_and_skipped(self, tmp_path, capsys):
        out = tmp_path / "s.jsonl"
        assert cli.main(["ingest", str(FIXTURES / "mixed.abc"), "--format", "abc", "-o", str(out)]) == 0
        assert [s.name for s in load_scores(out)] == ["First", "Third"]
        err = capsys.readouterr().err
        assert "2 ok, 1 failed" in err
        assert "chord" in err and "line 8" in err

    def test_empty_input_fails(self, tmp_path, capsys):
        empty = tmp_path / "empty.abc"
        empty.write_text("")
        assert cli.main(["ingest", str(empty), "--format", "abc", "-o", str(tmp_path / "s.jsonl")]) != 0
        assert "[ingest]" in capsys.readouterr().err
        assert not (tmp_path / "s.jsonl").exists()

    def test_jsonl_per_line_errors(self, tmp_path, capsys):
        src = tmp_path / "in.jsonl"
        good = (FIXTURES / "golden.jsonl").read_text().splitlines()[0]
        src.write_text(good + "\n{broken\n" + good + "\n")
        assert cli.main(["ingest", str(src), "--format", "jsonl", "-o", str(tmp_path / "s.jsonl")]) == 0
        assert "2 ok, 1 failed" in capsys.readouterr().err

    def test_missing_file(self, tmp_path, capsys):
        assert cli.main(["ingest", str(tmp_path / "nope.abc"), "--format", "abc", "-o", str(tmp_path / "o")]) == 1
        assert "[ingest]" in capsys.readouterr().err


class TestRun:
    def test_single_cell(self, tmp_path):
        cfg = write_config(tmp_path / "c.json", samples_per_cell=1)
        assert cli.main(["run", "--config", str(cfg)]) == 0
        rows = read_rows(tmp_path / "out" / "results.csv")
        assert len(rows) == 1
        assert rows[0]["strategy"] == "conventional" and rows[0]["tau"] == "" and rows[0]["n"] == "1"
        status = json.loads((tmp_path / "out" / "status.json").read_text())
        assert status["status"] == "complete"
        detail = json.loads((tmp_path / "out" / "cells" / "000.json").read_text())
        assert detail["status"] == "complete" and len(detail["report"]["lag_profile"]) == 6

    def test_byte_identical(self, tmp_path):
        cfg = write_config(tmp_path / "c.json", strategies=["conventional", "nucleus", "typical"])
        assert cli.main(["run", "--config", str(cfg), "--output-dir", str(tmp_path / "a")]) == 0
        assert cli.main(["run", "--config", str(cfg), "--output-dir", str(tmp_path / "b")]) == 0
        assert (tmp_path / "a" / "results.csv").read_bytes() == (tmp_path / "b" / "results.csv").read_bytes()

    def test_three_by_three_grid(self, tmp_path):
        cfg = write_config(
            tmp_path / "c.json",
            degradations=[{"mode": "none"}, {"mode": "noise", "k": 0.175, "seed": 7}, {"mode": "temperature", "r": 1.5}],
            strategies=["conventional", "nucleus", "typical"],
            taus=[0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0],
            samples_per_cell=1,
        )
        assert cli.main(["run", "--config", str(cfg)]) == 0
        rows = read_rows(tmp_path / "out" / "results.csv")
        assert len(rows) == 3 * (1 + 7 + 7)
        assert [r["degradation"] for r in rows[::15]] == ["none", "noise:k=0.175:seed=7", "temperature:r=1.5"]
        assert [r["tau"] for r in rows[1:8]] == ["0.4", "0.5", "0.6", "0.7", "0.8", "0.9", "1.0"]
        assert list(rows[0]) == list(cli.csv_rows([]).strip().split(","))

    def test_adding_cells_keeps_others(self, tmp_path):
        small = write_config(tmp_path / "s.json", strategies=["nucleus"], taus=[0.6])
        large = write_config(tmp_path / "l.json", strategies=["conventional", "nucleus", "topk:4"], taus=[0.6, 0.9])
        cli.main(["run", "--config", str(small), "--output-dir", str(tmp_path / "s")])
        cli.main(["run", "--config", str(large), "--output-dir", str(tmp_path / "l")])
        (one,) = read_rows(tmp_path / "s" / "results.csv")
        rows = read_rows(tmp_path / "l" / "results.csv")
        assert one in rows
        assert [r["strategy"] for r in rows] == ["conventional", "nucleus", "nucleus", "topk:4"]

    def test_flags_override_config(self, tmp_path):
        cfg = write_config(tmp_path / "c.json")
        assert cli.main(["run", "--config", str(cfg), "--samples", "2", "--seed", "11",
                         "--output-dir", str(tmp_path / "o")]) == 0
        saved = json.loads((tmp_path / "o" / "config.json").read_text())
        assert saved["samples_per_cell"] == 2 and saved["seed"] == 11

    def test_bad_config(self, tmp_path, capsys):
        cfg = write_config(tmp_path / "c.json", samples_per_cell=0)
        assert cli.main(["run", "--config", str(cfg)]) == 1
        assert "[config]" in capsys.readouterr().err
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"colour": "blue"}))
        assert cli.main(["run", "--config", str(bad)]) == 1
        assert "unknown config keys" in capsys.readouterr().err

    def test_stage_failure_marks_incomplete(self, tmp_path, capsys, monkeypatch):
        cfg = write_config(tmp_path / "c.json", strategies=["conventional", "nucleus"], taus=[0.5])
        real = cli.evaluate_sample_set
        calls = []

        def flaky(*args, **kwargs):
            calls.append(1)
            if len(calls) == 2:
                raise ValueError("boom")
            return real(*args, **kwargs)

        monkeypatch.setattr(cli, "evaluate_sample_set", flaky)
        assert cli.main(["run", "--config", str(cfg)]) == 1
        assert "[evaluate]" in capsys.readouterr().err
        out = tmp_path / "out"
        assert not (out / "results.csv").exists()
        assert len(read_rows(out / "results.csv.partial")) == 1
        status = json.loads((out / "status.json").read_text())
        assert status["status"] == "incomplete" and status["failed_stage"] == "evaluate"

    def test_corpus_error_is_stage_tagged(self, tmp_path, capsys):
        cfg = write_config(tmp_path / "c.json", corpus=[str(tmp_path / "missing.jsonl")])
        assert cli.main(["run", "--config", str(cfg)]) == 1
        assert "[ingest]" in capsys.readouterr().err


class TestStepwise:
    def test_pipeline(self, tmp_path, capsys):
        d = tmp_path
        assert cli.main(["toy", "-n", "60", "--seed", "2", "-o", str(d / "toy.jsonl")]) == 0
        assert cli.main(["split", str(d / "toy.jsonl"), "--seed", "0", "-o", str(d / "split")]) == 0
        assert cli.main(["train", str(d / "split" / "train.jsonl"), "--order", "3",
                         "--vocab-from", str(d / "toy.jsonl"), "--validation", str(d / "split" / "validation.jsonl"),
                         "-o", str(d / "model.json")]) == 0
        assert "validation nll" in capsys.readouterr().err
        assert cli.main(["degrade", str(d / "model.json"), "--temperature", "1.5", "-o", str(d / "temp.json")]) == 0
        assert cli.main(["sample", str(d / "temp.json"), "--strategy", "typical:0.8", "-n", "4", "--seed", "3",
                         "--train", str(d / "split" / "train.jsonl"), "-o", str(d / "samples.jsonl")]) == 0
        assert len(load_token_sequences(d / "samples.jsonl")) == 4
        assert cli.main(["evaluate", "--oracle", str(d / "model.json"), "--samples", str(d / "samples.jsonl"),
                         "--reference", str(d / "split" / "test.jsonl"), "--max-lag", "4", "-o", str(d / "r.json")]) == 0
        report = json.loads((d / "r.json").read_text())
        assert report["n_samples"] == 4 and len(report["lag_profile"]) == 4

        cfg = write_config(d / "c.json", strategies=["nucleus"], taus=[0.5, 0.9], output_dir=str(d / "sweep"))
        assert cli.main(["sweep", "--config", str(cfg), "--model", str(d / "model.json"),
                         "--reference", str(d / "split" / "test.jsonl"), "--max-len", "40"]) == 0
        assert len(read_rows(d / "sweep" / "results.csv")) == 2

    def test_degraded_model_survives_a_move(self, tmp_path):
        d = tmp_path / "a"
        d.mkdir()
        cli.main(["toy", "-n", "30", "--seed", "2", "-o", str(d / "toy.jsonl")])
        cli.main(["train", str(d / "toy.jsonl"), "-o", str(d / "model.json")])
        cli.main(["degrade", str(d / "model.json"), "--noise", "0.2", "--seed", "4", "-o", str(d / "noisy.json")])
        shutil.move(str(d), str(tmp_path / "b"))
        assert cli.main(["sample", str(tmp_path / "b" / "noisy.json"), "-n", "2", "--seed", "1", "--max-len", "20",
                         "-o", str(tmp_path / "b" / "s.jsonl")]) == 0

    def test_sample_needs_length(self, tmp_path, capsys):
        cli.main(["toy", "-n", "20", "--seed", "2", "-o", str(tmp_path / "toy.jsonl")])
        cli.main(["train", str(tmp_path / "toy.jsonl"), "-o", str(tmp_path / "m.json")])
        assert cli.main(["sample", str(tmp_path / "m.json"), "--seed", "1", "-o", str(tmp_path / "s.jsonl")]) == 1
        assert "[sample]" in capsys.readouterr().err

    def test_split_too_small(self, tmp_path, capsys):
        cli.main(["toy", "-n", "5", "--seed", "2", "-o", str(tmp_path / "toy.jsonl")])
        assert cli.main(["split", str(tmp_path / "toy.jsonl"), "--seed", "0", "-o", str(tmp_path / "s")]) == 1
        assert "[split]" in capsys.readouterr().err
