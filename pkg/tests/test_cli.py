import json
import os

import numpy as np
import pytest

from handpass.cli import main
from handpass.dataset import read_csv


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def config_line(stdout):
    first = stdout.splitlines()[0]
    assert first.startswith("config: ")
    return json.loads(first[len("config: "):])


@pytest.fixture(scope="module")
def clean_corpus(tmp_path_factory):
    """Noise-free 3-user corpus, 25 frames per capture at 20 pkt/s."""
    root = str(tmp_path_factory.mktemp("cli-corpus"))
    code = main([
        "synth", "--out", root, "--users", "3", "--captures", "1",
        "--frames", "25", "--rate", "20", "--noise", "0",
        "--ramp", "0", "--offset-range", "0", "--gain-jitter", "0",
        "--seed", "21",
    ])
    assert code == 0
    return root


@pytest.fixture(scope="module")
def d1_csv(clean_corpus, tmp_path_factory):
    out = str(tmp_path_factory.mktemp("cli-data") / "D1.csv")
    code = main([
        "dataset", "--in", clean_corpus, "--slice", "D1", "--out", out,
    ])
    assert code == 0
    return out


class TestPlumbing:
    def test_config_line_is_json(self, capsys, tmp_path):
        code, out, _ = run(
            capsys, "synth", "--out", str(tmp_path / "c"), "--users", "2",
            "--captures", "1", "--frames", "3", "--rate", "4", "--seed", "5",
        )
        assert code == 0
        cfg = config_line(out)
        assert cfg["users"] == 2 and cfg["seed"] == 5
        assert cfg["command"] == "synth"

    def test_seed_from_environment(self, capsys, tmp_path, monkeypatch):
        monkeypatch.setenv("HANDPASS_SEED", "77")
        code, out, _ = run(
            capsys, "synth", "--out", str(tmp_path / "c"), "--users", "2",
            "--captures", "1", "--frames", "3", "--rate", "4",
        )
        assert code == 0
        assert config_line(out)["seed"] == 77

    def test_unknown_model_exits_2(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["crossval", "--data", "whatever.csv", "--model", "xgboost"])
        assert exc.value.code == 2

    def test_missing_command_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 2

    def test_missing_input_dir_fails_politely(self, capsys, tmp_path):
        code, _, err = run(
            capsys, "dataset", "--in", str(tmp_path / "nope"),
            "--slice", "D1", "--out", str(tmp_path / "x.csv"),
        )
        assert code == 1
        assert "error:" in err

    def test_auth_without_store_fails(self, capsys, tmp_path, monkeypatch):
        monkeypatch.delenv("HANDPASS_STORE", raising=False)
        code, _, err = run(
            capsys, "auth", "--capture", str(tmp_path / "x.pcap"),
        )
        assert code == 1
        assert "HANDPASS_STORE" in err


class TestDataset:
    def test_d1_shape_and_labels(self, d1_csv):
        m = read_csv(d1_csv)
        assert m.n_columns == 472
        assert m.n_rows == 3 * 20  # ceil(1 s x 20 pkt/s) rows per user
        assert sorted(set(m.user_id.tolist())) == [1, 2, 3]

    def test_d6_needs_five_captures(self, tmp_path, capsys):
        root = str(tmp_path / "five")
        main([
            "synth", "--out", root, "--users", "2", "--captures", "5",
            "--frames", "20", "--rate", "4", "--noise", "0.2", "--seed", "31",
        ])
        out = str(tmp_path / "D6.csv")
        code, stdout, _ = run(
            capsys, "dataset", "--in", root, "--slice", "D6", "--out", out,
        )
        assert code == 0
        m = read_csv(out)
        assert m.n_rows == 2 * 5 * 20  # every capture contributes 5 s x 4 pkt/s
        assert m.n_columns == 472
        assert "D6" in stdout

    def test_insufficient_captures_fail(self, clean_corpus, capsys, tmp_path):
        code, _, err = run(
            capsys, "dataset", "--in", clean_corpus, "--slice", "D2",
            "--out", str(tmp_path / "x.csv"),
        )
        assert code == 1  # corpus has one capture per user, D2 needs three
        assert "error:" in err

    def test_no_prune_gives_full_width(self, clean_corpus, tmp_path, capsys):
        out = str(tmp_path / "full.csv")
        code, _, _ = run(
            capsys, "dataset", "--in", clean_corpus, "--slice", "D1",
            "--out", out, "--no-prune",
        )
        assert code == 0
        assert read_csv(out).n_columns == 516

    def test_scaler_bounds_features(self, clean_corpus, tmp_path, capsys):
        out = str(tmp_path / "scaled.csv")
        code, _, _ = run(
            capsys, "dataset", "--in", clean_corpus, "--slice", "D1",
            "--out", out, "--scaler", "minmax",
        )
        assert code == 0
        feats = read_csv(out).features
        assert feats.min() >= 0.0 and feats.max() <= 1.0


class TestCrossval:
    def test_noise_free_model_is_perfect(self, d1_csv, capsys):
        code, out, _ = run(
            capsys, "crossval", "--data", d1_csv, "--model", "rf",
            "--trees", "10", "--k", "3", "--seed", "1",
        )
        assert code == 0
        assert "RandomForest" in out
        assert "1.0000" in out

    def test_all_models_with_report(self, d1_csv, tmp_path, capsys):
        report = str(tmp_path / "folds.csv")
        code, out, _ = run(
            capsys, "crossval", "--data", d1_csv, "--model", "all",
            "--trees", "5", "--k", "3", "--report", report, "--seed", "1",
        )
        assert code == 0
        for name in ("RandomForest", "DecisionTree", "KNN", "GaussianNB", "LinearSVM"):
            assert name in out
        lines = open(report).read().splitlines()
        assert lines[0] == "slice,model,fold,accuracy,f1"
        assert len(lines) == 1 + 5 * 3  # five models x three folds
        assert all(line.startswith("D1,") for line in lines[1:])

    def test_table_layout(self, d1_csv, capsys):
        code, out, _ = run(
            capsys, "crossval", "--data", d1_csv, "--model", "nb", "--k", "3",
        )
        assert code == 0
        lines = out.splitlines()
        header = next(l for l in lines if l.startswith("Model"))
        assert header.split() == ["Model", "Accuracy", "Precision", "Recall", "F1-Score"]


class TestSelect:
    def test_prints_ranked_subcarriers(self, d1_csv, capsys, tmp_path):
        report = str(tmp_path / "imp.csv")
        code, out, _ = run(
            capsys, "select", "--data", d1_csv, "--top", "5",
            "--model", "dt", "--report", report, "--seed", "1",
        )
        assert code == 0
        assert "top 5 subcarriers" in out
        ks = [int(tok) for tok in out.splitlines()[-2].split()]
        assert len(ks) == 5
        assert all(-128 <= k <= 127 for k in ks)
        lines = open(report).read().splitlines()
        assert lines[0] == "subcarrier,importance"
        assert len(lines) == 1 + 234


@pytest.fixture(scope="module")
def enroll_env(tmp_path_factory):
    """Corpus long enough for a 5 s enrollment slice (100+ frames)."""
    root = tmp_path_factory.mktemp("enroll")
    corpus = str(root / "corpus")
    main([
        "synth", "--out", corpus, "--users", "3", "--captures", "1",
        "--frames", "110", "--rate", "20", "--noise", "0.3", "--seed", "41",
    ])
    csv = str(root / "D4.csv")
    assert main(["dataset", "--in", corpus, "--slice", "D4", "--out", csv]) == 0
    return corpus, csv, str(root / "store.json")


class TestEnrollAuth:
    def test_enroll_then_auth_via_env(self, enroll_env, capsys, monkeypatch, tmp_path):
        corpus, csv, store = enroll_env
        monkeypatch.setenv("HANDPASS_STORE", store)
        code, out, _ = run(
            capsys, "enroll", "--data", csv, "--rate", "20",
            "--trees", "15", "--seed", "2",
        )
        assert code == 0
        assert "enrolled 3 users" in out
        assert os.path.exists(store)

        probe = os.path.join(corpus, "user_02", "Right", "capture_1.pcap")
        audit = str(tmp_path / "audit.jsonl")
        code, out, _ = run(capsys, "auth", "--capture", probe, "--log", audit)
        assert code == 0
        row = next(l for l in out.splitlines() if l.startswith("Grant"))
        assert row.split()[:2] == ["Grant", "2"]
        assert len(open(audit).read().splitlines()) == 1

    def test_auth_threshold_override_denies(self, enroll_env, capsys, monkeypatch):
        corpus, csv, store = enroll_env
        monkeypatch.setenv("HANDPASS_STORE", store)
        if not os.path.exists(store):
            assert main(["enroll", "--data", csv, "--rate", "20",
                         "--trees", "15", "--seed", "2"]) == 0
            capsys.readouterr()
        probe = os.path.join(corpus, "user_02", "Right", "capture_1.pcap")
        code, out, _ = run(
            capsys, "auth", "--capture", probe, "--threshold", "1.1",
        )
        assert code == 0
        assert "Deny" in out
        assert "below threshold" in out

    def test_enroll_on_short_slice_fails(self, clean_corpus, tmp_path, capsys):
        csv = str(tmp_path / "D1.csv")
        assert main(["dataset", "--in", clean_corpus, "--slice", "D1",
                     "--out", csv]) == 0
        capsys.readouterr()
        code, _, err = run(
            capsys, "enroll", "--data", csv, "--store",
            str(tmp_path / "s.json"), "--rate", "20",
        )
        assert code == 1  # 20 rows per user is under the enrollment minimum
        assert "error:" in err
