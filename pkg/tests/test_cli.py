import json

import pytest

from irrigation.cli import EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, main
from irrigation.mlp import TrainedModel


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestUsageErrors:
    def test_no_command(self, capsys):
        code, _, _ = run(capsys, *[])
        assert code == EXIT_USAGE

    def test_unknown_command(self, capsys):
        code, _, _ = run(capsys, "irrigate-the-moon")
        assert code == EXIT_USAGE

    def test_train_rejects_degenerate_grid(self, capsys, tmp_path):
        code, _, err = run(
            capsys, "train", "--grid", "1", "--out", str(tmp_path / "w.json")
        )
        assert code == EXIT_USAGE
        assert "grid" in err

    def test_simulate_rejects_zero_duration(self, capsys, tmp_path):
        code, _, _ = run(
            capsys, "simulate", "--duration", "0", "--out", str(tmp_path / "e.ndjson")
        )
        assert code == EXIT_USAGE

    def test_simulate_auto_requires_weights(self, capsys, tmp_path):
        code, _, err = run(
            capsys, "simulate", "--mode", "auto", "--out", str(tmp_path / "e.ndjson")
        )
        assert code == EXIT_USAGE
        assert "weights" in err

    def test_help_exits_cleanly(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--help"])
        assert exc.value.code == 0


class TestTrain:
    def test_writes_loadable_weights(self, capsys, tmp_path):
        out = tmp_path / "w.json"
        code, stdout, _ = run(
            capsys,
            "train", "--grid", "5", "--epochs", "50", "--seed", "3",
            "--out", str(out), "--json",
        )
        assert code == EXIT_OK
        report = json.loads(stdout)
        assert report["rows"] == 125
        assert 0.0 <= report["oracle_agreement"] <= 1.0
        model = TrainedModel.load(out)
        assert model.seed == 3

    def test_same_seed_identical_weight_files(self, capsys, tmp_path):
        outs = []
        for name in ("a.json", "b.json"):
            out = tmp_path / name
            code, _, _ = run(
                capsys,
                "train", "--grid", "5", "--epochs", "30", "--seed", "9",
                "--out", str(out),
            )
            assert code == EXIT_OK
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]


class TestSimulate:
    def test_fixed_seed_identical_logs(self, capsys, tmp_path):
        logs = []
        for name in ("a.ndjson", "b.ndjson"):
            out = tmp_path / name
            code, stdout, _ = run(
                capsys,
                "simulate", "--duration", "120", "--seed", "5",
                "--out", str(out), "--json",
            )
            assert code == EXIT_OK
            assert json.loads(stdout)["events"] > 0
            logs.append(out.read_bytes())
        assert logs[0] == logs[1]

    def test_auto_mode_with_trained_weights(self, capsys, tmp_path):
        weights = tmp_path / "w.json"
        run(capsys, "train", "--grid", "5", "--epochs", "50", "--out", str(weights))
        out = tmp_path / "auto.ndjson"
        code, stdout, _ = run(
            capsys,
            "simulate", "--mode", "auto", "--weights", str(weights),
            "--duration", "60", "--out", str(out), "--json",
        )
        assert code == EXIT_OK
        assert out.exists()

    def test_missing_weights_file_is_runtime_error(self, capsys, tmp_path):
        code, _, _ = run(
            capsys,
            "simulate", "--mode", "auto", "--weights", str(tmp_path / "nope.json"),
            "--out", str(tmp_path / "e.ndjson"),
        )
        assert code == EXIT_RUNTIME


class TestOracleTable:
    def test_json_table(self, capsys):
        code, stdout, _ = run(capsys, "oracle-table", "--json")
        assert code == EXIT_OK
        rows = json.loads(stdout)
        assert len(rows) == 27
        duties = [row["duty"] for row in rows]
        assert duties.count("full") == 1
        assert duties.count("half") == 2
        assert duties.count("off") == 24

    def test_text_table_lists_counts(self, capsys):
        code, stdout, _ = run(capsys, "oracle-table")
        assert code == EXIT_OK
        assert "full: 1, half: 2, off: 24" in stdout

    def test_stable_ordering(self, capsys):
        outputs = {run(capsys, "oracle-table", "--json")[1] for _ in range(3)}
        assert len(outputs) == 1


class TestThinClients:
    def test_status_against_dead_server_is_runtime_error(self, capsys):
        code, _, _ = run(capsys, "status", "--url", "http://127.0.0.1:1")
        assert code == EXIT_RUNTIME

    def test_override_requires_duty(self, capsys):
        code, _, _ = run(capsys, "override")
        assert code == EXIT_USAGE
