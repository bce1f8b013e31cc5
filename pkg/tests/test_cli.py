import json

import pytest
from click.testing import CliRunner

from qkdsec.cli.main import cli
from qkdsec.core.config import settings
from qkdsec.core.exceptions import InvalidInputError
from qkdsec.schemas.requests import parse_sweep


@pytest.fixture
def runner():
    return CliRunner()


class TestRate:
    def test_single_point_json(self, runner):
        result = runner.invoke(cli, ["rate", "--protocol", "bb84", "--qber", "0.05", "--conditioned"])
        assert result.exit_code == 0, result.output
        payload = json.loads(result.stdout)
        assert payload["rate"] == pytest.approx(0.4272, abs=1e-4)
        assert payload["conditioned"] is True

    def test_sweep_returns_list(self, runner):
        result = runner.invoke(cli, ["rate", "--protocol", "six-state", "--qber", "0:0.1:0.05"])
        assert result.exit_code == 0, result.output
        assert [p["noise"] for p in json.loads(result.stdout)] == [0.0, 0.05, 0.1]

    def test_needs_exactly_one_noise(self, runner):
        result = runner.invoke(cli, ["rate", "--protocol", "bb84", "--qber", "0.05", "--depol", "0.05"])
        assert result.exit_code == 2
        assert runner.invoke(cli, ["rate", "--protocol", "bb84"]).exit_code == 2

    def test_csv_output(self, runner):
        result = runner.invoke(cli, ["--format", "csv", "rate", "--protocol", "bb84", "--qber", "0.01,0.02"])
        assert result.exit_code == 0, result.output
        lines = result.stdout.strip().splitlines()
        assert lines[0].startswith("protocol,noise,noise_kind")
        assert len(lines) == 3

    def test_out_file(self, runner, tmp_path):
        target = tmp_path / "rate.json"
        result = runner.invoke(cli, ["--out", str(target), "rate", "--protocol", "bb84", "--qber", "0.05"])
        assert result.exit_code == 0, result.output
        assert result.stdout == ""
        assert json.loads(target.read_text())["protocol"] == "bb84"


class TestThreshold:
    def test_csv_output(self, runner):
        result = runner.invoke(cli, ["--format", "csv", "threshold", "--protocol", "bb84", "--conditioned"])
        assert result.exit_code == 0, result.output
        header, row = result.stdout.strip().splitlines()
        assert "threshold" in header.split(",")
        assert "0.11" in row


class TestEntropy:
    def test_inline_distribution(self, runner):
        result = runner.invoke(cli, ["entropy", "--dist", "0.5,0.5", "--alpha", "inf"])
        assert result.exit_code == 0, result.output
        payload = json.loads(result.stdout)
        assert payload["alpha"] == "inf"
        assert payload["value"] == pytest.approx(1.0)

    def test_bell_state(self, runner):
        result = runner.invoke(cli, ["entropy", "--lambdas", "1,0,0,0"])
        assert result.exit_code == 0, result.output
        assert json.loads(result.stdout)["value"] == pytest.approx(0.0, abs=1e-9)

    def test_json_input(self, runner, tmp_path):
        source = tmp_path / "dist.json"
        source.write_text(json.dumps({"alphabet": ["a", "b", "c", "d"], "probs": [0.25, 0.25, 0.25, 0.25]}))
        result = runner.invoke(cli, ["entropy", "--input", str(source), "--alpha", "0"])
        assert result.exit_code == 0, result.output
        assert json.loads(result.stdout)["value"] == pytest.approx(2.0)

    def test_conflicting_sources(self, runner):
        result = runner.invoke(cli, ["entropy", "--dist", "1", "--lambdas", "1,0,0,0"])
        assert result.exit_code == 2


class TestSimulate:
    def test_transcript_json(self, runner):
        result = runner.invoke(cli, ["--seed", "7", "simulate", "--n", "256", "--lambdas", "1,0,0,0"])
        assert result.exit_code == 0, result.output
        payload = json.loads(result.stdout)
        assert payload["schema"] == 1
        assert payload["config"]["seed"] == 7

    def test_summary_table(self, runner):
        result = runner.invoke(cli, ["--format", "table", "simulate", "--n", "64", "--depol", "0.02"])
        assert result.exit_code == 0, result.output
        assert "n_prime" in result.stdout

    def test_seed_makes_output_reproducible(self, runner):
        args = ["--seed", "0x2a", "simulate", "--n", "128", "--lambdas", "0.94,0.02,0.02,0.02"]
        assert runner.invoke(cli, args).stdout == runner.invoke(cli, args).stdout

    def test_bad_seed(self, runner):
        result = runner.invoke(cli, ["--seed", "-3", "simulate", "--n", "64", "--depol", "0.02"])
        assert result.exit_code == 2

    def test_attack_required(self, runner):
        assert runner.invoke(cli, ["simulate", "--n", "64"]).exit_code == 2

    def test_options_after_subcommand(self, runner):
        args = ["simulate", "--protocol", "bb84", "--lambdas", "1,0,0,0", "--n", "256", "--seed", "7"]
        result = runner.invoke(cli, args)
        assert result.exit_code == 0, result.output
        payload = json.loads(result.stdout)
        assert payload["config"]["seed"] == 7
        assert not payload["aborted"]
        assert payload["pa"]["s_prime"] > 0
        assert payload["key_alice"] == payload["key_bob"]

    def test_high_qber_abort_exits_cleanly(self, runner):
        args = ["simulate", "--protocol", "bb84", "--lambdas", "0.7,0.1,0.1,0.1", "--n", "1024", "--seed", "7"]
        result = runner.invoke(cli, args)
        assert result.exit_code == 0, result.output
        payload = json.loads(result.stdout)
        assert payload["aborted"]
        assert payload["abort_reason"] == "no extractable key"

    def test_subcommand_seed_wins(self, runner, monkeypatch):
        monkeypatch.setattr(settings, "DEFAULT_SEED", "11")
        base = ["simulate", "--n", "64", "--depol", "0.02"]

        def seed_of(args):
            result = runner.invoke(cli, args)
            assert result.exit_code == 0, result.output
            return json.loads(result.stdout)["config"]["seed"]

        assert seed_of(base) == 11
        assert seed_of(["--seed", "5"] + base) == 5
        assert seed_of(["--seed", "5"] + base + ["--seed", "0x7"]) == 7

    def test_subcommand_format_and_out(self, runner, tmp_path):
        target = tmp_path / "summary.csv"
        args = ["--format", "json", "simulate", "--n", "64", "--depol", "0.02", "--format", "csv", "--out",
                str(target)]
        result = runner.invoke(cli, args)
        assert result.exit_code == 0, result.output
        assert result.stdout == ""
        assert target.read_text().startswith("protocol,")

    def test_bad_subcommand_seed(self, runner):
        result = runner.invoke(cli, ["simulate", "--n", "64", "--depol", "0.02", "--seed", "-3"])
        assert result.exit_code == 2


class TestVerify:
    def test_hashing_suite(self, runner):
        result = runner.invoke(cli, ["verify", "--suite", "hashing", "--trials", "0"])
        assert result.exit_code == 0, result.output
        reports = json.loads(result.stdout)
        assert all(r["satisfied"] for r in reports)

    @pytest.mark.slow
    def test_pa_suite_with_subcommand_seed(self, runner):
        result = runner.invoke(cli, ["verify", "--suite", "pa", "--seed", "3"])
        assert result.exit_code == 0, result.output
        reports = json.loads(result.stdout)
        assert reports and all(r["satisfied"] is not False for r in reports)


class TestSweepParsing:
    def test_range_includes_stop(self):
        assert parse_sweep("0.1:0.3:0.1") == [0.1, 0.2, 0.3]

    def test_comma_list(self):
        assert parse_sweep("0.01, 0.02") == [0.01, 0.02]

    def test_rejects_garbage(self):
        with pytest.raises(InvalidInputError):
            parse_sweep("a:b:c")
        with pytest.raises(InvalidInputError):
            parse_sweep("0.3:0.1:0.1")
