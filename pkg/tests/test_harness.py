"""Config parsing, curve aggregation, similarity diagnostic, CSV round trips, CLI."""

import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from popgrad.cem import SearchDistribution, sample_population
from popgrad.cli import main
from popgrad.harness import (CSV_HEADER, AggregateCurve, ConfigError, aggregate,
                             emit_csv, parse_config, read_csv, similarity_histogram)
from popgrad.loop import HybridConfig, RunRecord


def record(steps, value, gen=1, reuse=0.0, eps=1e-3, n_eps=1):
    return RunRecord(total_steps=steps, generation=gen,
                     episode_returns=[float(value)] * n_eps, wall_time_s=0.0,
                     reuse_fraction=reuse, epsilon=eps)


class TestParseConfig:
    def test_empty_config_gives_reference_defaults(self, tmp_path):
        path = tmp_path / "empty.cfg"
        path.write_text("")
        cfg = parse_config(path)
        assert cfg.actor_lr == 1e-3 and cfg.critic_lr == 1e-3
        assert cfg.gamma == 0.99 and cfg.tau == 5e-3
        assert cfg.pop_size == 10
        assert cfg.sigma_init == 1e-3 and cfg.sigma_end == 1e-5
        assert cfg.tau_cem == 0.95
        assert cfg.buffer_capacity == 1_000_000 and cfg.batch_size == 100

    def test_file_values_parsed(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("algo=cem_td3\npop_size=4\nhidden_sizes=8,8\n"
                        "importance_mixing=on\n# comment\nmax_steps=500\n")
        cfg = parse_config(path)
        assert cfg.algo == "cem_td3" and cfg.pop_size == 4
        assert cfg.hidden_sizes == (8, 8)
        assert cfg.importance_mixing is True
        assert cfg.max_steps == 500

    def test_odd_population_rejected(self):
        with pytest.raises(ConfigError, match="pop_size"):
            parse_config({"pop_size": 7})

    def test_out_of_range_tau_cem_rejected(self):
        with pytest.raises(ConfigError, match="tau_cem"):
            parse_config({"tau_cem": 1.5})

    def test_unknown_key_named_in_error(self):
        with pytest.raises(ConfigError, match="learning_rate_actor"):
            parse_config({"learning_rate_actor": 1e-3})

    def test_bad_number_rejected_with_key(self):
        with pytest.raises(ConfigError, match="max_steps"):
            parse_config({"max_steps": "a lot"})

    def test_malformed_line_rejected(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("algo cem\n")
        with pytest.raises(ConfigError, match="line 1"):
            parse_config(path)


class TestAggregate:
    def test_single_run_equals_itself(self):
        run = [record(5000, 1.5), record(10000, 2.5)]
        curve = aggregate([run])
        assert list(curve.steps) == [5000, 10000]
        assert np.allclose(curve.mean, [1.5, 2.5])
        assert np.allclose(curve.median, curve.mean)
        assert np.all(curve.ci68 == 0.0)
        assert curve.n_runs == 1

    def test_two_constant_runs_mean_median_ci(self):
        # values 1 and 3: mean 2, median 2, one standard error = sqrt(2)/sqrt(2) = 1
        runs = [[record(5000, 1.0), record(10000, 1.0)],
                [record(5000, 3.0), record(10000, 3.0)]]
        curve = aggregate(runs)
        assert np.allclose(curve.mean, 2.0)
        assert np.allclose(curve.median, 2.0)
        assert np.allclose(curve.ci68, 1.0)

    def test_ten_identical_runs_zero_ci(self):
        runs = [[record(5000, 4.2), record(10000, 4.2)] for _ in range(10)]
        curve = aggregate(runs)
        assert np.all(curve.ci68 == 0.0)
        assert curve.n_runs == 10

    def test_grid_never_extrapolates(self):
        runs = [[record(5000, 1.0), record(12000, 2.0)],
                [record(5000, 1.0), record(9000, 2.0)]]
        curve = aggregate(runs)
        assert curve.steps[-1] <= 9000

    def test_short_run_gets_single_checkpoint(self):
        curve = aggregate([[record(700, 1.0)]])
        assert list(curve.steps) == [700]

    def test_interpolation_between_records(self):
        run = [record(4000, 0.0), record(8000, 4.0)]
        curve = aggregate([run])
        # checkpoint at 5000 sits a quarter of the way
        assert curve.steps[0] == 5000
        assert curve.mean[0] == pytest.approx(1.0)

    def test_empty_input_rejected(self):
        with pytest.raises(ValueError):
            aggregate([])


class TestSimilarity:
    def test_identical_population_similarity_one(self):
        g = np.ones(20)
        report = similarity_histogram([g, g.copy(), g.copy()])
        assert report.average == 1.0
        assert report.counts[-1] == 3  # all pairs in the top bin

    def test_fully_distinct_population_similarity_zero(self):
        a = np.zeros(10)
        b = np.ones(10)
        report = similarity_histogram([a, b], tol=1e-8)
        assert report.average == 0.0
        assert report.counts[0] == 1

    def test_fresh_gaussian_population_nearly_zero(self):
        dist = SearchDistribution.from_mean(np.zeros(500), sigma_init=1e-3)
        genomes = sample_population(dist, 10, np.random.default_rng(0))
        report = similarity_histogram(genomes, tol=1e-8)
        assert report.average < 0.01

    def test_single_individual_rejected(self):
        with pytest.raises(ValueError):
            similarity_histogram([np.zeros(3)])

    def test_half_shared_coordinates(self):
        a = np.zeros(10)
        b = np.concatenate([np.zeros(5), np.ones(5)])
        report = similarity_histogram([a, b])
        assert report.average == 0.5


class TestCsv:
    def test_round_trip_exact(self, tmp_path):
        records = [record(5000, -1.234567890123, gen=3, reuse=0.25, eps=7.5e-4),
                   record(10000, 2.0 / 3.0, gen=4, reuse=0.5, eps=7.125e-4)]
        path = tmp_path / "run.csv"
        emit_csv(records, path)
        rows = read_csv(path)
        for rec, row in zip(records, rows):
            assert row["total_steps"] == rec.total_steps
            assert row["generation"] == rec.generation
            assert abs(row["eval_mean"] - rec.eval_mean) < 1e-12
            assert abs(row["eval_median"] - rec.eval_median) < 1e-12
            assert abs(row["ci68"] - rec.ci68) < 1e-12
            assert abs(row["reuse_fraction"] - rec.reuse_fraction) < 1e-12
            assert abs(row["epsilon"] - rec.epsilon) < 1e-12

    def test_empty_stream_header_only(self, tmp_path):
        path = tmp_path / "empty.csv"
        emit_csv([], path)
        text = path.read_text()
        assert text == CSV_HEADER + "\n"

    def test_three_checkpoints_four_lines(self, tmp_path):
        path = tmp_path / "three.csv"
        emit_csv([record(5000, 1.0), record(10000, 2.0), record(15000, 3.0)], path)
        text = path.read_text()
        assert text.endswith("\n")
        assert len(text.splitlines()) == 4

    def test_curve_emission(self, tmp_path):
        curve = aggregate([[record(5000, 1.0), record(10000, 3.0)]])
        path = tmp_path / "curve.csv"
        emit_csv(curve, path)
        rows = read_csv(path)
        assert len(rows) == 2
        assert rows[1]["eval_mean"] == 3.0


class TestCli:
    def _run(self, tmp_path, name, extra=()):
        out = tmp_path / name
        args = ["--algo", "cem", "--env", "pointmass", "--seed", "3",
                "--max-steps", "900", "--runs", "2", "--pop-size", "4",
                "--hidden-sizes", "8,8", "--out", str(out), *extra]
        assert main(args) == 0
        return out

    def test_seeded_rerun_is_byte_identical(self, tmp_path):
        a = self._run(tmp_path, "a")
        b = self._run(tmp_path, "b")
        for name in ("run_000.csv", "run_001.csv", "aggregate.csv"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_outputs_exist_and_parse(self, tmp_path):
        out = self._run(tmp_path, "o")
        rows = read_csv(out / "aggregate.csv")
        assert len(rows) >= 1

    def test_config_file_plus_flag_override(self, tmp_path):
        cfg = tmp_path / "base.cfg"
        cfg.write_text("pop_size=4\nhidden_sizes=8,8\nmax_steps=400\nenv=pointmass\n")
        out = tmp_path / "cfgout"
        code = main(["--config", str(cfg), "--algo", "cem", "--seed", "1",
                     "--out", str(out)])
        assert code == 0
        assert (out / "run_000.csv").exists()

    def test_bad_config_nonzero_exit(self, tmp_path, capsys):
        code = main(["--algo", "cem", "--pop-size", "7", "--max-steps", "100",
                     "--out", str(tmp_path / "x")])
        assert code != 0
        assert "pop_size" in capsys.readouterr().err

    def test_blackbox_run(self, tmp_path):
        out = tmp_path / "bb"
        code = main(["--algo", "cem", "--env", "sphere", "--seed", "0",
                     "--max-steps", "200", "--out", str(out)])
        assert code == 0
        rows = read_csv(out / "run_000.csv")
        assert rows[-1]["total_steps"] == 200

    def test_flag_mapping_reaches_config(self, tmp_path, monkeypatch):
        captured = {}

        def fake_run(config, seed):
            captured["config"] = config
            captured.setdefault("seeds", []).append(seed)
            return [record(100, 1.0)]

        import popgrad.cli as cli
        monkeypatch.setattr(cli, "run_experiment", fake_run)
        code = main(["--algo", "multi-td3", "--env", "pendulum", "--seed", "9",
                     "--max-steps", "777", "--importance-mixing", "on",
                     "--action-noise", "0.25", "--actor-nonlinearity", "relu",
                     "--budget-mode", "pseudocode", "--out", str(tmp_path / "m")])
        assert code == 0
        cfg = captured["config"]
        assert cfg.algo == "multi_actor_td3" and cfg.env == "pendulum"
        assert cfg.max_steps == 777
        assert cfg.importance_mixing is True
        assert cfg.action_noise_std == 0.25
        assert cfg.actor_nonlinearity == "relu"
        assert cfg.gradient_budget_mode == "per_pseudocode"
        assert captured["seeds"] == [9]

    def test_console_entry_point(self, tmp_path):
        out = tmp_path / "subproc"
        proc = subprocess.run(
            [sys.executable, "-m", "popgrad.cli", "--algo", "cem", "--env",
             "pointmass", "--seed", "0", "--max-steps", "400", "--pop-size", "4",
             "--hidden-sizes", "8,8", "--out", str(out)],
            capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        assert (out / "aggregate.csv").exists()
