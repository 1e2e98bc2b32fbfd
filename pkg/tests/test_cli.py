"""End-to-end tests of the command line harness, driven in process."""

import csv
import json

import pytest

import ccmdp.cli as cli
from ccmdp import CounterexampleVerdict, Mdp, PullPolicy, PushPolicy
from ccmdp.cli import RESULT_COLUMNS, main

TINY = {
    "num_states": 4,
    "num_densities": 2,
    "betas": [0.0, 0.5],
    "t_max": 6,
    "gamma": 0.9,
    "seed": 0,
}


def write_config(tmp_path, **overrides):
    merged = {**TINY, **overrides}
    path = tmp_path / "config.json"
    path.write_text(json.dumps(merged))
    return str(path)


def read_rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def tiny_suite(tmp_path):
    config = write_config(tmp_path)
    suite = tmp_path / "suite"
    assert main(["generate", "--out", str(suite), "--config", config]) == 0
    return config, suite


class TestGenerate:
    def test_writes_manifest_and_loadable_instances(self, tmp_path):
        _, suite = tiny_suite(tmp_path)
        manifest = json.loads((suite / "manifest.json").read_text())
        assert manifest["seed"] == 0
        assert manifest["num_states"] == 4
        # one instance per (density, reward style) pair
        assert len(manifest["instances"]) == 2 * 2
        for entry in manifest["instances"]:
            m = Mdp.from_json_dict(json.loads((suite / entry["file"]).read_text()))
            assert m.transitions.shape[1] == 4
            assert m.gamma == pytest.approx(0.9)
            density = (m.transitions > 0).mean()
            assert entry["density"] == pytest.approx(density)

    def test_seeded_determinism(self, tmp_path):
        config = write_config(tmp_path)
        for out in ["a", "b"]:
            assert main(["generate", "--out", str(tmp_path / out), "--config", config]) == 0
        assert main(
            ["generate", "--out", str(tmp_path / "c"), "--config", config, "--seed", "5"]
        ) == 0
        names = [p.name for p in sorted((tmp_path / "a").iterdir())]
        for name in names:
            a = (tmp_path / "a" / name).read_bytes()
            assert a == (tmp_path / "b" / name).read_bytes()
        reseeded = json.loads((tmp_path / "c" / "manifest.json").read_text())
        assert reseeded["seed"] == 5
        instance_file = reseeded["instances"][0]["file"]
        assert (tmp_path / "c" / instance_file).read_bytes() != (
            tmp_path / "a" / instance_file
        ).read_bytes()

    def test_flags_beat_config_beats_defaults(self, tmp_path):
        config = write_config(tmp_path, seed=7)
        out = tmp_path / "suite"
        assert main(["generate", "--out", str(out), "--config", config]) == 0
        assert json.loads((out / "manifest.json").read_text())["seed"] == 7
        assert main(
            ["generate", "--out", str(out), "--config", config, "--seed", "11"]
        ) == 0
        assert json.loads((out / "manifest.json").read_text())["seed"] == 11

    def test_bad_config_inputs_exit_2(self, tmp_path, capsys):
        out = str(tmp_path / "suite")
        bad_field = tmp_path / "bad.json"
        bad_field.write_text(json.dumps({"num_statez": 4}))
        assert main(["generate", "--out", out, "--config", str(bad_field)]) == 2
        assert "unknown config fields" in capsys.readouterr().err
        assert main(["generate", "--out", out, "--config", str(tmp_path / "nope.json")]) == 2
        broken = tmp_path / "broken.json"
        broken.write_text("{not json")
        assert main(["generate", "--out", out, "--config", str(broken)]) == 2


class TestSweep:
    def test_grid_shape_schema_and_ordering(self, tmp_path):
        config, suite = tiny_suite(tmp_path)
        out = tmp_path / "results"
        assert main(
            ["sweep", "--suite", str(suite), "--out", str(out), "--config", config]
        ) == 0
        rows = read_rows(out / "results.csv")
        assert len(rows) == 4 * 4 * 2
        assert list(rows[0].keys()) == RESULT_COLUMNS
        assert all(r["error"] == "" for r in rows)
        keys = [(r["instance"], r["method"], float(r["beta"])) for r in rows]
        assert keys == sorted(keys)
        timings = read_rows(out / "timings.csv")
        # timings are per (instance, method) work unit, not per cell
        assert len(timings) == 4 * 4
        assert all(float(t["wall_time"]) >= 0.0 for t in timings)

    def test_parallel_results_are_byte_identical(self, tmp_path):
        config, suite = tiny_suite(tmp_path)
        for out, jobs in [("r1", "1"), ("r2", "2")]:
            assert main(
                [
                    "sweep",
                    "--suite",
                    str(suite),
                    "--out",
                    str(tmp_path / out),
                    "--config",
                    config,
                    "--jobs",
                    jobs,
                ]
            ) == 0
        assert (tmp_path / "r1" / "results.csv").read_bytes() == (
            tmp_path / "r2" / "results.csv"
        ).read_bytes()

    def test_pull_matches_or_beats_the_schedule_per_cell(self, tmp_path):
        config, suite = tiny_suite(tmp_path)
        out = tmp_path / "results"
        main(["sweep", "--suite", str(suite), "--out", str(out), "--config", config])
        cells = {
            (r["instance"], r["method"], r["beta"]): float(r["net_objective"])
            for r in read_rows(out / "results.csv")
        }
        for (instance, method, beta), value in cells.items():
            if method == "aoi":
                assert cells[(instance, "pull", beta)] >= value - 1e-9

    def test_missing_suite_exits_2(self, tmp_path, capsys):
        assert main(
            ["sweep", "--suite", str(tmp_path / "nowhere"), "--out", str(tmp_path / "r")]
        ) == 2
        assert "manifest.json" in capsys.readouterr().err


class TestSolve:
    def test_counterexample_artifacts_round_trip(self, tmp_path):
        out = tmp_path / "push"
        assert main(
            [
                "solve",
                "counterexample",
                "--method",
                "push-always",
                "--beta",
                "0.1",
                "--tmax",
                "40",
                "--out",
                str(out),
            ]
        ) == 0
        stem = "counterexample-push-always-beta0.1"
        policy = PushPolicy.from_json_dict(
            json.loads((out / f"{stem}-policy.json").read_text())
        )
        assert policy.control.shape == (5, 41)
        report = json.loads((out / f"{stem}-report.json").read_text())
        assert report["init"] == "always"
        assert report["gamma"] == pytest.approx(0.9)
        assert report["t_max"] == 40
        assert isinstance(report["net_objective"], float)
        assert report["discounted_comm_cost"] >= 0.0

    def test_pull_policy_artifact_round_trips(self, tmp_path):
        out = tmp_path / "pull"
        assert main(
            [
                "solve",
                "counterexample",
                "--method",
                "pull",
                "--beta",
                "0.5",
                "--tmax",
                "40",
                "--out",
                str(out),
            ]
        ) == 0
        policy = PullPolicy.from_json_dict(
            json.loads((out / "counterexample-pull-beta0.5-policy.json").read_text())
        )
        assert policy.periods.shape == (5,)

    def test_suite_instance_resolved_by_name(self, tmp_path):
        config, suite = tiny_suite(tmp_path)
        name = json.loads((suite / "manifest.json").read_text())["instances"][0]["name"]
        out = tmp_path / "cell"
        assert main(
            [
                "solve",
                name,
                "--method",
                "aoi",
                "--beta",
                "0.5",
                "--suite",
                str(suite),
                "--config",
                config,
                "--out",
                str(out),
            ]
        ) == 0
        assert (out / f"{name}-aoi-beta0.5-report.json").exists()

    def test_unknown_instance_exits_2(self, tmp_path, capsys):
        _, suite = tiny_suite(tmp_path)
        assert main(
            [
                "solve",
                "missing-name",
                "--method",
                "aoi",
                "--beta",
                "0.0",
                "--suite",
                str(suite),
                "--out",
                str(tmp_path / "x"),
            ]
        ) == 2
        assert "no instance named" in capsys.readouterr().err

    def test_unknown_method_is_a_usage_error(self, tmp_path):
        with pytest.raises(SystemExit) as err:
            main(["solve", "counterexample", "--method", "teleport", "--beta", "0.0"])
        assert err.value.code == 2


class TestAoiHist:
    def run_hist(self, tmp_path, out, seed="0"):
        return main(
            [
                "aoi-hist",
                "counterexample",
                "--method",
                "aoi",
                "--beta",
                "0.0",
                "--steps",
                "4000",
                "--tmax",
                "12",
                "--seed",
                seed,
                "--out",
                str(tmp_path / out),
            ]
        )

    def test_pmf_rows_are_normalized(self, tmp_path):
        assert self.run_hist(tmp_path, "h") == 0
        rows = read_rows(tmp_path / "h" / "peak-aoi.csv")
        overall = [r for r in rows if r["scope"] == "overall"]
        assert sum(float(r["probability"]) for r in overall) == pytest.approx(1.0)
        per_state = {}
        for r in rows:
            if r["scope"] == "state":
                per_state.setdefault(r["state"], 0.0)
                per_state[r["state"]] += float(r["probability"])
        for total in per_state.values():
            assert total == pytest.approx(1.0)
        assert all(int(r["peak"]) >= 1 for r in rows)

    def test_same_seed_is_byte_identical(self, tmp_path):
        assert self.run_hist(tmp_path, "h1") == 0
        assert self.run_hist(tmp_path, "h2") == 0
        assert (tmp_path / "h1" / "peak-aoi.csv").read_bytes() == (
            tmp_path / "h2" / "peak-aoi.csv"
        ).read_bytes()


class TestVerifyCommand:
    def fake_verdict(self, passed):
        return CounterexampleVerdict(
            gamma=0.9,
            t_max=250,
            rows=[],
            threshold=0.18,
            threshold_candidates={"derived": 0.18, "alternate": 2.07},
            matched_candidate="derived",
            closed_form_max_error=0.0,
            dp_check={"beta": 0.1},
            failures=[] if passed else ["threshold mismatch"],
            passed=passed,
        )

    def test_pass_path_writes_report_and_exits_0(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setattr(cli, "verify_counterexample", lambda **kw: self.fake_verdict(True))
        monkeypatch.setattr(cli, "_verify_sweep", lambda settings, failures: None)
        out = tmp_path / "report"
        assert main(["verify", "--out", str(out)]) == 0
        assert "all checks passed" in capsys.readouterr().out
        report = json.loads((out / "verify-report.json").read_text())
        assert report["passed"] is True
        assert report["counterexample"]["matched_candidate"] == "derived"

    def test_failed_construction_check_exits_1(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setattr(cli, "verify_counterexample", lambda **kw: self.fake_verdict(False))
        monkeypatch.setattr(cli, "_verify_sweep", lambda settings, failures: None)
        assert main(["verify"]) == 1
        assert "counterexample verification failed" in capsys.readouterr().out

    def test_failed_sweep_check_exits_1(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setattr(cli, "verify_counterexample", lambda **kw: self.fake_verdict(True))

        def broken_sweep(settings, failures):
            failures.append("instance-00 beta=0.5: pull below scheduled baseline")

        monkeypatch.setattr(cli, "_verify_sweep", broken_sweep)
        out = tmp_path / "report"
        assert main(["verify", "--out", str(out)]) == 1
        assert "FAIL instance-00" in capsys.readouterr().out
        assert json.loads((out / "verify-report.json").read_text())["passed"] is False
