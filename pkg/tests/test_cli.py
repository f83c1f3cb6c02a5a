import json

import pytest

from mrplan import fileio
from mrplan.cli import dispatch


@pytest.fixture
def instance(tmp_path):
    """Small grid map plus a two-agent scenario on disk."""
    map_path = tmp_path / "map.json"
    scenario_path = tmp_path / "scenario.json"
    assert dispatch(["gen-grid", "--side", "4", "--out", str(map_path)]) == 0
    roadmap = fileio.read_map(map_path)
    from mrplan.graph import Assignment

    fileio.write_scenario(Assignment(starts=(0, 15), goals=(15, 0)), scenario_path)
    return map_path, scenario_path, roadmap


class TestGenerators:
    def test_gen_grid_writes_readable_map(self, tmp_path):
        out = tmp_path / "grid.json"
        assert dispatch(["gen-grid", "--side", "3", "--connectivity", "4", "--out", str(out)]) == 0
        assert fileio.read_map(out).num_edges == 12

    def test_refuses_overwrite_without_force(self, tmp_path):
        out = tmp_path / "grid.json"
        assert dispatch(["gen-grid", "--side", "3", "--out", str(out)]) == 0
        assert dispatch(["gen-grid", "--side", "3", "--out", str(out)]) == 3
        assert dispatch(["gen-grid", "--side", "3", "--out", str(out), "--force"]) == 0

    def test_gen_sweep_writes_all_maps(self, tmp_path):
        out_dir = tmp_path / "sweep"
        code = dispatch(
            ["gen-sweep", "--side", "4", "--steps", "3", "--seed", "5", "--out-dir", str(out_dir)]
        )
        assert code == 0
        maps = sorted(out_dir.glob("map_*.json"))
        assert len(maps) == 4
        counts = [fileio.read_map(p).num_edges for p in maps]
        assert counts == sorted(counts)

    def test_gen_adversarial_and_assignment(self, tmp_path):
        map_path = tmp_path / "adv.json"
        scenario_path = tmp_path / "adv-scenario.json"
        code = dispatch(
            [
                "gen-adversarial",
                "--agents", "4",
                "--seed", "2",
                "--out-map", str(map_path),
                "--out-scenario", str(scenario_path),
            ]
        )
        assert code == 0
        roadmap = fileio.read_map(map_path)
        assignment = fileio.read_scenario(scenario_path)
        assert assignment.num_agents == 4
        assignment.check_on(roadmap)

        out = tmp_path / "random-scenario.json"
        assert dispatch(
            ["gen-assignment", "--map", str(map_path), "--agents", "3", "--seed", "1", "--out", str(out)]
        ) == 0
        assert fileio.read_scenario(out).num_agents == 3


class TestPlanAndValidate:
    def test_plan_validate_round_trip(self, instance, tmp_path):
        map_path, scenario_path, _ = instance
        out = tmp_path / "plan.csv"
        code = dispatch(
            [
                "plan", "--algo", "mrdrrt",
                "--map", str(map_path),
                "--scenario", str(scenario_path),
                "--seed", "3",
                "--out", str(out),
            ]
        )
        assert code == 0
        stats = json.loads((tmp_path / "plan.csv.stats.json").read_text())
        assert stats["success"] is True and stats["iterations"] >= 1
        assert dispatch(
            ["validate", "--map", str(map_path), "--scenario", str(scenario_path), "--plan", str(out)]
        ) == 0

    def test_carp_plan_exits_zero_and_validates(self, instance, tmp_path):
        map_path, scenario_path, _ = instance
        out = tmp_path / "carp-plan.csv"
        code = dispatch(
            [
                "plan", "--algo", "carp", "--shuffles", "10",
                "--map", str(map_path),
                "--scenario", str(scenario_path),
                "--out", str(out),
            ]
        )
        assert code == 0
        assert dispatch(
            ["validate", "--map", str(map_path), "--scenario", str(scenario_path), "--plan", str(out)]
        ) == 0

    def test_tampered_plan_fails_validation(self, instance, tmp_path):
        map_path, scenario_path, _ = instance
        out = tmp_path / "plan.csv"
        dispatch(
            [
                "plan", "--algo", "carp", "--shuffles", "10",
                "--map", str(map_path), "--scenario", str(scenario_path),
                "--out", str(out),
            ]
        )
        plan = fileio.read_plan(out)
        broken = list(plan.steps)
        broken[-1] = tuple(reversed(broken[-1]))
        from mrplan.plans import Plan

        fileio.write_plan(Plan(steps=tuple(broken)), out)
        assert dispatch(
            ["validate", "--map", str(map_path), "--scenario", str(scenario_path), "--plan", str(out)]
        ) == 1

    def test_planning_failure_exits_one_with_stats(self, tmp_path):
        map_path = tmp_path / "adv.json"
        scenario_path = tmp_path / "scenario.json"
        dispatch(
            [
                "gen-adversarial", "--agents", "2", "--seed", "0",
                "--out-map", str(map_path), "--out-scenario", str(scenario_path),
            ]
        )
        out = tmp_path / "plan.csv"
        code = dispatch(
            [
                "plan", "--algo", "carp", "--shuffles", "1",
                "--map", str(map_path), "--scenario", str(scenario_path),
                "--out", str(out),
            ]
        )
        assert code == 1
        assert not out.exists()
        stats = json.loads((tmp_path / "plan.csv.stats.json").read_text())
        assert stats["success"] is False
        assert stats["iterations"] == 1

    def test_same_seed_same_flags_byte_identical(self, instance, tmp_path):
        map_path, scenario_path, _ = instance
        outs = [tmp_path / "first.csv", tmp_path / "second.csv"]
        for out in outs:
            code = dispatch(
                [
                    "plan", "--algo", "mrdrrt", "--seed", "9",
                    "--map", str(map_path), "--scenario", str(scenario_path),
                    "--out", str(out),
                ]
            )
            assert code == 0
        assert outs[0].read_bytes() == outs[1].read_bytes()

    def test_stdout_flag_echoes_plan(self, instance, tmp_path, capsys):
        map_path, scenario_path, _ = instance
        out = tmp_path / "plan.csv"
        dispatch(
            [
                "plan", "--algo", "carp", "--shuffles", "10", "--stdout",
                "--map", str(map_path), "--scenario", str(scenario_path),
                "--out", str(out),
            ]
        )
        captured = capsys.readouterr()
        assert captured.out == out.read_text()

    def test_stdout_silent_by_default(self, instance, tmp_path, capsys):
        map_path, scenario_path, _ = instance
        out = tmp_path / "plan.csv"
        dispatch(
            [
                "plan", "--algo", "carp", "--shuffles", "10",
                "--map", str(map_path), "--scenario", str(scenario_path),
                "--out", str(out),
            ]
        )
        assert capsys.readouterr().out == ""


class TestErrors:
    def test_usage_error_is_two(self):
        assert dispatch(["no-such-command"]) == 2
        assert dispatch(["plan", "--algo", "carp"]) == 2  # missing required flags

    def test_missing_file_is_three(self, tmp_path):
        assert dispatch(
            [
                "plan", "--algo", "carp",
                "--map", str(tmp_path / "absent.json"),
                "--scenario", str(tmp_path / "absent2.json"),
                "--out", str(tmp_path / "out.csv"),
            ]
        ) == 3

    def test_malformed_file_is_three(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert dispatch(
            [
                "plan", "--algo", "carp",
                "--map", str(bad),
                "--scenario", str(bad),
                "--out", str(tmp_path / "out.csv"),
            ]
        ) == 3


class TestBenchCommands:
    def test_bench_density_writes_csvs(self, tmp_path):
        out_dir = tmp_path / "bench"
        config = tmp_path / "variants.json"
        config.write_text('{"variants": [{"planner": "carp-10"}]}')
        code = dispatch(
            [
                "bench-density",
                "--sides", "4",
                "--agents", "2",
                "--assignments", "3",
                "--steps", "2",
                "--seed", "0",
                "--variants-config", str(config),
                "--budget", "200",
                "--out-dir", str(out_dir),
            ]
        )
        assert code == 0
        from mrplan.bench import read_aggregate_csv, read_runs_csv

        records = read_runs_csv(out_dir / "runs.csv")
        assert len(records) == 9  # 3 maps x 3 assignments x 1 variant
        assert read_aggregate_csv(out_dir / "aggregate.csv")

    def test_bench_adversarial_writes_csvs(self, tmp_path):
        out_dir = tmp_path / "bench-adv"
        config = tmp_path / "variants.json"
        config.write_text('{"variants": [{"planner": "carp-10"}]}')
        code = dispatch(
            [
                "bench-adversarial",
                "--counts", "2",
                "--instances", "2",
                "--seed", "0",
                "--variants-config", str(config),
                "--out-dir", str(out_dir),
            ]
        )
        assert code == 0
        from mrplan.bench import read_runs_csv

        assert len(read_runs_csv(out_dir / "runs.csv")) == 2
