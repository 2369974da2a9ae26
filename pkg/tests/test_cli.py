import json

import pytest

from delegation_lab import (
    Action,
    PlayerType,
    StrategyProfile,
    ThresholdStrategy,
    baseline_config,
    build_representative_pne,
)
from delegation_lab.cli import main
from delegation_lab.model import save_profile_csv
from delegation_lab.montecarlo import SweepSpec


SCHEME_FLAGS = [
    "--a-coeffs", "0,1", "--b-coeffs", "0,1",
    "--cap", "200", "--c-min", "0.4", "--c-max", "0.6",
]


def write_config(tmp_path, **overrides):
    cfg = baseline_config(n=80, draws=4, m=3, master_seed=11, **overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg.to_dict()))
    return path


@pytest.fixture
def equilibrium_profile(identity_scheme, four_agents, tmp_path):
    profile = build_representative_pne(
        ThresholdStrategy(30.0), four_agents, identity_scheme, 30.0
    )
    path = tmp_path / "profile.csv"
    save_profile_csv(profile, path)
    return path


class TestRun:
    def test_writes_three_files(self, tmp_path, capsys):
        config = write_config(tmp_path)
        out = tmp_path / "results"
        assert main(["run", "--config", str(config), "--out", str(out)]) == 0
        for name in ("draws.csv", "objectives.csv", "summary.json"):
            assert (out / name).exists()
        printed = capsys.readouterr().out
        assert "draws.csv" in printed

    def test_missing_field_exit_2(self, tmp_path, capsys):
        data = baseline_config(n=50, draws=2).to_dict()
        del data["theta"]
        config = tmp_path / "config.json"
        config.write_text(json.dumps(data))
        code = main(["run", "--config", str(config), "--out", str(tmp_path / "o")])
        assert code == 2
        assert "theta" in capsys.readouterr().err

    def test_missing_config_file_exit_2(self, tmp_path):
        code = main(
            ["run", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)]
        )
        assert code == 2

    def test_flag_overrides_file(self, tmp_path):
        config = write_config(tmp_path)
        out = tmp_path / "results"
        assert main(
            ["run", "--config", str(config), "--out", str(out), "--draws", "2"]
        ) == 0
        lines = (out / "draws.csv").read_text().splitlines()
        assert len(lines) == 3  # header + 2 draws

    def test_sweep_layout(self, tmp_path):
        cfg = baseline_config(
            n=60, draws=2, m=2, master_seed=3,
            sweep=SweepSpec(param="theta", values=(20.0, 40.0)),
        )
        config = tmp_path / "sweep.json"
        config.write_text(json.dumps(cfg.to_dict()))
        out = tmp_path / "sweeped"
        assert main(["run", "--config", str(config), "--out", str(out)]) == 0
        assert (out / "theta=20" / "draws.csv").exists()
        assert (out / "theta=40" / "draws.csv").exists()
        index = json.loads((out / "summary.json").read_text())
        assert index["sweep"] == "theta"
        assert set(index["stability_frequency"]) == {"theta=20", "theta=40"}


class TestCheck:
    def test_equilibrium_profile_exits_zero(self, equilibrium_profile, capsys):
        code = main(["check", "--profile", str(equilibrium_profile), *SCHEME_FLAGS])
        assert code == 0
        verdict = json.loads(capsys.readouterr().out)
        assert verdict["sufficient"] is True

    def test_violating_profile_exits_one(self, four_agents, tmp_path, capsys):
        profile = StrategyProfile(
            actions=(
                Action.delegate({2: 1.0}),
                Action.delegate({2: 29.9}),
                Action.spo(),
                Action.spo(),
            ),
            types=four_agents,
        )
        path = tmp_path / "bad.csv"
        save_profile_csv(profile, path)
        code = main(["check", "--profile", str(path), *SCHEME_FLAGS])
        assert code == 1
        verdict = json.loads(capsys.readouterr().out)
        assert verdict["sufficient"] is False
        assert verdict["violations"]

    def test_delegation_to_inactive_pool_flagged(self, tmp_path, capsys):
        types = (
            PlayerType(5.0, 0.5, 0.01),
            PlayerType(30.0, 0.5, 0.01),
            PlayerType(40.0, 0.5, 0.01),
        )
        profile = StrategyProfile(
            actions=(Action.delegate({1: 5.0}), Action.idle(), Action.spo()),
            types=types,
        )
        path = tmp_path / "inactive.csv"
        save_profile_csv(profile, path)
        code = main(["check", "--profile", str(path), *SCHEME_FLAGS])
        assert code == 1
        verdict = json.loads(capsys.readouterr().out)
        assert any(v["condition"] == "feasible_target" for v in verdict["violations"])

    def test_malformed_profile_exit_2(self, tmp_path):
        path = tmp_path / "malformed.csv"
        path.write_text("nonsense\n")
        assert main(["check", "--profile", str(path), *SCHEME_FLAGS]) == 2

    def test_scheme_from_config_file(self, equilibrium_profile, tmp_path):
        config = write_config(tmp_path)
        code = main(
            ["check", "--profile", str(equilibrium_profile), "--config", str(config)]
        )
        assert code == 0

    def test_incomplete_scheme_flags_exit_2(self, equilibrium_profile, capsys):
        code = main(
            ["check", "--profile", str(equilibrium_profile), "--a-coeffs", "0,1"]
        )
        assert code == 2
        assert "--b-coeffs" in capsys.readouterr().err


class TestObjectives:
    def test_report(self, equilibrium_profile, capsys):
        code = main(
            ["objectives", "--profile", str(equilibrium_profile), "--ell", "0.5",
             *SCHEME_FLAGS]
        )
        assert code == 0
        report = json.loads(capsys.readouterr().out)
        assert report["method"] == "exact"
        assert report["participation"] == pytest.approx(150.9)

    def test_fixture_decentralization(self, tmp_path, capsys):
        types = tuple(PlayerType(s, 0.5, 0.01) for s in (5.0, 10.0, 15.0, 5.0, 10.0, 15.0))
        profile = StrategyProfile(
            actions=(
                Action.spo(),
                Action.spo(),
                Action.spo(),
                Action.delegate({0: 5.0}),
                Action.delegate({1: 10.0}),
                Action.delegate({2: 15.0}),
            ),
            types=types,
        )
        path = tmp_path / "fixture.csv"
        save_profile_csv(profile, path)
        code = main(
            ["objectives", "--profile", str(path), "--ell", "0.5", *SCHEME_FLAGS]
        )
        assert code == 0
        report = json.loads(capsys.readouterr().out)
        assert report["decentralization"] == 15.0

    def test_empty_profile_all_zero(self, tmp_path, capsys):
        types = (PlayerType(5.0, 0.5, 0.01),)
        profile = StrategyProfile(actions=(Action.idle(),), types=types)
        path = tmp_path / "idle.csv"
        save_profile_csv(profile, path)
        code = main(["objectives", "--profile", str(path), *SCHEME_FLAGS])
        assert code == 0
        report = json.loads(capsys.readouterr().out)
        assert report["participation"] == 0.0
        assert report["decentralization"] == 0.0
        assert report["expenditure"] == 0.0


class TestPresets:
    def test_presets_json(self, capsys):
        assert main(["presets"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert set(payload["g_functions"]) == {"g1", "g2", "g3", "g4", "g5", "g6"}
        assert payload["g_functions"]["g6"] == [0.0, 1.0, 0.05]
        assert payload["baseline"]["n"] == 1000
        assert payload["baseline"]["theta"] == 30.0
