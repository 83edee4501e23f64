import numpy as np
import pytest
import yaml

from sqg_front_lab.runner import (PRESETS, ConfigNotFoundError, ConfigSchemaError,
                                  ExperimentConfig, UnknownConfigKeyError, dump_config,
                                  from_mapping, parse_config)
from sqg_front_lab.runner import bundle as bundle_mod
from sqg_front_lab.runner import cli
from sqg_front_lab.runner.presets import Criterion

SMALL = {"grid": {"n": 128, "box_length": 50.0},
         "sim": {"dt": 0.02, "t_end": 0.4, "snapshot_every": 0.2, "diag_every": 0.2}}


def write_yaml(path, data):
    path.write_text(yaml.safe_dump(data))
    return path


class TestConfig:
    def test_empty_document_gives_defaults(self, tmp_path):
        p = tmp_path / "empty.yaml"
        p.write_text("")
        cfg = parse_config(p, preset="resonance")
        assert cfg == from_mapping({}, preset="resonance")
        assert cfg.grid.n == 1024 and cfg.sim.dt == 0.01

    def test_preset_defaults_layered_under_user_values(self, tmp_path):
        cfg = parse_config(write_yaml(tmp_path / "c.yaml", {"sim": {"t_end": 3.0}}), preset="decay")
        assert cfg.sim.t_end == 3.0
        assert cfg.grid.n == PRESETS["decay"].defaults["grid"]["n"]

    def test_unknown_key_named(self, tmp_path):
        p = write_yaml(tmp_path / "bad.yaml", {"sim": {"dtx": 0.1}})
        with pytest.raises(UnknownConfigKeyError) as info:
            parse_config(p, preset="mass")
        assert info.value.key == "sim.dtx"
        assert "dtx" in str(info.value)
        assert str(info.value.path) == str(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigNotFoundError) as info:
            parse_config(tmp_path / "nope.yaml")
        assert isinstance(info.value, FileNotFoundError)

    @pytest.mark.parametrize("data", [{"sim": {"dt": -1.0}}, {"grid": {"n": "many"}},
                                      {"initial": {"profile": "square"}}, ["not", "a", "mapping"]])
    def test_schema_errors(self, tmp_path, data):
        with pytest.raises(ConfigSchemaError):
            parse_config(write_yaml(tmp_path / "bad.yaml", data), preset="mass")

    def test_unknown_preset(self):
        with pytest.raises(ConfigSchemaError):
            from_mapping({}, preset="nonsense")

    @pytest.mark.parametrize("name", sorted(PRESETS))
    def test_round_trip_idempotent(self, tmp_path, name):
        cfg = from_mapping({}, preset=name)
        text = dump_config(cfg)
        again = parse_config(write_yaml(tmp_path / "echo.yaml", yaml.safe_load(text)))
        assert again == cfg
        assert dump_config(again) == text

    @pytest.mark.parametrize("name", sorted(PRESETS))
    def test_presets_build(self, name):
        cfg = from_mapping({}, preset=name)
        assert isinstance(cfg, ExperimentConfig)
        grid = cfg.build_grid()
        cfg.build_mesh(grid).check_grid(grid)

    def test_snapshot_schedule(self):
        cfg = from_mapping(SMALL, preset="mass")
        np.testing.assert_allclose(cfg.build_sim().snapshot_times, [0.0, 0.2, 0.4])


class TestCriterion:
    def test_comparisons(self):
        assert Criterion(1, "x", 1e-7, 1e-6, "<=").passed
        assert not Criterion(1, "x", 2e-6, 1e-6, "<=").passed
        assert Criterion(4, "x", 2.1, (1.6, 2.4), "in").passed
        assert not Criterion(4, "x", float("nan"), (1.6, 2.4), "in").passed
        assert Criterion(10, "x", 16.0, 12.0, ">=").passed


class TestCli:
    def test_list_presets(self, capsys):
        assert cli.main(["--list-presets"]) == 0
        out = capsys.readouterr().out
        for name in PRESETS:
            assert name in out

    def test_missing_preset_name(self, capsys):
        assert cli.main([]) == 2

    def test_bad_config_exit_code(self, tmp_path, capsys):
        p = write_yaml(tmp_path / "bad.yaml", {"sim": {"dtx": 1}})
        assert cli.main(["mass", "--config", str(p), "--out", str(tmp_path / "o")]) == 2
        assert "dtx" in capsys.readouterr().err
        assert not (tmp_path / "o").exists()
        assert cli.main(["mass", "--config", str(tmp_path / "none.yaml")]) == 2

    def test_small_run_bundle(self, tmp_path, capsys):
        cfgp = write_yaml(tmp_path / "c.yaml", SMALL)
        out = tmp_path / "bundle"
        assert cli.main(["mass", "--config", str(cfgp), "--out", str(out), "--seed", "7"]) == 0
        assert "[PASS] #3" in capsys.readouterr().out
        assert sorted(p.name for p in out.iterdir()) == ["config.yaml", "diagnostics.csv",
                                                         "summary.yaml"]
        summary = yaml.safe_load((out / "summary.yaml").read_text())
        assert summary["passed"] is True and summary["seed"] == 7
        assert summary["checks"][0]["criterion"] == 3
        assert parse_config(out / "config.yaml").seed == 7
        header = (out / "diagnostics.csv").read_text().splitlines()
        assert header[0].startswith("t,mass") and len(header) == 4

    def test_bundle_is_deterministic(self, tmp_path):
        cfgp = write_yaml(tmp_path / "c.yaml", SMALL)
        for name in ("a", "b"):
            assert cli.main(["mass", "--config", str(cfgp), "--out", str(tmp_path / name)]) == 0
        for f in (tmp_path / "a").iterdir():
            assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()

    def test_failure_recorded(self, tmp_path, monkeypatch):
        def boom(cfg):
            raise RuntimeError("solver diverged")
        monkeypatch.setattr(cli, "run_preset", boom)
        out = tmp_path / "bundle"
        assert cli.main(["mass", "--config", str(write_yaml(tmp_path / "c.yaml", SMALL)),
                         "--out", str(out)]) == 1
        summary = yaml.safe_load((out / "summary.yaml").read_text())
        assert summary["passed"] is False
        assert summary["error"] == {"type": "RuntimeError", "message": "solver diverged"}

    def test_atomic_write(self, tmp_path, monkeypatch):
        cfgp = write_yaml(tmp_path / "c.yaml", SMALL)
        out = tmp_path / "bundle"
        assert cli.main(["mass", "--config", str(cfgp), "--out", str(out)]) == 0
        before = {f.name: f.read_bytes() for f in out.iterdir()}

        def broken(table):
            raise OSError("disk full")
        monkeypatch.setattr(bundle_mod, "table_to_csv", broken)
        with pytest.raises(OSError):
            cli.main(["mass", "--config", str(cfgp), "--out", str(out), "--seed", "3"])
        assert {f.name: f.read_bytes() for f in out.iterdir()} == before
        assert sorted(p.name for p in tmp_path.iterdir()) == ["bundle", "c.yaml"]
