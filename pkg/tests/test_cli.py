import csv
import json

import pytest

from rydfilter.cli import CSV_COLUMNS, EXIT_CONFIG, main, resolve_config, build_parser
from rydfilter.config import PRESETS, ConfigError, RunConfig, load_preset, parse_sweep

SMALL = {
    "scheme": "A",
    "atoms": [1, 2],
    "schedule": {
        "omega_er_level": 5.0,
        "omega_ge_peak": 30.0,
        "t_start_ge": 0.5,
        "t_rise": 1.5,
        "t_hold": 0.5,
        "t_fall": 1.5,
    },
    "trajectories": 4,
    "output_points": 9,
}


@pytest.mark.parametrize("name", PRESETS)
def test_presets_load(name):
    cfg = load_preset(name)
    assert cfg.preset == name
    assert RunConfig.from_dict(cfg.to_dict()).to_dict() == cfg.to_dict()


def test_config_roundtrip(tmp_path):
    cfg = RunConfig.from_dict(SMALL)
    cfg.dump(tmp_path / "c.json")
    assert RunConfig.load(tmp_path / "c.json") == cfg


@pytest.mark.parametrize(
    "patch, path",
    [
        ({"bogus": 1}, "$.bogus"),
        ({"scheme": "C"}, "$.scheme"),
        ({"atoms": [0]}, "$.atoms[0]"),
        ({"atoms": [11]}, "$.atoms[0]"),
        ({"mode": "master", "atoms": [4]}, "$.atoms"),
        ({"gamma_r": -1.0}, "$.gamma_r"),
        ({"geometry": {"radius": 1}}, "$.geometry.radius"),
        ({"schedule": {**SMALL["schedule"], "omega_ge_peak": 10.0}}, "$.schedule"),
    ],
)
def test_config_errors_name_the_field(patch, path):
    with pytest.raises(ConfigError) as info:
        RunConfig.from_dict({**SMALL, **patch})
    assert info.value.path == path


@pytest.mark.parametrize("text, out", [("1..3", [1, 2, 3]), ("4", [4]), ("1,5", [1, 5])])
def test_parse_sweep(text, out):
    assert parse_sweep(text) == out


def test_parse_sweep_bad():
    with pytest.raises(ConfigError):
        parse_sweep("3..1")


def test_overrides_recorded():
    args = build_parser().parse_args(["--preset", "fig2", "--atoms", "2", "--gamma-r", "0.1"])
    cfg, ov = resolve_config(args)
    assert cfg.atoms == [2] and cfg.gamma_r == 0.1
    assert ov == {"atoms": [2], "gamma_r": 0.1}


def test_exit_code_config_error(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({**SMALL, "scheme": "Z"}))
    assert main(["--config", str(bad)]) == EXIT_CONFIG
    assert "$.scheme" in capsys.readouterr().err
    assert main([]) == EXIT_CONFIG
    assert main(["--config", str(tmp_path / "missing.json")]) == EXIT_CONFIG


def test_end_to_end_outputs(tmp_path, monkeypatch):
    monkeypatch.setenv("RFS_WORKERS", "1")
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps(SMALL))
    out = tmp_path / "out"
    assert main(["--config", str(cfg), "--out", str(out), "--seed", "7"]) == 0
    for n in (1, 2):
        with open(out / f"timeseries_N{n}.csv") as fh:
            rows = list(csv.reader(fh))
        assert tuple(rows[0]) == CSV_COLUMNS
        assert len(rows) == 1 + 9
    summary = json.loads((out / "summary.json").read_text())
    assert summary["config"]["base_seed"] == 7
    assert summary["overrides"]["base_seed"] == 7
    assert set(summary["results"]) == {"1", "2"}
    assert summary["results"]["2"]["M"] == 4
    assert len(summary["results"]["2"]["P_N"]) == 3
    pa = summary["poisson_average"]
    assert pa["N_max"] == 2 and abs(sum(pa["P"]) - 1) < 1e-12


def test_master_mode(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({**SMALL, "atoms": [1], "mode": "master"}))
    assert main(["--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    summary = json.loads((tmp_path / "o" / "summary.json").read_text())
    assert summary["results"]["1"]["M"] == 0
