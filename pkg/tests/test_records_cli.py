import csv
import json
import math

import numpy as np
import pytest

from gflswitch import cli
from gflswitch.presets import preset
from gflswitch.records import (
    EVENT_COLUMNS,
    ConfigError,
    config_from_dict,
    config_to_dict,
    load_config,
    parse_range,
    save_config,
    set_param,
    to_plain,
)


def _header(path):
    with open(path) as fh:
        return next(csv.reader(fh))


# --- configs ------------------------------------------------------------------


@pytest.mark.parametrize("name", ["CASE1", "CASE10"])
def test_config_round_trip(tmp_path, name):
    cfg = preset(name, vfdc=True)
    path = tmp_path / "cfg.json"
    save_config(cfg, str(path))
    assert load_config(str(path)) == cfg


def test_preset_with_overrides():
    cfg = config_from_dict({"preset": "CASE2", "vfdc": True, "gfmc": {"i_max": 1.4}, "sim": {"t_end": 3.0}})
    assert cfg.gfmc.i_max == 1.4 and cfg.gfmc.vfdc_enabled
    assert cfg.sim.t_end == 3.0
    assert cfg.gflcs == preset("CASE2", vfdc=True).gflcs


@pytest.mark.parametrize(
    "doc, match",
    [
        ({"gfmc": {"i_maximum": 1.0}}, "unknown field"),
        ({"colour": "red"}, "unknown top-level"),
        ({"preset": "CASE42"}, "unknown preset"),
        ({"gflcs": []}, "non-empty"),
        ({"net": {"x_g": -1.0}}, "x_g"),
        ({"fault": {"t_start": 3.9, "duration": 0.5}}, "t_end"),
    ],
)
def test_bad_configs(doc, match):
    with pytest.raises(ConfigError, match=match):
        config_from_dict(doc)


def test_set_param_paths():
    cfg = set_param(preset("CASE1"), "gfmc.i_max", 1.3)
    assert cfg.gfmc.i_max == 1.3
    cfg = set_param(preset("CASE10"), "gflcs.2.k_2p", 0.3)
    assert cfg.gflcs[2].k_2p == 0.3
    for bad in ("gfmc.nope", "gflcs.7.k_2p", "nothing"):
        with pytest.raises(ConfigError):
            set_param(preset("CASE1"), bad, 1.0)


def test_parse_range():
    assert parse_range("1:2:3") == [1.0, 1.5, 2.0]
    assert parse_range("0.5") == [0.5]
    assert parse_range("1, 2,3") == [1.0, 2.0, 3.0]
    for bad in ("", "1:2", "1:2:0", ","):
        with pytest.raises(ConfigError):
            parse_range(bad)


def test_to_plain_replaces_non_finite_numbers():
    assert to_plain({"a": np.float64(1.5), "b": [math.nan, math.inf], "c": (np.int64(2),)}) == {
        "a": 1.5,
        "b": [None, None],
        "c": [2],
    }


def test_config_dict_is_json_safe():
    json.dumps(config_to_dict(preset("CASE5")))


# --- command line -----------------------------------------------------------


def test_run_writes_documented_files(tmp_path, capsys):
    out = tmp_path / "run"
    assert cli.main(["run", "--case", "CASE3", "--out", str(out)]) == cli.EXIT_OK
    assert "final_mode=CVC pll=STABLE" in capsys.readouterr().out
    assert _header(out / "trace.csv") == [
        "t", "delta", "S", "p_c1", "i_c1", "u_pcc", "theta_1", "varpi_1", "V_1",
    ]
    assert _header(out / "events.csv") == EVENT_COLUMNS
    doc = json.load(open(out / "summary.json"))
    assert doc["pll"] == "STABLE" and doc["final_mode"] == "CVC"
    rows = list(csv.reader(open(out / "events.csv")))[1:]
    assert {"FAULT_ON", "FAULT_CLEAR"} <= {r[1] for r in rows}


def test_multi_gflc_trace_columns(tmp_path):
    cfg = preset("CASE10")
    cfg.sim.t_end = 0.1
    cfg.fault = None
    path = tmp_path / "cfg.json"
    save_config(cfg, str(path))
    assert cli.main(["run", "--config", str(path), "--out", str(tmp_path)]) == cli.EXIT_OK
    head = _header(tmp_path / "trace.csv")
    assert head[-3:] == ["theta_3", "varpi_3", "V_3"]


def test_analyze_report(tmp_path, capsys):
    path = tmp_path / "report.json"
    assert cli.main(["analyze", "--case", "CASE1", "--out", str(path)]) == cli.EXIT_OK
    printed = json.loads(capsys.readouterr().out)
    saved = json.load(open(path))
    assert printed == saved
    cvc = saved["modes"]["CVC"]["gflcs"][0]
    assert cvc["BASE"]["theta_max"] > cvc["theta_s"]
    assert set(saved["modes"]) == {"CVC", "CLC"}


def test_basin_command(tmp_path, capsys):
    rc = cli.main(["basin", "--case", "CASE3", "--grid", "3x3,1.0,0.1", "--workers", "1", "--out", str(tmp_path)])
    assert rc == cli.EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert sum(report["counts"][k] for k in ("STABLE_CVC", "STABLE_CLC", "UNSTABLE")) == 9
    assert _header(tmp_path / "basin.csv")[:3] == ["theta0", "varpi0", "class"]


def test_sweep_command(tmp_path, capsys):
    rc = cli.main(["sweep", "--case", "CASE1", "--param", "gfmc.i_max", "--range", "1.1,1.7", "--workers", "1",
                   "--out", str(tmp_path)])
    assert rc == cli.EXIT_OK
    rows = list(csv.reader(open(tmp_path / "sweep.csv")))
    assert rows[0] == cli.SWEEP_COLUMNS
    assert [r[2] for r in rows[1:]] == ["UNSTABLE", "STABLE"]


@pytest.mark.parametrize(
    "argv",
    [
        ["run", "--case", "CASE99"],
        ["sweep", "--case", "CASE1", "--param", "gfmc.bogus", "--range", "1"],
        ["sweep", "--case", "CASE1", "--param", "gfmc.i_max", "--range", ""],
        ["basin", "--case", "CASE1", "--grid", "axb"],
    ],
)
def test_config_errors_exit_2(argv, capsys):
    assert cli.main(argv) == cli.EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_infeasible_scenario_exits_3(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"preset": "CASE1", "gfmc": {"p_ref": 5.0}}))
    assert cli.main(["run", "--config", str(path)]) == cli.EXIT_INFEASIBLE


def test_unreadable_config_exits_2(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    assert cli.main(["run", "--config", str(path)]) == cli.EXIT_CONFIG
    assert cli.main(["run", "--config", str(tmp_path / "missing.json")]) == cli.EXIT_CONFIG
