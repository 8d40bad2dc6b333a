import json
from dataclasses import replace

import pytest

from vinenav.cli import EXIT_CONFIG, EXIT_FAULT, EXIT_OK, main
from vinenav.config import ConfigError, RunConfig, config_from_dict, dump_config, load_config
from vinenav.simulator import load_world, save_world

from conftest import blocked_world


# -- config -----------------------------------------------------------------

def test_config_round_trip(tmp_path):
    cfg = RunConfig().with_seed(7)
    (tmp_path / "c.json").write_text(dump_config(cfg))
    assert load_config(tmp_path / "c.json") == cfg
    assert cfg.world.seed == cfg.end_row.rng_seed == 7


@pytest.mark.parametrize("data, where", [
    ({"sede": 1}, "unknown field(s) sede"),
    ({"world": {"n_rows": 3, "row_lenght": 10}}, "world: unknown field(s) row_lenght"),
    ({"world": {"n_rows": 1}}, "n_rows must be >= 2"),
    ({"in_row": {"v_max": "fast"}}, "in_row.v_max: expected a number"),
    ({"corridors_to_traverse": 1.5}, "corridors_to_traverse: expected an integer"),
])
def test_config_rejections(data, where):
    with pytest.raises(ConfigError, match=where.replace("(", r"\(").replace(")", r"\)")):
        config_from_dict(data)


def test_config_bad_json_reports_position(tmp_path):
    (tmp_path / "c.json").write_text('{\n  "seed": 1,\n  "world": {\n}')
    with pytest.raises(ConfigError, match=r"c\.json:4:2"):
        load_config(tmp_path / "c.json")


def test_partial_config_keeps_defaults():
    cfg = config_from_dict({"world": {"vegetative_stage": "high"}, "in_row": {"pid_gains": [1, 0, 0]}})
    assert cfg.world.vegetative_stage == "high" and cfg.world.row_length == 36.0
    assert cfg.in_row.pid_gains == (1.0, 0.0, 0.0)


# -- commands ---------------------------------------------------------------

@pytest.fixture(scope="session")
def run_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    assert main(["run", "--seed", "3", "--out", str(out), "--svg"]) == EXIT_OK
    return out


def test_generate_default(tmp_path, capsys):
    assert main(["generate", "--out", str(tmp_path / "a")]) == EXIT_OK
    w = load_world(tmp_path / "a" / "world.json")
    assert len(w.corridor_centers) == 3 and w.config.row_length == 36.0
    assert "3 corridors" in capsys.readouterr().out
    main(["generate", "--out", str(tmp_path / "b")])
    assert (tmp_path / "a" / "world.json").read_bytes() == (tmp_path / "b" / "world.json").read_bytes()
    main(["generate", "--seed", "9", "--out", str(tmp_path / "c")])
    assert (tmp_path / "a" / "world.json").read_bytes() != (tmp_path / "c" / "world.json").read_bytes()


def test_generate_bad_config(tmp_path, capsys):
    (tmp_path / "c.json").write_text(json.dumps({"world": {"n_rows": 1}}))
    assert main(["generate", "--config", str(tmp_path / "c.json"), "--out", str(tmp_path)]) == EXIT_CONFIG
    assert "n_rows" in capsys.readouterr().err
    assert main(["generate", "--config", str(tmp_path / "missing.json")]) == EXIT_CONFIG


def test_run_writes_artifacts(run_dir):
    names = {"config.json", "world.json", "scans.jsonl", "trajectory.csv", "odometry.csv", "commands.csv",
             "inrow.csv", "events.jsonl", "metrics.json", "report.txt", "trajectory.svg"}
    assert names <= {p.name for p in run_dir.iterdir()}
    metrics = json.loads((run_dir / "metrics.json").read_text())
    assert metrics["outcome"] == "Done" and metrics["collisions"] == 0
    assert metrics["center_displacement"]["mean"] <= 0.10
    assert json.loads((run_dir / "config.json").read_text())["seed"] == 3


def test_replay_is_byte_identical(run_dir, tmp_path):
    args = ["replay", str(run_dir / "scans.jsonl"), "--config", str(run_dir / "config.json"), "--out", str(tmp_path)]
    assert main(args) == EXIT_OK
    assert (tmp_path / "replay_commands.csv").read_bytes() == (run_dir / "commands.csv").read_bytes()


def test_replay_truncated_and_empty(run_dir, tmp_path, capsys):
    lines = (run_dir / "scans.jsonl").read_text().splitlines(keepends=True)
    (tmp_path / "cut.jsonl").write_text("".join(lines[:50]) + lines[50][:40])
    assert main(["replay", str(tmp_path / "cut.jsonl"), "--seed", "3"]) == EXIT_OK
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "t,phase,v,omega" and len(out) == 1 + 50 * 5
    full = (run_dir / "commands.csv").read_text().splitlines()
    assert out[:200] == full[:200]
    (tmp_path / "empty.jsonl").write_text("")
    assert main(["replay", str(tmp_path / "empty.jsonl")]) == EXIT_OK
    assert capsys.readouterr().out == "t,phase,v,omega\n"


def test_eval(run_dir, tmp_path, capsys):
    assert main(["eval", str(run_dir), "--out", str(tmp_path), "--svg"]) == EXIT_OK
    assert "Mean center displacement" in capsys.readouterr().out
    assert json.loads((tmp_path / "metrics.json").read_text())["center_displacement"]["mean"] <= 0.10
    assert main(["eval", str(run_dir), "--world", str(tmp_path / "nope.json")]) == EXIT_CONFIG
    assert "not found" in capsys.readouterr().err


def test_run_fault_exit_status(tmp_path, capsys):
    cfg = replace(RunConfig(), max_time=120.0)
    save_world(blocked_world(cfg), tmp_path / "blocked.json")
    (tmp_path / "c.json").write_text(dump_config(cfg))
    code = main(["run", "--config", str(tmp_path / "c.json"), "--world", str(tmp_path / "blocked.json"),
                 "--out", str(tmp_path / "out")])
    assert code == EXIT_FAULT
    err = capsys.readouterr().err
    assert "degraded perception" in err and "last phase InRow" in err
    assert json.loads((tmp_path / "out" / "metrics.json").read_text())["outcome"] == "Fault"
