import csv
import io
import json
import math
import os
import subprocess
import sys

import pytest
from hypothesis import given, strategies as st

from sswalk import __version__, cli

PI = math.pi


def run_cli(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def read_csv(text):
    lines = text.splitlines()
    assert lines[0].startswith("# ")
    meta = json.loads(lines[0][2:])
    return meta, list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))


def read_ndjson(text):
    lines = [json.loads(line) for line in text.splitlines()]
    return lines[0]["metadata"], lines[1:]


# -- angles and config --------------------------------------------------------


@pytest.mark.parametrize(
    "text, value",
    [
        ("pi/4", PI / 4),
        ("-3pi/4", -3 * PI / 4),
        ("2*pi/5", 2 * PI / 5),
        ("pi", PI),
        ("-pi", PI),
        ("0.5", 0.5),
        (" PI/2 ", PI / 2),
        ("3pi/2", -PI / 2),
    ],
)
def test_parse_angle(text, value):
    assert cli.parse_angle(text) == pytest.approx(value, abs=1e-15)


@pytest.mark.parametrize("text", ["pie", "pi/", "nan", "inf", "", "1e999"])
def test_parse_angle_rejects(text):
    with pytest.raises(cli.ConfigError, match="theta1"):
        cli.parse_angle(text, "theta1")


def test_theta_flag_accepts_pi_fraction():
    cfg = cli.parse_config(["spectrum", "--theta1", "pi/4", "--theta2", "-pi/2"])
    assert cfg.theta1 == pytest.approx(0.7853981633974483)
    assert cfg.theta2 == pytest.approx(-PI / 2)


def test_file_values_overridden_by_flags(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"command": "walk", "n": 12, "steps": 3, "theta1": 0.1, "theta2": 0.2}))
    cfg = cli.parse_config(["walk", "--config", str(path), "--n", "20"])
    assert cfg.n == 20
    assert cfg.steps == 3 and cfg.theta1 == 0.1


@pytest.mark.parametrize(
    "data, key",
    [
        ({"command": "walk", "n": 0}, "n"),
        ({"command": "walk", "steps": 2.5}, "steps"),
        ({"command": "walk", "theta1": "half"}, "theta1"),
        ({"command": "walk", "format": "xml"}, "format"),
        ({"command": "walk", "bogus": 1}, "bogus"),
        ({"command": "fly"}, "command"),
        ({"n": 4}, "command"),
        ({"command": "verify", "claim": "nope"}, "claim"),
    ],
)
def test_config_errors_name_the_key(data, key):
    with pytest.raises(cli.ConfigError, match=key):
        cli.ExperimentConfig.from_dict(data)


configs = st.builds(
    cli.ExperimentConfig,
    command=st.sampled_from(cli.COMMANDS),
    theta1=st.floats(-10, 10),
    theta2=st.one_of(st.none(), st.floats(-10, 10)),
    n=st.one_of(st.none(), st.integers(1, 512)),
    steps=st.one_of(st.none(), st.integers(1, 1000)),
    tolerance=st.floats(0, 1),
    seed=st.integers(0, 2**64 - 1),
    format=st.sampled_from([None, "csv", "ndjson"]),
)


@given(configs)
def test_config_round_trip(cfg):
    again = cli.ExperimentConfig.from_json(cfg.to_json())
    assert again == cfg
    assert -PI < again.theta1 <= PI


# -- exit codes ---------------------------------------------------------------


def test_verify_example_exit_0(capsys):
    code, out, err = run_cli(
        ["verify", "--claim", "1d-decomposition", "--theta1", "0.7854", "--theta2", "0.3927", "--n", "16"], capsys
    )
    assert code == 0
    meta, recs = read_ndjson(out)
    assert meta["config"]["n"] == 16
    assert recs[0]["matched_form"] == "Z(theta1) Z(theta2)"
    assert recs[0]["residual"] <= 1e-12
    assert "1/1 points matched" in err


def test_spectrum_example_exit_0(capsys):
    code, out, _ = run_cli(["spectrum", "--theta1", "0.7854", "--theta2", "0.3927", "--kgrid", "256"], capsys)
    assert code == 0
    meta, rows = read_csv(out)
    assert len(rows) == 256
    assert list(rows[0]) == ["theta1", "theta2", "k", "E", "n1", "n2", "n3"]


def test_impossible_tolerance_exit_2(capsys):
    # the 1d identity holds with residual exactly 0, so the forced failure uses
    # a claim whose floating-point residual is nonzero
    code, out, _ = run_cli(
        ["verify", "--claim", "qplate-identity", "--theta1", "0.7854", "--n", "8", "--tolerance", "1e-16"], capsys
    )
    assert code == 2
    _, recs = read_ndjson(out)
    assert recs[0]["matched_form"] is None and recs[0]["residual"] > 1e-16


def test_missing_n_for_walk_exit_1(capsys):
    code, out, err = run_cli(["walk", "--theta1", "0.1", "--theta2", "0.2", "--steps", "3"], capsys)
    assert code == 1
    assert "--n" in err and out == ""


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["fly"],
        ["walk", "--n", "abc"],
        ["verify", "--claim", "nope"],
        ["walk", "--config", "/nonexistent/cfg.json"],
    ],
)
def test_usage_errors_exit_1(argv, capsys):
    code, _, err = run_cli(argv, capsys)
    assert code == 1
    assert err.startswith("sswalk: error:")


def test_malformed_config_file_exit_1(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    code, _, err = run_cli(["walk", "--config", str(path)], capsys)
    assert code == 1 and "malformed" in err


def test_bad_thread_env_exit_1(monkeypatch, capsys):
    monkeypatch.setenv("SSWALK_THREADS", "many")
    code, _, err = run_cli(["spectrum", "--theta1", "0.3", "--theta2", "0.1", "--kgrid", "64"], capsys)
    assert code == 1 and "SSWALK_THREADS" in err


def test_unwritable_output_exit_1(tmp_path, capsys):
    target = tmp_path / "missing_dir" / "out.csv"
    code, _, err = run_cli(["spectrum", "--theta1", "0.3", "--theta2", "0.1", "--kgrid", "64", "--out", str(target)], capsys)
    assert code == 1
    assert "cannot write" in err
    assert not target.exists()


# -- outputs ------------------------------------------------------------------


def test_atomic_write_leaves_no_temp_files(tmp_path, capsys):
    out = tmp_path / "dispersion.csv"
    code, stdout, _ = run_cli(
        ["spectrum", "--theta1", "pi/4", "--theta2", "pi/8", "--kgrid", "64", "--out", str(out)], capsys
    )
    assert code == 0
    assert os.listdir(tmp_path) == ["dispersion.csv"]
    assert stdout.startswith("spectrum dims=1")


def test_identical_config_gives_identical_bytes(tmp_path, capsys):
    outs = []
    for _ in range(2):
        path = tmp_path / "walk.csv"
        argv = ["walk", "--n", "24", "--steps", "8", "--theta1", "pi/4", "--theta2", "0", "--theta2-right", "pi/2",
                "--init", "random", "--seed", "7", "--threads", "3", "--out", str(path)]
        assert run_cli(argv, capsys)[0] == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
    assert b"\r" not in outs[0]


def test_metadata_records_config_and_version(capsys):
    code, out, _ = run_cli(["walk", "--n", "10", "--steps", "2", "--theta1", "0.4", "--theta2", "0.1"], capsys)
    assert code == 0
    meta, rows = read_csv(out)
    assert meta["sswalk_version"] == __version__
    assert meta["config"]["command"] == "walk" and meta["config"]["n"] == 10
    assert cli.ExperimentConfig.from_dict(meta["config"]).n == 10
    assert len(rows) == 3 * 10
    assert abs(sum(float(r["probability"]) for r in rows if r["step"] == "2") - 1) < 1e-12


def test_ndjson_format_override(capsys):
    code, out, _ = run_cli(["phasediagram", "--grid", "3", "--kgrid", "64", "--format", "ndjson"], capsys)
    assert code == 0
    meta, recs = read_ndjson(out)
    assert len(recs) == 9
    assert set(recs[0]) == {"theta1", "theta2", "gap0", "gapPi", "winding"}


def test_boundary_command_flags_modes(capsys):
    argv = ["boundary", "--n", "64", "--theta1", "pi/4", "--theta2", "0", "--theta2-right", "pi/2"]
    code, out, err = run_cli(argv, capsys)
    assert code == 0
    _, rows = read_csv(out)
    assert len(rows) == 128
    assert sum(r["flagged"] == "true" for r in rows) >= 2
    assert "flagged modes" in err


def test_walk_from_bound_mode_stays_put(capsys):
    argv = ["walk", "--n", "64", "--steps", "20", "--theta1", "pi/4", "--theta2", "0", "--theta2-right", "pi/2",
            "--init", "mode"]
    code, _, err = run_cli(argv, capsys)
    assert code == 0
    wp = float(err.rsplit("min window prob", 1)[1])
    assert wp > 0.99


def test_edge2d_command(capsys):
    argv = ["edge2d", "--n", "32", "--n2", "64", "--steps", "25", "--theta1", "pi/8", "--theta2", "-pi/2",
            "--theta2-right", "pi/2", "--boundary", "16"]
    code, out, err = run_cli(argv, capsys)
    assert code == 0
    assert "monotone True" in err
    _, rows = read_csv(out)
    assert len(rows) == 26 * (32 + 64)


def test_edge2d_too_few_sites_exit_1(capsys):
    argv = ["edge2d", "--n", "8", "--n2", "8", "--steps", "10", "--theta1", "0.1", "--theta2", "0.2"]
    code, _, err = run_cli(argv, capsys)
    assert code == 1 and "too small" in err


def test_spectrum_2d(capsys):
    code, out, _ = run_cli(["spectrum", "--theta1", "pi/4", "--theta2", "pi/8", "--dims", "2", "--kgrid", "8"], capsys)
    assert code == 0
    _, rows = read_csv(out)
    assert len(rows) == 64 and "ky" in rows[0]


def test_console_entry_point_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "sswalk.cli", "verify", "--claim", "cyclic-property", "--theta1", "pi/3", "--n", "6"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0, proc.stderr
    assert proc.stdout.count("\n") == 2
