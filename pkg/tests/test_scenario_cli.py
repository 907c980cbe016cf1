import json

import numpy as np
import pytest

from openmap.cli import main
from openmap.errors import ParameterError, ScenarioError
from openmap.io import emit_timeseries, read_timeseries
from openmap.runner import run_scenario
from openmap.scenario import PRESET_TEXT, parse_scenario, preset_scenario

SMALL = """\
[model]
variant = jsquared
j = 1/2
n_max = 3

[initial]
c = maximally-coherent
d = vacuum

[grid]
t0 = 0
dt = 0.5
t_max = 1.0

[analyses]
run = coherence, divisibility
"""


def test_parse_small_scenario():
    s = parse_scenario(SMALL)
    assert s.model.label == "jsquared" and (s.model.n, s.model.N) == (2, 4)
    assert s.grid.steps == 2
    assert s.analyses == ("divisibility", "coherence")  # fixed execution order
    assert np.abs(s.state.c - np.ones(2) / np.sqrt(2)).max() < 1e-15


@pytest.mark.parametrize("name", sorted(PRESET_TEXT))
def test_presets_parse(name):
    s = preset_scenario(name)
    assert s.grid.steps == 1000
    assert s.echo()["name"] == name


@pytest.mark.parametrize(
    "edit, message",
    [
        (("n_max = 3", "n_max = 3\ncolour = red"), "line 5, \\[model\\] key 'colour': unknown key"),
        (("[analyses]", "[extra]\nx = 1\n\n[analyses]"), "unknown section"),
        (("run = coherence, divisibility", "run = coherence, lindblad"), "unknown analysis"),
        (("c = maximally-coherent", "c = [1, 1]"), "amplitudes not normalized"),
        (("d = vacuum", "d = [0.5, 0.6, 0, 0]"), "trace"),
        (("dt = 0.5", "dt = 0.3"), "multiple of dt"),
        (("j = 1/2", "j = 0.3"), "spin"),
        (("[grid]", "[grid]\nsteps = 4"), "either steps or t_max"),
        (("n_max = 3", "n_max = 3\nh_s = [[1]]"), "only allowed with variant = custom"),
    ],
)
def test_parse_errors(edit, message):
    with pytest.raises(ScenarioError, match=message):
        parse_scenario(SMALL.replace(*edit))


def test_missing_section():
    with pytest.raises(ScenarioError, match="missing section \\[grid\\]"):
        parse_scenario(SMALL.split("[grid]")[0] + "[analyses]\nrun = coherence\n")


def test_custom_matrices_with_complex_entries():
    text = SMALL.replace("variant = jsquared\nj = 1/2\nn_max = 3", (
        "variant = custom\nh_s = [[1, 0], [0, -1]]\nh_e = [[0, [0, -1]], [[0, 1], 0]]\n"
        "h_se = [[0,0,0,1],[0,0,1,0],[0,1,0,0],[1,0,0,0]]"))
    s = parse_scenario(text.replace("d = vacuum", 'd = [["0.5", 0], [0, 0.5]]'))
    assert np.abs(s.model.H_E - np.array([[0, -1j], [1j, 0]])).max() == 0


def test_emit_round_trip(tmp_path):
    cols = {"t": np.array([0.0, 0.1]), "z": np.array([1 + 2j, -0.5j])}
    path = emit_timeseries(cols, tmp_path / "x.csv")
    assert path.read_text().splitlines()[0] == "t,re_z,im_z"
    back = read_timeseries(path)
    assert np.abs(back["z"] - cols["z"]).max() < 1e-12
    with pytest.raises(ParameterError):
        emit_timeseries({"a": [1, 2], "b": [1]}, tmp_path / "y.csv")


def test_three_point_grid_gives_four_lines(tmp_path):
    report = run_scenario(parse_scenario(SMALL), tmp_path)
    assert report.ok
    text = (tmp_path / "coherence.csv").read_bytes()
    assert b"\r" not in text
    assert len(text.decode().splitlines()) == 4


def test_run_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    run_scenario(parse_scenario(SMALL), a)
    run_scenario(parse_scenario(SMALL), b)
    for name in ("coherence.csv",):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    ra, rb = json.loads((a / "report.json").read_text()), json.loads((b / "report.json").read_text())
    assert ra["results"] == rb["results"]


def test_report_schema_and_error_block(tmp_path):
    text = SMALL.replace("run = coherence, divisibility", "run = markov, appendix-e").replace(
        "variant = jsquared\nj = 1/2\nn_max = 3", "variant = dephasing\nn_max = 1\nmodes = [[1.0, 0.2]]")
    report = run_scenario(parse_scenario(text), tmp_path)
    data = json.loads((tmp_path / "report.json").read_text())
    assert data["schema_version"] == 1
    assert data["status"] == "error" and not report.ok
    assert data["results"]["appendix-e"]["error"]["type"] == "UnsupportedInputError"
    assert "markov" in data["results"] and "error" not in data["results"]["markov"]


def test_cli_validate_and_run(tmp_path, capsys):
    path = tmp_path / "s.ini"
    path.write_text(SMALL)
    assert main(["validate", str(path)]) == 0
    assert "valid" in capsys.readouterr().out
    out_dir = tmp_path / "out"
    assert main(["run", str(path), "--out-dir", str(out_dir), "--grid-tmax", "1.5"]) == 0
    assert len((out_dir / "coherence.csv").read_text().splitlines()) == 5


def test_cli_parse_error_exit_code(tmp_path, capsys):
    path = tmp_path / "bad.ini"
    path.write_text(SMALL.replace("dt = 0.5", "dt = -1"))
    assert main(["validate", str(path)]) == 2
    assert "error:" in capsys.readouterr().err
    assert main(["run", str(tmp_path / "missing.ini")]) == 2


def test_cli_preset_print(capsys):
    assert main(["preset", "jsquared", "--print"]) == 0
    assert capsys.readouterr().out == PRESET_TEXT["jsquared"]


def test_cli_preset_run_with_overrides(tmp_path):
    args = ["preset", "counterexample", "--out-dir", str(tmp_path), "--grid-tmax", "1.0", "--grid-dt", "0.1"]
    assert main(args) == 0
    data = json.loads((tmp_path / "report.json").read_text())
    assert data["results"]["divisibility"]["verdict"] == "non-divisible"
