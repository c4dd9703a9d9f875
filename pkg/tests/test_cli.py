import json

import numpy as np
import pytest

from combscatter import load_config
from combscatter.cli import EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC, EXIT_OK, run

SMALL = """gamma_hz = 0.3
[comb]
center_hz = 3.0
spacing_hz = 1.0
half_width = 1
[[pumps]]
kind = "low"
offset = 1
amplitude = 0.002
phase_rad = 0.3
"""


def _run(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_scatter_csv_and_json(capsys):
    code, out, _ = _run(capsys, "scatter", "--config", "isolator.cfg", "--mode-sector")
    assert code == EXIT_OK
    lines = out.splitlines()
    assert lines[0] == "out_label,in_label,re,im,mag_db" and len(lines) == 10
    code, out, _ = _run(capsys, "scatter", "--config", "isolator", "--format", "json")
    assert code == EXIT_OK and len(json.loads(out)["labels"]) == 6


def test_output_file_and_force(tmp_path, capsys):
    target = tmp_path / "s.csv"
    assert _run(capsys, "scatter", "--config", "isolator", "--output", str(target))[0] == EXIT_OK
    assert target.read_text().startswith("out_label")
    assert _run(capsys, "scatter", "--config", "isolator", "--output", str(target))[0] == EXIT_IO
    assert _run(capsys, "scatter", "--config", "isolator", "--output", str(target), "--force")[0] == EXIT_OK


def test_override_changes_result(capsys):
    _, base, _ = _run(capsys, "scatter", "--config", "isolator")
    _, changed, _ = _run(capsys, "scatter", "--config", "isolator", "--set", "pumps.2.phase_rad=0.0")
    assert base != changed


def test_sweep_defaults_to_scheme_elements(capsys):
    code, out, _ = _run(capsys, "sweep", "--config", "isolator", "--parameter", "phase", "--pump", "3",
                        "--start", "-3", "--stop", "3", "--num", "7")
    assert code == EXIT_OK
    lines = out.splitlines()
    assert lines[0] == "param_value,S_2_0_db,S_0_2_db" and len(lines) == 8
    code, out, _ = _run(capsys, "sweep", "--config", "circulator", "--parameter", "p_rel", "--pump", "1",
                        "--grid", "5,7,9", "--observable", "0,-2", "--format", "json")
    data = json.loads(out)
    assert code == EXIT_OK and data["grid"] == [5.0, 7.0, 9.0] and "S_0_-2" in data["traces_db"]


def test_sweep_needs_a_grid(capsys):
    code, _, err = _run(capsys, "sweep", "--config", "isolator", "--parameter", "phase", "--pump", "3")
    assert code == EXIT_CONFIG and "grid" in err


def test_scan_and_fit_round_trip(tmp_path, capsys):
    scan = tmp_path / "scan.csv"
    assert _run(capsys, "scan", "--config", "isolator", "--output", str(scan))[0] == EXIT_OK
    assert (tmp_path / "scan.csv.meta.toml").is_file()
    fitted = tmp_path / "fitted.cfg"
    code, out, _ = _run(capsys, "fit", "--config", "isolator", "--measured", str(scan), "--free", "phi3",
                        "--set", "pumps.2.phase_rad=-1.4", "--restarts", "1", "--fitted-config", str(fitted))
    assert code == EXIT_OK
    values = dict(line.split(",") for line in out.splitlines()[1:])
    assert float(values["phi3"]) == pytest.approx(-1.5308176396716067, abs=1e-6)
    assert load_config(fitted).pumps[2].phase == pytest.approx(-1.5308176396716067, abs=1e-6)


def test_scan_stdout(capsys):
    code, out, _ = _run(capsys, "scan", "--config", "isolator", "--raw")
    assert code == EXIT_OK and out.splitlines()[0] == "out\\in,-1,0,2"
    code, out, _ = _run(capsys, "scan", "--config", "isolator", "--format", "json")
    assert json.loads(out)["normalized"] is True


def test_expand_uses_scheme_names(capsys):
    code, out, _ = _run(capsys, "expand", "--config", "isolator", "--out", "0", "--in", "2", "--order", "3",
                        "--paper-sign", "--format", "json")
    data = json.loads(out)
    assert code == EXIT_OK
    assert "Δd*" in data["rendered_numerator"] and data["labels"] == ["-1*", "0", "2"]
    code, out, _ = _run(capsys, "expand", "--config", "circulator", "--out", "-2", "--in", "0")
    assert code == EXIT_OK and out.splitlines()[0] == "part,monomial,order,re,im"


def test_conditions_and_emit_config(tmp_path, capsys):
    target = tmp_path / "iso.cfg"
    code, out, _ = _run(capsys, "conditions", "--config", "isolator", "--g", "0.02", "--reverse",
                        "--emit-config", str(target), "--format", "json")
    data = json.loads(out)
    assert code == EXIT_OK and data["g"] == 0.02 and "predicted_reverse_transmission" in data
    emitted = load_config(target)
    assert emitted.pumps[2].phase == pytest.approx(data["phi_loop_reverse"])
    code, out, _ = _run(capsys, "conditions", "--config", "circulator", "--order", "3")
    assert code == EXIT_OK and "consistent_with_second_order,false" in out


def test_conditions_need_scheme(tmp_path, capsys):
    cfg = tmp_path / "small.cfg"
    cfg.write_text(SMALL)
    assert _run(capsys, "conditions", "--config", str(cfg))[0] == EXIT_CONFIG


def test_relations(capsys):
    code, out, _ = _run(capsys, "relations", "--config", "isolator", "--format", "json")
    rel = json.loads(out)
    assert code == EXIT_OK and rel[0]["relation"] == "Ω2 = Ω1 + Ω3"


def test_simulate_single_column(tmp_path, capsys):
    cfg = tmp_path / "small.cfg"
    cfg.write_text(SMALL)
    traj = tmp_path / "traj.csv"
    code, out, _ = _run(capsys, "simulate", "--config", str(cfg), "--input-mode", "0", "--windows", "1",
                        "--trajectory", str(traj), "--decimate", "50")
    assert code == EXIT_OK
    rows = out.splitlines()
    assert rows[0] == "out_label,re,im" and len(rows) == 7
    assert traj.read_text().startswith("t,re_a")
    code, out, _ = _run(capsys, "simulate", "--config", str(cfg), "--windows", "1", "--format", "json")
    td = np.array(json.loads(out)["re"]) + 1j * np.array(json.loads(out)["im"])
    _, ref, _ = _run(capsys, "scatter", "--config", str(cfg), "--format", "json")
    fd = np.array(json.loads(ref)["re"]) + 1j * np.array(json.loads(ref)["im"])
    assert code == EXIT_OK and td.shape == fd.shape == (6, 6)


def test_exit_codes(tmp_path, capsys):
    assert _run(capsys, "scatter", "--config", "missing.cfg")[0] == EXIT_IO
    assert _run(capsys, "scatter")[0] == EXIT_CONFIG
    assert _run(capsys, "bogus", "--config", "isolator")[0] == EXIT_CONFIG
    assert _run(capsys, "scatter", "--config", "isolator", "--threads", "0")[0] == EXIT_CONFIG
    bad = tmp_path / "bad.csv"
    bad.write_text("nonsense\n")
    assert _run(capsys, "fit", "--config", "isolator", "--measured", str(bad))[0] == EXIT_IO
    singular = tmp_path / "singular.cfg"
    singular.write_text(SMALL.replace('kind = "low"\noffset = 1\namplitude = 0.002',
                                      'kind = "high"\noffset = 0\namplitude = 0.05'))
    code, _, err = _run(capsys, "scatter", "--config", str(singular))
    assert code == EXIT_NUMERIC and "numerical error" in err
    assert _run(capsys, "--help")[0] == EXIT_OK
