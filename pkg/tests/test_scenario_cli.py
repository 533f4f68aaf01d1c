import csv
import json

import numpy as np
import pytest

from qlinphoton import cli, fields, golden, scenario
from qlinphoton.grid import TimeGrid

SMALL = {"t_min": -1.0, "t_max": 12.0, "dt": 1e-2}


def _doc(name, **kw):
    doc = scenario.builtin(name)
    doc["grid"] = dict(SMALL)
    doc.update(kw)
    return doc


def _read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


def test_builtin_parses():
    sc = scenario.parse_scenario(scenario.builtin("cavity"))
    assert sc.input_kind == "photon"
    assert sc.grid.dt == 1e-3
    assert sc.system.n_ch == 1


def test_unknown_builtin():
    with pytest.raises(scenario.ValidationError):
        scenario.builtin("nope")


def test_empty_document_reports_missing_fields():
    with pytest.raises(scenario.ScenarioError) as info:
        scenario.parse_scenario({})
    msgs = " ".join(v["message"] for v in info.value.violations)
    assert "system" in msgs and "input" in msgs


def test_all_violations_reported_with_paths():
    doc = _doc("cavity")
    doc["system"]["kappa"] = "fast"
    doc["input"]["pulses"][0]["gamma"] = -1.0
    doc["outputs"] = ["intensity_steady", "bogus"]
    with pytest.raises(scenario.ScenarioError) as info:
        scenario.parse_scenario(doc)
    paths = {v["path"] for v in info.value.violations}
    assert len(info.value.violations) >= 3
    assert any("kappa" in p for p in paths)
    assert any("outputs" in p for p in paths)


def test_channel_mismatch_rejected():
    doc = _doc("beamsplitter")
    doc["input"]["pulses"] = doc["input"]["pulses"][:1]
    with pytest.raises(scenario.ScenarioError):
        scenario.parse_scenario(doc)


def test_sampled_pulse_matches_family():
    t = np.arange(0.0, 10.0, 1e-3)
    spec = {"family": "samples", "values": list(np.sqrt(6) * np.exp(-3 * t)), "t_start": 0.0, "dt": 1e-3}
    p = scenario.build_pulse(spec)
    s = np.linspace(0.0, 5.0, 11)
    assert np.allclose(p(s), fields.ExponentialPulse(3.0)(s), atol=1e-9)


def test_heavy_tail_rejected():
    doc = _doc("cavity")
    doc["input"]["pulses"] = [{"family": "exponential", "gamma": 0.1}]
    with pytest.raises(scenario.ScenarioError) as info:
        scenario.parse_scenario(doc)
    assert any("outside the grid" in v["message"] for v in info.value.violations)


def test_transient_window_order():
    doc = _doc("dpa", transient={"t0": 5.0, "t_end": 1.0})
    with pytest.raises(scenario.ScenarioError):
        scenario.parse_scenario(doc)


def test_steady_intensity_matches_golden(tmp_path):
    sc = scenario.parse_scenario(_doc("cavity", outputs=["intensity_steady"]))
    scenario.run(sc, tmp_path)
    header, data = _read_csv(tmp_path / "intensity_steady.csv")
    assert header == ["t", "n_11_re", "n_11_im", "trace"]
    ref = np.abs(golden.cavity_output_pulse(data[:, 0], 2.0, 1.0, 1.0)) ** 2
    assert np.max(np.abs(data[:, 3] - ref)) < 5e-3
    assert np.max(np.abs(data[:, 2])) < 1e-12


def test_vacuum_through_passive_is_dark(tmp_path):
    sc = scenario.parse_scenario(_doc("vacuum-through-passive"))
    scenario.run(sc, tmp_path)
    for name in ("intensity_transient.csv", "intensity_steady.csv", "covariance_row1.csv"):
        _, data = _read_csv(tmp_path / name)
        assert np.max(np.abs(data[:, 1:])) < 1e-8, name


def test_shaper_emits_target(tmp_path):
    sc = scenario.parse_scenario(_doc("shaper", outputs=["intensity_steady"], grid={"t_min": -1.0, "t_max": 15.0, "dt": 2e-3}))
    scenario.run(sc, tmp_path)
    _, data = _read_csv(tmp_path / "intensity_steady.csv")
    ref = np.abs(golden.shaper_output(data[:, 0])) ** 2
    assert np.max(np.abs(data[:, -1] - ref)) < 5e-3


@pytest.mark.filterwarnings("ignore::qlinphoton.errors.AccuracyWarning")
def test_runs_are_byte_identical(tmp_path):
    sc = scenario.parse_scenario(_doc("dpa"))
    scenario.run(sc, tmp_path / "a")
    scenario.run(sc, tmp_path / "b")
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert files == sorted(p.name for p in (tmp_path / "b").iterdir())
    for name in files:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert b"\r\n" not in (tmp_path / "a" / "pulses.csv").read_bytes()


def test_manifest_lists_every_file(tmp_path):
    sc = scenario.parse_scenario(_doc("beamsplitter"))
    man = scenario.run(sc, tmp_path)
    on_disk = sorted(p.name for p in tmp_path.iterdir())
    assert sorted(man["files"]) == on_disk
    assert man["scenario"] == "beamsplitter"
    assert {"package_version", "operations", "grid", "format"} <= set(man)
    bs = json.loads((tmp_path / "beamsplitter.json").read_text())
    assert bs["coincidence_probability"] == pytest.approx(0.0, abs=1e-12)


def test_json_format(tmp_path):
    sc = scenario.parse_scenario(_doc("cavity", outputs=["intensity_steady"]))
    man = scenario.run(sc, tmp_path, fmt="json")
    assert "intensity_steady.json" in man["files"]
    obj = json.loads((tmp_path / "intensity_steady.json").read_text())
    assert obj["columns"][0] == "t"
    assert len(obj["rows"]) == TimeGrid(**SMALL).n


@pytest.mark.filterwarnings("ignore::qlinphoton.errors.AccuracyWarning")
def test_steady_products_skip_transient(tmp_path):
    sc = scenario.parse_scenario(_doc("dpa"))
    man = scenario.run(sc, tmp_path, products=scenario.STEADY_PRODUCTS)
    assert "intensity_transient.csv" not in man["files"]
    assert "intensity_steady.csv" in man["files"]


def _write(tmp_path, obj, name="sc.json"):
    p = tmp_path / name
    p.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return str(p)


def test_cli_simulate(tmp_path, capsys):
    path = _write(tmp_path, _doc("cavity", outputs=["pulses"]))
    assert cli.main(["simulate", path, "--out-dir", str(tmp_path / "o")]) == 0
    assert (tmp_path / "o" / "pulses.csv").exists()
    assert "pulses.csv" in capsys.readouterr().out


def test_cli_bad_json_exit_1(tmp_path, capsys):
    path = _write(tmp_path, "{not json")
    assert cli.main(["simulate", path, "--out-dir", str(tmp_path / "o")]) == 1
    assert json.loads(capsys.readouterr().err)["error"] == "validation"


def test_cli_schema_violation_exit_1(tmp_path, capsys):
    path = _write(tmp_path, {"system": {"type": "cavity"}})
    assert cli.main(["steady", path, "--out-dir", str(tmp_path / "o")]) == 1
    err = json.loads(capsys.readouterr().err)
    assert err["violations"]


def test_cli_missing_file_exit_1(tmp_path):
    assert cli.main(["simulate", str(tmp_path / "none.json"), "--out-dir", str(tmp_path / "o")]) == 1


def test_cli_unstable_system_exit_2(tmp_path, capsys):
    doc = _doc("cavity", outputs=["intensity_steady"])
    # an amplifier above threshold has no steady state
    doc["system"] = {"type": "dpa", "kappa": 1.0, "epsilon": 3.0}
    path = _write(tmp_path, doc)
    assert cli.main(["steady", path, "--out-dir", str(tmp_path / "o")]) == 2
    assert json.loads(capsys.readouterr().err)["error"] == "numerical"


def test_cli_synthesize(tmp_path):
    real = {"A": [[-3, 0], [-2 * np.sqrt(3), [-1, -1]]], "B": [[-np.sqrt(6)], [-np.sqrt(2)]], "C": [[np.sqrt(6), np.sqrt(2)]], "D": 1}
    path = _write(tmp_path, real, "real.json")
    assert cli.main(["synthesize", path, "--out-dir", str(tmp_path / "o")]) == 0
    out = json.loads((tmp_path / "o" / "synthesis.json").read_text())
    assert out["report"]["passed"]
    assert out["report"]["flat_unitary_residual"] < 1e-9


def test_cli_synthesize_rejects_unstable(tmp_path):
    path = _write(tmp_path, {"A": [[1.0]], "B": [[1.0]], "C": [[1.0]]}, "real.json")
    assert cli.main(["synthesize", path, "--out-dir", str(tmp_path / "o")]) == 1


def test_cli_example(tmp_path):
    assert cli.main(["example", "beamsplitter", "--dt", "1e-2", "--out-dir", str(tmp_path)]) == 0
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["grid"]["dt"] == 1e-2
