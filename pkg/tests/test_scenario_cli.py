import json
import subprocess
import sys
from pathlib import Path

import pytest

from qlitho import cli
from qlitho.errors import ScenarioParseError, ScenarioValidationError
from qlitho.reports import SCHEMA_VERSION, Check, Checker, Curve, ReportBundle, Table, emit_report
from qlitho.scenario import KINDS, load_scenario, parse_assignment, parse_text, schema_for, validate


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_yaml_parse_error_position(tmp_path):
    p = write(tmp_path, "bad.yaml", "kind: noon_compare\nparameters:\n  N: [1, 2\n  kappa0: 1\n")
    with pytest.raises(ScenarioParseError) as info:
        load_scenario(p)
    assert info.value.line is not None and info.value.column is not None
    assert "line" in str(info.value)


def test_json_parse_error_position():
    with pytest.raises(ScenarioParseError) as info:
        parse_text('{"kind": "noon_compare",\n "parameters": {"N": [1,]}}', "json")
    assert info.value.line == 2


def test_validation_aggregates_every_problem():
    raw = {"kind": "gaussian_pattern", "parameters": {"B": -1, "beta": 0, "x_points": 1.5, "bogus": 3}, "extra": 1}
    with pytest.raises(ScenarioValidationError) as info:
        validate(raw)
    text = "\n".join(info.value.violations)
    for key in ("parameters.B", "parameters.beta", "parameters.x_points", "parameters.bogus", "extra"):
        assert key in text
    assert len(info.value.violations) >= 5


def test_unknown_kind():
    with pytest.raises(ScenarioValidationError, match="kind"):
        validate({"kind": "spot_map"})


def test_cross_check_on_slit_geometry():
    with pytest.raises(ScenarioValidationError, match="slit spacing"):
        validate({"kind": "dangelo_angular", "parameters": {"a": 20, "b": 10}})


def test_defaults_filled_and_json_accepted(tmp_path):
    p = write(tmp_path, "s.json", json.dumps({"kind": "dangelo_alpha_scan"}))
    sc = load_scenario(p)
    assert sc.parameters["a"] == schema_for("dangelo_alpha_scan")["a"].default
    assert sc.output_dir == Path("reports/dangelo_alpha_scan")


def test_lengths_scale_with_wavelength():
    sc = validate({"kind": "dangelo_angular", "parameters": {"wavelength": 2.0}})
    assert sc.parameters["a"] == 40.0
    assert sc.context().wavelength == pytest.approx(2.0)


def test_si_units_use_speed_of_light():
    sc = validate({"kind": "rotation_audit", "parameters": {"units": "si", "wavelength": 5e-7}})
    ctx = sc.context()
    assert ctx.c == pytest.approx(299_792_458.0)
    assert ctx.wavelength == pytest.approx(5e-7)


def test_parse_assignment():
    assert parse_assignment("N=[2, 3]") == ("N", [2, 3])
    assert parse_assignment("eta=0.5") == ("eta", 0.5)
    with pytest.raises(ScenarioParseError):
        parse_assignment("N")


def test_every_kind_has_common_parameters():
    for kind in KINDS:
        assert {"units", "wavelength", "eta"} <= set(schema_for(kind))


def test_checker_scaling():
    c = Checker(scale=10)
    assert c.close("x", 1.05, 1.0, 0.01).passed
    assert not Checker().close("x", 1.05, 1.0, 0.01).passed
    assert c.close("rel", 101, 100, 0.001, relative=True).passed
    assert Check("n", 1.0, 2.0, 0.1, "abs", False).line().startswith("FAIL n:")


def test_emit_report_layout(tmp_path):
    bundle = ReportBundle(
        "demo",
        {"a": 1},
        [Check("ok", 1.0, 1.0, 0.0, "abs", True)],
        tables={"t": Table(["x", "y"], [[1, 2.5], [2, True]])},
        curves={"c": Curve([0, 1], [1, 0], "x", "y", "line")},
    )
    files = emit_report(bundle, tmp_path / "out", ["csv", "json", "plotdata"])
    names = sorted(str(f.relative_to(tmp_path / "out")) for f in files)
    assert names == ["plotdata/c.dat", "summary.json", "t.csv"]
    assert (tmp_path / "out/t.csv").read_text() == "x,y\n1,2.5\n2,true\n"
    dat = (tmp_path / "out/plotdata/c.dat").read_text().splitlines()
    assert dat[:3] == ["# x: x", "# y: y", "# curve: line"]
    assert dat[3] == "0 1"
    summary = json.loads((tmp_path / "out/summary.json").read_text())
    assert summary["schema_version"] == SCHEMA_VERSION
    assert summary["all_pass"] is True
    assert summary["checks"][0] == {"name": "ok", "measured": 1.0, "expected": 1.0, "tolerance": 0.0, "comparison": "abs", "pass": True}


def test_emit_report_rejects_unknown_format(tmp_path):
    with pytest.raises(ValueError, match="formats"):
        emit_report(ReportBundle("d", {}, []), tmp_path, ["svg"])


def test_emit_report_unwritable(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OSError, match="cannot create"):
        emit_report(ReportBundle("d", {}, []), blocker / "sub", ["json"])


def test_cli_alpha_scan_exit_zero(tmp_path, capsys):
    code = cli.main(["dangelo_alpha_scan", "--out", str(tmp_path)])
    out = capsys.readouterr().out
    assert code == 0
    assert "PASS pipeline_r_squared" in out
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["kind"] == "dangelo_alpha_scan"
    assert summary["parameters"]["tolerance_scale"] == 1.0
    assert (tmp_path / "alpha_scan.csv").exists()


def test_cli_failing_check_exit_one(tmp_path, capsys):
    code = cli.main(["rotation_audit", "--out", str(tmp_path), "--set", "gamma_expected=1.5", "--quiet"])
    out = capsys.readouterr().out
    assert code == 1
    assert "checks failed" in out and "PASS" not in out


def test_cli_tolerance_scale_rescues(tmp_path, capsys):
    code = cli.main(["rotation_audit", "--out", str(tmp_path), "--set", "gamma_expected=1.30", "--tolerance-scale", "3", "--quiet"])
    assert code == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    gamma = next(c for c in summary["checks"] if c["name"] == "gamma_at_probe_NA")
    assert gamma["tolerance"] == pytest.approx(0.015)


def test_cli_bad_scenario_exit_two(tmp_path, capsys):
    p = write(tmp_path, "s.yaml", "kind: gaussian_pattern\nparameters:\n  B: -1\n  N: 0\n")
    code = cli.main(["run", str(p), "--out", str(tmp_path / "o")])
    err = capsys.readouterr().err
    assert code == 2
    assert "parameters.B" in err and "parameters.N" in err


def test_cli_missing_file_exit_two(tmp_path, capsys):
    assert cli.main(["run", str(tmp_path / "nope.yaml")]) == 2


def test_seed_override_applies(tmp_path):
    res = cli.run_scenario({"kind": "rotation_audit", "parameters": {"draws": 50}}, tmp_path, seed_override=123)
    assert res.bundle.parameters["seed"] == 123


def test_seed_override_ignored_without_seed(tmp_path):
    res = cli.run_scenario({"kind": "dangelo_alpha_scan"}, tmp_path, seed_override=5)
    assert any("ignored" in n for n in res.bundle.notes)


def test_rerun_is_byte_identical(tmp_path):
    p = write(tmp_path, "rot.yaml", "kind: rotation_audit\noutput_dir: {}\nparameters:\n  draws: 200\n".format(tmp_path / "a"))
    first = cli.run_scenario(p)
    snap = {f: f.read_bytes() for f in first.files}
    second = cli.run_scenario(p)
    assert sorted(second.files) == sorted(snap)
    for f in second.files:
        assert f.read_bytes() == snap[f], f
    assert any(f.suffix == ".png" for f in first.files)


def test_kinds_listing(capsys):
    assert cli.main(["kinds"]) == 0
    out = capsys.readouterr().out
    for kind in KINDS:
        assert kind in out


def test_console_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "qlitho.cli", "absorber_convergence", "--out", str(tmp_path), "--formats", "json"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert sorted(p.name for p in tmp_path.iterdir()) == ["summary.json"]
