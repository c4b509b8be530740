import csv
import json
import shutil
import subprocess
import sys

import pytest

from nucshare import cli
from nucshare.simplex import Status
from nucshare.tables import package_data

TOY = package_data("toy")
SCENARIOS = package_data("scenarios")


def scenario_file(tmp_path, system, name="case", extra=""):
    p = tmp_path / f"{name}.toml"
    p.write_text(
        f'name = "{name}"\nsystem = "{system}"\n'
        "[[horizon.periods]]\nname = \"days\"\nstart_day = 0\ndays = 3\nweight = 121.66666666666667\n"
        + extra,
        encoding="utf-8",
    )
    return p


def read_rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def test_exit_code_mapping():
    assert cli.exit_code(Status.OPTIMAL) == 0
    assert cli.exit_code(Status.INFEASIBLE) == 10
    assert cli.exit_code(Status.UNBOUNDED) == 11
    assert cli.exit_code(Status.ITERATION_LIMIT) == 12


def test_run_toy(tmp_path):
    code, target = cli.run(SCENARIOS / "toy.toml", out=str(tmp_path / "a"), export=True)
    assert code == 0
    summary = json.loads((target / "summary.json").read_text())
    assert summary["status"] == "optimal"
    assert summary["objective_musd"] == pytest.approx(12497.76598, rel=1e-9)
    assert summary["nuclear_share"] == pytest.approx(0.0, abs=1e-12)
    assert summary["max_relative_balance_residual"] <= 1e-6
    for name in ("model.mps", "model_summary.json", "run.log", "generation.csv", "sankey.json"):
        assert (target / name).exists(), name


def test_run_is_deterministic(tmp_path):
    _, a = cli.run(SCENARIOS / "toy.toml", out=str(tmp_path / "a"))
    _, b = cli.run(SCENARIOS / "toy.toml", out=str(tmp_path / "b"))
    files = sorted(p.name for p in a.iterdir())
    assert files == sorted(p.name for p in b.iterdir())
    for name in files:
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_run_infeasible_exit(tmp_path):
    system = tmp_path / "capped"
    shutil.copytree(TOY, system)
    rows = read_rows(system / "tech_sites.csv")
    with open(system / "tech_sites.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        for r in rows:
            w.writerow({**r, "min": "", "max": "0", "existing": ""})
    code, target = cli.run(scenario_file(tmp_path, system), out=str(tmp_path / "o"))
    assert code == cli.EXIT_INFEASIBLE
    summary = json.loads((target / "summary.json").read_text())
    assert summary["status"] == "infeasible" and summary["objective_musd"] is None


def test_run_data_errors(tmp_path):
    assert cli.run(tmp_path / "missing.toml")[0] == cli.EXIT_DATA
    bad = tmp_path / "bad.toml"
    bad.write_text("name = [unterminated\n", encoding="utf-8")
    assert cli.run(bad)[0] == cli.EXIT_DATA
    broken = tmp_path / "broken"
    shutil.copytree(TOY, broken)
    (broken / "technologies.csv").write_text("name,bogus\nx,1\n", encoding="utf-8")
    code, target = cli.run(scenario_file(tmp_path, broken), out=str(tmp_path / "o"))
    assert code == cli.EXIT_DATA
    assert (target / "run.log").read_text().startswith("error:")


def test_output_dir_env(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.ENV_OUT, str(tmp_path / "env"))
    assert cli.output_dir(None, None, "x") == tmp_path / "env" / "x"
    assert cli.output_dir(str(tmp_path / "given"), None, "x") == tmp_path / "given"


def test_sweep_spec_validation(tmp_path):
    with pytest.raises(Exception):
        cli.SweepSpec((), (4,))
    with pytest.raises(Exception):
        cli.SweepSpec((-1.0,), (4,))
    spec = cli.SweepSpec((1000.0, 3000.0), (4, 20))
    assert len(spec.warnings()) == 2
    assert spec.cells() == [(1000.0, 4.0), (1000.0, 20.0), (3000.0, 4.0), (3000.0, 20.0)]
    p = tmp_path / "s.toml"
    p.write_text("[sweep]\nconstruction_times = [4]\n", encoding="utf-8")
    assert cli.sweep(p, out=str(tmp_path / "o"))[0] == cli.EXIT_DATA
    p.write_text("[sweep]\novernight_costs = [2000]\nconstruction_times = [4]\n", encoding="utf-8")
    assert cli.sweep(p, out=str(tmp_path / "o"))[0] == cli.EXIT_DATA


def test_single_cell_sweep_matches_run(tmp_path):
    spec = tmp_path / "one.toml"
    spec.write_text(
        f'name = "one"\nscenario = "{SCENARIOS / "toy.toml"}"\n'
        "[sweep]\novernight_costs = [1914]\nconstruction_times = [4]\n",
        encoding="utf-8",
    )
    code, target = cli.sweep(spec, out=str(tmp_path / "sw"))
    assert code == 0
    rows = read_rows(target / "sweep.csv")
    assert len(rows) == 1 and rows[0]["status"] == "optimal"
    checks = {r["check"]: r["passed"] for r in read_rows(target / "sweep_checks.csv")}
    assert set(checks.values()) == {"true"}

    scen = scenario_file(tmp_path, TOY, "cheap",
                         "[nuclear]\novernight_cost = 1914\nconstruction_time = 4\ndepreciation = 40\n")
    _, run_dir = cli.run(scen, out=str(tmp_path / "run"))
    summary = json.loads((run_dir / "summary.json").read_text())
    assert float(rows[0]["objective_musd"]) == pytest.approx(summary["objective_musd"], rel=1e-9)
    assert float(rows[0]["nuclear_share"]) == pytest.approx(summary["nuclear_share"], abs=1e-9)


def test_sweep_checks_flag_violations():
    spec = cli.SweepSpec((1.0, 2.0), (4.0,))
    rows = [
        {"overnight_cost": 1.0, "construction_time": 4.0, "status": "optimal", "nuclear_share": 0.1},
        {"overnight_cost": 2.0, "construction_time": 4.0, "status": "optimal", "nuclear_share": 0.3},
    ]
    checks = {name: ok for name, ok, _ in cli.sweep_checks(spec, rows)}
    assert checks["grid_complete"] and checks["all_optimal"]
    assert not checks["share_nonincreasing_in_cost"]
    checks = {name: ok for name, ok, _ in cli.sweep_checks(spec, rows[:1])}
    assert not checks["grid_complete"]


def test_lcoe_report(tmp_path):
    code, target, problems = cli.lcoe_report(out=str(tmp_path / "lcoe"))
    assert code == 0 and problems == []
    nuc = read_rows(target / "lcoe_nuclear.csv")
    assert len(nuc) == 12
    by = {(r["interest"], r["depreciation"], r["case"]): float(r["lcoe_usd_per_mwh"]) for r in nuc}
    assert by[("0.05", "40", "low")] == pytest.approx(36.465, abs=1e-3)
    assert by[("0.05", "40", "high")] == pytest.approx(135.60, abs=0.01)
    for i in ("0.0", "0.05", "0.1"):
        for d in ("40", "60"):
            assert by[(i, d, "low")] < by[(i, d, "high")]
    hist = read_rows(target / "lcoe_historic.csv")
    assert hist
    for r in hist:
        assert float(r["lcoe_low"]) <= float(r["lcoe_high"])
        if r["technology"].startswith(("wind", "pv")):
            assert float(r["fuel_low"]) == float(r["fuel_high"]) == 0.0
    assert cli.lcoe_report(tmp_path / "nowhere", out=str(tmp_path / "x"))[0] == cli.EXIT_DATA


def test_main_dispatch(tmp_path, capsys):
    assert cli.main(["lcoe", "--out", str(tmp_path / "l")]) == 0
    assert capsys.readouterr().out.strip() == str(tmp_path / "l")
    assert cli.main(["sweep", "x.toml", "--threads", "0"]) == cli.EXIT_DATA
    assert cli.main(["run", str(tmp_path / "none.toml")]) == cli.EXIT_DATA
    with pytest.raises(SystemExit):
        cli.main([])


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "nucshare.cli", "lcoe", "--out", str(tmp_path / "l")],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "l" / "lcoe_nuclear.csv").exists()
