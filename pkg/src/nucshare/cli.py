"""Command-line scenario runner.

    nucshare run <scenario.toml>  [--out DIR] [--export-mps] [--verbose]
    nucshare sweep <sweep.toml>   [--out DIR] [--threads N] [--verbose]
    nucshare lcoe [<datadir>]     [--out DIR]

Exit codes: 0 optimal, 10 infeasible, 11 unbounded, 12 solver gave up
(iteration limit or numerical trouble), 20 bad input data.
"""
from __future__ import annotations

import argparse
import dataclasses
import itertools
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import tomli

from . import finance
from .analysis import SolvedModel, analyze, capacity_factor, generation_share, write_report
from .errors import DataError, DomainError, NucshareError
from .lpbuild import build, summary_json
from .mps import export_mps
from .simplex import Status, Tolerances, solve
from .system import ScenarioConfig, apply_scenario, load_scenario, load_system
from .tables import package_data

ENV_OUT = "NUCSHARE_OUT"
DEFAULT_OUT = "nucshare-out"

EXIT_OK = 0
EXIT_INFEASIBLE = 10
EXIT_UNBOUNDED = 11
EXIT_SOLVER = 12
EXIT_DATA = 20

OCC_RANGE = (1914.0, 12600.0)
TIME_RANGE = (4.0, 10.0)

log = logging.getLogger("nucshare")


def exit_code(status: Status) -> int:
    return {
        Status.OPTIMAL: EXIT_OK,
        Status.INFEASIBLE: EXIT_INFEASIBLE,
        Status.UNBOUNDED: EXIT_UNBOUNDED,
    }.get(status, EXIT_SOLVER)


def output_dir(explicit: str | None, scenario: ScenarioConfig | None = None, name: str = "run") -> Path:
    """``--out`` wins, then the scenario's own setting, then ``$NUCSHARE_OUT/<name>``."""
    if explicit:
        return Path(explicit)
    if scenario is not None and scenario.output_dir:
        return Path(scenario.output_dir)
    return Path(os.environ.get(ENV_OUT, DEFAULT_OUT)) / name


# -- single runs ------------------------------------------------------------------------


def tolerances(scenario: ScenarioConfig) -> Tolerances:
    return Tolerances(
        feasibility=scenario.feasibility_tol,
        optimality=scenario.optimality_tol,
        max_iterations=scenario.max_iterations,
    )


def solve_scenario(scenario: ScenarioConfig, iteration_log=None) -> SolvedModel:
    """Load the scenario's system, build the LP and solve it."""
    if not scenario.system_dir:
        raise DataError(f"scenario {scenario.name}: no system directory given")
    system = apply_scenario(load_system(scenario.system_dir, scenario), scenario)
    lp = build(system, scenario)
    return SolvedModel(lp, solve(lp, tolerances(scenario), log=iteration_log))


def _nuclear_metrics(model: SolvedModel, tech: str) -> tuple[float, float]:
    try:
        model.system.tech(tech)
    except KeyError:
        return math.nan, math.nan
    share = generation_share(model, tech)
    try:
        cf = capacity_factor(model, tech)
    except DomainError:
        cf = math.nan
    return share, cf


def _json_num(v: float):
    return None if isinstance(v, float) and math.isnan(v) else v


def run(scenario_path: str | Path, out: str | None = None, export: bool = False,
        verbose: bool = False) -> tuple[int, Path | None]:
    """Build, solve and analyze one scenario; returns (exit code, report directory)."""
    try:
        scenario = load_scenario(scenario_path)
    except NucshareError as exc:
        log.error("%s", exc)
        return EXIT_DATA, None
    target = output_dir(out, scenario, scenario.name)
    target.mkdir(parents=True, exist_ok=True)
    lines: list[str] = []

    def note(msg: str):
        lines.append(msg)
        if verbose:
            print(msg, file=sys.stderr)

    try:
        model = solve_scenario(scenario, note)
    except NucshareError as exc:
        log.error("%s", exc)
        (target / "run.log").write_text(f"error: {exc}\n", encoding="utf-8")
        return EXIT_DATA, target

    lp, sol = model.lp, model.solution
    (target / "model_summary.json").write_text(summary_json(lp), encoding="utf-8")
    if export:
        (target / "model.mps").write_text(export_mps(lp), encoding="utf-8")
    summary = {
        "scenario": scenario.name,
        "status": sol.status.value,
        "iterations": sol.iterations,
        "objective_musd": _json_num(sol.objective) if sol.optimal else None,
    }
    if sol.optimal:
        share, cf = _nuclear_metrics(model, scenario.nuclear_tech)
        summary["nuclear_share"] = _json_num(share)
        summary["nuclear_capacity_factor"] = _json_num(cf)
        report = analyze(model)
        summary["max_relative_balance_residual"] = report.balance_check["max_relative_residual"]
        write_report(report, target)
    (target / "summary.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    lines.append(f"status {sol.status.value}")
    (target / "run.log").write_text("\n".join(lines) + "\n", encoding="utf-8")
    if not sol.optimal:
        log.error("scenario %s: %s", scenario.name, sol.message)
    return exit_code(sol.status), target


# -- sweeps ------------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepSpec:
    """Grid of nuclear overnight costs ($/kW) and construction times (years)."""

    overnight_costs: tuple[float, ...]
    construction_times: tuple[float, ...]
    interest: float = 0.05
    depreciation: int = 40
    scenario: str | None = None  # base scenario file
    name: str = "sweep"

    def __post_init__(self):
        object.__setattr__(self, "overnight_costs", tuple(float(c) for c in self.overnight_costs))
        object.__setattr__(self, "construction_times", tuple(float(t) for t in self.construction_times))
        if not self.overnight_costs or not self.construction_times:
            raise DataError("sweep: cost and construction-time lists must be nonempty")
        if any(c < 0 for c in self.overnight_costs) or any(t < 0 for t in self.construction_times):
            raise DataError("sweep: costs and construction times must be nonnegative")

    def warnings(self) -> list[str]:
        """Values outside the range of published estimates."""
        out = []
        for c in self.overnight_costs:
            if not OCC_RANGE[0] <= c <= OCC_RANGE[1]:
                out.append(f"overnight cost {c:g} $/kW outside {OCC_RANGE[0]:g}-{OCC_RANGE[1]:g}")
        for t in self.construction_times:
            if not TIME_RANGE[0] <= t <= TIME_RANGE[1]:
                out.append(f"construction time {t:g} yr outside {TIME_RANGE[0]:g}-{TIME_RANGE[1]:g}")
        return out

    def cells(self) -> list[tuple[float, float]]:
        return list(itertools.product(self.overnight_costs, self.construction_times))


def load_sweep(path: str | Path) -> SweepSpec:
    p = Path(path)
    try:
        doc = tomli.loads(p.read_text(encoding="utf-8"))
    except (OSError, tomli.TOMLDecodeError) as exc:
        raise DataError(f"{p}: {exc}") from None
    grid = doc.get("sweep", {})
    try:
        return SweepSpec(
            overnight_costs=tuple(grid["overnight_costs"]),
            construction_times=tuple(grid["construction_times"]),
            interest=float(grid.get("interest", 0.05)),
            depreciation=int(grid.get("depreciation", 40)),
            scenario=str((p.parent / doc["scenario"]).resolve()) if "scenario" in doc else None,
            name=str(doc.get("name", p.stem)),
        )
    except KeyError as exc:
        raise DataError(f"{p}: missing key {exc}") from None
    except (TypeError, ValueError) as exc:
        raise DataError(f"{p}: {exc}") from None


SWEEP_COLUMNS = ["overnight_cost", "construction_time", "status", "nuclear_share",
                 "nuclear_capacity_factor", "objective_musd", "iterations"]


def sweep_cell(base: ScenarioConfig, spec: SweepSpec, occ: float, years: float) -> dict:
    """Solve one grid cell; failures are reported in the row, never raised."""
    scenario = dataclasses.replace(
        base,
        name=f"{spec.name}_{occ:g}_{years:g}",
        nuclear_overnight_cost=occ,
        nuclear_construction_time=years,
        nuclear_depreciation=spec.depreciation,
        interest=spec.interest,
    )
    row = {"overnight_cost": occ, "construction_time": years, "status": "", "nuclear_share": math.nan,
           "nuclear_capacity_factor": math.nan, "objective_musd": math.nan, "iterations": 0}
    try:
        model = solve_scenario(scenario)
    except NucshareError as exc:
        row["status"] = f"data_error: {exc}"
        return row
    sol = model.solution
    row["status"] = sol.status.value
    row["iterations"] = sol.iterations
    if sol.optimal:
        row["objective_musd"] = sol.objective
        row["nuclear_share"], row["nuclear_capacity_factor"] = _nuclear_metrics(model, base.nuclear_tech)
    return row


def _cell_job(args):
    return sweep_cell(*args)


def run_sweep(spec: SweepSpec, base: ScenarioConfig, threads: int = 1) -> list[dict]:
    """All grid cells in row-major (cost, time) order."""
    jobs = [(base, spec, occ, t) for occ, t in spec.cells()]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(_cell_job, jobs))
    return [_cell_job(j) for j in jobs]


def sweep_checks(spec: SweepSpec, rows: list[dict], tol: float = 1e-6) -> list[tuple[str, bool, str]]:
    """Completeness and monotonicity diagnostics over a solved grid."""
    cells = {(r["overnight_cost"], r["construction_time"]): r for r in rows}
    out = []
    complete = len(rows) == len(cells) == len(spec.cells()) and all(c in cells for c in spec.cells())
    out.append(("grid_complete", complete, f"{len(rows)} of {len(spec.cells())} cells"))
    failed = [c for c, r in cells.items() if r["status"] != "optimal"]
    out.append(("all_optimal", not failed, ", ".join(f"{a:g}/{b:g}" for a, b in failed) or "-"))

    def share(c, t):
        v = cells.get((c, t), {}).get("nuclear_share", math.nan)
        return v

    bad = []
    costs, times = sorted(spec.overnight_costs), sorted(spec.construction_times)
    for t in times:
        for c0, c1 in zip(costs, costs[1:]):
            a, b = share(c0, t), share(c1, t)
            if not (math.isnan(a) or math.isnan(b)) and b > a + tol:
                bad.append(f"t={t:g}: {c0:g}->{c1:g}")
    out.append(("share_nonincreasing_in_cost", not bad, "; ".join(bad) or "-"))
    bad = []
    for c in costs:
        for t0, t1 in zip(times, times[1:]):
            a, b = share(c, t0), share(c, t1)
            if not (math.isnan(a) or math.isnan(b)) and b > a + tol:
                bad.append(f"occ={c:g}: {t0:g}->{t1:g}")
    out.append(("share_nonincreasing_in_time", not bad, "; ".join(bad) or "-"))
    return out


def _fmt(v) -> str:
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(round(v, 9) + 0.0)
    return str(v)


def write_sweep(rows: list[dict], checks, target: Path) -> list[Path]:
    target.mkdir(parents=True, exist_ok=True)
    p1 = target / "sweep.csv"
    with open(p1, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(SWEEP_COLUMNS) + "\n")
        for r in rows:
            fh.write(",".join(_csv_field(_fmt(r[k])) for k in SWEEP_COLUMNS) + "\n")
    p2 = target / "sweep_checks.csv"
    with open(p2, "w", encoding="utf-8", newline="") as fh:
        fh.write("check,passed,detail\n")
        for name, ok, detail in checks:
            fh.write(f"{name},{str(ok).lower()},{_csv_field(detail)}\n")
    return [p1, p2]


def _csv_field(s: str) -> str:
    if any(ch in s for ch in ',"\n'):
        return '"' + s.replace('"', '""') + '"'
    return s


def sweep(spec_path: str | Path, out: str | None = None, threads: int = 1) -> tuple[int, Path | None]:
    try:
        spec = load_sweep(spec_path)
        if not spec.scenario:
            raise DataError(f"{spec_path}: no base scenario")
        base = load_scenario(spec.scenario)
    except NucshareError as exc:
        log.error("%s", exc)
        return EXIT_DATA, None
    for w in spec.warnings():
        log.warning("%s", w)
    rows = run_sweep(spec, base, threads)
    checks = sweep_checks(spec, rows)
    target = output_dir(out, None, spec.name)
    write_sweep(rows, checks, target)
    return EXIT_OK, target


# -- LCOE tables -------------------------------------------------------------------------

LCOE_INTERESTS = (0.0, 0.05, 0.10)


def lcoe_report(data_dir: str | Path | None = None, out: str | None = None) -> tuple[int, Path | None, list[str]]:
    """Nuclear projection range and historic recomputation at 0, 5 and 10 % interest."""
    problems: list[str] = []
    if data_dir:
        d = Path(data_dir)
        nuc_path, hist_path = d / "nuclear_parameters.csv", d / "lazard_inputs.csv"
    else:
        nuc_path = package_data("finance", "nuclear_parameters.csv")
        hist_path = package_data("finance", "lazard_inputs.csv")
    try:
        params = finance.nuclear_reference(nuc_path)
        hist = finance.load_lazard_rows(hist_path, problems)
    except NucshareError as exc:
        log.error("%s", exc)
        return EXIT_DATA, None, [str(exc)]
    target = output_dir(out, None, "lcoe")
    target.mkdir(parents=True, exist_ok=True)

    rows = []
    for i in LCOE_INTERESTS:
        for d in (40, 60):
            lo, hi = finance.nuclear_range(i, d, params=params)
            for label, b in (("low", lo), ("high", hi)):
                rows.append({
                    "interest": i, "depreciation": d, "case": label,
                    "idc_usd_per_kw": round(b.idc, 6), "annuity_usd_per_kw": round(b.annuity, 6),
                    "lcoe_usd_per_mwh": round(b.lcoe, 6),
                })
    finance.write_breakdowns_csv(target / "lcoe_nuclear.csv", rows)

    rows = []
    for r in hist:
        fuel = r.fuel_cost()
        for i in LCOE_INTERESTS:
            try:
                lo, hi = finance.lazard_lcoe(r, i)
            except DomainError as exc:
                problems.append(f"{r.technology} {r.year}: {exc}")
                continue
            rows.append({
                "technology": r.technology, "year": r.year, "interest": i,
                "fuel_low": round(fuel[0], 6), "fuel_high": round(fuel[1], 6),
                "lcoe_low": round(lo, 6), "lcoe_high": round(hi, 6),
            })
    if rows:
        finance.write_breakdowns_csv(target / "lcoe_historic.csv", rows)
    (target / "lcoe_problems.txt").write_text("".join(p + "\n" for p in problems), encoding="utf-8")
    for p in problems:
        log.warning("%s", p)
    return EXIT_OK, target, problems


# -- entry point -------------------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nucshare", description="Energy-system scenarios with nuclear cost sweeps.")
    ap.add_argument("--verbose", "-v", action="store_true", help="echo the solver log")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="solve one scenario")
    p.add_argument("scenario")
    p.add_argument("--out")
    p.add_argument("--export-mps", action="store_true", help="also write the LP as model.mps")
    p.add_argument("--verbose", "-v", action="store_true", dest="verbose_sub")

    p = sub.add_parser("sweep", help="solve an overnight-cost x construction-time grid")
    p.add_argument("spec")
    p.add_argument("--out")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--verbose", "-v", action="store_true", dest="verbose_sub")

    p = sub.add_parser("lcoe", help="LCOE tables for nuclear and historic estimates")
    p.add_argument("datadir", nargs="?")
    p.add_argument("--out")
    p.add_argument("--verbose", "-v", action="store_true", dest="verbose_sub")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    verbose = args.verbose or args.verbose_sub
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    if args.command == "run":
        code, target = run(args.scenario, args.out, args.export_mps, verbose)
    elif args.command == "sweep":
        if args.threads < 1:
            log.error("--threads must be at least 1")
            return EXIT_DATA
        code, target = sweep(args.spec, args.out, args.threads)
    else:
        code, target, _ = lcoe_report(args.datadir, args.out)
    if target is not None:
        print(target)
    return code


if __name__ == "__main__":
    sys.exit(main())
