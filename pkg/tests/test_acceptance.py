"""End-to-end acceptance checks, one test per criterion.

Each test records a one-line verdict that is printed in the terminal summary.
"""
import math
import time

import numpy as np
import pytest

import systems
from conftest import ACCEPTANCE, SCENARIOS, TIMINGS
from nucshare import analysis as an
from nucshare import cli
from nucshare import finance as fin
from nucshare import network as net
from nucshare.analysis import SolvedModel
from nucshare.lp import from_dense
from nucshare.lpbuild import build
from nucshare.mps import export_mps, parse_mps
from nucshare.simplex import Status, solve
from nucshare.system import load_scenario
from oracles import random_bounded_lp, vertex_enumeration

REPORTED_RANGE = (32.6, 96.4)


def verdict(number: int, title: str, checks: list[tuple[str, bool]]):
    failed = [label for label, ok in checks if not ok]
    status = "PASS" if not failed else "FAIL"
    detail = "; ".join(label for label, _ in checks) if not failed else "failed: " + "; ".join(failed)
    ACCEPTANCE.append(f"criterion {number} {status}  {title}: {detail}")
    assert not failed, failed


@pytest.fixture(scope="module")
def toy_sweep():
    spec = cli.load_sweep(SCENARIOS / "toy_sweep.toml")
    rows = cli.run_sweep(spec, cli.load_scenario(spec.scenario))
    return spec, {(r["overnight_cost"], r["construction_time"]): r for r in rows}


def test_criterion_1_finance_exactness():
    start = time.perf_counter()
    checks = [
        ("inflation 2014 -> 106.07", round(fin.adjust_inflation(fin.MoneyValue(100.0, 2014)), 2) == 106.07),
        ("combined O&M 111.09", round(fin.combine_om(93.28, 2.14, 0.95), 2) == 111.09),
        ("split O&M 69.59/3.35",
         tuple(round(v, 2) for v in fin.split_om(97.43, 2.5, 0.95)) == (69.59, 3.35)),
        ("full-load hours 8322", round(fin.full_load_hours(0.95)) == 8322),
    ]
    worst = 0.0
    for combined in (12.0, 97.43, 111.09, 500.0):
        for ratio in (0.0, 0.5, 2.5, 40.0):
            for u in (0.3, 0.8, 0.95):
                f, v = fin.split_om(combined, ratio, u)
                worst = max(worst, abs(fin.combine_om(f, v, u) / combined - 1))
    checks.append((f"O&M round trip rel err {worst:.1e}", worst <= 1e-9))
    a = fin.annuity(fin.idc(0.05, 7, 6000), 6000, 0.05, 40)
    g = 1.05 ** 40
    pv = a * (g - 1) / (g * 0.05)
    checks.append(("annuity present value identity",
                   abs(pv / (6000 + fin.idc(0.05, 7, 6000)) - 1) <= 1e-9))
    elapsed = time.perf_counter() - start
    checks.append((f"{elapsed * 1e3:.1f} ms", elapsed < 1.0))
    verdict(1, "finance exactness", checks)


def test_criterion_2_lcoe_range():
    lo, hi = fin.nuclear_range(0.05, 40)
    lo60, hi60 = fin.nuclear_range(0.05, 60)
    low_dev = lo.lcoe / REPORTED_RANGE[0] - 1
    high_dev = hi.lcoe / REPORTED_RANGE[1] - 1
    checks = [
        (f"range [{lo.lcoe:.2f}, {hi.lcoe:.2f}] overlaps reported",
         lo.lcoe <= REPORTED_RANGE[1] and hi.lcoe >= REPORTED_RANGE[0]),
        (f"lower endpoint {low_dev:+.1%}", abs(low_dev) <= 0.15),
        (f"upper endpoint {high_dev:+.1%}", abs(high_dev) <= 0.15),
        (f"60 yr lowers upper to {hi60.lcoe:.2f}", hi60.lcoe < hi.lcoe),
        (f"60 yr lower end moves {lo.lcoe - lo60.lcoe:.2f} vs upper {hi.lcoe - hi60.lcoe:.2f}",
         0 <= lo.lcoe - lo60.lcoe < 0.2 * (hi.lcoe - hi60.lcoe)),
    ]
    verdict(2, "LCOE range", checks)


def test_criterion_3_solver_correctness(toy_model):
    start = time.perf_counter()
    rng = np.random.default_rng(20240601)
    worst, count = 0.0, 0
    while count < 200:
        c, A, sense, b, ub = random_bounded_lp(rng, max_vars=20)
        ref, _ = vertex_enumeration(c, A, sense, b, ub)
        if ref is None:
            continue
        sol = solve(from_dense(c, A, sense, b, ub=ub))
        err = abs(sol.objective - ref) / max(1.0, abs(ref)) if sol.optimal else math.inf
        worst = max(worst, err)
        count += 1
    checks = [(f"200 random LPs, worst rel err {worst:.1e}", worst <= 1e-6)]
    inf = math.inf
    infeasible = [
        from_dense([1, 1], [[1, 1], [1, 1]], ["G", "L"], [5, 4]),
        from_dense([1, 1], [[1, 1]], ["E"], [3], ub=[1, 1]),
    ]
    unbounded = [
        from_dense([-1, 0], [[1, -1]], ["L"], [1]),
        from_dense([1], [[1]], ["L"], [5], lb=[-inf]),
    ]
    checks.append(("infeasible fixtures", all(solve(lp).status is Status.INFEASIBLE for lp in infeasible)))
    checks.append(("unbounded fixtures", all(solve(lp).status is Status.UNBOUNDED for lp in unbounded)))
    text = export_mps(toy_model.lp)
    checks.append(("MPS round trip byte-identical", export_mps(parse_mps(text)) == text))
    elapsed = time.perf_counter() - start
    checks.append((f"{elapsed:.1f} s", elapsed < 30.0))
    verdict(3, "solver correctness", checks)


def test_criterion_4_model_conservation(reference_model):
    res = an.balance_residuals(reference_model)
    biggest_peak = max(peak for _, peak in res.values())
    worst = 0.0
    for key, (viol, peak) in res.items():
        # demand-free nodes are scaled by the largest peak in the model
        worst = max(worst, viol / (peak if peak > 0 else biggest_peak))
    stores = an.storage_totals(reference_model)
    free = [n for n, t in stores.items() if t["discharged"] > t["charged"] + 1e-9 * (1 + t["charged"])]
    solve_time = TIMINGS["reference_solve"]
    checks = [
        ("optimal", reference_model.optimal),
        (f"worst residual/peak {worst:.1e}", worst <= 1e-6),
        (f"{len(stores)} storages without free energy", not free),
        (f"solve {solve_time:.1f} s", solve_time < 60.0),
    ]
    verdict(4, "model conservation", checks)


def test_criterion_5_nuclear_share_sweep(toy_sweep):
    spec, cells = toy_sweep
    costs, times = sorted(spec.overnight_costs), sorted(spec.construction_times)
    share = {k: r["nuclear_share"] for k, r in cells.items()}
    tol = 1e-6
    in_cost = all(share[(c1, t)] <= share[(c0, t)] + tol for t in times for c0, c1 in zip(costs, costs[1:]))
    in_time = all(share[(c, t1)] <= share[(c, t0)] + tol for c in costs for t0, t1 in zip(times, times[1:]))
    checks = [
        (f"{len(costs)} costs x {times}", len(costs) >= 5 and {4.0, 7.0, 10.0} <= set(times)),
        ("all optimal", all(r["status"] == "optimal" for r in cells.values())),
        ("nonincreasing in cost", in_cost),
        ("nonincreasing in construction time", in_time),
        (f"share {share[(12600.0, 10.0)]:.3f} at 12600 $/kW", all(share[(12600.0, t)] <= tol for t in times)),
        (f"share {share[(1914.0, 4.0)]:.3f} at 1914 $/kW", all(share[(1914.0, t)] > 0 for t in times)),
    ]
    verdict(5, "nuclear share sweep", checks)


def test_criterion_6_base_load_capacity_factor(toy_sweep):
    _, cells = toy_sweep
    relevant = [r for r in cells.values() if r["nuclear_share"] >= 0.05]
    cfs = [r["nuclear_capacity_factor"] for r in relevant]
    checks = [
        (f"{len(relevant)} cells with share >= 5%", len(relevant) > 0),
        (f"min capacity factor {min(cfs, default=math.nan):.3f}", all(cf >= 0.85 for cf in cfs)),
    ]
    verdict(6, "nuclear capacity factor", checks)


def test_criterion_7_flexibility_value(toy_model, toy_inflexible, toy_no_nuclear, toy_cheap_nuclear,
                                       reference_model):
    base = load_scenario(SCENARIOS / "toy.toml")
    pairs = {"default": (toy_model, toy_inflexible)}
    for label, flex, occ, years in (("no nuclear", toy_no_nuclear, 12600.0, 10.0),
                                    ("cheap nuclear", toy_cheap_nuclear, 1914.0, 4.0)):
        fixed = cli.solve_scenario(base.replace(nuclear_overnight_cost=occ, nuclear_construction_time=years,
                                                flexible=False))
        pairs[label] = (flex, fixed)
    checks = []
    for label, (flex, fixed) in pairs.items():
        a, b = flex.solution.objective, fixed.solution.objective
        checks.append((f"{label} {a:.2f} <= {b:.2f}", fixed.optimal and b >= a * (1 - 1e-9)))
    a, b = (m.solution.objective for m in pairs["no nuclear"])
    checks.append((f"no nuclear strictly +{b - a:.2f}", b > a * (1 + 1e-6)))
    models = {"toy default": toy_model, "toy no nuclear": toy_no_nuclear,
              "toy cheap nuclear": toy_cheap_nuclear, "reference": reference_model}
    above = []
    for label, model in models.items():
        regions = sorted({r for (c, r) in model.layout.balance if c == "electricity"})
        for r in regions:
            flex = an.residual_load(model, r, "flexible").peak
            infl = an.residual_load(model, r, "inflexible").peak
            if flex > infl + 1e-9 * max(1.0, infl):
                above.append(f"{label} {r} {flex:.3f} > {infl:.3f} GW")
    checks.append(("flexible residual peak <= inflexible in every region"
                   + (f" ({', '.join(above)})" if above else ""), not above))
    verdict(7, "flexibility value", checks)


def test_criterion_8_network_bits():
    def link(kind, steps=()):
        return net.Link("L", "A", "B", kind, "electricity", 1000.0, steps=steps)

    hvdc = net.delivered(1.0, link(net.LinkKind.HVDC))
    hvac = net.delivered(1.0, link(net.LinkKind.HVAC))
    pipe = net.delivered(1.0, link(net.LinkKind.H2_PIPELINE))
    stepped = link(net.LinkKind.HVAC, (net.ExpansionStep(100.0, 2.0), net.ExpansionStep(300.0, 1.0)))
    cost = net.expansion_cost(stepped, 2.5)
    checks = [
        (f"HVDC {hvdc:.6f}", f"{hvdc:.6f}" == "0.970000"),
        (f"HVAC {hvac:.6f}", f"{hvac:.6f}" == "0.950000"),
        (f"pipeline {pipe:.6f}", f"{pipe:.6f}" == "0.975600"),
        # 2 GW at 100 plus 0.5 GW at 300
        (f"step cost {cost:g}", cost == 350.0),
    ]
    verdict(8, "network arithmetic", checks)


def test_criterion_9_proportional_heating():
    system = systems.heat_spike()
    lp = build(system)
    sol = solve(lp)
    model = SolvedModel(lp, sol)
    acts = model.layout.act[("boiler", "Z")]
    pattern = sol.x[acts].reshape(-1, 4)
    hit = np.allclose(pattern, [0.88, 1.0, 1.0, 1.0], atol=1e-9)
    utilization = pattern.sum(axis=1) / 4.0
    # uniqueness: no other hourly draw is optimal within a tiny objective slack
    A = np.vstack([lp.A.toarray(), lp.cost])
    sense = list(lp.sense) + ["L"]
    rhs = np.append(lp.rhs, sol.objective - lp.offset + 1e-9 * max(1.0, abs(sol.objective)))
    spread = 0.0
    for k in acts:
        e = np.zeros(lp.n_vars)
        e[k] = 1.0
        lo = solve(from_dense(e, A, sense, rhs, lb=lp.lb, ub=lp.ub))
        hi = solve(from_dense(-e, A, sense, rhs, lb=lp.lb, ub=lp.ub))
        spread = max(spread, -hi.objective - lo.objective)
    checks = [
        ("feasible", sol.optimal),
        (f"utilization {utilization.min():.2%}", np.allclose(utilization, 0.97, atol=1e-9)),
        ("pattern (0.88, 1, 1, 1) in every block", hit),
        (f"objective {sol.objective:.6f}", math.isclose(sol.objective, 5.28, rel_tol=1e-12)),
        (f"unique: max hourly range {spread:.1e}", spread <= 1e-6),
    ]
    verdict(9, "proportional heating", checks)
