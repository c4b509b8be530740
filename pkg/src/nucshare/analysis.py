"""Result metrics derived from a solved model.

Everything here is a pure function of the LP (with its layout) and the
solution vector: generation shares, capacity factors, residual-load duration
curves, cost families, Sankey edges and balance checks.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import DomainError, SolutionError
from .lp import LpInstance
from .lpbuild import Layout, objective_by_family
from .simplex import Solution
from .system import ELECTRICITY, EnergySystem, default_inflexible_rule
from .timegrid import Level

FAMILIES = ("generation", "flexibility", "grid", "thermal_backup", "imports")


@dataclass(frozen=True)
class SolvedModel:
    """An LP built by :func:`nucshare.lpbuild.build` together with its solution."""

    lp: LpInstance
    solution: Solution

    @property
    def layout(self) -> Layout:
        return self.lp.layout

    @property
    def system(self) -> EnergySystem:
        return self.lp.layout.system

    @property
    def optimal(self) -> bool:
        return self.solution.optimal

    def require_optimal(self) -> None:
        if not self.solution.optimal:
            raise SolutionError(f"solution is {self.solution.status.value}, not optimal")

    def values(self, idx) -> np.ndarray:
        return self.solution.x[np.asarray(idx, dtype=np.int64)]

    def capacity(self, tech: str, region: str) -> float:
        """Installed capacity (existing plus new) in GW."""
        site = self.system.tech(tech).site(region)
        return float(self.solution.x[self.layout.cap[(tech, region)]]) + site.existing_gw

    def weights(self, level: Level) -> np.ndarray:
        return self.system.grid.weights(level)


@dataclass(frozen=True)
class ResidualLoadCurve:
    region: str
    variant: str  # "flexible" | "inflexible"
    series: np.ndarray  # GW per hour, sorted nonincreasing

    @property
    def peak(self) -> float:
        return float(self.series[0]) if self.series.size else 0.0

    @property
    def residual_energy(self) -> float:
        """Energy of the hours with positive residual load (GWh over the modelled hours)."""
        return float(self.series[self.series > 0].sum())

    @property
    def excess_energy(self) -> float:
        """Signed (nonpositive) energy of the hours with surplus renewables."""
        return float(self.series[self.series < 0].sum())


@dataclass(frozen=True)
class SankeyEdge:
    source: str
    target: str
    value: float  # TWh (or Gpkm for transport services) per year


@dataclass
class AnalysisReport:
    shares: dict[str, float]
    capacity_factors: dict[str, float]
    costs: dict[str, float]
    objective: float
    sankey: list[SankeyEdge]
    storage: dict[str, dict[str, float]]
    residual: list[ResidualLoadCurve] = field(default_factory=list)
    shifted_energy: dict[str, float] = field(default_factory=dict)
    balance_check: dict[str, float] = field(default_factory=dict)


# -- generation -------------------------------------------------------------------


def electricity_output(model: SolvedModel, tech: str, region: str | None = None) -> float:
    """Electricity produced by ``tech`` over the year in GWh (step weights applied)."""
    lay = model.layout
    t = model.system.tech(tech)
    coef = t.outputs.get(ELECTRICITY, 0.0)
    if coef == 0.0:
        return 0.0
    w = model.weights(lay.act_level[tech])
    total = 0.0
    for (name, reg), idx in lay.act.items():
        if name == tech and (region is None or reg == region):
            total += coef * float(w @ model.values(idx))
    return total


def _generators(system: EnergySystem) -> list[str]:
    return [t.name for t in system.techs if ELECTRICITY in t.outputs]


def generation_share(model: SolvedModel, techs: str | Iterable[str]) -> float:
    """Share of the named technologies in total electricity generation.

    Generation counts conversion technologies only; storage discharge,
    imports and transmission are not generation.
    """
    model.require_optimal()
    names = [techs] if isinstance(techs, str) else list(techs)
    for n in names:
        model.system.tech(n)
    total = sum(electricity_output(model, n) for n in _generators(model.system))
    if total <= 0.0:
        raise DomainError("no electricity generation; share undefined")
    return sum(electricity_output(model, n) for n in names) / total


def capacity_factor(model: SolvedModel, tech: str, region: str | None = None) -> float:
    """Realized activity divided by installed capacity times the represented hours."""
    model.require_optimal()
    lay = model.layout
    lvl = lay.act_level[tech]
    w = model.weights(lvl)
    hours = float(w.sum()) * lvl.hours
    energy = 0.0
    cap = 0.0
    for (name, reg), idx in lay.act.items():
        if name != tech or (region is not None and reg != region):
            continue
        energy += float(w @ model.values(idx))
        cap += model.capacity(name, reg)
    if cap <= 1e-9:
        raise DomainError(f"technology {tech} has no installed capacity")
    return energy / (cap * hours)


# -- residual load ---------------------------------------------------------------------


def _inflexible_schedule(rule: str, x: np.ndarray, weights: np.ndarray, avail: np.ndarray | None,
                         block: int, day: int) -> np.ndarray:
    """Reference schedule with the same energy as ``x`` that does not react to supply."""
    if rule == "constant":
        return np.full_like(x, float(weights @ x) / float(weights.sum()))
    if rule == "availability":
        out = np.empty_like(x)
        for s in range(0, len(x), day):
            seg = slice(s, s + day)
            a = avail[seg]
            tot = float(a.sum())
            out[seg] = x[seg].sum() * (a / tot if tot > 0 else 1.0 / len(a))
        return out
    if rule == "block_uniform":
        return np.repeat(x.reshape(-1, block).mean(axis=1), block)
    return x.copy()


def electricity_draw(model: SolvedModel, region: str, inflexible: bool = False) -> dict[str, np.ndarray]:
    """Hourly electricity consumed by each conversion technology in ``region``."""
    system = model.system
    lay = model.layout
    out: dict[str, np.ndarray] = {}
    for t in system.techs:
        coef = t.inputs.get(ELECTRICITY)
        if not coef:
            continue
        lvl = lay.act_level[t.name]
        if lvl is not Level.HOUR:
            raise DomainError(f"technology {t.name} draws electricity but runs at {lvl.value} steps")
        for s in t.sites:
            if system.balance_region(s.region, ELECTRICITY) != region:
                continue
            x = coef * model.values(lay.act[(t.name, s.region)])
            if inflexible:
                rule = default_inflexible_rule(t, system.carriers)
                coarse = max((system.carriers[c].temporal_level for c in t.outputs), key=lambda lv: lv.hours)
                x = _inflexible_schedule(rule, x, model.weights(lvl), lay.cf.get((t.name, s.region)),
                                         coarse.hours // lvl.hours, Level.DAY.hours // lvl.hours)
            out[t.name] = out.get(t.name, 0.0) + x
    return out


def renewable_supply(model: SolvedModel, region: str) -> np.ndarray:
    """Available (pre-curtailment) fluctuating generation per hour in GW."""
    system = model.system
    lay = model.layout
    total = np.zeros(system.grid.steps(Level.HOUR))
    for t in system.techs:
        coef = t.outputs.get(ELECTRICITY)
        if not coef or not t.fluctuating or lay.act_level[t.name] is not Level.HOUR:
            continue
        for s in t.sites:
            if system.balance_region(s.region, ELECTRICITY) == region:
                total += coef * lay.cf[(t.name, s.region)] * model.capacity(t.name, s.region)
    return total


def residual_series(model: SolvedModel, region: str, variant: str = "flexible") -> np.ndarray:
    """Unsorted hourly residual load: demand plus electric consumers minus renewables."""
    if variant not in ("flexible", "inflexible"):
        raise ValueError(f"unknown variant {variant!r}")
    model.require_optimal()
    n = model.system.grid.steps(Level.HOUR)
    demand = np.asarray(model.layout.demand.get((ELECTRICITY, region), np.zeros(n)), dtype=float)
    draws = electricity_draw(model, region, inflexible=variant == "inflexible")
    load = demand + sum(draws.values(), np.zeros(n))
    return load - renewable_supply(model, region)


def residual_load(model: SolvedModel, region: str, variant: str = "flexible") -> ResidualLoadCurve:
    series = residual_series(model, region, variant)
    return ResidualLoadCurve(region, variant, np.sort(series)[::-1].copy())


def shifted_energy(model: SolvedModel) -> dict[str, float]:
    """Energy each flexible consumer moved away from its inflexible schedule (GWh/yr).

    Half the weighted absolute difference, i.e. the energy taken out of some
    hours and put into others.
    """
    model.require_optimal()
    system = model.system
    w = model.weights(Level.HOUR)
    out: dict[str, float] = {}
    regions = sorted({r for (c, r) in model.layout.balance if c == ELECTRICITY})
    for region in regions:
        flex = electricity_draw(model, region)
        ref = electricity_draw(model, region, inflexible=True)
        for name, x in flex.items():
            out[name] = out.get(name, 0.0) + 0.5 * float(w @ np.abs(x - ref[name]))
    return {t.name: out[t.name] for t in system.techs if t.name in out}


# -- costs -----------------------------------------------------------------------------


def cost_families(model: SolvedModel) -> dict[str, float]:
    """Objective split into cost families (million $ per year); sums to the objective."""
    model.require_optimal()
    return objective_by_family(model.lp, model.solution.x)


def cost_decomposition(a: SolvedModel, b: SolvedModel) -> dict[str, tuple[float, float, float]]:
    """Per family: (cost in ``a``, cost in ``b``, ``b - a``)."""
    if a.lp.var_names != b.lp.var_names or a.lp.row_names != b.lp.row_names:
        raise DomainError("solutions belong to differently shaped systems")
    fa, fb = cost_families(a), cost_families(b)
    keys = [f for f in FAMILIES] + sorted((set(fa) | set(fb)) - set(FAMILIES))
    return {k: (fa.get(k, 0.0), fb.get(k, 0.0), fb.get(k, 0.0) - fa.get(k, 0.0)) for k in keys}


# -- flows -----------------------------------------------------------------------------


def storage_totals(model: SolvedModel) -> dict[str, dict[str, float]]:
    """Charged, discharged and lost energy per storage technology (GWh/yr)."""
    model.require_optimal()
    system = model.system
    lay = model.layout
    out: dict[str, dict[str, float]] = {}
    for st in system.storages:
        w = model.weights(system.carriers[st.carrier].temporal_level)
        ch = dis = 0.0
        power = energy = 0.0
        for (name, reg), idx in lay.charge.items():
            if name != st.name:
                continue
            ch += float(w @ model.values(idx))
            dis += float(w @ model.values(lay.discharge[(name, reg)]))
            power += float(model.solution.x[lay.st_power[(name, reg)]])
            energy += float(model.solution.x[lay.st_energy[(name, reg)]])
        out[st.name] = {
            "charged": ch,
            "discharged": dis,
            "losses": ch - dis,
            "power_gw": power,
            "energy_gwh": energy,
        }
    return out


def sankey_flows(model: SolvedModel) -> list[SankeyEdge]:
    """Yearly carrier flows between technologies, storage, trade and demand.

    Nodes are carrier names, technology names, ``storage:<name>``,
    ``import:<id>``, ``demand:<carrier>`` and ``losses``. Values are in
    thousands of the carrier unit (TWh for energy carriers).
    """
    model.require_optimal()
    system = model.system
    lay = model.layout
    acc: dict[tuple[str, str], float] = {}

    def add(a, b, v):
        if v:
            acc[(a, b)] = acc.get((a, b), 0.0) + v / 1000.0

    for t in system.techs:
        w = model.weights(lay.act_level[t.name])
        act = sum(float(w @ model.values(idx)) for (n, _), idx in lay.act.items() if n == t.name)
        for c, coef in sorted(t.inputs.items()):
            add(c, t.name, coef * act)
        for c, coef in sorted(t.outputs.items()):
            add(t.name, c, coef * act)
        gap = (sum(t.inputs.values()) - sum(t.outputs.values())) * act
        if t.inputs and gap > 0:
            add(t.name, "losses", gap)
    for name, tot in storage_totals(model).items():
        st = next(s for s in system.storages if s.name == name)
        node = f"storage:{name}"
        add(st.carrier, node, tot["charged"])
        add(node, st.carrier, tot["discharged"])
        add(node, "losses", tot["charged"] - tot["discharged"])
    for link in system.links:
        w = model.weights(system.carriers[link.carrier].temporal_level)
        sent = sum(float(w @ model.values(idx)) for (lid, _, _), idx in lay.flow.items() if lid == link.id)
        add(link.carrier, "losses", sent * (1.0 - link.efficiency))
    for imp in system.imports:
        w = model.weights(system.carriers[imp.carrier].temporal_level)
        add(f"import:{imp.id}", imp.carrier, float(w @ model.values(lay.imports[imp.id])))
    for seg in system.demands:
        w = model.weights(system.carriers[seg.carrier].temporal_level)
        add(seg.carrier, f"demand:{seg.carrier}", float(w @ lay.segment_demand[(seg.id, seg.region)]))
    return [SankeyEdge(a, b, v) for (a, b), v in sorted(acc.items())]


def node_imbalance(edges: list[SankeyEdge]) -> dict[str, float]:
    """In minus out per node (zero for carriers and storage at a balanced optimum)."""
    out: dict[str, float] = {}
    for e in edges:
        out[e.target] = out.get(e.target, 0.0) + e.value
        out[e.source] = out.get(e.source, 0.0) - e.value
    return out


def balance_residuals(model: SolvedModel) -> dict[tuple[str, str], tuple[float, float]]:
    """Worst balance-row violation and peak demand per step for every (carrier, region)."""
    model.require_optimal()
    lay = model.layout
    viol = model.lp.residuals(model.solution.x)
    out = {}
    for key, rows in sorted(lay.balance.items()):
        rows = rows[rows >= 0]
        worst = float(viol[rows].max()) if rows.size else 0.0
        dem = lay.demand.get(key)
        peak = float(np.max(dem)) if dem is not None and np.size(dem) else 0.0
        out[key] = (worst, peak)
    for (tech, seg, region), rows in sorted(lay.proportional.items()):
        worst = float(viol[rows].max()) if rows.size else 0.0
        peak = float(np.max(lay.segment_demand[(seg, region)]))
        prev = out.get((seg, region), (0.0, peak))
        out[(seg, region)] = (max(prev[0], worst), peak)
    return out


# -- report ----------------------------------------------------------------------------


def analyze(model: SolvedModel) -> AnalysisReport:
    model.require_optimal()
    system = model.system
    gens = _generators(system)
    shares = {n: generation_share(model, n) for n in gens}
    cfs = {}
    for t in system.techs:
        try:
            cfs[t.name] = capacity_factor(model, t.name)
        except DomainError:
            cfs[t.name] = math.nan
    regions = sorted({r for (c, r) in model.layout.balance if c == ELECTRICITY})
    curves = [residual_load(model, r, v) for r in regions for v in ("flexible", "inflexible")]
    worst = 0.0
    for res, peak in balance_residuals(model).values():
        if peak > 0:
            worst = max(worst, res / peak)
    return AnalysisReport(
        shares=shares,
        capacity_factors=cfs,
        costs=cost_families(model),
        objective=model.solution.objective,
        sankey=sankey_flows(model),
        storage=storage_totals(model),
        residual=curves,
        shifted_energy=shifted_energy(model),
        balance_check={"max_relative_residual": worst},
    )


def _num(v: float, digits: int = 9) -> str:
    if isinstance(v, float) and math.isnan(v):
        return ""
    r = round(float(v), digits)
    return repr(r + 0.0)


def _write_rows(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_report(report: AnalysisReport, out_dir: str | Path) -> list[Path]:
    """Write the report as CSV and JSON files; returns the paths written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []

    p = out / "generation.csv"
    _write_rows(p, ["technology", "share", "capacity_factor"],
                [[n, _num(report.shares.get(n, 0.0)), _num(report.capacity_factors.get(n, math.nan))]
                 for n in report.capacity_factors])
    paths.append(p)

    p = out / "costs.csv"
    _write_rows(p, ["family", "cost_musd"], [[k, _num(v, 6)] for k, v in report.costs.items()])
    paths.append(p)

    p = out / "storage.csv"
    keys = ["charged", "discharged", "losses", "power_gw", "energy_gwh"]
    _write_rows(p, ["storage"] + keys, [[n] + [_num(d[k], 6) for k in keys] for n, d in report.storage.items()])
    paths.append(p)

    p = out / "residual_load.csv"
    rows = []
    for c in report.residual:
        rows += [[c.region, c.variant, k, _num(v, 6)] for k, v in enumerate(c.series)]
    _write_rows(p, ["region", "variant", "rank", "residual_gw"], rows)
    paths.append(p)

    p = out / "residual_summary.csv"
    _write_rows(p, ["region", "variant", "peak_gw", "residual_gwh", "excess_gwh"],
                [[c.region, c.variant, _num(c.peak, 6), _num(c.residual_energy, 6), _num(c.excess_energy, 6)]
                 for c in report.residual])
    paths.append(p)

    p = out / "flexibility.csv"
    _write_rows(p, ["technology", "shifted_gwh"], [[k, _num(v, 6)] for k, v in report.shifted_energy.items()])
    paths.append(p)

    p = out / "sankey.json"
    edges = [{"source": e.source, "target": e.target, "value": round(e.value, 3)} for e in report.sankey]
    p.write_text(json.dumps({"edges": edges}, indent=2) + "\n", encoding="utf-8")
    paths.append(p)
    return paths
