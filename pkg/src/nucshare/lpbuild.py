"""Translate an :class:`EnergySystem` into a linear program.

Units inside the LP: capacities in GW (GWh for storage energy), operational
variables in energy per time step (GWh or the carrier's unit), costs in
million $ per year. Capital and fixed costs given per kW equal million $ per
GW; per-MWh costs are scaled by 1e-3 to million $ per GWh and multiplied by
the weight of the step.
"""
from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .errors import BuildError
from .lp import LpBuilder, LpInstance, VarMeta
from .system import (
    DemandKind,
    EnergySystem,
    ScenarioConfig,
    annuitize_all,
    default_inflexible_rule,
    tech_resolution,
    validate,
)
from .timegrid import Level, ProfileSeries, aggregate

PER_MWH = 1e-3  # $/MWh -> million $/GWh


@dataclass
class Layout:
    """Where each model entity lives in the LP."""

    system: EnergySystem
    flexible: bool
    cap: dict = field(default_factory=dict)  # (tech, region) -> var
    act: dict = field(default_factory=dict)  # (tech, region) -> var array
    act_level: dict = field(default_factory=dict)  # tech -> Level
    cf: dict = field(default_factory=dict)  # (tech, region) -> availability * cf per step
    st_power: dict = field(default_factory=dict)
    st_energy: dict = field(default_factory=dict)
    charge: dict = field(default_factory=dict)  # (storage, region) -> var array
    discharge: dict = field(default_factory=dict)
    level: dict = field(default_factory=dict)
    flow: dict = field(default_factory=dict)  # (link, from, to) -> var array
    expansion: dict = field(default_factory=dict)  # link -> list of vars
    imports: dict = field(default_factory=dict)  # import id -> var array
    share: dict = field(default_factory=dict)  # (tech, segment id, region) -> var
    balance: dict = field(default_factory=dict)  # (carrier, region) -> row array
    proportional: dict = field(default_factory=dict)  # (tech, segment id, region) -> row array
    demand: dict = field(default_factory=dict)  # (carrier, region) -> energy per step
    segment_demand: dict = field(default_factory=dict)  # (segment id, region) -> energy per step
    constants: dict = field(default_factory=dict)  # cost family -> fixed cost
    var_family: np.ndarray | None = None


def demand_energy(seg, system: EnergySystem) -> np.ndarray:
    """Energy of a demand segment in every step of its carrier level.

    The profile is scaled so that the weighted horizon reproduces the annual
    total exactly.
    """
    lvl = seg.profile.level
    w = system.grid.weights(lvl)
    p = seg.profile.values
    denom = float(p @ w)
    if denom <= 0:
        return np.zeros_like(p)
    return seg.annual_total * p / denom


def _factor_profile(system: EnergySystem, name: str | None, region: str, level: Level) -> np.ndarray:
    n = system.grid.steps(level)
    if name is None:
        return np.ones(n)
    p = system.profile(name, region)
    if p is None:
        raise BuildError(f"missing profile {name!r} for region {region}")
    if p.level is not level:
        if p.level.hours > level.hours:
            raise BuildError(f"profile {name!r} is coarser than the technology using it")
        p = aggregate(p, level, "mean")
    if len(p) != n:
        raise BuildError(f"profile {name!r} has {len(p)} values, expected {n}")
    return np.asarray(p.values, dtype=float)


def _tag(*parts) -> str:
    return "[" + ",".join(str(p) for p in parts) + "]"


def build(system: EnergySystem, scenario: ScenarioConfig | None = None) -> LpInstance:
    """Assemble the capacity-expansion LP.

    The returned instance carries a :class:`Layout` in ``lp.layout``.
    """
    scenario = scenario or ScenarioConfig()
    if any(t.capex_annuity is None for t in system.techs) or any(
        s.power_annuity is None for s in system.storages
    ):
        system = annuitize_all(system)
    problems = validate(system)
    if problems:
        raise BuildError("invalid system: " + "; ".join(problems))
    for t in system.techs:
        if t.kind == "bev" and t.sites and t.profile is None:
            raise BuildError(f"technology {t.name}: vehicle availability profile missing")

    grid = system.grid
    carriers = system.carriers
    bld = LpBuilder(scenario.name)
    lay = Layout(system=system, flexible=scenario.flexible)
    family: list[str] = []

    def var(name, lb=0.0, ub=math.inf, cost=0.0, meta=None, fam=""):
        family.append(fam)
        return bld.var(name, lb, ub, cost, meta)

    def const(fam, amount):
        if amount:
            lay.constants[fam] = lay.constants.get(fam, 0.0) + amount
            bld.offset += amount

    # proportional segments replace the ordinary balance of their carrier
    prop_segments = {}
    for seg in system.demands:
        if seg.kind is DemandKind.PROPORTIONAL_HEAT:
            key = (seg.carrier, seg.region)
            if key in prop_segments:
                raise BuildError(f"two proportional segments for {seg.carrier} in {seg.region}")
            prop_segments[key] = seg

    def feeds_proportional(tech, carrier, region):
        seg = prop_segments.get((carrier, region))
        return seg is not None and tech.proportional and tech.serves == seg.id

    # -- investment variables
    for t in system.techs:
        lay.act_level[t.name] = tech_resolution(t, carriers)
        for s in sorted(t.sites, key=lambda s: s.region):
            lb = max(s.min_gw - s.existing_gw, 0.0)
            ub = s.max_gw - s.existing_gw
            if ub < lb:
                raise BuildError(f"technology {t.name} in {s.region}: existing capacity above maximum")
            lay.cap[(t.name, s.region)] = var(
                f"cap{_tag(t.name, s.region)}", lb, ub, t.capex_annuity + t.fixed_om,
                VarMeta("capacity", t.name, s.region), t.family,
            )
            const(t.family, t.fixed_om * s.existing_gw)
    for st in system.storages:
        for s in sorted(st.sites, key=lambda s: s.region):
            if s.existing_gw:
                raise BuildError(f"storage {st.name}: existing capacity is not supported")
            lay.st_power[(st.name, s.region)] = var(
                f"stp{_tag(st.name, s.region)}", 0.0, math.inf, st.power_annuity + st.fixed_om,
                VarMeta("capacity", st.name + ".power", s.region), st.family,
            )
            lay.st_energy[(st.name, s.region)] = var(
                f"ste{_tag(st.name, s.region)}", s.min_gw, s.max_gw, st.energy_annuity,
                VarMeta("capacity", st.name + ".energy", s.region), st.family,
            )
    for link in system.links:
        const("grid", link.fixed_om * link.existing_gw)
        if link.has_capacity:
            lay.expansion[link.id] = [
                var(f"ext{_tag(link.id, k)}", 0.0, step.max_gw, step.cost,
                    VarMeta("link_expansion_step", link.id, "", k), "grid")
                for k, step in enumerate(link.steps)
            ]

    # -- operation variables
    for t in system.techs:
        lvl = lay.act_level[t.name]
        w = grid.weights(lvl)
        vc = t.variable_om * PER_MWH
        for s in sorted(t.sites, key=lambda s: s.region):
            lay.act[(t.name, s.region)] = np.array([
                var(f"act{_tag(t.name, s.region, k)}", 0.0, math.inf, vc * w[k],
                    VarMeta("generation", t.name, s.region, k), t.family)
                for k in range(grid.steps(lvl))
            ])
    for st in system.storages:
        lvl = carriers[st.carrier].temporal_level
        n = grid.steps(lvl)
        for s in sorted(st.sites, key=lambda s: s.region):
            key = (st.name, s.region)
            for store, kind, tag in (
                (lay.charge, "storage_charge", "sch"),
                (lay.discharge, "storage_discharge", "sdi"),
                (lay.level, "storage_level", "slv"),
            ):
                store[key] = np.array([
                    var(f"{tag}{_tag(st.name, s.region, k)}", meta=VarMeta(kind, st.name, s.region, k), fam=st.family)
                    for k in range(n)
                ])
    for link in system.links:
        lvl = carriers[link.carrier].temporal_level
        w = grid.weights(lvl)
        vc = link.variable_cost * PER_MWH
        for a, b in link.directions():
            lay.flow[(link.id, a, b)] = np.array([
                var(f"flw{_tag(link.id, a, b, k)}", 0.0, math.inf, vc * w[k],
                    VarMeta("flow", link.id, f"{a}>{b}", k), "grid")
                for k in range(grid.steps(lvl))
            ])
    for imp in system.imports:
        lvl = carriers[imp.carrier].temporal_level
        w = grid.weights(lvl)
        lay.imports[imp.id] = np.array([
            var(f"imp{_tag(imp.id, k)}", 0.0, math.inf, imp.cost * PER_MWH * w[k],
                VarMeta("import_quantity", imp.id, imp.region, k), imp.family)
            for k in range(grid.steps(lvl))
        ])
    for (carrier, region), seg in sorted(prop_segments.items()):
        for t in system.techs:
            if t.proportional and t.serves == seg.id and t.site(region):
                lay.share[(t.name, seg.id, region)] = var(
                    f"shr{_tag(t.name, seg.id, region)}", 0.0, 1.0, 0.0,
                    VarMeta("demand_served", t.name, region), t.family,
                )

    # -- balances
    contrib: dict = defaultdict(lambda: defaultdict(list))
    producers: dict = defaultdict(int)
    for t in system.techs:
        lvl_t = lay.act_level[t.name]
        for s in sorted(t.sites, key=lambda s: s.region):
            acts = lay.act[(t.name, s.region)]
            for sign, side in ((1.0, t.outputs), (-1.0, t.inputs)):
                for c, coef in sorted(side.items()):
                    br = system.balance_region(s.region, c)
                    if sign > 0 and feeds_proportional(t, c, br):
                        continue
                    k = carriers[c].temporal_level.hours // lvl_t.hours
                    rows = contrib[(c, br)]
                    for f, v in enumerate(acts):
                        rows[f // k].append((int(v), sign * coef))
                    if sign > 0:
                        producers[(c, br)] += 1
    for st in system.storages:
        if st.dedicated_to is not None:
            continue
        for s in sorted(st.sites, key=lambda s: s.region):
            rows = contrib[(st.carrier, s.region)]
            key = (st.name, s.region)
            for k, (ch, di) in enumerate(zip(lay.charge[key], lay.discharge[key])):
                rows[k].append((int(di), 1.0))
                rows[k].append((int(ch), -1.0))
    for link in system.links:
        for (lid, a, b), flows in lay.flow.items():
            if lid != link.id:
                continue
            out_rows, in_rows = contrib[(link.carrier, a)], contrib[(link.carrier, b)]
            for k, v in enumerate(flows):
                out_rows[k].append((int(v), -1.0))
                in_rows[k].append((int(v), link.efficiency))
            producers[(link.carrier, b)] += 1
    for imp in system.imports:
        rows = contrib[(imp.carrier, imp.region)]
        for k, v in enumerate(lay.imports[imp.id]):
            rows[k].append((int(v), 1.0))
        producers[(imp.carrier, imp.region)] += 1

    for seg in system.demands:
        e = demand_energy(seg, system)
        if seg.kind is DemandKind.PROPORTIONAL_HEAT:
            lay.segment_demand[(seg.id, seg.region)] = e
            continue
        key = (seg.carrier, seg.region)
        lay.demand[key] = lay.demand.get(key, 0.0) + e
        lay.segment_demand[(seg.id, seg.region)] = e
        if e.sum() > 0 and producers[key] == 0:
            raise BuildError(
                f"demand {seg.id}: carrier {seg.carrier} in {seg.region} has no producing technology, link or import"
            )

    keys = sorted(set(contrib) | set(lay.demand), key=lambda k: (list(carriers).index(k[0]), k[1]))
    for c, region in keys:
        n = grid.steps(carriers[c].temporal_level)
        dem = lay.demand.get((c, region), np.zeros(n))
        rows = contrib.get((c, region), {})
        idx = []
        for k in range(n):
            r = bld.row(f"bal{_tag(c, region, k)}", rows.get(k, []), "E", float(dem[k]),
                        VarMeta("balance", c, region, k))
            idx.append(r)
        lay.balance[(c, region)] = np.array(idx)

    # -- proportional heat
    for (carrier, region), seg in sorted(prop_segments.items()):
        e = lay.segment_demand[(seg.id, region)]
        lvl_c = carriers[carrier].temporal_level
        shares = []
        for t in system.techs:
            key = (t.name, seg.id, region)
            if key not in lay.share:
                continue
            s_var = lay.share[key]
            shares.append((s_var, 1.0))
            site = next(s.region for s in t.sites if system.balance_region(s.region, carrier) == region)
            acts = lay.act[(t.name, site)]
            k_f = lvl_c.hours // lay.act_level[t.name].hours
            coef = t.outputs[carrier]
            ded = [
                st for st in system.storages
                if st.dedicated_to == t.name and st.site(region) is not None
            ]
            rows = []
            for k in range(grid.steps(lvl_c)):
                terms = [(int(acts[f]), coef) for f in range(k * k_f, (k + 1) * k_f)]
                for st in ded:
                    terms.append((int(lay.discharge[(st.name, region)][k]), 1.0))
                    terms.append((int(lay.charge[(st.name, region)][k]), -1.0))
                terms.append((s_var, -float(e[k])))
                rows.append(bld.row(f"prp{_tag(t.name, seg.id, region, k)}", terms, "E", 0.0,
                                    VarMeta("proportional", t.name, region, k)))
            lay.proportional[key] = np.array(rows)
        bld.row(f"shs{_tag(seg.id, region)}", shares, "E", 1.0, VarMeta("share_sum", seg.id, region))

    # -- capacity limits
    for t in system.techs:
        lvl = lay.act_level[t.name]
        dt = lvl.hours
        for s in sorted(t.sites, key=lambda s: s.region):
            f = t.availability * _factor_profile(system, t.profile, s.region, lvl)
            lay.cf[(t.name, s.region)] = f
            cap = lay.cap[(t.name, s.region)]
            for k, v in enumerate(lay.act[(t.name, s.region)]):
                bld.row(f"lim{_tag(t.name, s.region, k)}", [(int(v), 1.0), (cap, -dt * f[k])], "L",
                        dt * f[k] * s.existing_gw, VarMeta("capacity_limit", t.name, s.region, k))

    # -- storage
    for st in system.storages:
        lvl = carriers[st.carrier].temporal_level
        dt = lvl.hours
        for s in sorted(st.sites, key=lambda s: s.region):
            key = (st.name, s.region)
            P, E = lay.st_power[key], lay.st_energy[key]
            ch, di, lv = lay.charge[key], lay.discharge[key], lay.level[key]
            for rng in grid.period_ranges(lvl):
                for k in rng:
                    prev = rng[-1] if k == rng[0] else k - 1
                    bld.row(f"sdy{_tag(st.name, s.region, k)}",
                            [(int(lv[k]), 1.0), (int(lv[prev]), -1.0), (int(ch[k]), -st.cycle_efficiency),
                             (int(di[k]), 1.0)], "E", 0.0, VarMeta("storage_dynamics", st.name, s.region, k))
            for k in range(len(lv)):
                bld.row(f"scp{_tag(st.name, s.region, k)}", [(int(ch[k]), 1.0), (P, -dt)], "L", 0.0,
                        VarMeta("storage_power", st.name, s.region, k))
                bld.row(f"sdp{_tag(st.name, s.region, k)}", [(int(di[k]), 1.0), (P, -dt)], "L", 0.0,
                        VarMeta("storage_power", st.name, s.region, k))
                bld.row(f"slm{_tag(st.name, s.region, k)}", [(int(lv[k]), 1.0), (E, -1.0)], "L", 0.0,
                        VarMeta("storage_energy", st.name, s.region, k))
            if st.ep_min > 0:
                bld.row(f"epl{_tag(st.name, s.region)}", [(E, 1.0), (P, -st.ep_min)], "G", 0.0,
                        VarMeta("storage_ratio", st.name, s.region))
            if math.isfinite(st.ep_max):
                bld.row(f"epu{_tag(st.name, s.region)}", [(E, 1.0), (P, -st.ep_max)], "L", 0.0,
                        VarMeta("storage_ratio", st.name, s.region))

    # -- link capacity
    for link in system.links:
        if not link.has_capacity:
            continue
        dt = carriers[link.carrier].temporal_level.hours
        steps = lay.expansion[link.id]
        for a, b in link.directions():
            for k, v in enumerate(lay.flow[(link.id, a, b)]):
                bld.row(f"lnk{_tag(link.id, a, b, k)}", [(int(v), 1.0)] + [(e, -dt) for e in steps], "L",
                        dt * link.existing_gw, VarMeta("link_capacity", link.id, f"{a}>{b}", k))

    # -- resource caps
    for imp in system.imports:
        if math.isfinite(imp.max_annual):
            w = grid.weights(carriers[imp.carrier].temporal_level)
            bld.row(f"ila{_tag(imp.id)}", [(int(v), w[k]) for k, v in enumerate(lay.imports[imp.id])], "L",
                    imp.max_annual, VarMeta("resource_cap", imp.id, imp.region))
    for cap in system.caps:
        w = grid.weights(carriers[cap.carrier].temporal_level)
        terms = [
            (int(v), w[k])
            for imp in system.imports if imp.carrier == cap.carrier
            for k, v in enumerate(lay.imports[imp.id])
        ]
        bld.row(f"rcp{_tag(cap.carrier)}", terms, "L", cap.max_annual,
                VarMeta("resource_cap", cap.carrier))

    # -- inflexible operation
    if not scenario.flexible:
        _add_inflexible_rules(bld, lay, system)

    lp = bld.finish()
    lay.var_family = np.array(family)
    lp.layout = lay
    return lp


def _add_inflexible_rules(bld: LpBuilder, lay: Layout, system: EnergySystem) -> None:
    """Pin demand-side technologies to their inflexible schedules.

    Dedicated heat storage is removed as well.
    """
    grid = system.grid
    carriers = system.carriers
    for st in system.storages:
        if st.dedicated_to is None:
            continue
        for key in [k for k in lay.st_power if k[0] == st.name]:
            for v in (lay.st_power[key], lay.st_energy[key]):
                bld._ub[v] = 0.0
                bld._lb[v] = 0.0
    for t in system.techs:
        rule = default_inflexible_rule(t, carriers)
        if rule == "none":
            continue
        lvl = lay.act_level[t.name]
        for s in sorted(t.sites, key=lambda s: s.region):
            acts = lay.act[(t.name, s.region)]
            meta = VarMeta("inflexible", t.name, s.region)
            if rule == "constant":
                for k in range(1, len(acts)):
                    bld.row(f"inf{_tag(t.name, s.region, k)}", [(int(acts[k]), 1.0), (int(acts[0]), -1.0)],
                            "E", 0.0, meta)
            elif rule == "block_uniform":
                coarse = max((carriers[c].temporal_level for c in t.outputs), key=lambda lv: lv.hours)
                size = coarse.hours // lvl.hours
                for k in range(len(acts)):
                    if k % size:
                        first = k - k % size
                        bld.row(f"inf{_tag(t.name, s.region, k)}",
                                [(int(acts[k]), 1.0), (int(acts[first]), -1.0)], "E", 0.0, meta)
            elif rule == "availability":
                a = lay.cf[(t.name, s.region)] if (t.name, s.region) in lay.cf else None
                if a is None:
                    a = _factor_profile(system, t.profile, s.region, lvl)
                size = Level.DAY.hours // lvl.hours
                for day0 in range(0, len(acts), size):
                    block = range(day0, day0 + size)
                    total = float(sum(a[k] for k in block))
                    for k in block:
                        share = a[k] / total if total > 0 else 0.0
                        terms = [(int(acts[k]), 1.0)] + [(int(acts[j]), -share) for j in block]
                        bld.row(f"inf{_tag(t.name, s.region, k)}", terms, "E", 0.0, meta)


def summary_json(lp: LpInstance) -> str:
    """Structural summary (counts by kind) as stable JSON text."""
    return json.dumps(lp.summary(), indent=2, sort_keys=True) + "\n"


def objective_by_family(lp: LpInstance, x: np.ndarray) -> dict[str, float]:
    """Split the objective value of ``x`` into the cost families."""
    lay: Layout = lp.layout
    out = {f: 0.0 for f in ("generation", "flexibility", "grid", "thermal_backup", "imports")}
    contrib = lp.cost * x
    for fam in np.unique(lay.var_family):
        if fam:
            out[fam] = out.get(fam, 0.0) + float(contrib[lay.var_family == fam].sum())
    for fam, v in lay.constants.items():
        out[fam] = out.get(fam, 0.0) + v
    return out
