"""Immutable description of the planning problem and its on-disk format.

A system directory holds CSV tables (see ``docs/system_format.md``) and a
scenario file selects the representative periods, finance parameters and the
nuclear cost assumption.
"""
from __future__ import annotations

import csv
import dataclasses
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Mapping

import numpy as np
import tomli

from .errors import DataError, DomainError
from .finance import annuity, idc
from .network import ExpansionStep, Link, link_from_row
from .tables import parse_bool, parse_float, read_csv
from .timegrid import Level, Period, ProfileSeries, TimeHierarchy, finest, read_profile

ELECTRICITY = "electricity"
HYDROGEN = "hydrogen"

# charging power per vehicle (kW) and the share usable for grid charging
BEV_CHARGE_KW = 5.0
BEV_SAFETY = 0.75

EP_RATIO_LIMITS = (0.1, 10.0)
COST_FAMILIES = ("generation", "flexibility", "grid", "thermal_backup", "imports")
INFLEXIBLE_RULES = ("none", "constant", "availability", "block_uniform")
SPATIAL_LEVELS = ("nation", "zone", "cluster")


class DemandKind(enum.Enum):
    INFLEXIBLE = "inflexible"
    BEV = "bev"
    COARSE_BALANCE = "coarse_balance"
    PROPORTIONAL_HEAT = "proportional_heat"


@dataclass(frozen=True)
class Carrier:
    name: str
    temporal_level: Level
    spatial_level: str = "zone"
    unit: str = "GWh"


@dataclass(frozen=True)
class Region:
    id: str
    level: str
    parent: str | None
    lat: float
    lon: float

    @property
    def centroid(self) -> tuple[float, float]:
        return (self.lat, self.lon)


@dataclass(frozen=True)
class Site:
    """Capacity bounds of one technology in one region, in GW."""

    region: str
    min_gw: float = 0.0
    max_gw: float = math.inf
    existing_gw: float = 0.0


def _frozen_map(d) -> Mapping:
    return MappingProxyType(dict(d))


@dataclass(frozen=True)
class ConversionTech:
    """A technology turning input carriers into output carriers.

    Coefficients are per unit of activity; capacity is measured in activity
    per hour (GW for energy carriers).
    """

    name: str
    inputs: Mapping[str, float]
    outputs: Mapping[str, float]
    capex: float  # overnight, $/kW
    lifetime: int
    fixed_om: float = 0.0  # $/kW/yr
    variable_om: float = 0.0  # $/MWh of activity
    availability: float = 1.0
    sites: tuple[Site, ...] = ()
    profile: str | None = None
    proportional: bool = False
    serves: str | None = None
    family: str = "generation"
    kind: str = "standard"  # or "bev"
    inflexible_rule: str | None = None
    construction_time: float = 0.0
    capex_annuity: float | None = None  # $/kW/yr, filled by annuitize_all

    def __post_init__(self):
        object.__setattr__(self, "inputs", _frozen_map(self.inputs))
        object.__setattr__(self, "outputs", _frozen_map(self.outputs))
        object.__setattr__(self, "sites", tuple(self.sites))

    @property
    def carriers(self) -> list[str]:
        return sorted(set(self.inputs) | set(self.outputs))

    @property
    def fluctuating(self) -> bool:
        """Profile-bound supply without inputs (wind, PV, run-of-river)."""
        return self.profile is not None and not self.inputs and self.kind != "bev"

    def site(self, region: str) -> Site | None:
        for s in self.sites:
            if s.region == region:
                return s
        return None


@dataclass(frozen=True)
class StorageTech:
    name: str
    carrier: str
    power_capex: float  # $/kW overnight
    energy_capex: float  # $/kWh overnight
    lifetime: int
    cycle_efficiency: float = 1.0
    ep_min: float = 0.0  # hours of full-power discharge
    ep_max: float = math.inf
    fixed_om: float = 0.0  # $/kW/yr on power capacity
    sites: tuple[Site, ...] = ()  # bounds apply to energy capacity (GWh)
    dedicated_to: str | None = None
    family: str = "flexibility"
    power_annuity: float | None = None
    energy_annuity: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "sites", tuple(self.sites))

    def site(self, region: str) -> Site | None:
        for s in self.sites:
            if s.region == region:
                return s
        return None


@dataclass(frozen=True)
class DemandSegment:
    id: str
    carrier: str
    region: str
    annual_total: float  # carrier units per year
    profile: ProfileSeries  # sums to one over the horizon
    kind: DemandKind = DemandKind.INFLEXIBLE


@dataclass(frozen=True)
class Import:
    """Purchase of a carrier from outside the modeled regions."""

    id: str
    carrier: str
    region: str
    cost: float  # $/MWh
    max_annual: float = math.inf
    family: str = "imports"


@dataclass(frozen=True)
class ResourceCap:
    """Upper bound on total annual imports of a carrier over all regions."""

    carrier: str
    max_annual: float


@dataclass(frozen=True)
class ScenarioConfig:
    name: str = "scenario"
    interest: float = 0.05
    nuclear_tech: str = "nuclear"
    nuclear_overnight_cost: float | None = None
    nuclear_construction_time: float | None = None
    nuclear_depreciation: int | None = None
    periods: tuple[Period, ...] = ()
    period_starts: tuple[int, ...] = ()  # first day of each period in the data
    flexible: bool = True
    demand_scale: float = 1.0
    feasibility_tol: float = 1e-7
    optimality_tol: float = 1e-7
    max_iterations: int = 200_000
    output_dir: str | None = None
    system_dir: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "periods", tuple(self.periods))
        object.__setattr__(self, "period_starts", tuple(self.period_starts))
        if not 0.0 <= self.interest < 1.0:
            raise DomainError(f"interest must lie in [0, 1), got {self.interest}")
        if self.nuclear_overnight_cost is not None and self.nuclear_overnight_cost < 0:
            raise DomainError("nuclear overnight cost must be nonnegative")
        if self.nuclear_construction_time is not None and self.nuclear_construction_time < 0:
            raise DomainError("nuclear construction time must be nonnegative")
        if self.demand_scale <= 0:
            raise DomainError("demand scale must be positive")
        if len(self.period_starts) not in (0, len(self.periods)):
            raise DomainError("one start day per period required")

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class EnergySystem:
    carriers: Mapping[str, Carrier]
    regions: Mapping[str, Region]
    techs: tuple[ConversionTech, ...]
    storages: tuple[StorageTech, ...]
    links: tuple[Link, ...]
    demands: tuple[DemandSegment, ...]
    imports: tuple[Import, ...]
    caps: tuple[ResourceCap, ...]
    profiles: Mapping[tuple[str, str | None], ProfileSeries]
    grid: TimeHierarchy
    interest: float = 0.05
    _tech_index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "carriers", _frozen_map(self.carriers))
        object.__setattr__(self, "regions", _frozen_map(self.regions))
        object.__setattr__(self, "profiles", _frozen_map(self.profiles))
        for name in ("techs", "storages", "links", "demands", "imports", "caps"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        object.__setattr__(self, "_tech_index", {t.name: t for t in self.techs})

    def tech(self, name: str) -> ConversionTech:
        try:
            return self._tech_index[name]
        except KeyError:
            raise KeyError(f"unknown technology {name!r}") from None

    def profile(self, name: str, region: str) -> ProfileSeries | None:
        """Region-specific profile, falling back to the region-free one."""
        return self.profiles.get((name, region)) or self.profiles.get((name, None))

    def balance_region(self, region: str, carrier: str) -> str | None:
        """Ancestor of ``region`` (or itself) at the carrier's spatial level."""
        target = self.carriers[carrier].spatial_level
        r = self.regions.get(region)
        while r is not None:
            if r.level == target:
                return r.id
            r = self.regions.get(r.parent) if r.parent else None
        return None

    def regions_at(self, level: str) -> list[str]:
        return sorted(r.id for r in self.regions.values() if r.level == level)

    def replace(self, **changes) -> "EnergySystem":
        return dataclasses.replace(self, **changes)


# -- operations ----------------------------------------------------------------

def tech_resolution(tech: ConversionTech, carriers: Mapping[str, Carrier]) -> Level:
    """Finest temporal level among all carriers the technology touches."""
    return finest(carriers[c].temporal_level for c in tech.carriers)


def default_inflexible_rule(tech: ConversionTech, carriers: Mapping[str, Carrier]) -> str:
    """How the technology's electricity draw behaves when demand cannot adapt.

    Vehicles charge in proportion to plug-in availability, electrolyzers run
    flat, and electric techs feeding a coarser balance spread evenly over the
    balance block. Everything else keeps its dispatch freedom.
    """
    if tech.inflexible_rule:
        return tech.inflexible_rule
    if tech.kind == "bev":
        return "availability"
    if ELECTRICITY not in tech.inputs:
        return "none"
    if HYDROGEN in tech.outputs:
        return "constant"
    coarse = [c for c in tech.outputs if carriers[c].temporal_level is not Level.HOUR]
    return "block_uniform" if coarse else "none"


def tech_capex_annuity(tech: ConversionTech, interest: float) -> float:
    f = idc(interest, tech.construction_time, tech.capex)
    return annuity(f, tech.capex, interest, tech.lifetime)


def annuitize_all(system: EnergySystem, interest: float | None = None) -> EnergySystem:
    """Fill every annualized capital cost from the raw overnight costs.

    Recomputes from the raw data each time, so applying it twice is harmless.
    """
    i = system.interest if interest is None else interest
    techs = tuple(dataclasses.replace(t, capex_annuity=tech_capex_annuity(t, i)) for t in system.techs)
    storages = tuple(
        dataclasses.replace(
            s,
            power_annuity=annuity(0.0, s.power_capex, i, s.lifetime),
            energy_annuity=annuity(0.0, s.energy_capex, i, s.lifetime),
        )
        for s in system.storages
    )
    return system.replace(techs=techs, storages=storages, interest=i)


def apply_scenario(system: EnergySystem, scenario: ScenarioConfig) -> EnergySystem:
    """Set the scenario's nuclear assumption and finance, then annuitize."""
    techs = list(system.techs)
    overrides = {
        "capex": scenario.nuclear_overnight_cost,
        "construction_time": scenario.nuclear_construction_time,
        "lifetime": scenario.nuclear_depreciation,
    }
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if overrides:
        hits = [k for k, t in enumerate(techs) if t.name == scenario.nuclear_tech]
        if not hits:
            raise DataError(f"scenario sets nuclear costs but there is no technology {scenario.nuclear_tech!r}")
        for k in hits:
            techs[k] = dataclasses.replace(techs[k], **overrides)
    system = system.replace(techs=tuple(techs))
    if scenario.demand_scale != 1.0:
        system = system.replace(
            demands=tuple(
                dataclasses.replace(d, annual_total=d.annual_total * scenario.demand_scale)
                for d in system.demands
            )
        )
    return annuitize_all(system, scenario.interest)


def bev_charging_capacity(vehicles: float) -> float:
    """Grid-usable charging power in GW of a fleet at full plug-in availability."""
    return vehicles * BEV_CHARGE_KW * BEV_SAFETY / 1e6


def validate(system: EnergySystem) -> list[str]:
    """All violated invariants and dangling references, in a stable order."""
    out: list[str] = []
    carriers, regions = system.carriers, system.regions

    for r in sorted(regions.values(), key=lambda r: r.id):
        if r.level not in SPATIAL_LEVELS:
            out.append(f"region {r.id}: unknown level {r.level!r}")
        if not (-90 <= r.lat <= 90 and -180 <= r.lon <= 180):
            out.append(f"region {r.id}: invalid centroid ({r.lat}, {r.lon})")
        if r.parent is not None and r.parent not in regions:
            out.append(f"region {r.id}: unknown parent {r.parent!r}")
        if r.level == "cluster":
            p = regions.get(r.parent) if r.parent else None
            if p is None or p.level != "zone":
                out.append(f"region {r.id}: cluster needs a zone parent")
        seen, cur = set(), r
        while cur is not None and cur.parent:
            if cur.id in seen:
                out.append(f"region {r.id}: nesting contains a cycle")
                break
            seen.add(cur.id)
            cur = regions.get(cur.parent)
    for c in sorted(carriers.values(), key=lambda c: c.name):
        if c.spatial_level not in SPATIAL_LEVELS:
            out.append(f"carrier {c.name}: unknown spatial level {c.spatial_level!r}")
    if ELECTRICITY in carriers and carriers[ELECTRICITY].temporal_level is not Level.HOUR:
        out.append("carrier electricity: must be hourly")

    def check_profile(owner: str, name: str | None, region: str, fine: Level, upper: float | None):
        if name is None:
            return
        p = system.profile(name, region)
        if p is None:
            out.append(f"{owner}: missing profile {name!r} for region {region}")
            return
        if p.level.hours > fine.hours:
            out.append(f"{owner}: profile {name!r} coarser than the technology")
        if upper is not None and (p.values.min() < 0 or p.values.max() > upper + 1e-6):
            out.append(f"{owner}: profile {name!r} outside [0, {upper}]")

    tech_names = set()
    for t in system.techs:
        who = f"technology {t.name}"
        if t.name in tech_names:
            out.append(f"{who}: duplicate name")
        tech_names.add(t.name)
        if not t.outputs:
            out.append(f"{who}: needs at least one output")
        for side in (t.inputs, t.outputs):
            for c, v in sorted(side.items()):
                if c not in carriers:
                    out.append(f"{who}: unknown carrier {c!r}")
                if not v > 0:
                    out.append(f"{who}: coefficient for {c} must be positive")
        if not 0 < t.availability <= 1:
            out.append(f"{who}: availability must lie in (0, 1]")
        if t.lifetime < 1:
            out.append(f"{who}: lifetime must be at least one year")
        if t.capex < 0 or t.fixed_om < 0 or t.variable_om < 0:
            out.append(f"{who}: negative cost")
        if t.family not in COST_FAMILIES:
            out.append(f"{who}: unknown cost family {t.family!r}")
        if t.kind not in ("standard", "bev"):
            out.append(f"{who}: unknown kind {t.kind!r}")
        if t.inflexible_rule is not None and t.inflexible_rule not in INFLEXIBLE_RULES:
            out.append(f"{who}: unknown inflexible rule {t.inflexible_rule!r}")
        if t.kind == "bev" and t.profile is None:
            out.append(f"{who}: vehicles need an availability profile")
        if t.proportional and t.serves is None:
            out.append(f"{who}: proportional technology must name the demand it serves")
        if not t.carriers or any(c not in carriers for c in t.carriers):
            continue
        fine = tech_resolution(t, carriers)
        for s in t.sites:
            if s.region not in regions:
                out.append(f"{who}: unknown region {s.region!r}")
                continue
            if not 0 <= s.min_gw <= s.max_gw or s.existing_gw < 0:
                out.append(f"{who}: inconsistent capacity bounds in {s.region}")
            for c in t.carriers:
                if system.balance_region(s.region, c) is None:
                    out.append(f"{who}: site {s.region} lies above the {carriers[c].spatial_level} level of {c}")
            check_profile(who, t.profile, s.region, fine, None if t.kind == "bev" else 1.0)

    lo, hi = EP_RATIO_LIMITS
    for s in system.storages:
        who = f"storage {s.name}"
        if s.carrier not in carriers:
            out.append(f"{who}: unknown carrier {s.carrier!r}")
        if not 0 < s.cycle_efficiency <= 1:
            out.append(f"{who}: cycle efficiency must lie in (0, 1]")
        if s.ep_min < 0 or s.ep_min > s.ep_max:
            out.append(f"{who}: inconsistent energy-to-power bounds")
        if s.name.startswith("battery") and (s.ep_min < lo or s.ep_max > hi):
            out.append(f"{who}: energy-to-power ratio must stay within [{lo}, {hi}]")
        if s.lifetime < 1:
            out.append(f"{who}: lifetime must be at least one year")
        if s.family not in COST_FAMILIES:
            out.append(f"{who}: unknown cost family {s.family!r}")
        if s.dedicated_to is not None:
            t = system._tech_index.get(s.dedicated_to)
            if t is None:
                out.append(f"{who}: dedicated to unknown technology {s.dedicated_to!r}")
            elif not t.proportional or s.carrier not in t.outputs:
                out.append(f"{who}: dedicated storage must hold an output of a proportional technology")
        for site in s.sites:
            if site.region not in regions:
                out.append(f"{who}: unknown region {site.region!r}")
            elif s.carrier in carriers and system.balance_region(site.region, s.carrier) != site.region:
                out.append(f"{who}: site {site.region} is not at the {carriers[s.carrier].spatial_level} level")

    for link in system.links:
        who = f"link {link.id}"
        if link.carrier not in carriers:
            out.append(f"{who}: unknown carrier {link.carrier!r}")
            continue
        for end in (link.from_region, link.to_region):
            if end not in regions:
                out.append(f"{who}: unknown region {end!r}")
            elif system.balance_region(end, link.carrier) != end:
                out.append(f"{who}: endpoint {end} is not at the {carriers[link.carrier].spatial_level} level")

    keys = set()
    for d in system.demands:
        who = f"demand {d.id}/{d.region}"
        if (d.id, d.region) in keys:
            out.append(f"{who}: duplicate segment")
        keys.add((d.id, d.region))
        if d.carrier not in carriers:
            out.append(f"{who}: unknown carrier {d.carrier!r}")
            continue
        if d.region not in regions:
            out.append(f"{who}: unknown region {d.region!r}")
        elif system.balance_region(d.region, d.carrier) != d.region:
            out.append(f"{who}: region is not at the {carriers[d.carrier].spatial_level} level")
        if d.annual_total < 0:
            out.append(f"{who}: negative total")
        lvl = carriers[d.carrier].temporal_level
        if d.profile.level is not lvl:
            out.append(f"{who}: profile must be at the {lvl.value} level")
        elif len(d.profile) != system.grid.steps(lvl):
            out.append(f"{who}: profile length {len(d.profile)} does not match {system.grid.steps(lvl)} steps")
        elif abs(d.profile.values.sum() - 1.0) > 1e-9 or d.profile.values.min() < 0:
            out.append(f"{who}: profile must be nonnegative and sum to 1")
        if d.kind is DemandKind.PROPORTIONAL_HEAT:
            serving = [t for t in system.techs if t.serves == d.id and t.site(d.region)]
            if not serving:
                out.append(f"{who}: no proportional technology serves it")
            others = [
                t.name for t in system.techs
                if d.carrier in t.outputs and not t.proportional
                and any(system.balance_region(s.region, d.carrier) == d.region for s in t.sites)
            ]
            if others:
                out.append(f"{who}: non-proportional producers {', '.join(sorted(others))}")

    for imp in system.imports:
        who = f"import {imp.id}"
        if imp.carrier not in carriers:
            out.append(f"{who}: unknown carrier {imp.carrier!r}")
        elif imp.region not in regions or system.balance_region(imp.region, imp.carrier) != imp.region:
            out.append(f"{who}: bad region {imp.region!r}")
        if imp.cost < 0 or imp.max_annual < 0:
            out.append(f"{who}: negative cost or limit")
    for cap in system.caps:
        if cap.carrier not in carriers:
            out.append(f"resource cap: unknown carrier {cap.carrier!r}")
        if cap.max_annual < 0:
            out.append(f"resource cap {cap.carrier}: negative limit")
    return out


# -- loading ---------------------------------------------------------------------

def _parse_coefs(text: str, where: str) -> dict[str, float]:
    out: dict[str, float] = {}
    for part in filter(None, (p.strip() for p in text.split(";"))):
        name, sep, val = part.partition(":")
        if not sep:
            raise DataError(f"{where}: expected carrier:coefficient, got {part!r}")
        out[name.strip()] = parse_float(val.strip(), where)
    return out


def _opt(value: str) -> str | None:
    return value or None


def _sites(rows, key: str, where: str) -> dict[str, list[Site]]:
    out: dict[str, list[Site]] = {}
    for r in rows:
        w = f"{where} {r[key]}/{r['region']}"
        out.setdefault(r[key], []).append(
            Site(
                region=r["region"],
                min_gw=parse_float(r.get("min", ""), w, 0.0),
                max_gw=parse_float(r.get("max", ""), w, math.inf),
                existing_gw=parse_float(r.get("existing", ""), w, 0.0),
            )
        )
    return out


def _slice(p: ProfileSeries, scenario_periods, starts) -> ProfileSeries:
    per_day = 24 // p.level.hours
    chunks = []
    for period, start in zip(scenario_periods, starts):
        a, b = start * per_day, (start + period.days) * per_day
        if b > len(p):
            raise DataError(f"period {period.name} runs past the end of the profile data")
        chunks.append(p.values[a:b])
    return ProfileSeries(p.level, np.concatenate(chunks))


def load_profiles(directory: Path) -> dict[tuple[str, str | None], ProfileSeries]:
    """``name.csv`` applies to all regions, ``name__REGION.csv`` to one."""
    out = {}
    if not directory.is_dir():
        return out
    for path in sorted(directory.glob("*.csv")):
        name, sep, region = path.stem.partition("__")
        out[(name, region if sep else None)] = read_profile(path)
    return out


def profile_days(profiles) -> int | None:
    days = {len(p) * p.level.hours // 24 for p in profiles.values()}
    if len(days) > 1:
        raise DataError(f"profiles cover different numbers of days: {sorted(days)}")
    return days.pop() if days else None


def load_system(directory: str | Path, scenario: ScenarioConfig | None = None) -> EnergySystem:
    """Read a system directory and cut its profiles to the scenario horizon.

    Without scenario periods the whole profile span forms one period scaled
    to 365 days. Capital costs are left raw; see :func:`apply_scenario`.
    """
    d = Path(directory)
    if not d.is_dir():
        raise DataError(f"{d}: not a directory")
    scenario = scenario or ScenarioConfig()

    def table(name, required, optional=(), must=True):
        path = d / name
        if not path.exists():
            if must:
                raise DataError(f"{path}: missing table")
            return []
        return read_csv(path, required, optional)

    carriers = {}
    for r in table("carriers.csv", ["name", "temporal_level"], ["spatial_level", "unit"]):
        if r["name"] in carriers:
            raise DataError(f"carriers.csv: duplicate carrier {r['name']}")
        carriers[r["name"]] = Carrier(
            r["name"], Level.parse(r["temporal_level"]), r.get("spatial_level") or "zone", r.get("unit") or "GWh"
        )
    regions = {}
    for r in table("regions.csv", ["id", "level", "lat", "lon"], ["parent"]):
        if r["id"] in regions:
            raise DataError(f"regions.csv: duplicate region {r['id']}")
        regions[r["id"]] = Region(
            r["id"], r["level"], _opt(r.get("parent", "")),
            parse_float(r["lat"], f"region {r['id']}"), parse_float(r["lon"], f"region {r['id']}"),
        )

    raw_profiles = load_profiles(d / "profiles")
    days = profile_days(raw_profiles)
    periods, starts = scenario.periods, scenario.period_starts
    if not periods:
        if days is None:
            raise DataError(f"{d}: no profiles and no periods defined")
        periods, starts = (Period("p0", days, 365.0 / days),), (0,)
    elif not starts:
        starts = tuple(np.cumsum([0] + [p.days for p in periods[:-1]]).tolist())
    grid = TimeHierarchy(periods)
    profiles = {k: _slice(p, periods, starts) for k, p in raw_profiles.items()}

    tech_sites = _sites(
        table("tech_sites.csv", ["tech", "region"], ["min", "max", "existing"], must=False), "tech", "site"
    )
    techs = []
    tech_cols = ["name", "outputs", "capex", "lifetime"]
    tech_opt = ["inputs", "fixed_om", "variable_om", "availability", "profile", "proportional",
                "serves", "family", "kind", "inflexible_rule", "construction_time", "description"]
    for r in table("technologies.csv", tech_cols, tech_opt):
        w = f"technology {r['name']}"
        techs.append(
            ConversionTech(
                name=r["name"],
                inputs=_parse_coefs(r.get("inputs", ""), w),
                outputs=_parse_coefs(r["outputs"], w),
                capex=parse_float(r["capex"], w),
                lifetime=int(parse_float(r["lifetime"], w)),
                fixed_om=parse_float(r.get("fixed_om", ""), w, 0.0),
                variable_om=parse_float(r.get("variable_om", ""), w, 0.0),
                availability=parse_float(r.get("availability", ""), w, 1.0),
                sites=tuple(tech_sites.pop(r["name"], [])),
                profile=_opt(r.get("profile", "")),
                proportional=parse_bool(r.get("proportional", ""), w),
                serves=_opt(r.get("serves", "")),
                family=r.get("family") or "generation",
                kind=r.get("kind") or "standard",
                inflexible_rule=_opt(r.get("inflexible_rule", "")),
                construction_time=parse_float(r.get("construction_time", ""), w, 0.0),
            )
        )
    if tech_sites:
        raise DataError(f"tech_sites.csv: unknown technologies {', '.join(sorted(tech_sites))}")

    storage_sites = _sites(
        table("storage_sites.csv", ["storage", "region"], ["min", "max", "existing"], must=False),
        "storage", "storage site",
    )
    storages = []
    st_opt = ["cycle_efficiency", "ep_min", "ep_max", "fixed_om", "dedicated_to", "family", "description"]
    for r in table("storage.csv", ["name", "carrier", "power_capex", "energy_capex", "lifetime"], st_opt, must=False):
        w = f"storage {r['name']}"
        storages.append(
            StorageTech(
                name=r["name"],
                carrier=r["carrier"],
                power_capex=parse_float(r["power_capex"], w),
                energy_capex=parse_float(r["energy_capex"], w),
                lifetime=int(parse_float(r["lifetime"], w)),
                cycle_efficiency=parse_float(r.get("cycle_efficiency", ""), w, 1.0),
                ep_min=parse_float(r.get("ep_min", ""), w, 0.0),
                ep_max=parse_float(r.get("ep_max", ""), w, math.inf),
                fixed_om=parse_float(r.get("fixed_om", ""), w, 0.0),
                sites=tuple(storage_sites.pop(r["name"], [])),
                dedicated_to=_opt(r.get("dedicated_to", "")),
                family=r.get("family") or "flexibility",
            )
        )
    if storage_sites:
        raise DataError(f"storage_sites.csv: unknown storages {', '.join(sorted(storage_sites))}")

    extra: dict[str, list[ExpansionStep]] = {}
    for r in table("link_steps.csv", ["link", "cost", "max_gw"], must=False):
        w = f"link step {r['link']}"
        extra.setdefault(r["link"], []).append(
            ExpansionStep(parse_float(r["cost"], w), parse_float(r["max_gw"], w))
        )
    centroids = {k: v.centroid for k, v in regions.items()}
    links = []
    link_path = d / "links.csv"
    if link_path.exists():
        with open(link_path, newline="", encoding="utf-8") as fh:
            header = next(csv.reader(fh), [])
        link_req = ["id", "from", "to", "kind", "carrier"]
        link_opt = [c for c in header if c not in link_req]
        allowed = {"length_km", "existing_gw", "loss_per_1000km", "bidirectional", "fixed_om",
                   "variable_cost", "max_expansion_gw", "description"}
        for c in link_opt:
            if c not in allowed and not (c.startswith("step") and c.endswith(("_cost", "_gw"))):
                raise DataError(f"{link_path}: unexpected column {c}")
        for r in read_csv(link_path, link_req, link_opt):
            links.append(link_from_row(r, centroids, extra.pop(r["id"], ()), scenario.interest))
    if extra:
        raise DataError(f"link_steps.csv: unknown links {', '.join(sorted(extra))}")

    demands = []
    for r in table("demands.csv", ["id", "carrier", "region", "annual_total", "profile"], ["kind"]):
        w = f"demand {r['id']}/{r['region']}"
        p = profiles.get((r["profile"], r["region"])) or profiles.get((r["profile"], None))
        if p is None:
            raise DataError(f"{w}: missing profile {r['profile']!r}")
        total = p.values.sum()
        if not total > 0 or p.values.min() < 0:
            raise DataError(f"{w}: profile must be nonnegative with positive sum")
        try:
            kind = DemandKind(r.get("kind") or "inflexible")
        except ValueError:
            raise DataError(f"{w}: unknown kind {r['kind']!r}") from None
        demands.append(
            DemandSegment(
                r["id"], r["carrier"], r["region"], parse_float(r["annual_total"], w),
                ProfileSeries(p.level, p.values / total), kind,
            )
        )
    imports = []
    for r in table("imports.csv", ["id", "carrier", "region", "cost"], ["max_annual", "family", "description"], must=False):
        w = f"import {r['id']}"
        imports.append(
            Import(r["id"], r["carrier"], r["region"], parse_float(r["cost"], w),
                   parse_float(r.get("max_annual", ""), w, math.inf), r.get("family") or "imports")
        )
    caps = [
        ResourceCap(r["carrier"], parse_float(r["max_annual"], f"cap {r['carrier']}"))
        for r in table("caps.csv", ["carrier", "max_annual"], must=False)
    ]
    return EnergySystem(
        carriers=carriers, regions=regions, techs=tuple(techs), storages=tuple(storages),
        links=tuple(links), demands=tuple(demands), imports=tuple(imports), caps=tuple(caps),
        profiles=profiles, grid=grid, interest=scenario.interest,
    )


def load_scenario(path: str | Path) -> ScenarioConfig:
    """Parse a scenario TOML file; relative paths resolve against its folder."""
    p = Path(path)
    try:
        doc = tomli.loads(p.read_text(encoding="utf-8"))
    except (OSError, tomli.TOMLDecodeError) as exc:
        raise DataError(f"{p}: {exc}") from None
    return scenario_from_dict(doc, p.parent)


def scenario_from_dict(doc: dict, base: Path | None = None) -> ScenarioConfig:
    base = base or Path(".")
    known = {"name", "system", "horizon", "finance", "nuclear", "solver", "model", "output"}
    unknown = set(doc) - known
    if unknown:
        raise DataError(f"scenario: unknown key(s) {', '.join(sorted(unknown))}")
    kw: dict = {"name": doc.get("name", "scenario")}
    if "system" in doc:
        kw["system_dir"] = str((base / doc["system"]).resolve())
    periods, starts = [], []
    for k, per in enumerate(doc.get("horizon", {}).get("periods", [])):
        days = int(per["days"])
        weight = float(per.get("weight", 365.0 / days))
        periods.append(Period(str(per.get("name", f"p{k}")), days, weight))
        starts.append(int(per.get("start_day", sum(q.days for q in periods[:-1]))))
    kw["periods"], kw["period_starts"] = tuple(periods), tuple(starts)
    fin = doc.get("finance", {})
    if "interest" in fin:
        kw["interest"] = float(fin["interest"])
    nuc = doc.get("nuclear", {})
    kw["nuclear_tech"] = nuc.get("tech", "nuclear")
    for key, name, conv in (
        ("overnight_cost", "nuclear_overnight_cost", float),
        ("construction_time", "nuclear_construction_time", float),
        ("depreciation", "nuclear_depreciation", int),
    ):
        if key in nuc:
            kw[name] = conv(nuc[key])
    sol = doc.get("solver", {})
    for key in ("feasibility_tol", "optimality_tol"):
        if key in sol:
            kw[key] = float(sol[key])
    if "max_iterations" in sol:
        kw["max_iterations"] = int(sol["max_iterations"])
    model = doc.get("model", {})
    if "flexible" in model:
        kw["flexible"] = bool(model["flexible"])
    if "demand_scale" in model:
        kw["demand_scale"] = float(model["demand_scale"])
    out = doc.get("output", {})
    if "dir" in out:
        kw["output_dir"] = str(base / out["dir"])
    try:
        return ScenarioConfig(**kw)
    except (TypeError, KeyError, ValueError) as exc:
        raise DataError(f"scenario: {exc}") from None
