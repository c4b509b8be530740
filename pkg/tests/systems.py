"""Small hand-built energy systems shared by several test modules."""

import math

import numpy as np

from nucshare.system import (Carrier, ConversionTech, DemandKind, DemandSegment, EnergySystem,
                             Import, Region, Site, StorageTech)
from nucshare.timegrid import Level, TimeHierarchy, profile_from_values

ELEC = Carrier("electricity", Level.HOUR)
HEAT = Carrier("space_heat", Level.FOUR_HOUR)
ZONE = Region("Z", "zone", None, 50.0, 10.0)


def flat(level: Level, n: int):
    return profile_from_values(level, np.full(n, 1.0 / n))


def one_zone(techs, demands, days=1, weight=1.0, carriers=(ELEC,), storages=(), imports=(),
             profiles=None, interest=0.05) -> EnergySystem:
    return EnergySystem(
        carriers={c.name: c for c in carriers},
        regions={"Z": ZONE},
        techs=tuple(techs),
        storages=tuple(storages),
        links=(),
        demands=tuple(demands),
        imports=tuple(imports),
        caps=(),
        profiles=profiles or {},
        grid=TimeHierarchy.single(days, weight),
        interest=interest,
    )


def generator(name, capex=0.0, variable_om=0.0, lifetime=20, existing=None, max_gw=math.inf,
              availability=1.0, profile=None, fixed_om=0.0, family="generation"):
    if existing is not None:
        site = Site("Z", existing, existing, existing)
    else:
        site = Site("Z", 0.0, max_gw)
    return ConversionTech(name, {}, {"electricity": 1.0}, capex, lifetime, fixed_om=fixed_om,
                          variable_om=variable_om, availability=availability, sites=(site,),
                          profile=profile, family=family)


def electricity_demand(total, values, sid="load"):
    p = np.asarray(values, dtype=float)
    return DemandSegment(sid, "electricity", "Z", total, profile_from_values(Level.HOUR, p / p.sum()))


def single_generator(availability=0.9, load=None):
    """One zone, one day, one generator: the optimum sizes it to peak / availability."""
    load = np.array([3, 4, 5, 6] * 6, dtype=float) if load is None else load
    gen = generator("plant", capex=1000.0, variable_om=10.0, availability=availability)
    return one_zone([gen], [electricity_demand(float(load.sum()), load)]), load


def heat_spike(block_energy=3.88, blocks=6, heater_gw=1.0):
    """Proportional heating fixture.

    A 1 GW electric boiler must deliver ``block_energy`` GWh in each four-hour
    block. Free base power is missing in the first hour of every block, where
    only a costly peaker can cover the boiler's draw.
    """
    base_cf = np.tile([0.0, 1.0, 1.0, 1.0], blocks)
    profiles = {("base_cf", None): profile_from_values(Level.HOUR, base_cf)}
    base = generator("base", existing=10.0, profile="base_cf")
    peaker = generator("peaker", existing=10.0, variable_om=1000.0)
    boiler = ConversionTech("boiler", {"electricity": 1.0}, {"space_heat": 1.0}, 0.0, 20,
                            sites=(Site("Z", heater_gw, heater_gw, heater_gw),),
                            proportional=True, serves="heat")
    heat = DemandSegment("heat", "space_heat", "Z", block_energy * blocks, flat(Level.FOUR_HOUR, blocks),
                         DemandKind.PROPORTIONAL_HEAT)
    return one_zone([base, peaker, boiler], [heat], days=blocks * 4 // 24, carriers=(ELEC, HEAT),
                    profiles=profiles)


def storage_toy(efficiency=0.8):
    """PV-only supply with a battery; night load must be shifted through storage."""
    pv = np.array([0] * 6 + [0.2, 0.5, 0.8, 1, 1, 1, 1, 1, 0.8, 0.5, 0.2] + [0] * 7, dtype=float)
    profiles = {("pv", None): profile_from_values(Level.HOUR, pv)}
    solar = generator("pv", capex=600.0, variable_om=0.5, lifetime=25, profile="pv")
    backup = generator("backup", capex=400.0, variable_om=150.0, lifetime=30, family="thermal_backup")
    battery = StorageTech("battery", "electricity", 100.0, 150.0, 15, efficiency, 0.1, 10.0,
                          fixed_om=5.0, sites=(Site("Z"),))
    load = np.full(24, 5.0)
    return one_zone([solar, backup], [electricity_demand(365.0 * float(load.sum()), load)],
                    storages=[battery], profiles=profiles, weight=365.0)


def import_only(cost=131.8, cap=math.inf):
    load = np.full(24, 2.0)
    imp = Import("ship", "electricity", "Z", cost, cap)
    return one_zone([], [electricity_demand(float(load.sum()), load)], imports=[imp])
