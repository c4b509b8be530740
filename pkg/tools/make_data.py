"""Regenerate the bundled reference and toy system directories.

Profiles are synthetic: smooth daily and weekly shapes plus seeded noise.
Run from the repository root: ``python tools/make_data.py``.
"""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parents[1] / "src" / "nucshare" / "data"


def write_csv(path: Path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_profile(path: Path, level: str, values):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(level + "\n")
        for v in values:
            fh.write(f"{v:.4f}\n")


def ar_noise(rng, n, phi=0.9, scale=1.0):
    e = rng.normal(0.0, scale, n)
    out = np.zeros(n)
    for k in range(1, n):
        out[k] = phi * out[k - 1] + e[k]
    return out


def electricity_load(rng, days, base):
    h = np.arange(24 * days)
    hod = h % 24
    dow = (h // 24) % 7
    shape = 1.0 + 0.18 * np.sin((hod - 6) / 24 * 2 * np.pi) + 0.1 * np.exp(-((hod - 19) ** 2) / 6.0)
    shape *= np.where(dow >= 5, 0.9, 1.0)
    return base * shape * (1 + 0.02 * rng.normal(size=h.size))


def heat_load(rng, days, steps_per_day):
    n = days * steps_per_day
    k = np.arange(n) % steps_per_day
    shape = 1.0 + 0.25 * np.cos((k / steps_per_day - 0.1) * 2 * np.pi)
    return shape * (1 + 0.05 * ar_noise(rng, n, 0.8, 0.5))


def wind_cf(rng, days, mean, phi=0.97):
    n = 24 * days
    z = ar_noise(rng, n, phi, 0.35)
    cf = mean * np.exp(z - z.mean())
    return np.clip(cf, 0.0, 1.0)


def pv_cf(rng, days, peak, lat):
    h = np.arange(24 * days)
    hod = h % 24
    daylen = 16.0 if lat > 55 else 13.0
    sun = np.clip(np.cos((hod - 12.5) / daylen * np.pi), 0.0, None)
    cloud = np.repeat(np.clip(0.75 + 0.25 * rng.normal(size=days), 0.3, 1.0), 24)
    return np.clip(peak * sun * cloud, 0.0, 1.0)


def bev_availability(days):
    hod = np.arange(24 * days) % 24
    return np.where((hod >= 8) & (hod < 17), 0.45, np.where((hod >= 17) & (hod < 22), 0.75, 0.95))


TECH_HEADER = ["name", "inputs", "outputs", "capex", "lifetime", "fixed_om", "variable_om",
               "availability", "profile", "proportional", "serves", "family", "kind",
               "inflexible_rule", "construction_time"]


def tech(name, inputs, outputs, capex, lifetime, fom, vom=0.0, avail=1.0, profile="",
         proportional=False, serves="", family="generation", kind="", rule="", ctime=""):
    return [name, inputs, outputs, capex, lifetime, fom, vom, avail, profile,
            "true" if proportional else "", serves, family, kind, rule, ctime]


def make_reference():
    d = ROOT / "reference"
    rng = np.random.default_rng(20220917)
    days = 7
    write_csv(d / "carriers.csv", ["name", "temporal_level", "spatial_level", "unit"], [
        ["electricity", "hour", "zone", "GWh"],
        ["district_heat", "four_hour", "cluster", "GWh"],
        ["space_heat", "four_hour", "zone", "GWh"],
        ["hydrogen", "day", "zone", "GWh"],
        ["passenger_transport", "day", "zone", "Mpkm"],
        ["biomass", "day", "zone", "GWh"],
    ])
    write_csv(d / "regions.csv", ["id", "level", "parent", "lat", "lon"], [
        ["EU", "nation", "", 50.0, 10.0],
        ["NO", "zone", "EU", 59.0, 12.0],
        ["CE", "zone", "EU", 50.5, 10.0],
        ["SO", "zone", "EU", 41.5, 13.0],
        ["NO1", "cluster", "NO", 59.9, 10.7],
        ["CE1", "cluster", "CE", 52.5, 13.4],
        ["CE2", "cluster", "CE", 48.1, 11.6],
        ["SO1", "cluster", "SO", 41.9, 12.5],
    ])
    zones = ["NO", "CE", "SO"]
    clusters = ["NO1", "CE1", "CE2", "SO1"]
    write_csv(d / "technologies.csv", TECH_HEADER, [
        tech("nuclear", "", "electricity:1", 6000, 40, 88.81, 10.96, 0.95, ctime=7),
        tech("wind_onshore_a", "", "electricity:1", 963.1, 30, 12.0, profile="wind_onshore_a"),
        tech("wind_onshore_b", "", "electricity:1", 963.1, 30, 12.0, profile="wind_onshore_b"),
        tech("wind_offshore", "", "electricity:1", 1900, 25, 40.0, profile="wind_offshore"),
        tech("pv_openspace", "", "electricity:1", 420, 25, 8.0, profile="pv"),
        tech("pv_rooftop", "", "electricity:1", 780, 25, 12.0, profile="pv"),
        tech("hydro_ror", "", "electricity:1", 3000, 60, 30.0, profile="hydro_ror"),
        tech("h2_turbine", "hydrogen:2.5", "electricity:1", 550, 30, 15.0, 4.0, family="thermal_backup"),
        tech("biomass_chp", "biomass:2.5", "electricity:1;district_heat:1.2", 2500, 30, 90.0, 5.0,
             family="thermal_backup"),
        tech("electrolyzer", "electricity:1", "hydrogen:0.7;district_heat:0.15", 600, 25, 12.0,
             family="flexibility"),
        tech("hp_district", "electricity:0.333333", "district_heat:1", 700, 25, 3.0, family="flexibility"),
        tech("eboiler", "electricity:1.02", "district_heat:1", 100, 25, 1.0, family="flexibility"),
        tech("hp_space", "electricity:0.4", "space_heat:1", 1200, 20, 15.0, proportional=True,
             serves="space_heat", family="flexibility"),
        tech("h2boiler_space", "hydrogen:1.1", "space_heat:1", 300, 20, 5.0, proportional=True,
             serves="space_heat", family="thermal_backup"),
        tech("bev", "electricity:1", "passenger_transport:6", 300, 15, 0.0, 0.0, 0.75,
             profile="bev_availability", family="flexibility", kind="bev"),
    ])
    fleet = {"NO": 2.0e6, "CE": 10.0e6, "SO": 6.0e6}
    sites = []
    for z in zones:
        sites.append(["nuclear", z, "", "", ""])
    for z, mx in zip(zones, (25, 35, 20)):
        sites.append(["wind_onshore_a", z, "", mx, ""])
    for z in zones:
        sites.append(["wind_onshore_b", z, "", 80, ""])
    sites += [["wind_offshore", "NO", "", 30, ""], ["wind_offshore", "CE", "", 25, ""]]
    for z, mx in zip(zones, (10, 60, 70)):
        sites.append(["pv_openspace", z, "", mx, ""])
    for z in ("CE", "SO"):
        sites.append(["pv_rooftop", z, "", 40, ""])
    sites += [["hydro_ror", "NO", "", 8, 8], ["hydro_ror", "SO", "", 3, 3]]
    for z in zones:
        sites.append(["h2_turbine", z, "", "", ""])
    for c in clusters:
        sites.append(["biomass_chp", c, "", "", ""])
    for c in clusters:
        sites.append(["electrolyzer", c, "", "", ""])
    for c in clusters:
        sites.append(["hp_district", c, "", "", ""])
    for c in clusters:
        sites.append(["eboiler", c, "", "", ""])
    for z in zones:
        sites.append(["hp_space", z, "", "", ""])
    for z in zones:
        sites.append(["h2boiler_space", z, "", "", ""])
    for z in zones:
        sites.append(["bev", z, round(fleet[z] * 5.0 / 1e6, 6), "", ""])
    write_csv(d / "tech_sites.csv", ["tech", "region", "min", "max", "existing"], sites)

    write_csv(d / "storage.csv", ["name", "carrier", "power_capex", "energy_capex", "lifetime",
                                  "cycle_efficiency", "ep_min", "ep_max", "fixed_om", "dedicated_to"], [
        ["battery", "electricity", 150, 180, 15, 0.9, 0.1, 10, 2, ""],
        ["heat_tank", "district_heat", 20, 3, 25, 0.95, "", "", "", ""],
        ["h2_cavern", "hydrogen", 100, 0.5, 40, 0.98, "", "", "", ""],
        ["space_tank", "space_heat", 60, 15, 20, 0.9, "", "", "", "hp_space"],
    ])
    st_sites = [["battery", z, "", ""] for z in zones]
    st_sites += [["heat_tank", c, "", ""] for c in clusters]
    st_sites += [["h2_cavern", "NO", "", 20000], ["h2_cavern", "CE", "", 40000]]
    st_sites += [["space_tank", z, "", ""] for z in zones]
    write_csv(d / "storage_sites.csv", ["storage", "region", "min", "max"], st_sites)

    write_csv(d / "links.csv", ["id", "from", "to", "kind", "carrier", "length_km", "existing_gw",
                                "fixed_om", "max_expansion_gw", "step1_cost", "step1_gw",
                                "step2_cost", "step2_gw", "step3_cost", "step3_gw"], [
        ["ac_no_ce", "NO", "CE", "HVAC", "electricity", "", 5, 2.0, "", 60, 3, 150, 4, 400, 5],
        ["ac_ce_so", "CE", "SO", "HVAC", "electricity", "", 6, 2.0, "", 55, 4, 140, 4, 380, 5],
        ["dc_no_so", "NO", "SO", "HVDC", "electricity", "", 0, 0.0, "", 90, 5, 220, 5, "", ""],
        ["h2_no_ce", "NO", "CE", "h2_pipeline", "hydrogen", "", 0, 0.0, 30, "", "", "", "", "", ""],
        ["h2_ce_so", "CE", "SO", "h2_pipeline", "hydrogen", "", 0, 0.0, 30, "", "", "", "", "", ""],
    ])
    write_csv(d / "imports.csv", ["id", "carrier", "region", "cost", "max_annual", "description"], [
        ["h2_ship", "hydrogen", "CE", 131.8, "", "liquid hydrogen by ship"],
        ["h2_morocco", "hydrogen", "SO", 90.7, 20000, "pipeline from Morocco"],
        ["h2_egypt", "hydrogen", "SO", 86.8, 15000, "pipeline from Egypt"],
        ["biomass_no", "biomass", "NO", 30.0, "", "domestic residues"],
        ["biomass_ce", "biomass", "CE", 30.0, "", "domestic residues"],
        ["biomass_so", "biomass", "SO", 30.0, "", "domestic residues"],
    ])
    write_csv(d / "caps.csv", ["carrier", "max_annual"], [["biomass", 30000]])

    write_csv(d / "demands.csv", ["id", "carrier", "region", "annual_total", "profile", "kind"], [
        ["electricity", "electricity", "NO", 60000, "electricity_load", "inflexible"],
        ["electricity", "electricity", "CE", 250000, "electricity_load", "inflexible"],
        ["electricity", "electricity", "SO", 150000, "electricity_load", "inflexible"],
        ["district_heat", "district_heat", "NO1", 8000, "district_heat_load", "coarse_balance"],
        ["district_heat", "district_heat", "CE1", 20000, "district_heat_load", "coarse_balance"],
        ["district_heat", "district_heat", "CE2", 15000, "district_heat_load", "coarse_balance"],
        ["district_heat", "district_heat", "SO1", 5000, "district_heat_load", "coarse_balance"],
        ["space_heat", "space_heat", "NO", 20000, "space_heat_load", "proportional_heat"],
        ["space_heat", "space_heat", "CE", 60000, "space_heat_load", "proportional_heat"],
        ["space_heat", "space_heat", "SO", 15000, "space_heat_load", "proportional_heat"],
        ["hydrogen", "hydrogen", "NO", 5000, "flat_day", "coarse_balance"],
        ["hydrogen", "hydrogen", "CE", 30000, "flat_day", "coarse_balance"],
        ["hydrogen", "hydrogen", "SO", 10000, "flat_day", "coarse_balance"],
        ["transport", "passenger_transport", "NO", round(fleet["NO"] * 4e-6 * 365 * 6, 3), "flat_day", "bev"],
        ["transport", "passenger_transport", "CE", round(fleet["CE"] * 4e-6 * 365 * 6, 3), "flat_day", "bev"],
        ["transport", "passenger_transport", "SO", round(fleet["SO"] * 4e-6 * 365 * 6, 3), "flat_day", "bev"],
    ])
    prof = d / "profiles"
    for z, base in zip(zones, (1.0, 1.0, 1.0)):
        write_profile(prof / f"electricity_load__{z}.csv", "hour", electricity_load(rng, days, base))
    write_profile(prof / "district_heat_load.csv", "four_hour", heat_load(rng, days, 6))
    write_profile(prof / "space_heat_load.csv", "four_hour", heat_load(rng, days, 6))
    write_profile(prof / "flat_day.csv", "day", np.ones(days))
    for z, m_a, m_off in zip(zones, (0.34, 0.30, 0.24), (0.48, 0.44, None)):
        a = wind_cf(rng, days, m_a)
        write_profile(prof / f"wind_onshore_a__{z}.csv", "hour", a)
        write_profile(prof / f"wind_onshore_b__{z}.csv", "hour", np.clip(0.72 * a, 0, 1))
        if m_off:
            write_profile(prof / f"wind_offshore__{z}.csv", "hour", wind_cf(rng, days, m_off, 0.98))
    for z, peak, lat in zip(zones, (0.45, 0.65, 0.8), (59, 50, 41)):
        write_profile(prof / f"pv__{z}.csv", "hour", pv_cf(rng, days, peak, lat))
    write_profile(prof / "hydro_ror.csv", "hour", np.full(24 * days, 0.6))
    write_profile(prof / "bev_availability.csv", "hour", bev_availability(days))


def make_toy():
    d = ROOT / "toy"
    rng = np.random.default_rng(7)
    days = 3
    write_csv(d / "carriers.csv", ["name", "temporal_level", "spatial_level", "unit"], [
        ["electricity", "hour", "zone", "GWh"],
        ["space_heat", "four_hour", "zone", "GWh"],
        ["hydrogen", "day", "zone", "GWh"],
        ["passenger_transport", "day", "zone", "Mpkm"],
    ])
    write_csv(d / "regions.csv", ["id", "level", "parent", "lat", "lon"], [
        ["A", "zone", "", 54.0, 9.0],
        ["B", "zone", "", 48.0, 11.0],
    ])
    write_csv(d / "technologies.csv", TECH_HEADER, [
        tech("nuclear", "", "electricity:1", 6000, 40, 88.81, 10.96, 0.95, ctime=7),
        tech("wind", "", "electricity:1", 1100, 30, 20.0, profile="wind"),
        tech("pv", "", "electricity:1", 500, 25, 9.0, profile="pv"),
        tech("h2_turbine", "hydrogen:2.5", "electricity:1", 550, 30, 15.0, 4.0, family="thermal_backup"),
        tech("electrolyzer", "electricity:1", "hydrogen:0.7", 700, 25, 14.0, family="flexibility"),
        tech("hp_space", "electricity:0.4", "space_heat:1", 1200, 20, 15.0, proportional=True,
             serves="space_heat", family="flexibility"),
        tech("bev", "electricity:1", "passenger_transport:6", 300, 15, 0.0, 0.0, 0.75,
             profile="bev_availability", family="flexibility", kind="bev"),
    ])
    sites = []
    for z in ("A", "B"):
        sites += [
            ["nuclear", z, "", "", ""],
            ["wind", z, "", 60 if z == "A" else 30, ""],
            ["pv", z, "", 40, ""],
            ["h2_turbine", z, "", "", ""],
            ["electrolyzer", z, "", "", ""],
            ["hp_space", z, "", "", ""],
            ["bev", z, 20 if z == "A" else 15, "", ""],
        ]
    write_csv(d / "tech_sites.csv", ["tech", "region", "min", "max", "existing"], sites)
    write_csv(d / "storage.csv", ["name", "carrier", "power_capex", "energy_capex", "lifetime",
                                  "cycle_efficiency", "ep_min", "ep_max", "fixed_om", "dedicated_to"], [
        ["battery", "electricity", 150, 180, 15, 0.9, 0.1, 10, 2, ""],
        ["h2_tank", "hydrogen", 100, 10, 30, 0.98, "", "", "", ""],
        ["space_tank", "space_heat", 60, 15, 20, 0.9, "", "", "", "hp_space"],
    ])
    write_csv(d / "storage_sites.csv", ["storage", "region", "min", "max"],
              [[s, z, "", ""] for s in ("battery", "h2_tank", "space_tank") for z in ("A", "B")])
    write_csv(d / "links.csv", ["id", "from", "to", "kind", "carrier", "length_km", "existing_gw",
                                "fixed_om", "step1_cost", "step1_gw", "step2_cost", "step2_gw"], [
        ["ac_a_b", "A", "B", "HVAC", "electricity", "", 4, 2.0, 60, 4, 200, 6],
    ])
    write_csv(d / "imports.csv", ["id", "carrier", "region", "cost", "max_annual", "description"], [
        ["h2_ship", "hydrogen", "A", 131.8, "", "liquid hydrogen by ship"],
    ])
    fleet = {"A": 4.0e6, "B": 3.0e6}
    write_csv(d / "demands.csv", ["id", "carrier", "region", "annual_total", "profile", "kind"], [
        ["electricity", "electricity", "A", 120000, "electricity_load", "inflexible"],
        ["electricity", "electricity", "B", 90000, "electricity_load", "inflexible"],
        ["space_heat", "space_heat", "A", 25000, "space_heat_load", "proportional_heat"],
        ["space_heat", "space_heat", "B", 15000, "space_heat_load", "proportional_heat"],
        ["hydrogen", "hydrogen", "A", 20000, "flat_day", "coarse_balance"],
        ["hydrogen", "hydrogen", "B", 10000, "flat_day", "coarse_balance"],
        ["transport", "passenger_transport", "A", round(fleet["A"] * 4e-6 * 365 * 6, 3), "flat_day", "bev"],
        ["transport", "passenger_transport", "B", round(fleet["B"] * 4e-6 * 365 * 6, 3), "flat_day", "bev"],
    ])
    prof = d / "profiles"
    write_profile(prof / "electricity_load.csv", "hour", electricity_load(rng, days, 1.0))
    write_profile(prof / "space_heat_load.csv", "four_hour", heat_load(rng, days, 6))
    write_profile(prof / "flat_day.csv", "day", np.ones(days))
    for z, m in (("A", 0.36), ("B", 0.27)):
        write_profile(prof / f"wind__{z}.csv", "hour", wind_cf(rng, days, m))
    for z, peak in (("A", 0.55), ("B", 0.7)):
        write_profile(prof / f"pv__{z}.csv", "hour", pv_cf(rng, days, peak, 50))
    write_profile(prof / "bev_availability.csv", "hour", bev_availability(days))


if __name__ == "__main__":
    make_reference()
    make_toy()
