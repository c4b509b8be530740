"""Cost arithmetic: inflation adjustment, financing during construction,
annuities, levelized cost of electricity and O&M harmonization.

All monetary quantities are US-$ of 2018 unless stated otherwise. Capacity
related costs are per kW (numerically equal to million $ per GW), energy
related costs per MWh.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from pathlib import Path
from typing import Sequence

from .errors import DataError, DomainError
from .tables import package_data, parse_float, read_csv

HOURS_PER_YEAR = 8760.0
BASE_YEAR = 2018

# kW -> MWh per year at a capacity factor of one
_MWH_PER_KW_YEAR = HOURS_PER_YEAR / 1000.0


@lru_cache(maxsize=None)
def inflation_table(path: str | None = None) -> dict[int, float]:
    """Year -> inflation until 2018 as a fraction (0.0607 for 6.07 %)."""
    src = Path(path) if path else package_data("finance", "inflation.csv")
    rows = read_csv(src, ["year", "inflation_to_2018_pct"])
    table = {}
    for row in rows:
        year = int(row["year"])
        if year in table:
            raise DataError(f"{src}: duplicate year {year}")
        table[year] = parse_float(row["inflation_to_2018_pct"], f"inflation {year}") / 100.0
    return table


@dataclass(frozen=True)
class MoneyValue:
    amount: float
    year: int

    def __post_init__(self):
        if not math.isfinite(self.amount):
            raise DomainError(f"amount must be finite, got {self.amount}")


def adjust_inflation(value: MoneyValue, table: dict[int, float] | None = None) -> float:
    """Convert ``value`` to US-$ of 2018 using the bundled inflation table.

    Years outside the table are rejected rather than extrapolated.
    """
    table = inflation_table() if table is None else table
    try:
        factor = table[value.year]
    except KeyError:
        lo, hi = min(table), max(table)
        raise DomainError(
            f"no inflation factor for year {value.year} (table covers {lo}-{hi})"
        ) from None
    return value.amount * (1.0 + factor)


def _check_nonnegative(**kwargs):
    for name, v in kwargs.items():
        if not (v >= 0.0) or not math.isfinite(v):
            raise DomainError(f"{name} must be finite and >= 0, got {v}")


def idc(i: float, t: float, c: float) -> float:
    """Financing cost accrued during construction.

    Parameters
    ----------
    i : float
        Interest rate per year (fraction).
    t : float
        Construction time in years.
    c : float
        Overnight construction cost, $/kW.

    Returns
    -------
    float
        Interest during construction in $/kW, ``(i/2*t + i**2/6*t**2) * c``.
    """
    _check_nonnegative(i=i, t=t, c=c)
    return (i / 2.0 * t + i * i / 6.0 * t * t) * c


def capital_recovery_factor(i: float, d: int) -> float:
    """Annual payment per unit of upfront cost over ``d`` years at rate ``i``."""
    if d < 1:
        raise DomainError(f"depreciation period must be >= 1 year, got {d}")
    _check_nonnegative(i=i)
    if i == 0.0:
        return 1.0 / d
    # expm1/log1p keep the small-rate regime accurate
    g = math.expm1(d * math.log1p(i))
    return i * (g + 1.0) / g


def annuity(f: float, c: float, i: float, d: int) -> float:
    """Annuity of financing plus overnight cost, $/kW/yr.

    At ``i == 0`` the straight-line limit ``(f + c) / d`` is used.
    """
    _check_nonnegative(f=f, c=c)
    return (f + c) * capital_recovery_factor(i, d)


def lcoe(a: float, fixed_om: float, v: float, u: float) -> float:
    """Levelized cost in $/MWh.

    ``a`` and ``fixed_om`` are annual costs per kW, ``v`` is the variable cost
    per MWh (fuel included) and ``u`` the capacity factor. The annual costs
    are spread over ``u * 8760`` full-load hours; the variable cost passes
    through unchanged.
    """
    if not (0.0 < u <= 1.0):
        raise DomainError(f"capacity factor must lie in (0, 1], got {u}")
    return (a + fixed_om) / (u * _MWH_PER_KW_YEAR) + v


@dataclass(frozen=True)
class CostAssumption:
    """Financial parameters of one generation technology."""

    overnight_cost: float
    interest: float
    construction_time: float
    depreciation: int
    fixed_om: float
    variable_om: float
    capacity_factor: float

    def __post_init__(self):
        _check_nonnegative(
            overnight_cost=self.overnight_cost,
            construction_time=self.construction_time,
            fixed_om=self.fixed_om,
            variable_om=self.variable_om,
        )
        if not (0.0 <= self.interest < 1.0):
            raise DomainError(f"interest must lie in [0, 1), got {self.interest}")
        if int(self.depreciation) != self.depreciation or self.depreciation < 1:
            raise DomainError(f"depreciation must be an integer >= 1, got {self.depreciation}")
        if not (0.0 < self.capacity_factor <= 1.0):
            raise DomainError(f"capacity factor must lie in (0, 1], got {self.capacity_factor}")

    def replace(self, **changes) -> "CostAssumption":
        fields = dict(self.__dict__)
        fields.update(changes)
        return CostAssumption(**fields)


@dataclass(frozen=True)
class LcoeBreakdown:
    idc: float
    annuity: float
    fixed_om_per_kw: float
    variable_per_mwh: float
    lcoe: float
    capacity_factor: float

    @property
    def capital_per_mwh(self) -> float:
        return self.annuity / (self.capacity_factor * _MWH_PER_KW_YEAR)

    @property
    def fixed_om_per_mwh(self) -> float:
        return self.fixed_om_per_kw / (self.capacity_factor * _MWH_PER_KW_YEAR)


def full_lcoe(assumption: CostAssumption) -> LcoeBreakdown:
    """Chain :func:`idc`, :func:`annuity` and :func:`lcoe` for one assumption."""
    a_ = assumption
    f = idc(a_.interest, a_.construction_time, a_.overnight_cost)
    ann = annuity(f, a_.overnight_cost, a_.interest, int(a_.depreciation))
    value = lcoe(ann, a_.fixed_om, a_.variable_om, a_.capacity_factor)
    return LcoeBreakdown(
        idc=f,
        annuity=ann,
        fixed_om_per_kw=a_.fixed_om,
        variable_per_mwh=a_.variable_om,
        lcoe=value,
        capacity_factor=a_.capacity_factor,
    )


def full_load_hours(u: float) -> float:
    if not (0.0 < u <= 1.0):
        raise DomainError(f"capacity factor must lie in (0, 1], got {u}")
    return u * HOURS_PER_YEAR


def combine_om(fixed: float, variable: float, u: float) -> float:
    """Fold variable O&M ($/MWh) into an annual $/kW figure at capacity factor ``u``."""
    _check_nonnegative(fixed=fixed, variable=variable)
    return fixed + variable * full_load_hours(u) / 1000.0


def split_om(combined: float, ratio_fix_var: float, u: float) -> tuple[float, float]:
    """Inverse of :func:`combine_om` for a given fixed-to-variable cost ratio.

    Returns ``(fixed $/kW/yr, variable $/MWh)`` with the annual fixed part equal
    to ``ratio_fix_var`` times the annual variable part.
    """
    _check_nonnegative(combined=combined, ratio_fix_var=ratio_fix_var)
    fixed = combined * ratio_fix_var / (1.0 + ratio_fix_var)
    variable = combined / ((1.0 + ratio_fix_var) * full_load_hours(u) / 1000.0)
    return fixed, variable


# -- historic (Lazard-style) recomputation -----------------------------------

Pair = tuple[float, float]


@dataclass(frozen=True)
class LazardRow:
    """Low/high techno-economic inputs of one technology in one report year."""

    technology: str
    year: int
    capital_cost: Pair
    fixed_om: Pair
    variable_om: Pair
    capacity_factor: Pair
    lifetime: Pair
    heat_rate: Pair | None = None
    fuel_price: Pair | None = None

    def __post_init__(self):
        if (self.heat_rate is None) != (self.fuel_price is None):
            raise DomainError(
                f"{self.technology} {self.year}: heat rate and fuel price must be given together"
            )

    def fuel_cost(self) -> Pair:
        """Fuel cost in $/MWh from heat rate (BTU/kWh) and price ($/MMBtu)."""
        if self.heat_rate is None:
            return (0.0, 0.0)
        return tuple(h * p / 1000.0 for h, p in zip(self.heat_rate, self.fuel_price))


def lazard_lcoe(row: LazardRow, interest: float) -> Pair:
    """Recompute the (low, high) LCOE of a historic report entry.

    Capital costs already include construction, so no financing during
    construction is added.
    """
    fuel = row.fuel_cost()
    out = []
    for k in range(2):
        assumption = CostAssumption(
            overnight_cost=row.capital_cost[k],
            interest=interest,
            construction_time=0.0,
            depreciation=int(row.lifetime[k]),
            fixed_om=row.fixed_om[k],
            variable_om=row.variable_om[k] + fuel[k],
            capacity_factor=row.capacity_factor[k],
        )
        out.append(full_lcoe(assumption).lcoe)
    return out[0], out[1]


_LAZARD_PARAMS = {
    "capital_cost", "fixed_om", "variable_om", "heat_rate",
    "fuel_price", "capacity_factor", "lifetime",
}


def load_lazard_rows(path: str | Path | None = None, problems: list[str] | None = None) -> list[LazardRow]:
    """Read the long-format historic input table.

    A technology-year is emitted when its capital cost is present; a missing
    variable O&M entry counts as zero. Without ``problems`` the first defect
    raises :class:`DataError`; with a list, defects are appended to it and
    the affected lines or technology-years are skipped.
    """
    src = Path(path) if path else package_data("finance", "lazard_inputs.csv")
    rows = read_csv(src, ["technology", "parameter", "category", "year", "value"])
    values: dict[tuple[str, int, str], dict[str, float]] = {}

    def fail(msg):
        if problems is None:
            raise DataError(msg)
        problems.append(msg)

    for n, row in enumerate(rows, start=2):
        try:
            if row["parameter"] not in _LAZARD_PARAMS:
                raise DataError(f"{src}:{n}: unknown parameter {row['parameter']!r}")
            if row["category"] not in ("low", "high"):
                raise DataError(f"{src}:{n}: category must be low or high")
            try:
                year = int(row["year"])
            except ValueError:
                raise DataError(f"{src}:{n}: bad year {row['year']!r}") from None
            value = parse_float(row["value"], f"{src}:{n}")
        except DataError as exc:
            fail(str(exc))
            continue
        values.setdefault((row["technology"], year, row["parameter"]), {})[row["category"]] = value

    def pair(tech, year, param, required=True):
        v = values.get((tech, year, param))
        if v is None:
            if required:
                raise DataError(f"{src}: {tech} {year}: missing {param}")
            return None
        if set(v) != {"low", "high"}:
            raise DataError(f"{src}: {tech} {year}: {param} needs low and high")
        return (v["low"], v["high"])

    out = []
    keys = sorted({(t, y) for (t, y, p) in values if p == "capital_cost"})
    for tech, year in keys:
        try:
            out.append(
                LazardRow(
                    technology=tech,
                    year=year,
                    capital_cost=pair(tech, year, "capital_cost"),
                    fixed_om=pair(tech, year, "fixed_om"),
                    variable_om=pair(tech, year, "variable_om", required=False) or (0.0, 0.0),
                    capacity_factor=pair(tech, year, "capacity_factor"),
                    lifetime=pair(tech, year, "lifetime"),
                    heat_rate=pair(tech, year, "heat_rate", required=False),
                    fuel_price=pair(tech, year, "fuel_price", required=False),
                )
            )
        except (DataError, DomainError) as exc:
            fail(str(exc))
    return out


# -- sweeps --------------------------------------------------------------------

@dataclass(frozen=True)
class SweepCell:
    interest: float
    depreciation: int
    breakdown: LcoeBreakdown


def sensitivity_sweep(
    assumption: CostAssumption, interests: Sequence[float], lifetimes: Sequence[int]
) -> list[SweepCell]:
    """Evaluate :func:`full_lcoe` over the interest x lifetime grid (row-major)."""
    if not interests or not lifetimes:
        raise DomainError("interest and lifetime lists must be nonempty")
    return [
        SweepCell(i, int(d), full_lcoe(assumption.replace(interest=i, depreciation=int(d))))
        for i, d in product(interests, lifetimes)
    ]


def nuclear_reference(path: str | Path | None = None) -> dict[str, tuple[float, float]]:
    """Parameter -> (low, high) from the bundled nuclear parameter table."""
    src = Path(path) if path else package_data("finance", "nuclear_parameters.csv")
    rows = read_csv(src, ["parameter", "unit", "low", "high"])
    return {
        r["parameter"]: (parse_float(r["low"], r["parameter"]), parse_float(r["high"], r["parameter"]))
        for r in rows
    }


def nuclear_range(
    interest: float = 0.05,
    depreciation: int = 40,
    fixed_om: float | None = None,
    params: dict[str, tuple[float, float]] | None = None,
) -> tuple[LcoeBreakdown, LcoeBreakdown]:
    """LCOE at the cheapest and the most expensive corner of the nuclear box.

    The box spans overnight cost and construction time; LCOE is increasing in
    both, so the extremes sit at the (low, low) and (high, high) corners.
    """
    p = params or nuclear_reference()
    om = p["fixed_om"][0] if fixed_om is None else fixed_om

    def corner(k):
        return full_lcoe(
            CostAssumption(
                overnight_cost=p["overnight_cost"][k],
                interest=interest,
                construction_time=p["construction_time"][k],
                depreciation=depreciation,
                fixed_om=om,
                variable_om=p["variable_om"][0],
                capacity_factor=p["capacity_factor"][0],
            )
        )

    return corner(0), corner(1)


def write_breakdowns_csv(path: str | Path, rows: list[dict]) -> None:
    """Write report rows (dicts sharing keys) as CSV with a stable column order."""
    if not rows:
        raise DataError("nothing to write")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
