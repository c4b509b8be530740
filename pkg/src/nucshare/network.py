"""Transport-model links: lengths, linear distance losses and step expansion curves."""
from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field

from .errors import DataError, DomainError, ExpansionLimitError
from .finance import annuity
from .tables import parse_bool, parse_float

EARTH_RADIUS_KM = 6371.0


class LinkKind(enum.Enum):
    HVAC = "HVAC"
    HVDC = "HVDC"
    H2_PIPELINE = "h2_pipeline"
    TRUCK_TRADE = "truck_trade"

    @classmethod
    def parse(cls, text: str) -> "LinkKind":
        for kind in cls:
            if kind.value.lower() == text.strip().lower():
                return kind
        raise DataError(f"unknown link kind {text!r}")


# fractional loss per 1000 km
DEFAULT_LOSS = {
    LinkKind.HVAC: 0.05,
    LinkKind.HVDC: 0.03,
    LinkKind.H2_PIPELINE: 0.0244,
    LinkKind.TRUCK_TRADE: 0.0,
}

PIPELINE_COST_PER_GW_KM = 0.4
PIPELINE_LIFETIME = 40


def great_circle_km(a: tuple[float, float], b: tuple[float, float]) -> float:
    """Haversine distance between two (latitude, longitude) points in degrees."""
    for lat, lon in (a, b):
        if not (-90.0 <= lat <= 90.0 and -180.0 <= lon <= 180.0):
            raise DomainError(f"invalid coordinate ({lat}, {lon})")
    lat1, lon1, lat2, lon2 = map(math.radians, (*a, *b))
    h = (
        math.sin((lat2 - lat1) / 2) ** 2
        + math.cos(lat1) * math.cos(lat2) * math.sin((lon2 - lon1) / 2) ** 2
    )
    return 2.0 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(h)))


@dataclass(frozen=True)
class ExpansionStep:
    cost: float  # annualized cost per GW and year
    max_gw: float


@dataclass(frozen=True)
class Link:
    id: str
    from_region: str
    to_region: str
    kind: LinkKind
    carrier: str
    length_km: float
    existing_gw: float = 0.0
    loss_per_1000km: float | None = None
    steps: tuple[ExpansionStep, ...] = ()
    bidirectional: bool = True
    fixed_om: float = 0.0  # per GW of existing capacity and year
    variable_cost: float = 0.0  # per unit of sent energy
    _loss: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.loss_per_1000km is None:
            object.__setattr__(self, "loss_per_1000km", DEFAULT_LOSS[self.kind])
        object.__setattr__(self, "steps", tuple(self.steps))
        if not 0.0 <= self.loss_per_1000km < 1.0:
            raise DataError(f"link {self.id}: loss rate must lie in [0, 1)")
        if self.length_km < 0:
            raise DataError(f"link {self.id}: negative length")
        if self.existing_gw < 0 or self.fixed_om < 0 or self.variable_cost < 0:
            raise DataError(f"link {self.id}: capacities and costs must be nonnegative")
        loss = self.loss_per_1000km * self.length_km / 1000.0
        if loss >= 1.0:
            raise DataError(f"link {self.id}: total loss {loss:.1%} is 100% or more")
        object.__setattr__(self, "_loss", loss)
        prev = -math.inf
        for s in self.steps:
            if s.max_gw < 0 or s.cost < 0:
                raise DataError(f"link {self.id}: negative expansion step")
            if s.cost < prev:
                raise DataError(f"link {self.id}: expansion step costs must be nondecreasing")
            prev = s.cost
        if self.kind is LinkKind.TRUCK_TRADE and (self.steps or self.existing_gw):
            raise DataError(f"link {self.id}: truck trade has no capacity")
        if self.from_region == self.to_region:
            raise DataError(f"link {self.id}: connects {self.from_region} to itself")

    @property
    def efficiency(self) -> float:
        """Delivered fraction of sent energy."""
        return 1.0 - self._loss

    @property
    def has_capacity(self) -> bool:
        return self.kind is not LinkKind.TRUCK_TRADE

    @property
    def expansion_limit(self) -> float:
        return sum(s.max_gw for s in self.steps)

    def directions(self) -> list[tuple[str, str]]:
        fwd = (self.from_region, self.to_region)
        return [fwd, fwd[::-1]] if self.bidirectional else [fwd]


def delivered(sent: float, link: Link) -> float:
    """Energy arriving at the receiving end for ``sent`` leaving the origin."""
    if sent < 0:
        raise DomainError("sent flow must be nonnegative")
    return sent * (1.0 - link.loss_per_1000km * link.length_km / 1000.0)


def expansion_cost(link: Link, added: float) -> float:
    """Annual cost of adding ``added`` GW, filling the cheapest steps first."""
    if added < 0:
        raise DomainError("added capacity must be nonnegative")
    if added > link.expansion_limit:
        raise ExpansionLimitError(
            f"link {link.id}: {added} GW exceeds expansion limit {link.expansion_limit} GW"
        )
    total, left = 0.0, added
    for s in link.steps:
        take = min(left, s.max_gw)
        total += s.cost * take
        left -= take
        if left <= 0:
            break
    return total


def marginal_expansion_cost(link: Link, added: float) -> float:
    """Specific cost of the step that the next unit of capacity would fill."""
    left = added
    for s in link.steps:
        if left < s.max_gw:
            return s.cost
        left -= s.max_gw
    raise ExpansionLimitError(f"link {link.id}: expansion limit reached")


def pipeline_step_cost(length_km: float, interest: float,
                       lifetime: int = PIPELINE_LIFETIME,
                       cost_per_gw_km: float = PIPELINE_COST_PER_GW_KM) -> float:
    """Annualized cost per GW of a new hydrogen pipeline of ``length_km``."""
    return annuity(0.0, cost_per_gw_km * length_km, interest, lifetime)


def annualize_steps(steps, interest: float, lifetime: int) -> tuple[ExpansionStep, ...]:
    """Convert steps whose costs are upfront investments to annual costs."""
    return tuple(ExpansionStep(annuity(0.0, s.cost, interest, lifetime), s.max_gw) for s in steps)


_STEP_COL = re.compile(r"^step(\d+)_(cost|gw)$")


def link_from_row(row: dict[str, str], centroids: dict[str, tuple[float, float]],
                  extra_steps=(), interest: float = 0.05) -> Link:
    """Build a :class:`Link` from one CSV row.

    Blank ``length_km`` falls back to the centroid distance; a hydrogen
    pipeline without explicit steps gets one unlimited-size step priced from
    its length (limited by ``max_expansion_gw`` when given).
    """
    lid = row["id"]
    where = f"link {lid}"
    for end in ("from", "to"):
        if row[end] not in centroids:
            raise DataError(f"{where}: unknown region {row[end]!r}")
    kind = LinkKind.parse(row["kind"])
    length = row.get("length_km", "")
    length_km = (
        parse_float(length, where)
        if length
        else great_circle_km(centroids[row["from"]], centroids[row["to"]])
    )
    steps = {}
    for col, val in row.items():
        m = _STEP_COL.match(col)
        if m and val:
            steps.setdefault(int(m.group(1)), {})[m.group(2)] = parse_float(val, f"{where} {col}")
    step_list = []
    for n in sorted(steps):
        if set(steps[n]) != {"cost", "gw"}:
            raise DataError(f"{where}: step {n} needs both cost and gw")
        step_list.append(ExpansionStep(steps[n]["cost"], steps[n]["gw"]))
    step_list.extend(extra_steps)
    if kind is LinkKind.H2_PIPELINE and not step_list:
        cap = parse_float(row.get("max_expansion_gw", ""), where, default=math.inf)
        step_list.append(ExpansionStep(pipeline_step_cost(length_km, interest), cap))
    loss = row.get("loss_per_1000km", "")
    return Link(
        id=lid,
        from_region=row["from"],
        to_region=row["to"],
        kind=kind,
        carrier=row["carrier"],
        length_km=length_km,
        existing_gw=parse_float(row.get("existing_gw", ""), where, default=0.0),
        loss_per_1000km=parse_float(loss, where) if loss else None,
        steps=tuple(step_list),
        bidirectional=parse_bool(row.get("bidirectional", ""), where, default=True),
        fixed_om=parse_float(row.get("fixed_om", ""), where, default=0.0),
        variable_cost=parse_float(row.get("variable_cost", ""), where, default=0.0),
    )
