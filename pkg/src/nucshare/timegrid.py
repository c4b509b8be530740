"""Nested hourly / four-hour / daily time steps over representative periods."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataError, DomainError


class Level(enum.Enum):
    HOUR = "hour"
    FOUR_HOUR = "four_hour"
    DAY = "day"

    @property
    def hours(self) -> int:
        return _BLOCK[self]

    @classmethod
    def parse(cls, text: str) -> "Level":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise DataError(
                f"unknown temporal level {text!r} (expected hour, four_hour or day)"
            ) from None

    def __lt__(self, other: "Level") -> bool:
        # finer < coarser
        return self.hours < other.hours


_BLOCK = {Level.HOUR: 1, Level.FOUR_HOUR: 4, Level.DAY: 24}


def finest(levels) -> Level:
    """Finest level of a nonempty collection."""
    return min(levels, key=lambda lv: lv.hours)


@dataclass(frozen=True)
class Period:
    """A contiguous run of whole days standing in for ``weight`` copies of itself."""

    name: str
    days: int
    weight: float

    def __post_init__(self):
        if self.days < 1:
            raise DomainError(f"period {self.name}: needs at least one day")
        if not self.weight > 0:
            raise DomainError(f"period {self.name}: weight must be positive")

    @property
    def hours(self) -> int:
        return 24 * self.days


@dataclass(frozen=True)
class TimeHierarchy:
    periods: tuple[Period, ...]

    def __post_init__(self):
        if not self.periods:
            raise DomainError("time hierarchy needs at least one period")
        object.__setattr__(self, "periods", tuple(self.periods))

    @classmethod
    def single(cls, days: int, weight: float | None = None) -> "TimeHierarchy":
        """One period of ``days`` days scaled to a full year unless ``weight`` is given."""
        w = 365.0 / days if weight is None else weight
        return cls((Period("p0", days, w),))

    @property
    def hours(self) -> int:
        return sum(p.hours for p in self.periods)

    def steps(self, level: Level) -> int:
        return self.hours // level.hours

    def represented_hours(self) -> float:
        """Hours of the modeled year, i.e. the weighted horizon length."""
        return sum(p.hours * p.weight for p in self.periods)

    def period_ranges(self, level: Level) -> list[range]:
        """Step index ranges of every period at ``level``."""
        out, start = [], 0
        for p in self.periods:
            n = p.hours // level.hours
            out.append(range(start, start + n))
            start += n
        return out

    def weights(self, level: Level) -> np.ndarray:
        """Per-step weight (copies of the step in the represented year)."""
        return np.concatenate(
            [np.full(p.hours // level.hours, p.weight) for p in self.periods]
        )

    def block_of(self, index: int, level: Level, source: Level = Level.HOUR) -> int:
        return block_of(index, level, self.steps(source), source)

    def children(self, coarse: int, coarse_level: Level, fine_level: Level) -> range:
        """Fine-level step indices inside one coarse step."""
        if fine_level.hours > coarse_level.hours:
            raise DomainError(f"{fine_level.value} is coarser than {coarse_level.value}")
        if not 0 <= coarse < self.steps(coarse_level):
            raise IndexError(f"step {coarse} outside horizon at {coarse_level.value}")
        k = coarse_level.hours // fine_level.hours
        return range(coarse * k, (coarse + 1) * k)


def block_of(index: int, level: Level, n_steps: int | None = None, source: Level = Level.HOUR) -> int:
    """Coarse step containing fine step ``index`` (calendar aligned blocks)."""
    if level.hours < source.hours:
        raise DomainError(f"{level.value} is finer than {source.value}")
    if index < 0 or (n_steps is not None and index >= n_steps):
        raise IndexError(f"step {index} outside horizon")
    return index // (level.hours // source.hours)


@dataclass(frozen=True)
class ProfileSeries:
    level: Level
    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim != 1:
            raise DomainError("profile must be one-dimensional")
        if not np.all(np.isfinite(arr)):
            raise DomainError("profile contains non-finite values")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def __len__(self):
        return len(self.values)

    def check_length(self, grid: TimeHierarchy, what: str = "profile"):
        n = grid.steps(self.level)
        if len(self) != n:
            raise DataError(f"{what}: {len(self)} values at {self.level.value} level, expected {n}")


def aggregate(series: ProfileSeries, target: Level, mode: str = "sum") -> ProfileSeries:
    """Block sums (``"sum"``, energy) or block means (``"mean"``, factors)."""
    if target.hours < series.level.hours:
        raise DomainError(f"cannot aggregate {series.level.value} to finer {target.value}")
    if mode not in ("sum", "mean"):
        raise DomainError(f"unknown aggregation mode {mode!r}")
    k = target.hours // series.level.hours
    if len(series) % k:
        raise DomainError(f"{len(series)} steps do not divide into blocks of {k}")
    blocks = series.values.reshape(-1, k)
    vals = blocks.sum(axis=1) if mode == "sum" else blocks.mean(axis=1)
    return ProfileSeries(target, vals)


def expand(series: ProfileSeries, target: Level, mode: str = "repeat") -> ProfileSeries:
    """Map a coarse series onto a finer level.

    ``"repeat"`` copies each value into its block (factors), ``"uniform"``
    spreads each value evenly over its block (energy).
    """
    if target.hours > series.level.hours:
        raise DomainError(f"cannot expand {series.level.value} to coarser {target.value}")
    if mode not in ("repeat", "uniform"):
        raise DomainError(f"unknown expansion mode {mode!r}")
    k = series.level.hours // target.hours
    vals = np.repeat(series.values, k)
    if mode == "uniform":
        vals = vals / k
    return ProfileSeries(target, vals)


def read_profile(path: str | Path) -> ProfileSeries:
    """Single-column CSV whose header names the level."""
    lines = Path(path).read_text(encoding="utf-8").split()
    if not lines:
        raise DataError(f"{path}: empty profile file")
    level = Level.parse(lines[0])
    try:
        values = [float(x) for x in lines[1:]]
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None
    return ProfileSeries(level, np.array(values))


def profile_from_values(level: Level, values: Sequence[float]) -> ProfileSeries:
    return ProfileSeries(level, np.asarray(values, dtype=float))
