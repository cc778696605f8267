"""Emissions accounting: carbon-intensity regimes, scope-2 energy emissions and
amortized scope-3 embodied emissions, plus output-efficiency metrics."""

from __future__ import annotations

import csv
from bisect import bisect_right
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from enum import Enum
from pathlib import Path

from .errors import DataFormatError, DomainError
from .timestamps import parse_timestamp

# Carbon-intensity bands (gCO2/kWh) separating the three emissions regimes.
# Both band edges belong to the balanced regime.
LOW_INTENSITY_CEILING = 30.0
HIGH_INTENSITY_FLOOR = 100.0


class EmissionsScenario(Enum):
    """Which emissions source dominates at a given grid carbon intensity."""

    SCOPE3_DOMINATED = "scope3_dominated"
    BALANCED = "balanced"
    SCOPE2_DOMINATED = "scope2_dominated"


class OptimizationObjective(Enum):
    """Operational objective recommended for an emissions scenario."""

    MAXIMIZE_APPLICATION_PERFORMANCE = "maximize_application_performance"
    BALANCE_PERFORMANCE_AND_ENERGY = "balance_performance_and_energy"
    MAXIMIZE_ENERGY_EFFICIENCY = "maximize_energy_efficiency"


@dataclass(frozen=True)
class EmbodiedEmissions:
    """Total embodied (scope-3) emissions amortized over a service lifetime."""

    total_kgco2e: float
    service_lifetime_hours: float

    def __post_init__(self) -> None:
        if self.total_kgco2e < 0:
            raise DomainError(f"embodied emissions must be >= 0 kg, got {self.total_kgco2e}")
        if self.service_lifetime_hours <= 0:
            raise DomainError(
                f"service lifetime must be > 0 hours, got {self.service_lifetime_hours}"
            )


@dataclass(frozen=True)
class EmissionsBreakdown:
    """Scope-2 and scope-3 emissions in kg CO2e; total is their sum."""

    scope2_kg: float
    scope3_kg: float
    total_kg: float

    @classmethod
    def of_parts(cls, scope2_kg: float, scope3_kg: float) -> "EmissionsBreakdown":
        return cls(scope2_kg=scope2_kg, scope3_kg=scope3_kg, total_kg=scope2_kg + scope3_kg)


@dataclass(frozen=True)
class CarbonIntensityProfile:
    """Grid carbon intensity in gCO2/kWh, either constant or a step-hold series.

    A series value holds from its timestamp until the next timestamp; the last
    value holds indefinitely. Times before the first entry are not covered.
    """

    constant_g_per_kwh: float | None = None
    series: tuple[tuple[datetime, float], ...] | None = None

    def __post_init__(self) -> None:
        if (self.constant_g_per_kwh is None) == (self.series is None):
            raise DomainError("profile must be either constant or a series, not both")
        if self.constant_g_per_kwh is not None:
            if self.constant_g_per_kwh < 0:
                raise DomainError(
                    f"carbon intensity must be >= 0 g/kWh, got {self.constant_g_per_kwh}"
                )
            return
        object.__setattr__(self, "series", tuple(self.series))
        if not self.series:
            raise DomainError("series profile must contain at least one entry")
        for (t_prev, _), (t_next, _) in zip(self.series, self.series[1:]):
            if t_next <= t_prev:
                raise DomainError(
                    f"series timestamps must be strictly increasing: {t_prev} then {t_next}"
                )
        for _, value in self.series:
            if value < 0:
                raise DomainError(f"carbon intensity must be >= 0 g/kWh, got {value}")

    @classmethod
    def constant(cls, g_per_kwh: float) -> "CarbonIntensityProfile":
        return cls(constant_g_per_kwh=g_per_kwh)

    @classmethod
    def from_series(cls, points) -> "CarbonIntensityProfile":
        return cls(series=tuple(points))

    @classmethod
    def from_csv(cls, path: str | Path) -> "CarbonIntensityProfile":
        """Load a series profile from CSV with header timestamp,intensity_g_per_kwh."""
        points: list[tuple[datetime, float]] = []
        with open(path, newline="", encoding="utf-8") as handle:
            reader = csv.reader(handle)
            header = next(reader, None)
            if header != ["timestamp", "intensity_g_per_kwh"]:
                raise DataFormatError(
                    f"{path}: expected header 'timestamp,intensity_g_per_kwh', got {header!r}"
                )
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != 2:
                    raise DataFormatError(f"{path}: line {lineno}: expected 2 fields, got {len(row)}")
                try:
                    ts = parse_timestamp(row[0])
                except DataFormatError as exc:
                    raise DataFormatError(f"{path}: line {lineno}: {exc}") from None
                try:
                    value = float(row[1])
                except ValueError:
                    raise DataFormatError(
                        f"{path}: line {lineno}: intensity is not a number: {row[1]!r}"
                    ) from None
                points.append((ts, value))
        if not points:
            raise DataFormatError(f"{path}: no intensity rows found")
        for lineno, ((t_prev, _), (t_next, _)) in enumerate(zip(points, points[1:]), start=3):
            if t_next <= t_prev:
                raise DataFormatError(
                    f"{path}: line {lineno}: timestamps not strictly increasing "
                    f"({t_prev} then {t_next})"
                )
        return cls.from_series(points)

    @property
    def is_constant(self) -> bool:
        return self.constant_g_per_kwh is not None

    def start_time(self) -> datetime | None:
        """First covered instant, or None for a constant profile."""
        return None if self.series is None else self.series[0][0]

    def intensity_at(self, when: datetime) -> float:
        """Step-hold intensity at an instant."""
        if self.constant_g_per_kwh is not None:
            return self.constant_g_per_kwh
        assert self.series is not None
        times = [t for t, _ in self.series]
        idx = bisect_right(times, when) - 1
        if idx < 0:
            raise DomainError(
                f"time {when} precedes series coverage starting at {times[0]}"
            )
        return self.series[idx][1]

    def mean_intensity(self, start: datetime, end: datetime) -> float:
        """Time-weighted average intensity over the half-open interval [start, end)."""
        if end <= start:
            raise DomainError(f"interval end {end} must be after start {start}")
        if self.constant_g_per_kwh is not None:
            return self.constant_g_per_kwh
        assert self.series is not None
        if start < self.series[0][0]:
            raise DomainError(
                f"interval [{start}, {end}) is outside series coverage "
                f"starting at {self.series[0][0]}"
            )
        weighted = 0.0
        for i, (t_i, value) in enumerate(self.series):
            t_next = self.series[i + 1][0] if i + 1 < len(self.series) else None
            lo = max(start, t_i)
            hi = end if t_next is None else min(end, t_next)
            if hi > lo:
                weighted += value * (hi - lo).total_seconds()
        return weighted / (end - start).total_seconds()


def classify_scenario(intensity_g_per_kwh: float) -> EmissionsScenario:
    """Map a carbon intensity to the emissions regime it implies.

    Below 30 g/kWh embodied emissions dominate; above 100 g/kWh operational
    emissions dominate; the closed band in between is balanced.
    """
    if intensity_g_per_kwh < 0:
        raise DomainError(f"carbon intensity must be >= 0 g/kWh, got {intensity_g_per_kwh}")
    if intensity_g_per_kwh < LOW_INTENSITY_CEILING:
        return EmissionsScenario.SCOPE3_DOMINATED
    if intensity_g_per_kwh <= HIGH_INTENSITY_FLOOR:
        return EmissionsScenario.BALANCED
    return EmissionsScenario.SCOPE2_DOMINATED


_OBJECTIVES = {
    EmissionsScenario.SCOPE3_DOMINATED: OptimizationObjective.MAXIMIZE_APPLICATION_PERFORMANCE,
    EmissionsScenario.BALANCED: OptimizationObjective.BALANCE_PERFORMANCE_AND_ENERGY,
    EmissionsScenario.SCOPE2_DOMINATED: OptimizationObjective.MAXIMIZE_ENERGY_EFFICIENCY,
}


def recommended_objective(scenario: EmissionsScenario) -> OptimizationObjective:
    """Operational objective for a scenario: chase performance when embodied
    emissions dominate, energy efficiency when grid emissions dominate."""
    return _OBJECTIVES[scenario]


def scope2_emissions(
    energy_kwh_by_interval, profile: CarbonIntensityProfile
) -> float:
    """Operational emissions in kg for energy drawn over timestamped intervals.

    Each item is ((start, end), energy_kwh); the interval's intensity is the
    time-weighted average of the profile over [start, end).
    """
    total_g = 0.0
    for (start, end), energy_kwh in energy_kwh_by_interval:
        if energy_kwh < 0:
            raise DomainError(f"interval energy must be >= 0 kWh, got {energy_kwh}")
        if profile.is_constant:
            intensity = profile.constant_g_per_kwh
        else:
            intensity = profile.mean_intensity(start, end)
        total_g += energy_kwh * intensity
    return total_g / 1000.0


def amortized_scope3(embodied: EmbodiedEmissions, duration_hours: float) -> float:
    """Linear share of the embodied emissions attributable to a duration."""
    if duration_hours < 0:
        raise DomainError(f"duration must be >= 0 hours, got {duration_hours}")
    if embodied.service_lifetime_hours <= 0:
        raise DomainError("service lifetime must be > 0 hours")
    return embodied.total_kgco2e * duration_hours / embodied.service_lifetime_hours


_EPOCH = datetime(2000, 1, 1, tzinfo=timezone.utc)


def lifetime_emissions(
    mean_power_kw: float,
    duration_hours: float,
    profile: CarbonIntensityProfile,
    embodied: EmbodiedEmissions | None,
    start: datetime | None = None,
) -> EmissionsBreakdown:
    """Scope-2 plus amortized scope-3 emissions for a run at constant mean power.

    For a series profile the energy is anchored at `start` (default: the start
    of the series). Embodied emissions must be provided; callers that want a
    scope-2-only figure should say so explicitly rather than rely on a silent
    zero.
    """
    if mean_power_kw < 0:
        raise DomainError(f"mean power must be >= 0 kW, got {mean_power_kw}")
    if duration_hours < 0:
        raise DomainError(f"duration must be >= 0 hours, got {duration_hours}")
    if embodied is None:
        raise DomainError(
            "embodied emissions are not set; provide an EmbodiedEmissions value "
            "to compute scope-3 totals"
        )
    energy_kwh = mean_power_kw * duration_hours
    if energy_kwh == 0 or duration_hours == 0:
        scope2 = 0.0
    else:
        anchor = start if start is not None else (profile.start_time() or _EPOCH)
        interval = (anchor, anchor + timedelta(hours=duration_hours))
        scope2 = scope2_emissions([(interval, energy_kwh)], profile)
    scope3 = amortized_scope3(embodied, duration_hours)
    return EmissionsBreakdown.of_parts(scope2, scope3)


@dataclass(frozen=True)
class EfficiencyMetrics:
    """Application output per node-hour, per kWh and per kg CO2e."""

    per_nodeh: float
    per_kwh: float
    per_kgco2: float


def output_efficiency(
    output_units: float, energy_kwh: float, nodeh: float, breakdown: EmissionsBreakdown
) -> EfficiencyMetrics:
    """The three output-efficiency ratios used to compare operating points."""
    if nodeh <= 0:
        raise DomainError(f"node-hours must be > 0, got {nodeh}")
    if energy_kwh <= 0:
        raise DomainError(f"energy must be > 0 kWh, got {energy_kwh}")
    if breakdown.total_kg <= 0:
        raise DomainError(f"total emissions must be > 0 kg, got {breakdown.total_kg}")
    return EfficiencyMetrics(
        per_nodeh=output_units / nodeh,
        per_kwh=output_units / energy_kwh,
        per_kgco2=output_units / breakdown.total_kg,
    )
