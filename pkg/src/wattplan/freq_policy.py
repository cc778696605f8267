"""Per-application benchmark ratios for operating-point changes and the
revert-threshold rule that picks each application's default CPU frequency."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .errors import DataFormatError, DomainError


class FrequencySetting(Enum):
    """CPU frequency operating points available on the modeled hardware."""

    F1500 = "1.5GHz"
    F2000 = "2.0GHz"
    F2250_TURBO = "2.25GHz+turbo"


class Intervention(Enum):
    """System-wide change a benchmark pair measures."""

    BIOS_DETERMINISM = "bios_determinism"
    FREQ_CAP_2000 = "freq_cap_2000"


@dataclass(frozen=True)
class AppBenchmark:
    """After/before performance and energy ratios for one application.

    perf_ratio > 1 means the change made the application faster; energy_ratio
    is total energy after over before.
    """

    app_name: str
    nodes: int
    intervention: Intervention
    perf_ratio: float
    energy_ratio: float

    def __post_init__(self) -> None:
        if not self.app_name:
            raise DomainError("benchmark app_name must be non-empty")
        if not isinstance(self.nodes, int) or self.nodes < 1:
            raise DomainError(f"benchmark {self.app_name!r}: nodes must be >= 1, got {self.nodes!r}")
        if self.perf_ratio <= 0:
            raise DomainError(f"benchmark {self.app_name!r}: perf_ratio must be > 0, got {self.perf_ratio}")
        if self.energy_ratio <= 0:
            raise DomainError(
                f"benchmark {self.app_name!r}: energy_ratio must be > 0, got {self.energy_ratio}"
            )


@dataclass(frozen=True)
class PolicyRule:
    """Revert rule: applications losing more than this fraction of performance
    are reset to the top frequency setting."""

    perf_loss_threshold: float = 0.10

    def __post_init__(self) -> None:
        if not 0.0 <= self.perf_loss_threshold <= 1.0:
            raise DomainError(
                f"perf_loss_threshold must be within [0, 1], got {self.perf_loss_threshold}"
            )


@dataclass(frozen=True)
class DerivedRatios:
    perf_loss: float
    energy_saving: float
    power_ratio: float


@dataclass(frozen=True)
class PolicyDecision:
    app_name: str
    default_setting: FrequencySetting
    reverted: bool
    perf_loss: float
    energy_saving: float


@dataclass(frozen=True)
class FleetRatios:
    """Mix-weighted power and throughput ratios after applying a policy rule."""

    fleet_power_ratio: float
    fleet_throughput_ratio: float
    decisions: tuple[PolicyDecision, ...]


def derived_ratios(benchmark: AppBenchmark) -> DerivedRatios:
    """Loss/saving fractions and the mean-power ratio implied by a benchmark.

    Mean power scales as energy over runtime, and runtime scales as 1/perf,
    so power_ratio = energy_ratio * perf_ratio.
    """
    return DerivedRatios(
        perf_loss=1.0 - benchmark.perf_ratio,
        energy_saving=1.0 - benchmark.energy_ratio,
        power_ratio=benchmark.energy_ratio * benchmark.perf_ratio,
    )


def recommend(benchmark: AppBenchmark, rule: PolicyRule) -> PolicyDecision:
    """Default frequency for one application under the revert rule.

    Applies only to frequency-cap benchmarks. The threshold comparison is
    strict: a loss exactly at the threshold keeps the capped frequency.
    """
    if benchmark.intervention is not Intervention.FREQ_CAP_2000:
        raise DomainError(
            f"policy recommendations need {Intervention.FREQ_CAP_2000.value} benchmarks; "
            f"{benchmark.app_name!r} records {benchmark.intervention.value}"
        )
    ratios = derived_ratios(benchmark)
    reverted = ratios.perf_loss > rule.perf_loss_threshold
    return PolicyDecision(
        app_name=benchmark.app_name,
        default_setting=FrequencySetting.F2250_TURBO if reverted else FrequencySetting.F2000,
        reverted=reverted,
        perf_loss=ratios.perf_loss,
        energy_saving=ratios.energy_saving,
    )


def fleet_ratios(
    benchmarks, weights: dict[str, float], rule: PolicyRule
) -> FleetRatios:
    """Weight-averaged power and throughput ratios over a job mix.

    Reverted applications run at the original operating point and contribute
    ratios of exactly 1.0; kept applications contribute their power_ratio and
    perf_ratio. Weights must be non-negative and sum to 1.
    """
    benchmarks = list(benchmarks)
    by_app: dict[str, AppBenchmark] = {}
    for bench in benchmarks:
        if bench.intervention is not Intervention.FREQ_CAP_2000:
            continue
        if bench.app_name in by_app:
            raise DomainError(f"duplicate benchmark for app {bench.app_name!r}")
        by_app[bench.app_name] = bench
    all_apps = {b.app_name for b in benchmarks}

    for app, weight in weights.items():
        if weight < 0:
            raise DomainError(f"weight for {app!r} must be >= 0, got {weight}")
        if app not in all_apps:
            raise DomainError(f"unknown app in weights: {app!r}")
    total = sum(weights.values())
    if abs(total - 1.0) > 1e-9:
        raise DomainError(f"weights must sum to 1 within 1e-9, got {total!r}")

    fleet_power = 0.0
    fleet_throughput = 0.0
    decisions: list[PolicyDecision] = []
    decided: set[str] = set()
    for bench in benchmarks:
        app = bench.app_name
        if app not in weights or app in decided:
            continue
        decided.add(app)
        # prefer the app's freq-cap row; recommend() rejects any other kind
        source = by_app.get(app, bench)
        decision = recommend(source, rule)
        decisions.append(decision)
        weight = weights[app]
        if decision.reverted:
            fleet_power += weight
            fleet_throughput += weight
        else:
            ratios = derived_ratios(source)
            fleet_power += weight * ratios.power_ratio
            fleet_throughput += weight * source.perf_ratio
    return FleetRatios(
        fleet_power_ratio=fleet_power,
        fleet_throughput_ratio=fleet_throughput,
        decisions=tuple(decisions),
    )


_HEADER = ["app_name", "nodes", "intervention", "perf_ratio", "energy_ratio"]


def load_benchmark_table(path: str | Path) -> list[AppBenchmark]:
    """Load benchmark records from CSV.

    Header must be app_name,nodes,intervention,perf_ratio,energy_ratio with
    intervention one of bios_determinism or freq_cap_2000. Malformed rows are
    reported with their line number; duplicate (app, intervention) pairs are
    rejected.
    """
    records: list[AppBenchmark] = []
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != _HEADER:
            raise DataFormatError(
                f"{path}: expected header {','.join(_HEADER)!r}, got {header!r}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 5:
                raise DataFormatError(f"{path}: line {lineno}: expected 5 fields, got {len(row)}")
            app_name, nodes_text, intervention_text, perf_text, energy_text = row
            try:
                nodes = int(nodes_text)
            except ValueError:
                raise DataFormatError(
                    f"{path}: line {lineno}: nodes is not an integer: {nodes_text!r}"
                ) from None
            try:
                intervention = Intervention(intervention_text)
            except ValueError:
                raise DataFormatError(
                    f"{path}: line {lineno}: unknown intervention {intervention_text!r}"
                ) from None
            try:
                perf_ratio = float(perf_text)
                energy_ratio = float(energy_text)
            except ValueError:
                raise DataFormatError(
                    f"{path}: line {lineno}: ratios must be numbers: {perf_text!r}, {energy_text!r}"
                ) from None
            records.append(
                AppBenchmark(
                    app_name=app_name,
                    nodes=nodes,
                    intervention=intervention,
                    perf_ratio=perf_ratio,
                    energy_ratio=energy_ratio,
                )
            )
    seen: set[tuple[str, Intervention]] = set()
    for record in records:
        key = (record.app_name, record.intervention)
        if key in seen:
            raise DomainError(
                f"{path}: duplicate benchmark for ({record.app_name!r}, "
                f"{record.intervention.value})"
            )
        seen.add(key)
    return records
