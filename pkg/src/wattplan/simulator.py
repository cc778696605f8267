"""Scenario runner composing the power model, frequency policy and emissions
accounting: one configuration in, mean power, energy, emissions and a
throughput index out, plus threshold sweeps over the revert rule."""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

from .emissions import (
    CarbonIntensityProfile,
    EmbodiedEmissions,
    EmissionsBreakdown,
    lifetime_emissions,
)
from .errors import DataFormatError, DomainError
from .freq_policy import (
    AppBenchmark,
    PolicyDecision,
    PolicyRule,
    fleet_ratios,
    load_benchmark_table,
)
from .power_model import (
    FactorMode,
    PowerBreakdown,
    SystemModel,
    apply_power_factor,
    load_model,
    system_power,
)

# Whole-draw factor on the compute component that reproduces the measured
# cabinet-level effect of switching the BIOS to performance-determinism mode.
BIOS_DETERMINISM_POWER_FACTOR = 0.935


@dataclass(frozen=True)
class JobMix:
    """Fraction of compute node-hours spent in each application."""

    weights: dict[str, float]

    def __post_init__(self) -> None:
        total = 0.0
        for app, weight in self.weights.items():
            if weight < 0:
                raise DomainError(f"mix weight for {app!r} must be >= 0, got {weight}")
            total += weight
        if abs(total - 1.0) > 1e-9:
            raise DomainError(f"mix weights must sum to 1 within 1e-9, got {total!r}")

    @classmethod
    def equal(cls, apps) -> "JobMix":
        apps = list(apps)
        if not apps:
            raise DomainError("an equal mix needs at least one app")
        share = 1.0 / len(apps)
        return cls(weights={app: share for app in apps})


@dataclass(frozen=True)
class ScenarioConfig:
    model: SystemModel
    utilization: float
    mix: JobMix
    benchmarks: tuple[AppBenchmark, ...]
    rule: PolicyRule
    duration_hours: float
    carbon: CarbonIntensityProfile
    bios_factor: float = 1.0
    embodied: EmbodiedEmissions | None = None
    name: str = "scenario"

    def __post_init__(self) -> None:
        object.__setattr__(self, "benchmarks", tuple(self.benchmarks))
        if not 0.0 <= self.utilization <= 1.0:
            raise DomainError(f"utilization must be within [0, 1], got {self.utilization}")
        if self.duration_hours <= 0:
            raise DomainError(f"duration must be > 0 hours, got {self.duration_hours}")
        if self.bios_factor <= 0:
            raise DomainError(f"bios_factor must be > 0, got {self.bios_factor}")


@dataclass(frozen=True)
class ScenarioResult:
    name: str
    mean_power_kw: float
    breakdown: PowerBreakdown
    energy_kwh: float
    emissions: EmissionsBreakdown
    scope3_unset: bool
    throughput_index: float
    decisions: tuple[PolicyDecision, ...]
    duration_hours: float


@dataclass(frozen=True)
class ScenarioDeltas:
    """Componentwise differences of scenario b relative to scenario a."""

    power_kw: float
    pct_power: float
    energy_kwh: float
    emissions_kg: float
    throughput: float


def run_scenario(config: ScenarioConfig) -> ScenarioResult:
    """Evaluate one scenario.

    The BIOS factor scales the compute component's whole draw; the frequency
    policy's fleet power ratio then scales only its dynamic (loaded minus
    idle) draw, so no policy can push compute power below the idle floor.
    Scope-3 emissions are reported as zero, with a flag, when no embodied
    emissions are configured.
    """
    if config.model.compute_component is None:
        raise DomainError(f"model {config.model.name!r} has no compute component to scale")
    compute = config.model.compute_component
    model = apply_power_factor(config.model, compute, config.bios_factor, FactorMode.WHOLE_DRAW)
    fleet = fleet_ratios(config.benchmarks, config.mix.weights, config.rule)
    model = apply_power_factor(model, compute, fleet.fleet_power_ratio, FactorMode.DYNAMIC_ONLY)
    breakdown = system_power(model, config.utilization)
    energy_kwh = breakdown.total_kw * config.duration_hours
    scope3_unset = config.embodied is None
    # a zero-total embodied stand-in yields exactly scope3 = 0 through the
    # same accounting path
    embodied = config.embodied if config.embodied is not None else EmbodiedEmissions(0.0, 1.0)
    emissions = lifetime_emissions(
        breakdown.total_kw, config.duration_hours, config.carbon, embodied
    )
    return ScenarioResult(
        name=config.name,
        mean_power_kw=breakdown.total_kw,
        breakdown=breakdown,
        energy_kwh=energy_kwh,
        emissions=emissions,
        scope3_unset=scope3_unset,
        throughput_index=fleet.fleet_throughput_ratio,
        decisions=fleet.decisions,
        duration_hours=config.duration_hours,
    )


def compare_scenarios(a: ScenarioResult, b: ScenarioResult) -> ScenarioDeltas:
    """Differences of b relative to a; both runs must cover the same duration."""
    if a.duration_hours != b.duration_hours:
        raise DomainError(
            f"durations differ: {a.duration_hours} h vs {b.duration_hours} h"
        )
    if a.mean_power_kw == 0:
        raise DomainError("scenario a has zero mean power; percentage change is undefined")
    return ScenarioDeltas(
        power_kw=b.mean_power_kw - a.mean_power_kw,
        pct_power=(b.mean_power_kw - a.mean_power_kw) / a.mean_power_kw,
        energy_kwh=b.energy_kwh - a.energy_kwh,
        emissions_kg=b.emissions.total_kg - a.emissions.total_kg,
        throughput=b.throughput_index - a.throughput_index,
    )


def sweep_threshold(config: ScenarioConfig, thresholds) -> list[tuple[float, ScenarioResult]]:
    """Run the scenario once per revert threshold, ordered by threshold."""
    thresholds = list(thresholds)
    for threshold in thresholds:
        if not 0.0 <= threshold <= 1.0:
            raise DomainError(f"threshold must be within [0, 1], got {threshold}")
    results = []
    for threshold in sorted(thresholds):
        run = run_scenario(replace(config, rule=PolicyRule(threshold)))
        results.append((threshold, run))
    return results


_CONFIG_FIELDS = {
    "name",
    "model",
    "benchmarks",
    "mix",
    "rule",
    "utilization",
    "duration_hours",
    "carbon",
    "bios_factor",
    "embodied",
}
_REQUIRED_CONFIG_FIELDS = _CONFIG_FIELDS - {"name", "bios_factor", "embodied"}


def _require_number(doc: dict, key: str, where: str) -> float:
    value = doc.get(key)
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise DataFormatError(f"{where}: {key!r} must be a number")
    return float(value)


def _carbon_from_dict(doc, base_dir: Path, where: str) -> CarbonIntensityProfile:
    if not isinstance(doc, dict):
        raise DataFormatError(f"{where}: 'carbon' must be an object")
    if set(doc) == {"constant_g_per_kwh"}:
        return CarbonIntensityProfile.constant(_require_number(doc, "constant_g_per_kwh", where))
    if set(doc) == {"series_csv"}:
        if not isinstance(doc["series_csv"], str):
            raise DataFormatError(f"{where}: 'series_csv' must be a path string")
        return CarbonIntensityProfile.from_csv(base_dir / doc["series_csv"])
    raise DataFormatError(
        f"{where}: 'carbon' must contain exactly one of 'constant_g_per_kwh' or 'series_csv'"
    )


def load_scenario_config(path: str | Path) -> ScenarioConfig:
    """Load a scenario configuration from JSON.

    Referenced model/benchmark/intensity files are resolved relative to the
    configuration file's directory. The mix is an inline app-to-weight map or
    the string "equal" for an equal split over every benchmarked app.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise DataFormatError(f"{path}: expected a JSON object")
    unknown = set(doc) - _CONFIG_FIELDS
    if unknown:
        raise DataFormatError(f"{path}: unknown field(s): {', '.join(sorted(unknown))}")
    missing = _REQUIRED_CONFIG_FIELDS - set(doc)
    if missing:
        raise DataFormatError(f"{path}: missing field(s): {', '.join(sorted(missing))}")

    base_dir = path.parent
    if not isinstance(doc["model"], str):
        raise DataFormatError(f"{path}: 'model' must be a path string")
    if not isinstance(doc["benchmarks"], str):
        raise DataFormatError(f"{path}: 'benchmarks' must be a path string")
    model = load_model(base_dir / doc["model"])
    benchmarks = load_benchmark_table(base_dir / doc["benchmarks"])

    mix_doc = doc["mix"]
    if mix_doc == "equal":
        mix = JobMix.equal(sorted({b.app_name for b in benchmarks}))
    elif isinstance(mix_doc, dict):
        for app, weight in mix_doc.items():
            if not isinstance(weight, (int, float)) or isinstance(weight, bool):
                raise DataFormatError(f"{path}: mix weight for {app!r} must be a number")
        mix = JobMix(weights={app: float(w) for app, w in mix_doc.items()})
    else:
        raise DataFormatError(f"{path}: 'mix' must be an object or the string \"equal\"")

    rule_doc = doc["rule"]
    if not isinstance(rule_doc, dict) or set(rule_doc) != {"perf_loss_threshold"}:
        raise DataFormatError(f"{path}: 'rule' must be an object with 'perf_loss_threshold'")
    rule = PolicyRule(_require_number(rule_doc, "perf_loss_threshold", str(path)))

    carbon = _carbon_from_dict(doc["carbon"], base_dir, str(path))

    embodied = None
    if "embodied" in doc and doc["embodied"] is not None:
        emb_doc = doc["embodied"]
        if not isinstance(emb_doc, dict) or set(emb_doc) != {
            "total_kgco2e",
            "service_lifetime_hours",
        }:
            raise DataFormatError(
                f"{path}: 'embodied' must contain exactly "
                "'total_kgco2e' and 'service_lifetime_hours'"
            )
        embodied = EmbodiedEmissions(
            total_kgco2e=_require_number(emb_doc, "total_kgco2e", str(path)),
            service_lifetime_hours=_require_number(emb_doc, "service_lifetime_hours", str(path)),
        )

    name = doc.get("name", path.stem)
    if not isinstance(name, str):
        raise DataFormatError(f"{path}: 'name' must be a string")
    return ScenarioConfig(
        model=model,
        utilization=_require_number(doc, "utilization", str(path)),
        mix=mix,
        benchmarks=tuple(benchmarks),
        rule=rule,
        duration_hours=_require_number(doc, "duration_hours", str(path)),
        carbon=carbon,
        bios_factor=float(doc.get("bios_factor", 1.0)),
        embodied=embodied,
        name=name,
    )


def result_to_dict(result: ScenarioResult) -> dict:
    """JSON-serializable view of a scenario result."""
    return {
        "name": result.name,
        "mean_power_kw": result.mean_power_kw,
        "per_component": dict(result.breakdown.per_component),
        "energy_kwh": result.energy_kwh,
        "duration_hours": result.duration_hours,
        "emissions": {
            "scope2_kg": result.emissions.scope2_kg,
            "scope3_kg": result.emissions.scope3_kg,
            "total_kg": result.emissions.total_kg,
            "scope3_unset": result.scope3_unset,
        },
        "throughput_index": result.throughput_index,
        "decisions": [
            {
                "app_name": d.app_name,
                "default_setting": d.default_setting.value,
                "reverted": d.reverted,
                "perf_loss": d.perf_loss,
                "energy_saving": d.energy_saving,
            }
            for d in result.decisions
        ],
    }
