"""Power, energy and emissions planning toolkit for large HPC systems."""

from .emissions import (
    CarbonIntensityProfile,
    EfficiencyMetrics,
    EmbodiedEmissions,
    EmissionsBreakdown,
    EmissionsScenario,
    OptimizationObjective,
    amortized_scope3,
    classify_scenario,
    lifetime_emissions,
    output_efficiency,
    recommended_objective,
    scope2_emissions,
)
from .errors import DataFormatError, DomainError, WattplanError
from .freq_policy import (
    AppBenchmark,
    DerivedRatios,
    FleetRatios,
    FrequencySetting,
    Intervention,
    PolicyDecision,
    PolicyRule,
    derived_ratios,
    fleet_ratios,
    load_benchmark_table,
    recommend,
)
from .power_model import (
    ComponentSpec,
    FactorMode,
    LoadResponse,
    PowerBreakdown,
    SystemModel,
    apply_power_factor,
    component_power,
    load_model,
    reference_model_archer2,
    save_model,
    system_power,
)
from .simulator import (
    BIOS_DETERMINISM_POWER_FACTOR,
    JobMix,
    ScenarioConfig,
    ScenarioDeltas,
    ScenarioResult,
    compare_scenarios,
    load_scenario_config,
    run_scenario,
    sweep_threshold,
)
from .telemetry import (
    Changepoint,
    InterventionReport,
    PowerSeries,
    SeriesSegment,
    WindowStats,
    detect_changepoint,
    intervention_impact,
    parse_series,
    synth_series,
    window_mean,
    write_series,
)

__version__ = "0.1.0"
