"""Component-level power model for a large computing system.

A system is described as a list of power-drawing component classes, each with
a unit count and per-unit idle/loaded draw in kW. Total draw is a function of
one global utilization figure; operational interventions (BIOS mode changes,
frequency caps) enter as multiplicative factors on a single component's draw.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path

from .errors import DataFormatError, DomainError


class LoadResponse(Enum):
    """How a component's draw responds to system utilization."""

    LINEAR = "linear"
    CONSTANT = "constant"


class FactorMode(Enum):
    """Which part of a component's per-unit draw a power factor scales."""

    WHOLE_DRAW = "whole_draw"
    DYNAMIC_ONLY = "dynamic_only"


@dataclass(frozen=True)
class ComponentSpec:
    """One component class: unit count and per-unit idle/loaded draw in kW.

    A CONSTANT response means the component draws its idle figure regardless
    of utilization (e.g. interconnect switches); LINEAR interpolates between
    the idle and loaded figures.
    """

    name: str
    count: int
    idle_kw_per_unit: float
    loaded_kw_per_unit: float
    load_response: LoadResponse = LoadResponse.LINEAR

    def __post_init__(self) -> None:
        if not self.name:
            raise DomainError("component name must be non-empty")
        if not isinstance(self.count, int) or self.count < 1:
            raise DomainError(
                f"component {self.name!r}: count must be a positive integer, got {self.count!r}"
            )
        if self.idle_kw_per_unit < 0:
            raise DomainError(
                f"component {self.name!r}: idle draw must be >= 0 kW, got {self.idle_kw_per_unit}"
            )
        if self.loaded_kw_per_unit < self.idle_kw_per_unit:
            raise DomainError(
                f"component {self.name!r}: loaded draw {self.loaded_kw_per_unit} kW "
                f"is below idle draw {self.idle_kw_per_unit} kW"
            )


@dataclass(frozen=True)
class SystemModel:
    """An ordered collection of components plus the designated compute component.

    The compute component is the target of frequency-policy scaling; a model
    without one (compute_component=None) can still be evaluated for power but
    cannot run policy scenarios.
    """

    name: str
    components: tuple[ComponentSpec, ...]
    compute_component: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "components", tuple(self.components))
        names = [c.name for c in self.components]
        if len(set(names)) != len(names):
            dup = sorted({n for n in names if names.count(n) > 1})
            raise DomainError(f"duplicate component names: {', '.join(dup)}")
        if self.compute_component is not None and self.compute_component not in names:
            raise DomainError(
                f"compute component {self.compute_component!r} is not among {names}"
            )

    def component(self, name: str) -> ComponentSpec:
        for comp in self.components:
            if comp.name == name:
                return comp
        raise DomainError(f"unknown component {name!r} in model {self.name!r}")


@dataclass(frozen=True)
class PowerBreakdown:
    """Per-component power in kW plus the system total."""

    per_component: dict[str, float]
    total_kw: float


def component_power(spec: ComponentSpec, utilization: float) -> float:
    """Power draw of one component class in kW at the given utilization.

    LINEAR components draw count * (idle + u * (loaded - idle)); CONSTANT
    components draw count * idle at every utilization.
    """
    if not 0.0 <= utilization <= 1.0:
        raise DomainError(f"utilization must be within [0, 1], got {utilization}")
    if spec.load_response is LoadResponse.CONSTANT:
        return spec.count * spec.idle_kw_per_unit
    dynamic = spec.loaded_kw_per_unit - spec.idle_kw_per_unit
    return spec.count * (spec.idle_kw_per_unit + utilization * dynamic)


def system_power(model: SystemModel, utilization: float) -> PowerBreakdown:
    """Evaluate every component at the given utilization and sum the draws."""
    per_component = {c.name: component_power(c, utilization) for c in model.components}
    return PowerBreakdown(per_component=per_component, total_kw=sum(per_component.values()))


def apply_power_factor(
    model: SystemModel, component: str, factor: float, mode: FactorMode
) -> SystemModel:
    """Return a new model with one component's draw scaled by a factor.

    WHOLE_DRAW scales both the idle and loaded per-unit figures; DYNAMIC_ONLY
    scales only the loaded-minus-idle span, leaving the idle floor untouched.
    Factors compose multiplicatively and order-independently; the input model
    is not modified.
    """
    if factor < 0:
        raise DomainError(f"power factor must be >= 0, got {factor}")
    spec = model.component(component)
    if mode is FactorMode.WHOLE_DRAW:
        scaled = replace(
            spec,
            idle_kw_per_unit=spec.idle_kw_per_unit * factor,
            loaded_kw_per_unit=spec.loaded_kw_per_unit * factor,
        )
    else:
        dynamic = spec.loaded_kw_per_unit - spec.idle_kw_per_unit
        scaled = replace(spec, loaded_kw_per_unit=spec.idle_kw_per_unit + dynamic * factor)
    components = tuple(scaled if c.name == component else c for c in model.components)
    return replace(model, components=components)


def reference_model_archer2() -> SystemModel:
    """The bundled ARCHER2 system model.

    Compute nodes dominate the draw; switches, coolant distribution units and
    file systems hold steady regardless of load. Cabinet overheads carry a
    modest load dependence so the idle and loaded system totals both match
    the measured figures (about 1,800 kW and 3,500 kW).
    """
    return SystemModel(
        name="archer2",
        compute_component="compute_nodes",
        components=(
            ComponentSpec("compute_nodes", 5860, 0.23, 0.51, LoadResponse.LINEAR),
            ComponentSpec("interconnect_switches", 768, 0.25, 0.25, LoadResponse.CONSTANT),
            ComponentSpec("cabinet_overheads", 23, 4.5, 9.0, LoadResponse.LINEAR),
            ComponentSpec("coolant_distribution_units", 6, 16.0, 16.0, LoadResponse.CONSTANT),
            ComponentSpec("file_systems", 5, 8.0, 8.0, LoadResponse.CONSTANT),
        ),
    )


_MODEL_FIELDS = {"name", "components", "compute_component"}
_COMPONENT_FIELDS = {"name", "count", "idle_kw_per_unit", "loaded_kw_per_unit", "load_response"}


def model_to_dict(model: SystemModel) -> dict:
    return {
        "name": model.name,
        "compute_component": model.compute_component,
        "components": [
            {
                "name": c.name,
                "count": c.count,
                "idle_kw_per_unit": c.idle_kw_per_unit,
                "loaded_kw_per_unit": c.loaded_kw_per_unit,
                "load_response": c.load_response.value,
            }
            for c in model.components
        ],
    }


def _component_from_dict(doc: dict, where: str) -> ComponentSpec:
    if not isinstance(doc, dict):
        raise DataFormatError(f"{where}: expected an object, got {type(doc).__name__}")
    unknown = set(doc) - _COMPONENT_FIELDS
    if unknown:
        raise DataFormatError(f"{where}: unknown field(s): {', '.join(sorted(unknown))}")
    missing = _COMPONENT_FIELDS - set(doc)
    if missing:
        raise DataFormatError(f"{where}: missing field(s): {', '.join(sorted(missing))}")
    if not isinstance(doc["name"], str):
        raise DataFormatError(f"{where}: 'name' must be a string")
    if not isinstance(doc["count"], int) or isinstance(doc["count"], bool):
        raise DataFormatError(f"{where}: 'count' must be an integer")
    for key in ("idle_kw_per_unit", "loaded_kw_per_unit"):
        if not isinstance(doc[key], (int, float)) or isinstance(doc[key], bool):
            raise DataFormatError(f"{where}: {key!r} must be a number")
    try:
        response = LoadResponse(doc["load_response"])
    except ValueError:
        raise DataFormatError(
            f"{where}: 'load_response' must be 'linear' or 'constant', got {doc['load_response']!r}"
        ) from None
    return ComponentSpec(
        name=doc["name"],
        count=doc["count"],
        idle_kw_per_unit=float(doc["idle_kw_per_unit"]),
        loaded_kw_per_unit=float(doc["loaded_kw_per_unit"]),
        load_response=response,
    )


def model_from_dict(doc: dict) -> SystemModel:
    """Build a SystemModel from its JSON representation; unknown fields are rejected."""
    if not isinstance(doc, dict):
        raise DataFormatError(f"model document: expected an object, got {type(doc).__name__}")
    unknown = set(doc) - _MODEL_FIELDS
    if unknown:
        raise DataFormatError(f"model document: unknown field(s): {', '.join(sorted(unknown))}")
    missing = _MODEL_FIELDS - set(doc)
    if missing:
        raise DataFormatError(f"model document: missing field(s): {', '.join(sorted(missing))}")
    if not isinstance(doc["name"], str):
        raise DataFormatError("model document: 'name' must be a string")
    compute = doc["compute_component"]
    if compute is not None and not isinstance(compute, str):
        raise DataFormatError("model document: 'compute_component' must be a string or null")
    if not isinstance(doc["components"], list):
        raise DataFormatError("model document: 'components' must be a list")
    components = tuple(
        _component_from_dict(comp, f"component #{i + 1}")
        for i, comp in enumerate(doc["components"])
    )
    return SystemModel(name=doc["name"], components=components, compute_component=compute)


def load_model(path: str | Path) -> SystemModel:
    """Load a SystemModel from a JSON file."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path}: invalid JSON: {exc}") from None
    return model_from_dict(doc)


def save_model(model: SystemModel, path: str | Path) -> None:
    """Write a SystemModel to a JSON file."""
    Path(path).write_text(json.dumps(model_to_dict(model), indent=2) + "\n", encoding="utf-8")
