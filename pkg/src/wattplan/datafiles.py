"""Access to the data files bundled with the package."""

from __future__ import annotations

from importlib.resources import files
from pathlib import Path

BUILTIN_PREFIX = "builtin:"

ARCHER2_MODEL = "archer2_system.json"
TABLE3_BIOS = "table3_bios.csv"
TABLE4_FREQ = "table4_freq.csv"
BASELINE_SCENARIO = "baseline_scenario.json"
STACKED_SCENARIO = "stacked_scenario.json"


def data_path(name: str) -> Path:
    """Filesystem path of a bundled data file."""
    path = Path(str(files("wattplan").joinpath("data", name)))
    if not path.is_file():
        raise FileNotFoundError(f"no bundled data file named {name!r}")
    return path


def resolve_input_path(arg: str) -> Path:
    """Resolve a CLI path argument; 'builtin:NAME' maps to a bundled file."""
    if arg.startswith(BUILTIN_PREFIX):
        return data_path(arg[len(BUILTIN_PREFIX):])
    return Path(arg)
