"""Scenario files, the check runner and reports."""
from __future__ import annotations

from importlib import resources
from pathlib import Path

from .checks import CHECKS, run_checks
from .report import CheckRecord, CheckReport, recompute_verdict
from .scenario import ScenarioFile, ScenarioFileError, load_scenario, parse_scenario_text

__all__ = [
    "CHECKS",
    "CheckRecord",
    "CheckReport",
    "ScenarioFile",
    "ScenarioFileError",
    "bundled_path",
    "bundled_scenarios",
    "load_scenario",
    "parse_scenario_text",
    "recompute_verdict",
    "resolve_scenario",
    "run_checks",
]


def _scenario_dir() -> Path:
    return Path(str(resources.files(__package__) / "scenarios"))


def bundled_scenarios() -> list[str]:
    """Names of the scenario files shipped with the package, sorted."""
    return sorted(p.stem for p in _scenario_dir().glob("*.dwp"))


def bundled_path(name: str) -> Path:
    path = _scenario_dir() / f"{name}.dwp"
    if not path.is_file():
        raise ScenarioFileError(f"no bundled scenario named {name!r}; available: {', '.join(bundled_scenarios())}")
    return path


def resolve_scenario(name_or_path: str) -> Path:
    """A file path if it exists, otherwise a bundled scenario name."""
    p = Path(name_or_path)
    if p.is_file():
        return p
    if p.suffix or "/" in name_or_path:
        raise ScenarioFileError(f"cannot read scenario file: no such file", None, None, name_or_path)
    return bundled_path(name_or_path)
