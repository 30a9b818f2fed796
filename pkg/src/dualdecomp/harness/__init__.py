"""Scenario presets, run configuration, output emitters and the CLI."""

from .config import RunConfig, SweepSpec, parse_sweep
from .presets import PRESETS, ScenarioPreset, make_preset
from .runner import ScenarioResult, execute, run_scenario

__all__ = ["PRESETS", "RunConfig", "ScenarioPreset", "ScenarioResult", "SweepSpec", "execute",
           "make_preset", "parse_sweep", "run_scenario"]
