"""Command-line harness: scenario files, demo gallery and reports."""

from .demos import CATALOG, list_demos, run_demo
from .main import main
from .scenario import SCHEMA, SCHEMA_VERSION, Scenario, ScenarioError, load_scenario, scenario_from_dict

__all__ = ["CATALOG", "list_demos", "run_demo", "main", "SCHEMA", "SCHEMA_VERSION", "Scenario",
           "ScenarioError", "load_scenario", "scenario_from_dict"]
