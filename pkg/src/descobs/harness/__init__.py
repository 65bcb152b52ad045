"""Scenario registry, composite simulation runner, trace export and CLI."""

from ..errors import ConfigError
from .config import CONFIG_SCHEMA, ScenarioConfig, config_from_dict, load_config_file
from .runner import RunResult, audit_scenario, run_scenario, simulate
from .scenarios import SCENARIOS, get_scenario, scenario_names
from .traces import export_traces


def make_config(scenario=None, config_path=None, **overrides) -> ScenarioConfig:
    """Scenario defaults, then the JSON file at ``config_path``, then ``overrides``.

    ``overrides`` use the JSON key names (``t_final``, ``step``, ``lambda`` ...).
    """
    doc = load_config_file(config_path) if config_path else {}
    if scenario is not None:
        doc["scenario"] = scenario
    doc.update({k: v for k, v in overrides.items() if v is not None})
    if "scenario" not in doc:
        raise ConfigError("no scenario given")
    defaults = get_scenario(doc["scenario"]).defaults
    return config_from_dict(doc, defaults)


__all__ = [
    "CONFIG_SCHEMA",
    "RunResult",
    "SCENARIOS",
    "ScenarioConfig",
    "audit_scenario",
    "config_from_dict",
    "export_traces",
    "get_scenario",
    "load_config_file",
    "make_config",
    "run_scenario",
    "scenario_names",
    "simulate",
]
