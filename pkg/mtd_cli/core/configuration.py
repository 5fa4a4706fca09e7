#!/usr/bin/env python3
"""Model file loading, schema validation and serialisation."""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .exceptions import ModelIOError, ModelParseError, ModelValidationError
from .model import (
    AttackGraph,
    FalseNegativeModel,
    ModelBundle,
    MtdSchedule,
    SensorConstraints,
)

logger = logging.getLogger(__name__)

BUNDLED_MODELS_DIR = Path(__file__).parent.parent / "models"
BUNDLED_MODEL = BUNDLED_MODELS_DIR / "three_host.json"
MODEL_SCHEMA = BUNDLED_MODELS_DIR / "model.schema.json"


class ConfigSection(BaseModel):
    """Transitions of one configuration: {state: {action: {next_state: prob}}}."""
    model_config = ConfigDict(extra="forbid")

    transitions: Dict[str, Dict[str, Dict[str, float]]] = Field(default_factory=dict)


class MtdSection(BaseModel):
    """Switch matrix and initial distribution, ordered like ``configs``."""
    model_config = ConfigDict(extra="forbid")

    matrix: List[List[float]]
    initial: List[float]


class SensorsSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    detector_sites: List[Tuple[str, str]] = Field(default_factory=list)
    stealthy_sites: List[Tuple[str, str]] = Field(default_factory=list)
    detector_budget: int = 0
    stealthy_budget: int = 0


class RateOverride(BaseModel):
    model_config = ConfigDict(extra="forbid")

    state: str
    action: str
    eps: float


class FalseNegativeSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    default: float
    overrides: List[RateOverride] = Field(default_factory=list)
    stealthy: float = 0.0


class ModelFile(BaseModel):
    """On-disk model format.

    ``states`` and ``actions`` may be omitted, in which case they are the
    union of the identifiers referenced across configurations.
    """
    model_config = ConfigDict(extra="forbid")

    states: Optional[List[str]] = None
    actions: Optional[List[str]] = None
    goal_states: List[str]
    initial_dist: Dict[str, float]
    configs: Dict[str, ConfigSection]
    mtd: MtdSection
    sensors: SensorsSection = Field(default_factory=SensorsSection)
    false_negative: FalseNegativeSection

    @field_validator("states", "actions", "goal_states")
    @classmethod
    def validate_identifiers(cls, v):
        if v is None:
            return v
        for name in v:
            if not name:
                raise ValueError("Identifiers must be non-empty strings")
        if len(set(v)) != len(v):
            raise ValueError("Identifiers must be unique")
        return v


class SweepSpec(BaseModel):
    """Budget / false negative rate grid for ``mtd sweep``."""
    model_config = ConfigDict(extra="forbid")

    detector_budgets: List[int]
    stealthy_budgets: List[int] = Field(default_factory=lambda: [0])
    eps_values: List[float]
    temperature: float = 0.1
    trials: Optional[int] = None

    @field_validator("detector_budgets", "stealthy_budgets", "eps_values")
    @classmethod
    def validate_values(cls, v, info):
        if not v:
            raise ValueError(f"{info.field_name} must be non-empty")
        if any(value < 0 for value in v):
            raise ValueError(f"{info.field_name} must be non-negative")
        if info.field_name == "eps_values" and any(value > 1 for value in v):
            raise ValueError("eps values must lie in [0, 1]")
        return v

    @field_validator("temperature")
    @classmethod
    def validate_temperature(cls, v):
        if v < 0:
            raise ValueError("temperature must be non-negative")
        return v

    @field_validator("trials")
    @classmethod
    def validate_trials(cls, v):
        if v is not None and v < 1:
            raise ValueError("trials must be at least 1")
        return v

    def cells(self) -> List[Tuple[int, int, float]]:
        """(k, h, eps) cells in sweep order."""
        return [(k, h, eps) for k in self.detector_budgets
                for h in self.stealthy_budgets for eps in self.eps_values]


def _first_pydantic_error(error: ValidationError) -> ModelValidationError:
    first = error.errors()[0]
    location = ".".join(str(part) for part in first.get("loc", ())) or "<root>"
    return ModelValidationError(location, first.get("input", ""), first.get("msg", "Invalid value"))


class ConfigurationManager:
    """Loads, validates and serialises model and sweep files."""

    def load_config(self, config_path: Path) -> Dict[str, Any]:
        """Read a JSON or YAML file into a dictionary."""
        config_path = Path(config_path)
        if not config_path.exists():
            raise ModelIOError(str(config_path), "Model file not found")
        try:
            text = config_path.read_text()
        except OSError as e:
            raise ModelIOError(str(config_path), f"Cannot read file: {e}")

        try:
            if config_path.suffix.lower() in (".yaml", ".yml"):
                data = yaml.safe_load(text)
            else:
                data = json.loads(text)
        except (json.JSONDecodeError, yaml.YAMLError) as e:
            raise ModelParseError(str(config_path), f"Malformed file: {e}")

        if not isinstance(data, dict):
            raise ModelParseError(str(config_path), "Top level must be a mapping")
        return data

    def validate_config(self, config_data: Dict[str, Any]) -> ModelFile:
        """Check the file schema, raising on the first violation."""
        try:
            return ModelFile(**config_data)
        except ValidationError as e:
            raise _first_pydantic_error(e)

    def merge_overrides(self, config_data: Dict[str, Any], overrides: Dict[str, Any]) -> Dict[str, Any]:
        """Apply CLI overrides ``k``, ``h`` and ``eps`` to raw model data.

        A uniform ``eps`` replaces the default rate and drops per-site overrides.
        """
        merged = dict(config_data)
        sensors = dict(merged.get("sensors") or {})
        false_negative = dict(merged.get("false_negative") or {})

        if overrides.get("k") is not None:
            sensors["detector_budget"] = int(overrides["k"])
        if overrides.get("h") is not None:
            sensors["stealthy_budget"] = int(overrides["h"])
        if overrides.get("eps") is not None:
            false_negative["default"] = float(overrides["eps"])
            false_negative["overrides"] = []

        merged["sensors"] = sensors
        merged["false_negative"] = false_negative
        return merged

    def build_bundle(self, model_file: ModelFile) -> ModelBundle:
        """Turn a schema-valid file into a validated ModelBundle."""
        referenced_states = set(model_file.goal_states) | set(model_file.initial_dist)
        referenced_actions = set()
        for section in model_file.configs.values():
            for state, by_action in section.transitions.items():
                referenced_states.add(state)
                for action, dist in by_action.items():
                    referenced_actions.add(action)
                    referenced_states.update(dist)

        if model_file.states is None:
            states = frozenset(referenced_states)
        else:
            states = frozenset(model_file.states)
            unknown = sorted(referenced_states - states)
            if unknown:
                raise ModelValidationError("states", unknown[0], "Unknown state identifier")
        if model_file.actions is None:
            actions = frozenset(referenced_actions)
        else:
            actions = frozenset(model_file.actions)
            unknown = sorted(referenced_actions - actions)
            if unknown:
                raise ModelValidationError("actions", unknown[0], "Unknown action identifier")

        goal_states = frozenset(model_file.goal_states)
        initial_dist = dict(model_file.initial_dist)
        graphs = {}
        for config, section in model_file.configs.items():
            transitions = {
                (state, action): dict(dist)
                for state, by_action in section.transitions.items()
                for action, dist in by_action.items()
            }
            graphs[config] = AttackGraph(
                states=states,
                actions=actions,
                transitions=transitions,
                initial_dist=initial_dist,
                goal_states=goal_states,
            )

        schedule = MtdSchedule(
            configs=tuple(model_file.configs),
            switch_matrix=tuple(tuple(row) for row in model_file.mtd.matrix),
            initial_config_dist=tuple(model_file.mtd.initial),
        )
        sensors = model_file.sensors
        constraints = SensorConstraints(
            detector_sites=frozenset(tuple(site) for site in sensors.detector_sites),
            stealthy_sites=frozenset(tuple(site) for site in sensors.stealthy_sites),
            detector_budget=sensors.detector_budget,
            stealthy_budget=sensors.stealthy_budget,
        )
        fn = model_file.false_negative
        fn_model = FalseNegativeModel(
            default=fn.default,
            overrides={(o.state, o.action): o.eps for o in fn.overrides},
            stealthy_eps=fn.stealthy,
        )

        bundle = ModelBundle(graphs=graphs, schedule=schedule, constraints=constraints, fn_model=fn_model)
        bundle.validate()
        return bundle

    def load_bundle(self, path: Path, overrides: Optional[Dict[str, Any]] = None) -> ModelBundle:
        """Load, override and validate a model file."""
        data = self.load_config(path)
        if overrides:
            data = self.merge_overrides(data, overrides)
        bundle = self.build_bundle(self.validate_config(data))
        logger.info("Loaded model %s: %d states, %d configurations",
                    path, len(bundle.states), len(bundle.configs))
        return bundle

    def dump_model(self, bundle: ModelBundle) -> Dict[str, Any]:
        """Serialise a bundle into the model file format."""
        configs = {}
        for config in bundle.configs:
            transitions: Dict[str, Dict[str, Dict[str, float]]] = {}
            for (state, action), dist in sorted(bundle.graphs[config].transitions.items()):
                transitions.setdefault(state, {})[action] = dict(sorted(dist.items()))
            configs[config] = {"transitions": transitions}

        fn_model = bundle.fn_model
        return {
            "states": bundle.states,
            "actions": bundle.actions,
            "goal_states": sorted(bundle.goal_states),
            "initial_dist": dict(sorted(bundle.initial_dist.items())),
            "configs": configs,
            "mtd": {
                "matrix": [list(row) for row in bundle.schedule.switch_matrix],
                "initial": list(bundle.schedule.initial_config_dist),
            },
            "sensors": {
                "detector_sites": [list(site) for site in sorted(bundle.constraints.detector_sites)],
                "stealthy_sites": [list(site) for site in sorted(bundle.constraints.stealthy_sites)],
                "detector_budget": bundle.constraints.detector_budget,
                "stealthy_budget": bundle.constraints.stealthy_budget,
            },
            "false_negative": {
                "default": fn_model.default,
                "overrides": [
                    {"state": s, "action": a, "eps": eps}
                    for (s, a), eps in sorted(fn_model.overrides.items())
                ],
                "stealthy": fn_model.stealthy_eps,
            },
        }

    def save_model(self, bundle: ModelBundle, path: Path) -> None:
        path = Path(path)
        data = self.dump_model(bundle)
        try:
            if path.suffix.lower() in (".yaml", ".yml"):
                path.write_text(yaml.safe_dump(data, sort_keys=False))
            else:
                path.write_text(json.dumps(data, indent=2) + "\n")
        except OSError as e:
            raise ModelIOError(str(path), f"Cannot write model: {e}")

    def load_sweep_spec(self, path: Path) -> SweepSpec:
        """Load a sweep grid from a YAML or JSON file."""
        return self.validate_sweep(self.load_config(path))

    def validate_sweep(self, data: Dict[str, Any]) -> SweepSpec:
        try:
            return SweepSpec(**data)
        except ValidationError as e:
            raise _first_pydantic_error(e)


# Global configuration manager instance
_config_manager = ConfigurationManager()


def get_config_manager() -> ConfigurationManager:
    """Get the global configuration manager."""
    return _config_manager


def dump_model(bundle: ModelBundle) -> Dict[str, Any]:
    """Serialise a bundle into the model file format."""
    return _config_manager.dump_model(bundle)


def load_bundled_model(overrides: Optional[Dict[str, Any]] = None) -> ModelBundle:
    """Load the example model shipped with the package."""
    return _config_manager.load_bundle(BUNDLED_MODEL, overrides)


def resolve_model_path(path: Union[str, Path]) -> Path:
    """Map the name ``bundled`` to the shipped example model."""
    if str(path) in ("bundled", "three_host"):
        return BUNDLED_MODEL
    return Path(path)
