import json
import logging
import threading
from pathlib import Path
from typing import Any, Dict, Optional, Type

from pydantic import BaseModel, Field
from pydantic import ValidationError as PydanticValidationError

from okamoto.errors import OkamotoError, ValidationError

logger = logging.getLogger(__name__)


class Experiment:
    """
    Base Experiment class.
    Subclasses declare a nested `Settings` model and implement `run`.
    Settings are persisted only when a settings directory is given.
    """
    Settings: Type[BaseModel] = BaseModel

    def __init__(self, name: str = "experiment", settings_dir: Optional[Path] = None,
                 overrides: Optional[Dict[str, Any]] = None):
        self.name = name
        self.settings_model = self.Settings
        self.settings_dir = Path(settings_dir).expanduser() if settings_dir else None
        self.settings_file = self.settings_dir / f"{self.name}.json" if self.settings_dir else None
        self._lock = threading.Lock()

        self.settings = self._load_settings()
        if overrides:
            self.update_settings(overrides, persist=False)

    def _load_settings(self) -> BaseModel:
        """Load settings from disk if available, else return the default model."""
        initial_settings = self.settings_model()
        if self.settings_file is None:
            return initial_settings

        if self.settings_file.exists():
            try:
                with open(self.settings_file, "r") as f:
                    initial_settings = self.settings_model(**json.load(f))
                logger.info(f"Loaded settings for '{self.name}': {initial_settings.model_dump()}")
            except (OSError, json.JSONDecodeError, PydanticValidationError) as e:
                logger.warning(f"Error loading settings for '{self.name}': {e}; using defaults")
                self._save_settings(initial_settings)
        else:
            self._save_settings(initial_settings)
        return initial_settings

    def _save_settings(self, settings_to_save: Optional[BaseModel] = None):
        """Save current (or provided) settings to disk."""
        if self.settings_file is None:
            return
        target_settings = settings_to_save or self.settings
        try:
            self.settings_dir.mkdir(parents=True, exist_ok=True)
            with open(self.settings_file, "w") as f:
                f.write(target_settings.model_dump_json(indent=4))
        except OSError as e:
            raise OkamotoError(f"cannot write settings to {self.settings_file}: {e}") from e

    def update_settings(self, new_settings: Dict[str, Any], persist: bool = True):
        """Merge, validate and (optionally) persist new settings."""
        with self._lock:
            current_data = self.settings.model_dump()
            current_data.update({key: value for key, value in new_settings.items() if value is not None})
            try:
                self.settings = self.settings_model.model_validate(current_data)
            except PydanticValidationError as e:
                first = e.errors()[0]
                field = ".".join(str(part) for part in first["loc"])
                raise ValidationError("invalid_setting", f"{self.name}.{field}: {first['msg']}") from e
        if persist:
            self._save_settings()

    def run(self) -> Any:
        """Override this method in subclasses."""
        raise NotImplementedError("Subclasses must implement run")


class BoxDimExperiment(Experiment):
    class Settings(BaseModel):
        k: int = Field(0, json_schema_extra={"group": "Function", "min": 0, "max": 6})
        a: float = Field(5.0 / 6.0, gt=0.0, lt=1.0, json_schema_extra={"group": "Function", "min": 0.0, "max": 1.0})
        n_min: int = Field(4, json_schema_extra={"group": "Scales", "min": 1, "max": 12})
        n_max: int = Field(9, json_schema_extra={"group": "Scales", "min": 2, "max": 13})
        m: int = Field(3, json_schema_extra={"group": "Scales", "min": 0, "max": 6})
        deep_min: int = Field(40, json_schema_extra={"group": "Scales", "min": 1, "max": 119})
        deep_max: int = Field(80, json_schema_extra={"group": "Scales", "min": 2, "max": 120})

    def __init__(self, **kwargs):
        super().__init__(name="boxdim", **kwargs)

    def run(self):
        from okamoto.dimension import box_dimension

        s = self.settings
        return box_dimension(s.k, s.a, n_min=s.n_min, n_max=s.n_max, m=s.m,
                             deep_min=s.deep_min, deep_max=s.deep_max)


class LilExperiment(Experiment):
    class Settings(BaseModel):
        a: float = Field(1.0 / 3.0, gt=0.0, lt=0.5, json_schema_extra={"group": "Chain", "min": 0.0, "max": 0.5})
        p: float = Field(1.0 / 9.0, ge=0.0, lt=1.0, json_schema_extra={"group": "Chain", "min": 0.0, "max": 1.0})
        steps: int = Field(1_000_000, json_schema_extra={"group": "Simulation", "min": 10_000, "max": 100_000_000})
        trials: int = Field(20, json_schema_extra={"group": "Simulation", "min": 1, "max": 1000})
        seed: int = Field(0, json_schema_extra={"group": "Simulation"})
        workers: Optional[int] = Field(None, json_schema_extra={"group": "Simulation", "min": 1, "max": 64})

    def __init__(self, **kwargs):
        super().__init__(name="lil", **kwargs)

    def run(self):
        from okamoto.dimension import lil_simulate

        s = self.settings
        return lil_simulate(s.a, s.p, s.steps, s.trials, seed=s.seed, workers=s.workers)


class CycleExperiment(Experiment):
    class Settings(BaseModel):
        a: float = Field(1.0 / 3.0, gt=0.0, lt=0.5, json_schema_extra={"group": "Chain", "min": 0.0, "max": 0.5})
        p: float = Field(1.0 / 9.0, ge=0.0, lt=1.0, json_schema_extra={"group": "Chain", "min": 0.0, "max": 1.0})
        cycles: int = Field(100_000, json_schema_extra={"group": "Simulation", "min": 10, "max": 10_000_000})
        seed: int = Field(0, json_schema_extra={"group": "Simulation"})

    def __init__(self, **kwargs):
        super().__init__(name="cycles", **kwargs)

    def run(self):
        from okamoto.dimension import cycle_statistics

        s = self.settings
        return cycle_statistics(s.a, s.p, s.cycles, seed=s.seed)


class CurveExperiment(Experiment):
    class Settings(BaseModel):
        points: int = Field(101, json_schema_extra={"group": "Grid", "min": 2, "max": 100_000})

    def __init__(self, **kwargs):
        super().__init__(name="curve", **kwargs)

    def run(self):
        from okamoto.dimension import curve_grid, dim_lower_curve

        return dim_lower_curve(curve_grid(self.settings.points))


# Factory / Registry

_EXPERIMENT_CLASSES: Dict[str, Type[Experiment]] = {}


def register_experiment(name: str, cls: Type[Experiment]):
    _EXPERIMENT_CLASSES[name] = cls


def get_experiment_by_name(name: str, **kwargs) -> Optional[Experiment]:
    cls = _EXPERIMENT_CLASSES.get(name)
    if cls:
        return cls(**kwargs)
    return None


register_experiment("boxdim", BoxDimExperiment)
register_experiment("lil", LilExperiment)
register_experiment("cycles", CycleExperiment)
register_experiment("curve", CurveExperiment)
