"""Experiment configuration (YAML file <-> validated model)."""

from __future__ import annotations

from pathlib import Path
from typing import Dict, List, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .combination import CombinerConfig
from .evaluation import DEFAULT_CAPS, FAMILIES, default_grids, expand_grid
from .metrics import MetricConfig
from .simulation import DEFAULT_ALPHABET, DatasetSpec, NoiseModel


class ConfigError(ValueError):
    pass


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SimulatorSpec(_Strict):
    n_clips: int = Field(500, ge=1)
    n_frames: int = Field(30, ge=1)
    min_length: int = Field(4, ge=0)
    max_length: int = Field(15, ge=0)
    substitution_rates: List[float] = [0.1, 0.2, 0.3]
    insertion_rate: float = Field(0.02, ge=0, le=1)
    deletion_rate: float = Field(0.02, ge=0, le=1)
    confusion_temperature: float = Field(1.0, gt=0)
    soften_rate: float = Field(0.3, ge=0, le=1)
    alphabet: str = DEFAULT_ALPHABET

    @field_validator("substitution_rates")
    @classmethod
    def _rates(cls, v):
        if not v or any(not 0 <= r <= 1 for r in v):
            raise ValueError("need at least one rate, each in [0, 1]")
        return v

    @model_validator(mode="after")
    def _lengths(self):
        if self.max_length < self.min_length:
            raise ValueError("max_length < min_length")
        return self

    def dataset_spec(self, seed: int) -> DatasetSpec:
        noise = NoiseModel(
            insertion_rate=self.insertion_rate,
            deletion_rate=self.deletion_rate,
            confusion_temperature=self.confusion_temperature,
            alphabet=self.alphabet,
            soften_rate=self.soften_rate,
        )
        return DatasetSpec(self.n_clips, self.n_frames, self.min_length, self.max_length,
                           tuple(self.substitution_rates), noise, seed)


class DatasetSource(_Strict):
    path: Optional[str] = None
    simulate: Optional[SimulatorSpec] = None
    loop_to: Optional[int] = Field(None, ge=1)

    @model_validator(mode="after")
    def _exactly_one(self):
        if (self.path is None) == (self.simulate is None):
            raise ValueError("exactly one of 'path' or 'simulate' must be given")
        return self


def _default_policies() -> Dict[str, Dict[str, list]]:
    return default_grids()


class ExperimentConfig(_Strict):
    seed: int = Field(0, ge=0, lt=2 ** 64)
    dataset: DatasetSource = DatasetSource(simulate=SimulatorSpec())
    policies: Dict[str, Dict[str, List[float]]] = Field(default_factory=_default_policies)
    metric: Dict[str, float] = Field(default_factory=lambda: {"alpha": 1.0})
    combiner: Dict[str, float] = Field(default_factory=lambda: {"support_power": 1.0})
    caps: List[float] = Field(default_factory=lambda: list(DEFAULT_CAPS))
    output_dir: str = "out"
    jobs: Optional[int] = Field(None, ge=1)

    @field_validator("policies")
    @classmethod
    def _policies(cls, v):
        required = {"ndelta": {"c"}, "ncx": {"size", "confidence", "gap"},
                    "ncr": {"size", "confidence", "gap"}, "nk": {"k"}}
        optional = {"ndelta": {"delta", "min_stage"}}
        for name, axes in v.items():
            if name not in FAMILIES:
                raise ValueError(f"unknown policy family {name!r}")
            missing = required[name] - set(axes)
            if missing:
                raise ValueError(f"{name}: missing axes {sorted(missing)}")
            extra = set(axes) - required[name] - optional.get(name, set())
            if extra:
                raise ValueError(f"{name}: unknown axes {sorted(extra)}")
            for axis, values in axes.items():
                if not values:
                    raise ValueError(f"{name}.{axis}: grid is empty")
        if not v:
            raise ValueError("no policy families configured")
        return v

    @field_validator("caps")
    @classmethod
    def _caps(cls, v):
        if v != sorted(v):
            raise ValueError("caps must be sorted ascending")
        return v

    def metric_config(self) -> MetricConfig:
        return MetricConfig(**self.metric)

    def combiner_config(self) -> CombinerConfig:
        return CombinerConfig(**self.combiner)

    def family_grids(self) -> Dict[str, List[dict]]:
        grids = {}
        for name in FAMILIES:
            if name in self.policies:
                cells = expand_grid(self.policies[name])
                for cell in cells:
                    for key in ("size", "k", "min_stage"):
                        if key in cell:
                            cell[key] = int(cell[key])
                grids[name] = cells
        return grids

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.model_dump(mode="json"), sort_keys=True, default_flow_style=None)


def _format_errors(exc: ValidationError) -> str:
    lines = []
    for err in exc.errors():
        where = ".".join(str(p) for p in err["loc"]) or "<root>"
        lines.append(f"{where}: {err['msg']}")
    return "; ".join(lines)


def config_from_dict(data: dict) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data or {})
    except ValidationError as exc:
        raise ConfigError(f"invalid config: {_format_errors(exc)}") from None


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML: {exc}") from None
    if data is not None and not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return config_from_dict(data or {})
