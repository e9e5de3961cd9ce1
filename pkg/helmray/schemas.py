"""Validated run and sweep documents."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Annotated, Any, Literal, Union

from pydantic import BaseModel, Field, ValidationError, model_validator

from helmray.errors import ConfigurationError
from helmray.media import MediumKind
from helmray.profiles import MIN_RAYS, ProfileKind
from helmray.units import System


class StrictModel(BaseModel):
    model_config = {"extra": "forbid"}


# --- Units and beam ---

class UnitsConfig(StrictModel):
    hbar: float = Field(1.0, gt=0)
    mass: float = Field(1.0, ge=0)
    c: float = Field(1.0, gt=0)


class BeamConfig(StrictModel):
    kind: ProfileKind = ProfileKind.GAUSSIAN
    w0: float = Field(1.0, gt=0)
    wavelength: float = Field(2e-4, gt=0)
    span: float = Field(4.0, gt=0)
    ray_count: int = Field(201, ge=MIN_RAYS)
    order: int = Field(4, ge=1)
    separation: float = Field(0.0, ge=0)
    table_x: list[float] = []
    table_amplitude: list[float] = []

    @model_validator(mode="after")
    def _table_needs_samples(self):
        if self.kind is ProfileKind.TABLE and not self.table_x:
            raise ValueError("a table profile needs table_x and table_amplitude")
        return self


# --- Medium ---

class UniformFieldConfig(StrictModel):
    shape: Literal["uniform"] = "uniform"
    value: float


class LinearFieldConfig(StrictModel):
    shape: Literal["linear"] = "linear"
    base: float = 0.0
    slope_x: float = 0.0
    slope_z: float = 0.0


class HarmonicFieldConfig(StrictModel):
    shape: Literal["harmonic"] = "harmonic"
    stiffness: float
    base: float = 0.0
    center: float = 0.0


class GaussianFieldConfig(StrictModel):
    shape: Literal["gaussian"] = "gaussian"
    height: float
    width_x: float = Field(gt=0)
    width_z: float | None = Field(None, gt=0)
    base: float = 0.0
    center_x: float = 0.0
    center_z: float = 0.0


class TableFieldConfig(StrictModel):
    shape: Literal["table"] = "table"
    x: list[float]
    z: list[float]
    values: list[list[float]]


FieldConfig = Annotated[
    Union[UniformFieldConfig, LinearFieldConfig, HarmonicFieldConfig, GaussianFieldConfig, TableFieldConfig],
    Field(discriminator="shape"),
]


class MediumConfig(StrictModel):
    kind: MediumKind | None = None
    field: FieldConfig | None = None
    domain: tuple[float, float, float, float] | None = None


# --- Integration and output ---

class IntegrationConfig(StrictModel):
    dt: float | None = Field(None, gt=0)
    dt_policy: Literal["rayleigh", "spacing"] = "rayleigh"
    steps_per_rayleigh: int = Field(400, ge=1)
    n_steps: int | None = Field(None, ge=0)
    rayleigh_lengths: float = Field(1.0, ge=0)
    snapshot_stride: int = Field(10, ge=1)


class RegularizationConfig(StrictModel):
    amplitude_floor: float | None = Field(None, gt=0)
    edge_stencil_policy: Literal["copy", "one_sided"] = "copy"
    closure: Literal["pressure", "collocated"] = "pressure"


class OutputConfig(StrictModel):
    directory: str | None = None
    progress: bool = False


AnalysisName = Literal["compare-waist", "divergence", "profile", "uncertainty", "fringes"]


class RunConfig(StrictModel):
    name: str = "run"
    system: System
    units: UnitsConfig = UnitsConfig()
    beam: BeamConfig = BeamConfig()
    medium: MediumConfig = MediumConfig()
    wave_potential_enabled: bool = True
    integration: IntegrationConfig = IntegrationConfig()
    regularization: RegularizationConfig = RegularizationConfig()
    output: OutputConfig = OutputConfig()
    analyses: list[AnalysisName] = []
    analysis_z: float | None = Field(None, ge=0)

    def canonical_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()


class SweepConfig(StrictModel):
    name: str = "sweep"
    base: RunConfig
    grid: dict[str, list[Any]] = Field(min_length=1)

    @model_validator(mode="after")
    def _grid_axes_nonempty(self):
        for key, values in self.grid.items():
            if not values:
                raise ValueError(f"grid axis {key!r} has no values")
        return self


# --- Loading ---

def line_of(text: str, loc: tuple[Any, ...] | str) -> int | None:
    """1-based line of the JSON key path ``loc`` in ``text``, best effort."""
    if isinstance(loc, str):
        loc = tuple(loc.split("."))
    position = None
    cursor = 0
    for part in loc:
        if not isinstance(part, str):
            continue
        found = text.find(f'"{part}"', cursor)
        if found < 0:
            continue
        position = cursor = found
    if position is None:
        return None
    return text.count("\n", 0, position) + 1


def anchor(error: ConfigurationError, text: str) -> ConfigurationError:
    """Attach the source line of ``error.key`` when it is not set yet."""
    if error.line is None and error.key:
        error.line = line_of(text, error.key)
    return error


def _validate_document(text: str, model: type[StrictModel], source: str):
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{source}: invalid JSON: {exc.msg}", line=exc.lineno) from exc
    try:
        return model.model_validate(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        key = ".".join(str(part) for part in first["loc"])
        raise ConfigurationError(f"{source}: {first['msg']}", key=key or None, line=line_of(text, first["loc"])) from exc


def parse_run_config(text: str, source: str = "<config>") -> RunConfig:
    return _validate_document(text, RunConfig, source)


def load_run_config(path: str | Path) -> RunConfig:
    path = Path(path)
    return parse_run_config(_read(path), str(path))


def load_sweep_config(path: str | Path) -> SweepConfig:
    path = Path(path)
    return _validate_document(_read(path), SweepConfig, str(path))


def _read(path: Path) -> str:
    try:
        return path.read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc.strerror}") from exc
