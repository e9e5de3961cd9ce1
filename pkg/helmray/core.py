"""Ray bundles, scenarios and the launch of a bundle on the z = 0 line."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from helmray import config
from helmray.errors import ConfigurationError, EvanescentRegionError
from helmray.media import (
    GaussianField,
    HarmonicField,
    LinearField,
    Medium,
    MediumKind,
    TableField,
    UniformField,
)
from helmray.profiles import BeamProfile
from helmray.schemas import RunConfig
from helmray.stencils import EDGE_POLICIES, segment_lengths, voronoi_widths
from helmray.transport import CLOSURES, stable_time_step
from helmray.units import (
    SYSTEM_UNIT_MODES,
    System,
    Units,
    de_broglie_wavenumber_sq,
    launch_energy,
    launch_wavenumber,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RayState:
    position: np.ndarray
    momentum: np.ndarray
    amplitude: float
    wave_potential: float
    launch_index: int


@dataclass
class Bundle:
    """Rays of one wavefront, stored as per-ray arrays ordered by launch abscissa.

    A bundle has a single writer: ``dynamics.step`` replaces its arrays in
    place of mutating them, so snapshots taken earlier stay valid.
    """

    positions: np.ndarray
    momenta: np.ndarray
    amplitudes: np.ndarray
    wave_potential: np.ndarray
    launch_spacings: np.ndarray
    launch_amplitudes: np.ndarray
    launch_momentum_norms: np.ndarray
    units: Units
    time: float = 0.0
    step_count: int = 0
    launch_index: np.ndarray | None = None
    launch_hamiltonians: np.ndarray | None = None
    launch_segments: np.ndarray | None = None
    launch_cell_amplitudes: np.ndarray | None = None

    def __post_init__(self):
        count = len(self.positions)
        if self.launch_index is None:
            self.launch_index = np.arange(count)
        if self.launch_segments is None:
            self.launch_segments = segment_lengths(self.positions)
        if self.launch_cell_amplitudes is None:
            self.launch_cell_amplitudes = np.sqrt(self.launch_amplitudes[:-1] * self.launch_amplitudes[1:])
        fields = (
            "momenta",
            "amplitudes",
            "wave_potential",
            "launch_spacings",
            "launch_amplitudes",
            "launch_momentum_norms",
            "launch_index",
        )
        for name in fields:
            if len(getattr(self, name)) != count:
                raise ConfigurationError(f"bundle field {name} has the wrong length")
        for name in ("launch_segments", "launch_cell_amplitudes"):
            if len(getattr(self, name)) != max(count - 1, 0):
                raise ConfigurationError(f"bundle field {name} needs one entry per tube between rays")
        if np.any(self.launch_spacings <= 0):
            raise ConfigurationError("launch spacings must be strictly positive")
        if np.any(self.amplitudes < 0):
            raise ConfigurationError("amplitudes must be nonnegative")

    @property
    def ray_count(self) -> int:
        return len(self.positions)

    def ray(self, j: int) -> RayState:
        return RayState(
            position=self.positions[j].copy(),
            momentum=self.momenta[j].copy(),
            amplitude=float(self.amplitudes[j]),
            wave_potential=float(self.wave_potential[j]),
            launch_index=int(self.launch_index[j]),
        )

    @property
    def rays(self) -> list[RayState]:
        return [self.ray(j) for j in range(self.ray_count)]

    def copy(self) -> Bundle:
        return replace(
            self,
            positions=self.positions.copy(),
            momenta=self.momenta.copy(),
            amplitudes=self.amplitudes.copy(),
            wave_potential=self.wave_potential.copy(),
        )


@dataclass(frozen=True)
class Integration:
    dt: float
    n_steps: int
    snapshot_stride: int = 10

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigurationError("dt must be positive", key="integration.dt")
        if self.n_steps < 0:
            raise ConfigurationError("n_steps must be nonnegative", key="integration.n_steps")
        if self.snapshot_stride < 1:
            raise ConfigurationError("snapshot_stride must be at least 1", key="integration.snapshot_stride")


@dataclass(frozen=True)
class Regularization:
    amplitude_floor: float = config.AMPLITUDE_FLOOR
    edge_stencil_policy: str = "copy"
    closure: str = "pressure"

    def __post_init__(self):
        if not self.amplitude_floor > 0:
            raise ConfigurationError("amplitude_floor must be positive", key="regularization.amplitude_floor")
        if self.edge_stencil_policy not in EDGE_POLICIES:
            raise ConfigurationError(
                f"edge_stencil_policy must be one of {EDGE_POLICIES}", key="regularization.edge_stencil_policy"
            )
        if self.closure not in CLOSURES:
            raise ConfigurationError(f"closure must be one of {CLOSURES}", key="regularization.closure")


@dataclass(frozen=True)
class Scenario:
    """Everything that defines one run.

    ``wavelength`` is the field-free launch wavelength lambda0; it fixes k0,
    the launch momentum p0 = hbar k0 and the conserved energy (omega in EM
    mode). ``amplitude_floor`` is relative to the largest launch amplitude.
    """

    system: System
    units: Units
    medium: Medium
    beam_profile: BeamProfile
    wavelength: float
    integration: Integration
    wave_potential_enabled: bool = True
    regularization: Regularization = Regularization()
    name: str = "scenario"

    def __post_init__(self):
        object.__setattr__(self, "system", System(self.system))
        if self.units.mode is not SYSTEM_UNIT_MODES[self.system]:
            raise ConfigurationError(
                f"{self.system.value} runs use {SYSTEM_UNIT_MODES[self.system].value} units, "
                f"got {self.units.mode.value}",
                key="units",
            )
        if self.system is System.MASSLESS and self.units.mass != 0:
            raise ConfigurationError("massless runs need a zero rest mass", key="units.mass")
        expected = MediumKind.INDEX_FIELD if self.system is System.EM else MediumKind.POTENTIAL_FIELD
        if self.medium.kind is not expected:
            raise ConfigurationError(
                f"{self.system.value} runs need a {expected.value} medium", key="medium.kind"
            )
        launch_wavenumber(self.wavelength)

    @property
    def k0(self) -> float:
        return launch_wavenumber(self.wavelength)

    @property
    def p0(self) -> float:
        return self.units.hbar * self.k0

    @property
    def energy(self) -> float:
        return launch_energy(self.system, self.wavelength, self.units)

    @property
    def rest_mass(self) -> float:
        return self.units.mass

    @property
    def rayleigh_length(self) -> float:
        return math.pi * self.beam_profile.w0**2 / self.wavelength

    @property
    def launch_speed(self) -> float:
        """Field-free speed of a launch ray."""
        if self.system is System.QUANTUM:
            return self.p0 / self.units.mass
        if self.system is System.RELATIVISTIC:
            return self.units.c**2 * self.p0 / self.energy
        return self.units.c

    @property
    def rayleigh_time(self) -> float:
        return self.rayleigh_length / self.launch_speed


def launch_momentum_norms(scenario: Scenario, values: np.ndarray) -> np.ndarray:
    """|p| on the launch line from the local medium value (n or V)."""
    units = scenario.units
    if scenario.system is System.EM:
        return units.hbar * values * scenario.k0
    if scenario.system is System.MASSLESS:
        index = 1.0 - values / scenario.energy
        if np.any(index <= 0):
            raise EvanescentRegionError("V >= E on the launch line", step=0, rays=np.flatnonzero(index <= 0))
        return units.hbar * index * scenario.k0
    k_sq = de_broglie_wavenumber_sq(
        scenario.energy, values, units.mass, scenario.system, units.hbar, units.c
    )
    return np.where(values == 0, scenario.p0, units.hbar * np.sqrt(k_sq))


def validate_scenario(scenario: Scenario) -> np.ndarray:
    """Check the launch line lies in the domain and in an allowed region; return |p| per ray."""
    x = scenario.beam_profile.launch_abscissas()
    values, _ = scenario.medium.evaluate(np.column_stack((x, np.zeros_like(x))))
    norms = launch_momentum_norms(scenario, values)
    if not np.all(norms > 0):
        raise ConfigurationError("launch momentum must be positive", key="beam.wavelength")
    return norms


def make_bundle(profile: BeamProfile, scenario: Scenario) -> Bundle:
    """Rays on z = 0 at the profile's launch abscissas, moving along +z."""
    if profile.span <= 0:
        raise ConfigurationError("span must be positive", key="beam.span")
    if not scenario.p0 > 0:
        raise ConfigurationError("p0 must be positive", key="beam.wavelength")
    x = profile.launch_abscissas()
    positions = np.column_stack((x, np.zeros_like(x)))
    values, _ = scenario.medium.evaluate(positions)
    norms = launch_momentum_norms(scenario, values)
    if not np.all(norms > 0):
        raise ConfigurationError("launch momentum must be positive", key="beam.wavelength")
    momenta = np.column_stack((np.zeros_like(x), norms))
    amplitudes = profile.amplitude(x)
    segments = segment_lengths(positions)
    spacings = voronoi_widths(segments)
    return Bundle(
        positions=positions,
        momenta=momenta,
        amplitudes=amplitudes,
        wave_potential=np.zeros_like(x),
        launch_spacings=spacings,
        launch_amplitudes=amplitudes.copy(),
        launch_momentum_norms=norms.copy(),
        units=scenario.units,
        launch_segments=segments,
        launch_cell_amplitudes=profile.amplitude(0.5 * (x[:-1] + x[1:])),
    )


# --- Building from a validated RunConfig ---

def _build_field(field_config, kind: MediumKind):
    if field_config is None:
        return UniformField(1.0 if kind is MediumKind.INDEX_FIELD else 0.0)
    shape = field_config.shape
    if shape == "uniform":
        return UniformField(field_config.value)
    if shape == "linear":
        return LinearField(field_config.base, field_config.slope_x, field_config.slope_z)
    if shape == "harmonic":
        return HarmonicField(field_config.stiffness, field_config.base, field_config.center)
    if shape == "gaussian":
        return GaussianField(
            height=field_config.height,
            width_x=field_config.width_x,
            base=field_config.base,
            center_x=field_config.center_x,
            center_z=field_config.center_z,
            width_z=field_config.width_z if field_config.width_z is not None else float("inf"),
        )
    return TableField(
        tuple(field_config.x),
        tuple(field_config.z),
        tuple(tuple(row) for row in field_config.values),
    )


def _resolve_integration(run_config: RunConfig, provisional: Scenario) -> Integration:
    settings = run_config.integration
    stride = settings.snapshot_stride
    if settings.dt is not None:
        dt = settings.dt
    elif settings.dt_policy == "spacing":
        dt = 0.25 * provisional.beam_profile.spacing / provisional.launch_speed
    else:
        dt = provisional.rayleigh_time / settings.steps_per_rayleigh

    if provisional.wave_potential_enabled:
        limit = stable_time_step(provisional)
        if settings.dt is not None and dt > limit:
            logger.warning("%s: dt=%g is above the wavefront stability limit %g", provisional.name, dt, limit)
        elif dt > limit:
            logger.info("%s: dt lowered from %g to the wavefront stability limit %g", provisional.name, dt, limit)
            dt = limit

    if settings.n_steps is not None:
        return Integration(dt=dt, n_steps=settings.n_steps, snapshot_stride=stride)
    steps = math.ceil(settings.rayleigh_lengths * provisional.rayleigh_time / dt - 1e-9)
    steps = stride * math.ceil(steps / stride)
    return Integration(dt=dt, n_steps=max(steps, 0), snapshot_stride=stride)


def build_scenario(run_config: RunConfig) -> Scenario:
    system = run_config.system
    units = Units.for_system(system, run_config.units.hbar, run_config.units.mass, run_config.units.c)

    medium_config = run_config.medium
    kind = medium_config.kind
    if kind is None:
        kind = MediumKind.INDEX_FIELD if system is System.EM else MediumKind.POTENTIAL_FIELD
    medium = Medium(
        kind=kind,
        field=_build_field(medium_config.field, kind),
        domain=tuple(medium_config.domain) if medium_config.domain is not None else None,
    )

    beam = run_config.beam
    profile = BeamProfile(
        kind=beam.kind,
        span=beam.span,
        ray_count=beam.ray_count,
        w0=beam.w0,
        order=beam.order,
        separation=beam.separation,
        table_x=tuple(beam.table_x),
        table_amplitude=tuple(beam.table_amplitude),
    )

    regularization = Regularization(
        amplitude_floor=(
            run_config.regularization.amplitude_floor
            if run_config.regularization.amplitude_floor is not None
            else config.AMPLITUDE_FLOOR
        ),
        edge_stencil_policy=run_config.regularization.edge_stencil_policy,
        closure=run_config.regularization.closure,
    )

    provisional = Scenario(
        system=system,
        units=units,
        medium=medium,
        beam_profile=profile,
        wavelength=beam.wavelength,
        integration=Integration(dt=1.0, n_steps=0),
        wave_potential_enabled=run_config.wave_potential_enabled,
        regularization=regularization,
        name=run_config.name,
    )
    scenario = replace(provisional, integration=_resolve_integration(run_config, provisional))
    validate_scenario(scenario)
    return scenario
