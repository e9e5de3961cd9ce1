"""Synchronized kick-drift-kick stepping of a coupled ray bundle, with conservation monitors."""

from __future__ import annotations

import logging
import time as clock
from dataclasses import dataclass, field

import numpy as np
from tqdm import tqdm

from helmray.core import Bundle, RayState, Scenario, make_bundle
from helmray.errors import SimulationFault
from helmray.systems import HamiltonianSystem, system_for
from helmray.transport import (
    WavefrontFrame,
    amplitude_floor,
    build_frame,
    pressure_gradient,
    transport_amplitude,
    transverse_laplacian,
    tube_flux,
    wave_potential,
    wave_potential_gradient,
    wave_pressure,
)
from helmray.units import System, de_broglie_wavenumber_sq

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class StepReport:
    step: int
    time: float
    hamiltonians: np.ndarray
    max_hamiltonian_drift: float
    max_perpendicularity: float
    clamp_count: int
    crossing: bool
    max_flux_drift: float = 0.0
    max_momentum_drift: float = 0.0


@dataclass(frozen=True)
class Snapshot:
    step: int
    time: float
    positions: np.ndarray
    momenta: np.ndarray
    amplitudes: np.ndarray
    wave_potential: np.ndarray

    @property
    def ray_count(self) -> int:
        return len(self.positions)


@dataclass
class TrajectoryRecord:
    """Snapshots every ``snapshot_stride`` steps plus one report per step.

    The final step is always snapshotted, so the last stride may be shorter.
    ``fault`` is set when the run stopped early on a physics fault.
    """

    scenario: Scenario
    launch_spacings: np.ndarray
    launch_momentum_norms: np.ndarray
    snapshots: list[Snapshot] = field(default_factory=list)
    reports: list[StepReport] = field(default_factory=list)
    config_hash: str | None = None
    config: dict | None = None
    fault: SimulationFault | None = None
    runtime_seconds: float = 0.0

    @property
    def snapshot_stride(self) -> int:
        return self.scenario.integration.snapshot_stride

    @property
    def ray_count(self) -> int:
        return self.snapshots[0].ray_count

    @property
    def launch(self) -> Snapshot:
        return self.snapshots[0]

    @property
    def final(self) -> Snapshot:
        return self.snapshots[-1]

    @property
    def launch_abscissas(self) -> np.ndarray:
        return self.snapshots[0].positions[:, 0]

    @property
    def times(self) -> np.ndarray:
        return np.array([snapshot.time for snapshot in self.snapshots])

    def positions(self) -> np.ndarray:
        """(snapshots, rays, 2)."""
        return np.stack([snapshot.positions for snapshot in self.snapshots])

    def momenta(self) -> np.ndarray:
        return np.stack([snapshot.momenta for snapshot in self.snapshots])

    def conservation(self) -> dict:
        reports = self.reports
        if not reports:
            return {}
        return {
            "max_hamiltonian_drift": max(report.max_hamiltonian_drift for report in reports),
            "max_momentum_drift": max(report.max_momentum_drift for report in reports),
            "max_flux_drift": max(report.max_flux_drift for report in reports),
            "max_perpendicularity": max(report.max_perpendicularity for report in reports),
            "clamp_count": sum(report.clamp_count for report in reports),
            "crossing_steps": sum(1 for report in reports if report.crossing),
        }


@dataclass
class _Evaluation:
    values: np.ndarray
    gradients: np.ndarray
    frame: WavefrontFrame
    forces: np.ndarray
    clamp_count: int
    perpendicularity: float


def _check_allowed(scenario: Scenario, values: np.ndarray):
    if scenario.system is System.EM:
        return
    units = scenario.units
    de_broglie_wavenumber_sq(scenario.energy, values, units.mass, scenario.system, units.hbar, units.c)


def _perpendicularity(forces: np.ndarray, momenta: np.ndarray) -> float:
    force_norms = np.hypot(forces[:, 0], forces[:, 1])
    momentum_norms = np.hypot(momenta[:, 0], momenta[:, 1])
    active = force_norms > 0
    if not np.any(active):
        return 0.0
    dots = np.abs(np.einsum("ij,ij->i", forces[active], momenta[active]))
    return float(np.max(dots / (force_norms[active] * momentum_norms[active])))


def _couple(bundle: Bundle, scenario: Scenario, frame: WavefrontFrame) -> tuple[np.ndarray, np.ndarray, int]:
    """Per-ray Wave Potential, its arc-length gradient vectors and the clamp count."""
    regularization = scenario.regularization
    policy = regularization.edge_stencil_policy
    scale = float(np.max(bundle.launch_amplitudes))
    if regularization.closure == "collocated":
        laplacians = transverse_laplacian(frame, bundle.amplitudes, policy)
        potentials = wave_potential(scenario, laplacians, bundle.amplitudes, scale)
        clamps = int(np.count_nonzero(bundle.amplitudes < amplitude_floor(scenario, scale)))
        return potentials, wave_potential_gradient(frame, potentials, policy), clamps
    pressure = wave_pressure(scenario, bundle, frame, scale, policy)
    potentials = wave_potential(scenario, pressure.laplacians(bundle.amplitudes), bundle.amplitudes, scale)
    return potentials, pressure_gradient(frame, pressure), pressure.clamp_count


def _evaluate(bundle: Bundle, scenario: Scenario, system: HamiltonianSystem) -> _Evaluation:
    """Refresh amplitudes and Wave Potential of ``bundle`` and return the forces on it."""
    values, gradients = scenario.medium.evaluate(bundle.positions)
    _check_allowed(scenario, values)
    coupled = scenario.wave_potential_enabled
    frame = build_frame(bundle, strict=coupled)
    bundle.amplitudes = transport_amplitude(bundle, frame)

    if coupled:
        bundle.wave_potential, wave_gradients, clamp_count = _couple(bundle, scenario, frame)
    else:
        bundle.wave_potential = np.zeros(bundle.ray_count)
        wave_gradients = np.zeros_like(bundle.positions)
        clamp_count = 0

    return _Evaluation(
        values=values,
        gradients=gradients,
        frame=frame,
        forces=system.force(values, gradients, wave_gradients),
        clamp_count=clamp_count,
        perpendicularity=_perpendicularity(wave_gradients, bundle.momenta),
    )


def _kick(momenta: np.ndarray, forces: np.ndarray, dt: float) -> np.ndarray:
    return momenta + (0.5 * dt) * forces


def _drift(positions, momenta, values, scenario: Scenario, system: HamiltonianSystem, dt: float) -> np.ndarray:
    velocity = system.velocity(momenta, values)
    if system.position_dependent_velocity:
        midpoint = positions + (0.5 * dt) * velocity
        mid_values, _ = scenario.medium.evaluate(midpoint)
        _check_allowed(scenario, mid_values)
        velocity = system.velocity(momenta, mid_values)
    return positions + dt * velocity


def _report(bundle: Bundle, evaluation: _Evaluation, system: HamiltonianSystem, perpendicularity: float) -> StepReport:
    hamiltonians = system.hamiltonian(bundle.momenta, evaluation.values, bundle.wave_potential)
    if bundle.launch_hamiltonians is None:
        bundle.launch_hamiltonians = hamiltonians.copy()
    reference = np.maximum(np.abs(bundle.launch_hamiltonians), system.energy_scale)
    norms = np.hypot(bundle.momenta[:, 0], bundle.momenta[:, 1])
    flux = tube_flux(bundle.amplitudes, evaluation.frame.spacings, bundle.momenta)
    launch_flux = bundle.launch_amplitudes**2 * bundle.launch_spacings * bundle.launch_momentum_norms
    carrying = launch_flux > 0
    flux_drift = np.abs(flux[carrying] / launch_flux[carrying] - 1.0)
    return StepReport(
        step=bundle.step_count,
        time=bundle.time,
        hamiltonians=hamiltonians,
        max_hamiltonian_drift=float(np.max(np.abs(hamiltonians - bundle.launch_hamiltonians) / reference)),
        max_perpendicularity=perpendicularity,
        clamp_count=evaluation.clamp_count,
        crossing=evaluation.frame.crossing,
        max_flux_drift=float(np.max(flux_drift)) if flux_drift.size else 0.0,
        max_momentum_drift=float(np.max(np.abs(norms / bundle.launch_momentum_norms - 1.0))),
    )


def _prime(bundle: Bundle, scenario: Scenario, system: HamiltonianSystem) -> tuple[Bundle, _Evaluation, StepReport]:
    primed = bundle.copy()
    try:
        evaluation = _evaluate(primed, scenario, system)
    except SimulationFault as fault:
        if fault.step is None:
            fault.step = primed.step_count
        raise
    primed.launch_hamiltonians = None
    return primed, evaluation, _report(primed, evaluation, system, evaluation.perpendicularity)


def prime(bundle: Bundle, scenario: Scenario) -> tuple[Bundle, StepReport]:
    """Fill the launch Wave Potential and reference Hamiltonians of a fresh bundle."""
    primed, _, report = _prime(bundle, scenario, system_for(scenario))
    return primed, report


def _advance(
    bundle: Bundle,
    scenario: Scenario,
    dt: float,
    system: HamiltonianSystem,
    start: _Evaluation | None = None,
) -> tuple[Bundle, _Evaluation, StepReport]:
    """Kick-drift-kick from ``bundle``; ``start`` is its evaluation when the caller already has it.

    The returned evaluation belongs to the advanced bundle after its second
    kick, so it also starts the next step.
    """
    advanced = bundle.copy()
    try:
        if start is None:
            start = _evaluate(bundle.copy(), scenario, system)
        half = _kick(bundle.momenta, start.forces, dt)
        advanced.positions = _drift(bundle.positions, half, start.values, scenario, system, dt)
        advanced.momenta = half
        advanced.time = bundle.time + dt
        advanced.step_count = bundle.step_count + 1

        middle = _evaluate(advanced, scenario, system)
        advanced.momenta = _kick(half, middle.forces, dt)
        end = _evaluate(advanced, scenario, system)
    except SimulationFault as fault:
        if fault.step is None:
            fault.step = bundle.step_count + 1
        raise

    if end.clamp_count:
        logger.debug("step %d: %d amplitude(s) clamped to the floor", advanced.step_count, end.clamp_count)
    perpendicularity = max(middle.perpendicularity, end.perpendicularity)
    return advanced, end, _report(advanced, end, system, perpendicularity)


def step_with_report(
    bundle: Bundle, scenario: Scenario, dt: float, system: HamiltonianSystem | None = None
) -> tuple[Bundle, StepReport]:
    """One kick-drift-kick step; forces for the first half-kick come from the current bundle.

    Amplitudes and Wave Potential of the returned bundle are those of its
    final positions and momenta.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    system = system or system_for(scenario)
    if bundle.launch_hamiltonians is None:
        bundle, _ = prime(bundle, scenario)
    advanced, _, report = _advance(bundle, scenario, dt, system)
    return advanced, report


def step(bundle: Bundle, scenario: Scenario, dt: float) -> Bundle:
    advanced, _ = step_with_report(bundle, scenario, dt)
    return advanced


def hamiltonian(ray: RayState, scenario: Scenario, medium_value: float) -> float:
    """System Hamiltonian of one ray: D for light (on shell 0), H for matter waves (on shell E)."""
    system = system_for(scenario)
    values = np.array([medium_value], dtype=float)
    momenta = np.asarray(ray.momentum, dtype=float).reshape(1, 2)
    return float(system.hamiltonian(momenta, values, np.array([ray.wave_potential], dtype=float))[0])


def _snapshot(bundle: Bundle) -> Snapshot:
    return Snapshot(
        step=bundle.step_count,
        time=bundle.time,
        positions=bundle.positions.copy(),
        momenta=bundle.momenta.copy(),
        amplitudes=bundle.amplitudes.copy(),
        wave_potential=bundle.wave_potential.copy(),
    )


def _log_launch(scenario: Scenario, bundle: Bundle):
    integration = scenario.integration
    logger.info(
        "%s: %d %s rays, lambda0=%g, dt=%.6g, %d steps (%.3g Rayleigh lengths), wave potential %s",
        scenario.name,
        bundle.ray_count,
        scenario.system.value,
        scenario.wavelength,
        integration.dt,
        integration.n_steps,
        integration.n_steps * integration.dt / scenario.rayleigh_time,
        "on" if scenario.wave_potential_enabled else "off (eikonal)",
    )


def _finish(record: TrajectoryRecord, started: float):
    record.runtime_seconds = clock.perf_counter() - started
    summary = record.conservation()
    if summary:
        logger.info(
            "%s: H drift %.3e, |p| drift %.3e, flux drift %.3e, perpendicularity %.3e, %d clamp(s)",
            record.scenario.name,
            summary["max_hamiltonian_drift"],
            summary["max_momentum_drift"],
            summary["max_flux_drift"],
            summary["max_perpendicularity"],
            summary["clamp_count"],
        )


def run(scenario: Scenario, progress: bool = False) -> TrajectoryRecord:
    """Launch the bundle and integrate ``n_steps`` steps.

    On a physics fault the record accumulated so far is attached to the
    exception as ``fault.record`` before it propagates.
    """
    started = clock.perf_counter()
    bundle = make_bundle(scenario.beam_profile, scenario)
    _log_launch(scenario, bundle)
    record = TrajectoryRecord(
        scenario=scenario,
        launch_spacings=bundle.launch_spacings.copy(),
        launch_momentum_norms=bundle.launch_momentum_norms.copy(),
    )
    integration = scenario.integration
    system = system_for(scenario)
    try:
        bundle, start, report = _prime(bundle, scenario, system)
        record.snapshots.append(_snapshot(bundle))
        record.reports.append(report)
        steps = tqdm(
            range(1, integration.n_steps + 1),
            desc=scenario.name,
            unit="step",
            disable=not progress,
            leave=False,
        )
        for index in steps:
            bundle, start, report = _advance(bundle, scenario, integration.dt, system, start)
            record.reports.append(report)
            if index % integration.snapshot_stride == 0 or index == integration.n_steps:
                record.snapshots.append(_snapshot(bundle))
    except SimulationFault as fault:
        if record.snapshots and record.snapshots[-1].step != bundle.step_count:
            record.snapshots.append(_snapshot(bundle))
        record.fault = fault
        fault.record = record
        _finish(record, started)
        logger.error("%s: %s at step %s", scenario.name, type(fault).__name__, fault.step)
        raise
    _finish(record, started)
    return record


def classical_trajectories(scenario: Scenario, progress: bool = False) -> TrajectoryRecord:
    """Uncoupled classical rays with the same kick-drift-kick maps and no Wave Potential.

    Amplitudes stay at their launch values; only positions and momenta are integrated.
    """
    started = clock.perf_counter()
    bundle = make_bundle(scenario.beam_profile, scenario)
    system = system_for(scenario)
    integration = scenario.integration
    dt = integration.dt
    record = TrajectoryRecord(
        scenario=scenario,
        launch_spacings=bundle.launch_spacings.copy(),
        launch_momentum_norms=bundle.launch_momentum_norms.copy(),
    )
    no_wave = np.zeros_like(bundle.positions)

    positions = bundle.positions
    momenta = bundle.momenta
    values, gradients = scenario.medium.evaluate(positions)
    reference = system.hamiltonian(momenta, values, bundle.wave_potential)
    record.snapshots.append(_snapshot(bundle))

    for index in tqdm(range(1, integration.n_steps + 1), disable=not progress, leave=False):
        forces = system.force(values, gradients, no_wave)
        half = _kick(momenta, forces, dt)
        positions = _drift(positions, half, values, scenario, system, dt)
        values, gradients = scenario.medium.evaluate(positions)
        _check_allowed(scenario, values)
        momenta = _kick(half, system.force(values, gradients, no_wave), dt)

        bundle.positions = positions
        bundle.momenta = momenta
        bundle.time += dt
        bundle.step_count = index
        hamiltonians = system.hamiltonian(momenta, values, bundle.wave_potential)
        scale = np.maximum(np.abs(reference), system.energy_scale)
        record.reports.append(
            StepReport(
                step=index,
                time=bundle.time,
                hamiltonians=hamiltonians,
                max_hamiltonian_drift=float(np.max(np.abs(hamiltonians - reference) / scale)),
                max_perpendicularity=0.0,
                clamp_count=0,
                crossing=False,
            )
        )
        if index % integration.snapshot_stride == 0 or index == integration.n_steps:
            record.snapshots.append(_snapshot(bundle))

    record.runtime_seconds = clock.perf_counter() - started
    return record
