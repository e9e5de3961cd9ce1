"""Wavefront geometry, flux-conserving amplitude transport and the Wave Potential closure.

Two closures couple the rays. The collocated one differentiates R and Q at
the rays with the stencils of ``helmray.stencils``. The pressure closure
works on the tubes between neighbouring rays: it differentiates ln R across
tube interfaces and takes dQ/ds as the arc-length derivative of the quantum
pressure -P R^2 d^2(ln R)/ds^2 divided by the lumped tube density, which
keeps every wavefront mode bounded.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from helmray.errors import ConfigurationError, CrossingFault, StencilError
from helmray.stencils import (
    EDGE_POLICIES,
    MIN_STENCIL_POINTS,
    arc_coordinates,
    first_derivative,
    second_derivative,
    segment_lengths,
    voronoi_widths,
)
from helmray.units import System

CLOSURES = ("pressure", "collocated")
# fastest wavefront mode times dt stays below this in coupled runs
STABILITY_FACTOR = 0.5


@dataclass(frozen=True)
class WavefrontFrame:
    """Polyline through the rays in launch order.

    ``normals`` are the unit momentum directions and ``tangents`` their
    clockwise perpendiculars, so for a beam along +z the tangent points to +x.
    ``crossings`` lists segment indices j where rays j and j+1 swapped order.
    """

    arc_coords: np.ndarray
    segments: np.ndarray
    spacings: np.ndarray
    normals: np.ndarray
    tangents: np.ndarray
    crossings: np.ndarray

    @property
    def crossing(self) -> bool:
        return self.crossings.size > 0


def build_frame(bundle, strict: bool = True) -> WavefrontFrame:
    """Frame of the bundle's current wavefront.

    With ``strict`` an ordering violation raises CrossingFault; otherwise it
    is only listed in ``crossings`` (eikonal runs, where rays may form caustics).
    """
    positions = bundle.positions
    momenta = bundle.momenta
    normals = momenta / np.hypot(momenta[:, 0], momenta[:, 1])[:, None]
    tangents = np.column_stack((normals[:, 1], -normals[:, 0]))

    if bundle.ray_count == 1:
        return WavefrontFrame(
            arc_coords=np.zeros(1),
            segments=np.zeros(0),
            spacings=bundle.launch_spacings.copy(),
            normals=normals,
            tangents=tangents,
            crossings=np.zeros(0, dtype=int),
        )

    segments = segment_lengths(positions)
    chords = np.diff(positions, axis=0)
    mean_tangents = tangents[:-1] + tangents[1:]
    advance = np.einsum("ij,ij->i", chords, mean_tangents)
    crossings = np.flatnonzero((advance <= 0) | (segments <= 0))
    if strict and crossings.size:
        first = int(crossings[0])
        raise CrossingFault(
            f"rays {first} and {first + 1} crossed ({crossings.size} crossing(s))",
            step=bundle.step_count,
            rays=np.unique(np.concatenate((crossings, crossings + 1))),
        )
    return WavefrontFrame(
        arc_coords=arc_coordinates(segments),
        segments=segments,
        spacings=voronoi_widths(segments),
        normals=normals,
        tangents=tangents,
        crossings=crossings,
    )


def transport_amplitude(bundle, frame: WavefrontFrame) -> np.ndarray:
    """R_j = R_j(0) sqrt(s_j(0) |p_j(0)| / (s_j |p_j|)): constant flux R^2 s |p| per tube."""
    spacings = frame.spacings
    if np.any(spacings <= 0):
        rays = np.flatnonzero(spacings <= 0)
        raise CrossingFault("ray tube collapsed", step=bundle.step_count, rays=rays)
    norms = np.hypot(bundle.momenta[:, 0], bundle.momenta[:, 1])
    ratio = (bundle.launch_spacings * bundle.launch_momentum_norms) / (spacings * norms)
    return bundle.launch_amplitudes * np.sqrt(ratio)


def tube_flux(amplitudes, spacings, momenta) -> np.ndarray:
    return amplitudes**2 * spacings * np.hypot(momenta[:, 0], momenta[:, 1])


def transverse_laplacian(frame: WavefrontFrame, amplitudes, policy: str = "copy") -> np.ndarray:
    """d^2 R / d s^2 along the wavefront arc length."""
    return second_derivative(frame.segments, amplitudes, policy)


def wave_potential_prefactor(scenario) -> float:
    """P in W (or Q) = -P * lap(R) / R."""
    units = scenario.units
    if scenario.system is System.EM:
        return units.c / (2.0 * scenario.k0)
    if scenario.system is System.QUANTUM:
        return units.hbar**2 / (2.0 * units.mass)
    return units.hbar**2 * units.c**2 / (2.0 * scenario.energy)


def amplitude_floor(scenario, amplitude_scale: float) -> float:
    return scenario.regularization.amplitude_floor * amplitude_scale


def wave_potential(scenario, laplacians, amplitudes, amplitude_scale: float | None = None) -> np.ndarray:
    """W (EM) or Q (matter waves) per ray; zero everywhere in eikonal mode.

    Amplitudes under the floor, ``amplitude_floor`` times ``amplitude_scale``
    (the largest amplitude by default), are clamped to it before dividing.
    """
    amplitudes = np.asarray(amplitudes, dtype=float)
    if not scenario.wave_potential_enabled:
        return np.zeros_like(amplitudes)
    if amplitude_scale is None:
        amplitude_scale = float(np.max(amplitudes))
    clamped = np.maximum(amplitudes, amplitude_floor(scenario, amplitude_scale))
    return -wave_potential_prefactor(scenario) * (np.asarray(laplacians, dtype=float) / clamped)


def wave_potential_gradient(frame: WavefrontFrame, potentials, policy: str = "copy") -> np.ndarray:
    """Arc-length gradient of the potential, directed along the wavefront tangent.

    Each returned vector is parallel to the tangent, hence perpendicular to
    the ray momentum the frame was built from.
    """
    slope = first_derivative(frame.segments, potentials, policy)
    return slope[:, None] * frame.tangents


def fastest_mode_frequency(scenario, spacing: float) -> float:
    """Angular frequency of the shortest wavefront mode, one that alternates from ray to ray.

    Every system shares the paraxial dispersion omega = v0 k^2 / (2 k0) for
    transverse wavenumbers k, and a bundle with ray spacing h resolves
    wavenumbers up to 2/h.
    """
    return 2.0 * scenario.launch_speed / (scenario.k0 * spacing**2)


def stable_time_step(scenario) -> float:
    """Largest dt that keeps ``STABILITY_FACTOR`` radians per step on the fastest launch mode."""
    return STABILITY_FACTOR / fastest_mode_frequency(scenario, scenario.beam_profile.spacing)


@dataclass(frozen=True)
class WavePressure:
    """Pressure closure of one wavefront.

    Cell k is the tube between rays k and k+1. ``log_slopes`` are d(ln R)/ds
    at the rays, the edge entries extrapolated from the interior interfaces.
    ``log_curvatures`` and ``pressures`` live on the cells, ``masses`` are the
    lumped tube densities at the rays and ``slopes`` the resulting dQ/ds.
    """

    cell_amplitudes: np.ndarray
    log_slopes: np.ndarray
    log_curvatures: np.ndarray
    pressures: np.ndarray
    masses: np.ndarray
    slopes: np.ndarray
    clamp_count: int

    def laplacians(self, amplitudes) -> np.ndarray:
        """d^2 R / d s^2 at the rays as R ((ln R)'' + (ln R)'^2)."""
        curvatures = self.log_curvatures
        mean = np.empty(curvatures.size + 1)
        mean[0] = curvatures[0]
        mean[-1] = curvatures[-1]
        mean[1:-1] = 0.5 * (curvatures[:-1] + curvatures[1:])
        return np.asarray(amplitudes, dtype=float) * (mean + self.log_slopes**2)


def cell_amplitudes(bundle, frame: WavefrontFrame) -> np.ndarray:
    """Tube amplitudes from flux conservation, R^2 L |p| constant per cell.

    L is the chord between the two rays and |p| their mean momentum.
    """
    norms = np.hypot(bundle.momenta[:, 0], bundle.momenta[:, 1])
    mean_norms = 0.5 * (norms[:-1] + norms[1:])
    launch_norms = 0.5 * (bundle.launch_momentum_norms[:-1] + bundle.launch_momentum_norms[1:])
    if np.any(frame.segments <= 0):
        rays = np.flatnonzero(frame.segments <= 0)
        raise CrossingFault("ray tube collapsed", step=bundle.step_count, rays=np.union1d(rays, rays + 1))
    ratio = (bundle.launch_segments * launch_norms) / (frame.segments * mean_norms)
    return bundle.launch_cell_amplitudes * np.sqrt(ratio)


def _extrapolate(arc: np.ndarray, slopes: np.ndarray, near: int, far: int, target: int) -> float:
    """Linear extrapolation in arc length from the interfaces ``near`` and ``far`` to ray ``target``."""
    return slopes[near] + (slopes[near] - slopes[far]) * (arc[target] - arc[near]) / (arc[near] - arc[far])


def wave_pressure(scenario, bundle, frame: WavefrontFrame, amplitude_scale: float, policy: str = "copy") -> WavePressure:
    """Pressure closure of the bundle's current wavefront.

    Interface slopes difference ln R between neighbouring cells over the
    Voronoi width of the ray they share. One ghost cell continues each edge
    with the curvature of the edge cell. Its interface slope is extrapolated
    linearly in arc length: "copy" from the first two interfaces that do not
    touch the edge cell, "one_sided" from the two interfaces nearest the edge.
    Cell amplitudes under the floor are clamped to it and counted.
    """
    if policy not in EDGE_POLICIES:
        raise ConfigurationError(
            f"unknown edge stencil policy {policy!r}", key="regularization.edge_stencil_policy"
        )
    count = bundle.ray_count
    if count < MIN_STENCIL_POINTS:
        raise StencilError(f"wavefront stencils need at least {MIN_STENCIL_POINTS} rays, got {count}")

    segments = frame.segments
    arc = frame.arc_coords
    floor = amplitude_floor(scenario, amplitude_scale)
    amplitudes = cell_amplitudes(bundle, frame)
    clamped = amplitudes < floor
    amplitudes = np.maximum(amplitudes, floor)
    logs = np.log(amplitudes)

    slopes = np.empty(count)
    slopes[1:-1] = np.diff(logs) / frame.spacings[1:-1]
    near = 2 if policy == "copy" else 1
    slopes[0] = _extrapolate(arc, slopes, near, near + 1, 0)
    slopes[-1] = _extrapolate(arc, slopes, count - 1 - near, count - 2 - near, count - 1)
    curvatures = np.diff(slopes) / segments

    prefactor = wave_potential_prefactor(scenario)
    padded_logs = np.concatenate(
        ([logs[0] - slopes[0] * segments[0]], logs, [logs[-1] + slopes[-1] * segments[-1]])
    )
    padded_curvatures = np.concatenate(([curvatures[0]], curvatures, [curvatures[-1]]))
    padded_pressures = -prefactor * np.exp(2.0 * padded_logs) * padded_curvatures
    widths = np.concatenate(([segments[0]], frame.spacings[1:-1], [segments[-1]]))
    masses = widths * _log_mean_density(padded_logs[:-1], padded_logs[1:])
    return WavePressure(
        cell_amplitudes=amplitudes,
        log_slopes=slopes,
        log_curvatures=curvatures,
        pressures=padded_pressures[1:-1],
        masses=masses,
        slopes=np.diff(padded_pressures) / masses,
        clamp_count=int(np.count_nonzero(clamped)),
    )


def _log_mean_density(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """Logarithmic mean of the densities exp(2 left) and exp(2 right)."""
    gap = right - left
    ratio = np.ones_like(gap)
    wide = np.abs(gap) > 1e-6
    ratio[wide] = np.sinh(gap[wide]) / gap[wide]
    return np.exp(left + right) * ratio


def pressure_gradient(frame: WavefrontFrame, pressure: WavePressure) -> np.ndarray:
    """dQ/ds of the pressure closure, directed along the wavefront tangent."""
    return pressure.slopes[:, None] * frame.tangents
