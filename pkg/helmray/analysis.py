"""Post-processing of trajectory records: profiles, waist lines, divergence, uncertainty and fringes."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.signal import find_peaks

from helmray.dynamics import TrajectoryRecord, run
from helmray.errors import IdentificationError, PartialProfileWarning, StencilError
from helmray.profiles import ProfileKind
from helmray.stencils import segment_lengths, voronoi_widths
from helmray.transport import tube_flux

AXIS_TOLERANCE = 1e-6


@dataclass(frozen=True)
class IntensityProfile:
    z: float
    x: np.ndarray
    intensity: np.ndarray
    rays: np.ndarray
    provenance: str = ""

    @property
    def samples(self) -> list[tuple[float, float]]:
        return list(zip(self.x.tolist(), self.intensity.tolist()))

    def __len__(self):
        return len(self.x)


def _station(record: TrajectoryRecord, z: float) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Snapshot index k and fraction per ray at the first crossing of the plane z.

    Returns (rays, k, fraction, reached) for the rays that reach the plane.
    """
    heights = record.positions()[:, :, 1]
    if len(heights) == 1:
        reached = heights[0] == z
        rays = np.flatnonzero(reached)
        return rays, np.zeros(rays.size, dtype=int), np.zeros(rays.size), reached
    lower = heights[:-1]
    upper = heights[1:]
    brackets = ((lower <= z) & (upper >= z)) | ((lower >= z) & (upper <= z))
    reached = brackets.any(axis=0)
    rays = np.flatnonzero(reached)
    k = np.argmax(brackets[:, rays], axis=0)
    z0 = heights[k, rays]
    z1 = heights[k + 1, rays]
    rise = z1 - z0
    fraction = np.divide(z - z0, rise, out=np.zeros_like(rise), where=rise != 0)
    return rays, k, fraction, reached


def _interpolate(series: np.ndarray, rays, k, fraction) -> np.ndarray:
    start = series[k, rays]
    if series.shape[0] == 1:
        return start
    return start + fraction * (series[k + 1, rays] - start)


def intensity_profile(record: TrajectoryRecord, z: float) -> IntensityProfile:
    """(x, R^2) where each ray first crosses the plane z, sorted by x."""
    rays, k, fraction, reached = _station(record, z)
    if rays.size < record.ray_count:
        warnings.warn(
            f"only {rays.size} of {record.ray_count} rays reach z={z:g}",
            PartialProfileWarning,
            stacklevel=2,
        )
    positions = record.positions()
    amplitudes = np.stack([snapshot.amplitudes for snapshot in record.snapshots])
    x = _interpolate(positions[:, :, 0], rays, k, fraction)
    intensity = _interpolate(amplitudes, rays, k, fraction) ** 2
    order = np.argsort(x, kind="stable")
    return IntensityProfile(
        z=float(z),
        x=x[order],
        intensity=intensity[order],
        rays=rays[order],
        provenance=f"ray crossings interpolated between snapshots ({rays.size} rays)",
    )


def waist_line(z, w0: float, lambda0: float):
    """Paraxial Gaussian envelope: +-sqrt(w0^2 + (lambda0 z / pi w0)^2)."""
    half_width = np.sqrt(w0**2 + (lambda0 * np.asarray(z, dtype=float) / (math.pi * w0)) ** 2)
    if np.ndim(half_width) == 0:
        half_width = float(half_width)
    return -half_width, half_width


def waist_rays(record: TrajectoryRecord) -> tuple[int, int]:
    """Indices of the rays launched at -w0 and +w0."""
    profile = record.scenario.beam_profile
    if profile.kind is not ProfileKind.GAUSSIAN:
        raise IdentificationError(f"waist lines need a Gaussian beam, got {profile.kind.value}")
    launch = record.launch_abscissas
    tolerance = 0.5 * profile.spacing
    found = []
    for target in (-profile.w0, profile.w0):
        j = int(np.argmin(np.abs(launch - target)))
        if abs(launch[j] - target) > tolerance:
            raise IdentificationError(f"no ray launched within half a spacing of x={target:g}")
        found.append(j)
    return found[0], found[1]


@dataclass(frozen=True)
class WaistComparison:
    z: np.ndarray
    x_minus: np.ndarray
    x_plus: np.ndarray
    analytic_minus: np.ndarray
    analytic_plus: np.ndarray
    relative_error: np.ndarray

    @property
    def max_error(self) -> float:
        return float(np.max(self.relative_error))


def waist_comparison(record: TrajectoryRecord) -> WaistComparison:
    minus, plus = waist_rays(record)
    scenario = record.scenario
    w0 = scenario.beam_profile.w0
    positions = record.positions()
    z_minus, x_minus = positions[:, minus, 1], positions[:, minus, 0]
    z_plus, x_plus = positions[:, plus, 1], positions[:, plus, 0]
    analytic_minus, _ = waist_line(z_minus, w0, scenario.wavelength)
    _, analytic_plus = waist_line(z_plus, w0, scenario.wavelength)
    error_minus = np.abs(np.abs(x_minus) - np.abs(analytic_minus)) / np.abs(analytic_minus)
    error_plus = np.abs(np.abs(x_plus) - analytic_plus) / analytic_plus
    return WaistComparison(
        z=0.5 * (z_minus + z_plus),
        x_minus=x_minus,
        x_plus=x_plus,
        analytic_minus=analytic_minus,
        analytic_plus=analytic_plus,
        relative_error=np.maximum(error_minus, error_plus),
    )


def waist_error(record: TrajectoryRecord) -> float:
    return waist_comparison(record).max_error


@dataclass(frozen=True)
class DivergenceEstimate:
    slope_minus: float
    slope_plus: float
    analytic: float

    @property
    def relative_error(self) -> float:
        return max(abs(self.slope_minus - self.analytic), abs(self.slope_plus - self.analytic)) / self.analytic


def divergence_slope(record: TrajectoryRecord) -> DivergenceEstimate:
    """Asymptotic slopes of the +-w0 rays from a fit of x^2 = x0^2 + s^2 z^2."""
    minus, plus = waist_rays(record)
    scenario = record.scenario
    positions = record.positions()
    slopes = []
    for j in (minus, plus):
        z = positions[1:, j, 1]
        x = positions[1:, j, 0]
        x0 = positions[0, j, 0]
        usable = z > 0
        if not np.any(usable):
            raise IdentificationError("the record never leaves the launch plane")
        z, x = z[usable], x[usable]
        slope_sq = np.sum(z**2 * (x**2 - x0**2)) / np.sum(z**4)
        slopes.append(math.sqrt(max(slope_sq, 0.0)))
    analytic = scenario.wavelength / (math.pi * scenario.beam_profile.w0)
    return DivergenceEstimate(slope_minus=slopes[0], slope_plus=slopes[1], analytic=analytic)


@dataclass(frozen=True)
class UncertaintyResult:
    z: float
    delta_x: float
    delta_p: float
    product: float
    product_over_h: float
    product_over_hbar: float
    ray_count: int
    degenerate: bool
    method: str = "range"


def uncertainty_product(record: TrajectoryRecord, z: float, method: str = "range") -> UncertaintyResult:
    """Delta x Delta p_x at the plane z.

    "range": Delta x = 2 w0 (launch localization), Delta p_x the full spread
    of p_x over the rays. "std": flux-weighted standard deviations, Delta x
    taken on the launch plane. Fewer than two rays give a degenerate zero.
    """
    if method not in ("range", "std"):
        raise ValueError(f"unknown uncertainty method {method!r}")
    scenario = record.scenario
    units = scenario.units
    rays, k, fraction, _ = _station(record, z)
    momenta_x = record.momenta()[:, :, 0]
    p_x = _interpolate(momenta_x, rays, k, fraction)

    degenerate = rays.size < 2
    if degenerate:
        delta_x = 2.0 * scenario.beam_profile.w0
        delta_p = 0.0
    elif method == "range":
        delta_x = 2.0 * scenario.beam_profile.w0
        delta_p = float(np.max(p_x) - np.min(p_x))
    else:
        launch = record.launch
        weights = tube_flux(launch.amplitudes, record.launch_spacings, launch.momenta)
        x0 = launch.positions[:, 0]
        delta_x = _weighted_std(x0, weights)
        delta_p = _weighted_std(p_x, weights[rays])

    product = delta_x * delta_p
    return UncertaintyResult(
        z=float(z),
        delta_x=float(delta_x),
        delta_p=float(delta_p),
        product=float(product),
        product_over_h=float(product / units.planck),
        product_over_hbar=float(product / units.hbar),
        ray_count=int(rays.size),
        degenerate=degenerate,
        method=method,
    )


def _weighted_std(values: np.ndarray, weights: np.ndarray) -> float:
    total = np.sum(weights)
    if total <= 0:
        return 0.0
    mean = np.sum(weights * values) / total
    return float(np.sqrt(np.sum(weights * (values - mean) ** 2) / total))


@dataclass(frozen=True)
class Extremum:
    x: float
    intensity: float
    kind: str


def _vertex(xs: np.ndarray, ys: np.ndarray) -> tuple[float, float]:
    (x0, x1, x2), (y0, y1, y2) = xs, ys
    denom = (x0 - x1) * (x0 - x2) * (x1 - x2)
    a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom
    b = (x2**2 * (y0 - y1) + x1**2 * (y2 - y0) + x0**2 * (y1 - y2)) / denom
    if a == 0:
        return float(x1), float(y1)
    c = y1 - a * x1**2 - b * x1
    vertex = min(max(-b / (2 * a), x0), x2)
    return float(vertex), float(a * vertex**2 + b * vertex + c)


def fringe_extrema(profile: IntensityProfile, threshold: float = 1e-6, prominence: float = 1e-3) -> list[Extremum]:
    """Local maxima and minima with parabolic sub-sample refinement, sorted by x.

    Extrema less prominent than ``prominence`` times the peak intensity are
    dropped, and so are those whose three-point neighbourhood stays below
    ``threshold`` times the peak, which is numerical noise in the tails.
    """
    x = np.asarray(profile.x, dtype=float)
    y = np.asarray(profile.intensity, dtype=float)
    if x.size < 5:
        raise StencilError(f"fringe detection needs at least 5 samples, got {x.size}")
    peak = float(np.max(y))
    maxima, _ = find_peaks(y, prominence=prominence * peak)
    minima, _ = find_peaks(-y, prominence=prominence * peak)

    extrema = []
    for kind, indices in (("max", maxima), ("min", minima)):
        for i in indices:
            window = slice(i - 1, i + 2)
            if np.max(y[window]) < threshold * peak:
                continue
            position, value = _vertex(x[window], y[window])
            extrema.append(Extremum(x=position, intensity=max(value, 0.0), kind=kind))
    return sorted(extrema, key=lambda extremum: extremum.x)


@dataclass(frozen=True)
class FringeMatch:
    kind: str
    side: int
    order: int
    x_run: float
    x_oracle: float

    @property
    def relative_offset(self) -> float:
        return abs(self.x_run - self.x_oracle) / abs(self.x_oracle)


def _by_side(extrema: list[Extremum], kind: str, side: int, axis: float) -> list[Extremum]:
    chosen = [e for e in extrema if e.kind == kind and side * e.x > axis]
    return sorted(chosen, key=lambda e: abs(e.x))


def fringe_comparison(run: list[Extremum], oracle: list[Extremum], count: int = 3) -> list[FringeMatch]:
    """Pair the first ``count`` extrema of each kind on each side, counted outwards from the axis.

    Extrema closer to the axis than ``AXIS_TOLERANCE`` times the farthest
    extremum sit on it and belong to neither side.
    """
    axis = AXIS_TOLERANCE * max((abs(e.x) for e in (*run, *oracle)), default=0.0)
    matches = []
    for kind in ("min", "max"):
        for side in (-1, 1):
            pairs = zip(_by_side(run, kind, side, axis)[:count], _by_side(oracle, kind, side, axis)[:count])
            for order, (ours, reference) in enumerate(pairs, start=1):
                matches.append(FringeMatch(kind, side, order, ours.x, reference.x))
    return matches


def total_flux(record: TrajectoryRecord, snapshot: int = -1) -> float:
    """Sum of R^2 * spacing * |p| over the tubes of one snapshot."""
    state = record.snapshots[snapshot]
    if state.ray_count == 1:
        spacings = record.launch_spacings
    else:
        spacings = voronoi_widths(segment_lengths(state.positions))
    return float(np.sum(tube_flux(state.amplitudes, spacings, state.momenta)))


def final_position_error(record: TrajectoryRecord, reference: TrajectoryRecord) -> float:
    """Largest distance between the final ray positions of two runs of the same bundle."""
    difference = record.final.positions - reference.final.positions
    return float(np.max(np.hypot(difference[:, 0], difference[:, 1])))


def convergence_ratio(scenario, dt: float, n_steps: int, reference_divisor: int = 8) -> float:
    """err(dt) / err(dt/2) over the time n_steps * dt, errors taken against a dt/reference_divisor run.

    A second-order integrator gives a ratio near 4.
    """
    def integrate(divisor: int) -> TrajectoryRecord:
        steps = n_steps * divisor
        integration = replace(scenario.integration, dt=dt / divisor, n_steps=steps, snapshot_stride=steps)
        return run(replace(scenario, integration=integration))

    reference = integrate(reference_divisor)
    coarse = final_position_error(integrate(1), reference)
    fine = final_position_error(integrate(2), reference)
    if fine == 0:
        raise IdentificationError("the half-step run matches the reference exactly; no error to compare")
    return coarse / fine
