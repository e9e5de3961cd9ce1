"""Independent reference intensities from direct quadrature of the scalar Fresnel integral."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy.integrate import simpson

from helmray import config
from helmray.analysis import IntensityProfile
from helmray.errors import ConfigurationError, OracleResolutionError
from helmray.profiles import BeamProfile

logger = logging.getLogger(__name__)

MIN_POINTS = 4001
CHUNK = 64


def quadrature_points(profile: BeamProfile, lambda0: float, z: float, xs, points_per_cycle: int = 20) -> int:
    """Odd sample count that resolves the fastest phase oscillation with ``points_per_cycle`` points."""
    lower, upper = _aperture(profile)
    xs = np.asarray(xs, dtype=float)
    reach = float(np.max(np.maximum(np.abs(xs - lower), np.abs(xs - upper))))
    cycles = (upper - lower) * reach / (lambda0 * z)
    count = max(MIN_POINTS, math.ceil(cycles * points_per_cycle) + 1)
    return count + 1 if count % 2 == 0 else count


def _aperture(profile: BeamProfile) -> tuple[float, float]:
    low, high = profile.support()
    return max(low, -profile.span), min(high, profile.span)


def diffraction_oracle(
    profile: BeamProfile,
    lambda0: float,
    z: float,
    xs,
    points_per_cycle: int = 20,
    max_points: int | None = None,
) -> np.ndarray:
    """|integral A(x') exp(i pi (x - x')^2 / lambda0 z) dx'|^2 / (lambda0 z) at each x in ``xs``."""
    if not z > 0:
        raise ConfigurationError("the oracle needs z > 0", key="z")
    if not lambda0 > 0:
        raise ConfigurationError("wavelength must be positive", key="beam.wavelength")
    if points_per_cycle < 2:
        raise OracleResolutionError("at least 2 points per phase cycle are needed")
    max_points = config.ORACLE_MAX_POINTS if max_points is None else max_points
    xs = np.atleast_1d(np.asarray(xs, dtype=float))

    count = quadrature_points(profile, lambda0, z, xs, points_per_cycle)
    if count > max_points:
        raise OracleResolutionError(
            f"resolving z={z:g} needs {count} quadrature points, above the limit of {max_points}"
        )
    lower, upper = _aperture(profile)
    source = np.linspace(lower, upper, count)
    amplitude = profile.amplitude(source)
    scale = math.pi / (lambda0 * z)

    def integrate(chunk: np.ndarray) -> np.ndarray:
        phase = scale * (chunk[:, None] - source[None, :]) ** 2
        field = simpson(amplitude * np.exp(1j * phase), x=source, axis=1)
        return np.abs(field) ** 2 / (lambda0 * z)

    chunks = [xs[i : i + CHUNK] for i in range(0, xs.size, CHUNK)]
    logger.debug("oracle at z=%g: %d points x %d abscissas", z, count, xs.size)
    with ThreadPoolExecutor(max_workers=min(config.MAX_THREADS, len(chunks))) as pool:
        return np.concatenate(list(pool.map(integrate, chunks)))


def oracle_profile(profile: BeamProfile, lambda0: float, z: float, xs, **options) -> IntensityProfile:
    xs = np.sort(np.atleast_1d(np.asarray(xs, dtype=float)))
    return IntensityProfile(
        z=float(z),
        x=xs,
        intensity=diffraction_oracle(profile, lambda0, z, xs, **options),
        rays=np.arange(xs.size),
        provenance="Fresnel quadrature of the launch amplitude",
    )
