"""Transverse launch-amplitude laws of the ray bundle."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.interpolate import PchipInterpolator

from helmray.errors import ConfigurationError

MIN_RAYS = 5


class ProfileKind(str, Enum):
    GAUSSIAN = "gaussian"
    SUPERGAUSSIAN = "supergaussian"
    DOUBLE_SLIT = "double_slit"
    TABLE = "table"


@dataclass(frozen=True)
class BeamProfile:
    """Launch amplitude R(x; z=0) sampled by ``ray_count`` rays on [-span, +span].

    GAUSSIAN: exp(-(x/w0)^2). SUPERGAUSSIAN: exp(-(x/w0)^(2m)), a soft-edged
    slit of half-width w0. DOUBLE_SLIT: two SUPERGAUSSIAN apertures centred at
    +-separation/2. TABLE: monotone cubic interpolation of sampled amplitudes.
    """

    kind: ProfileKind
    span: float
    ray_count: int
    w0: float = 1.0
    order: int = 4
    separation: float = 0.0
    table_x: tuple[float, ...] = ()
    table_amplitude: tuple[float, ...] = ()
    _table: PchipInterpolator | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", ProfileKind(self.kind))
        if not self.span > 0:
            raise ConfigurationError("span must be positive", key="beam.span")
        if self.ray_count < MIN_RAYS:
            raise ConfigurationError(
                f"ray_count must be at least {MIN_RAYS} for the wavefront stencils", key="beam.ray_count"
            )
        if not self.w0 > 0:
            raise ConfigurationError("w0 must be positive", key="beam.w0")
        if self.kind in (ProfileKind.SUPERGAUSSIAN, ProfileKind.DOUBLE_SLIT) and self.order < 1:
            raise ConfigurationError("super-Gaussian order must be at least 1", key="beam.order")
        if self.kind is ProfileKind.DOUBLE_SLIT and not self.separation > 0:
            raise ConfigurationError("double slit needs a positive separation", key="beam.separation")
        if self.kind is ProfileKind.TABLE:
            self._build_table()

    def _build_table(self):
        xs = np.asarray(self.table_x, dtype=float)
        amplitude = np.asarray(self.table_amplitude, dtype=float)
        if xs.size != amplitude.size:
            raise ConfigurationError("table_x and table_amplitude differ in length", key="beam.table_amplitude")
        if xs.size < MIN_RAYS:
            raise ConfigurationError(
                f"a tabulated profile needs at least {MIN_RAYS} samples, got {xs.size}", key="beam.table_x"
            )
        if np.any(np.diff(xs) <= 0):
            raise ConfigurationError("table_x must be strictly increasing", key="beam.table_x")
        if np.any(amplitude < 0):
            raise ConfigurationError("tabulated amplitudes must be nonnegative", key="beam.table_amplitude")
        if xs[0] > -self.span or xs[-1] < self.span:
            raise ConfigurationError("the table must cover the launch interval [-span, span]", key="beam.span")
        object.__setattr__(self, "_table", PchipInterpolator(xs, amplitude, extrapolate=False))

    def launch_abscissas(self) -> np.ndarray:
        x = self.span * np.linspace(-1.0, 1.0, self.ray_count)
        # exact x -> -x antisymmetry
        return 0.5 * (x - x[::-1])

    @property
    def spacing(self) -> float:
        return 2.0 * self.span / (self.ray_count - 1)

    def amplitude(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind is ProfileKind.GAUSSIAN:
            return np.exp(-((x / self.w0) ** 2))
        if self.kind is ProfileKind.SUPERGAUSSIAN:
            return _supergaussian(x, self.w0, self.order)
        if self.kind is ProfileKind.DOUBLE_SLIT:
            half = 0.5 * self.separation
            return _supergaussian(x - half, self.w0, self.order) + _supergaussian(x + half, self.w0, self.order)
        values = self._table(x)
        return np.clip(np.nan_to_num(values, nan=0.0), 0.0, None)

    def support(self, cutoff: float = 1e-12) -> tuple[float, float]:
        """Interval outside which the amplitude is below ``cutoff`` times its peak."""
        if self.kind is ProfileKind.GAUSSIAN:
            half = self.w0 * np.sqrt(-np.log(cutoff))
            return (-half, half)
        if self.kind is ProfileKind.SUPERGAUSSIAN:
            half = self.w0 * (-np.log(cutoff)) ** (1.0 / (2 * self.order))
            return (-half, half)
        if self.kind is ProfileKind.DOUBLE_SLIT:
            half = self.w0 * (-np.log(cutoff)) ** (1.0 / (2 * self.order)) + 0.5 * self.separation
            return (-half, half)
        return (float(self.table_x[0]), float(self.table_x[-1]))

    @property
    def symmetric(self) -> bool:
        return self.kind is not ProfileKind.TABLE


def _supergaussian(x: np.ndarray, w0: float, order: int) -> np.ndarray:
    return np.exp(-(((x / w0) ** 2) ** order))
