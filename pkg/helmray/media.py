"""Stationary media: refractive-index and potential-energy fields on the (x, z) plane."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Protocol

import numpy as np
from scipy.interpolate import RectBivariateSpline

from helmray.errors import ConfigurationError, OutOfDomainError


class MediumKind(str, Enum):
    INDEX_FIELD = "index"
    POTENTIAL_FIELD = "potential"


class Field(Protocol):
    def evaluate(self, x: np.ndarray, z: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return value, d/dx and d/dz at the given points."""


@dataclass(frozen=True)
class UniformField:
    value: float

    def evaluate(self, x, z):
        zeros = np.zeros_like(x, dtype=float)
        return np.full_like(x, self.value, dtype=float), zeros, zeros.copy()


@dataclass(frozen=True)
class LinearField:
    base: float = 0.0
    slope_x: float = 0.0
    slope_z: float = 0.0

    def evaluate(self, x, z):
        value = self.base + self.slope_x * x + self.slope_z * z
        return value, np.full_like(x, self.slope_x, dtype=float), np.full_like(z, self.slope_z, dtype=float)


@dataclass(frozen=True)
class HarmonicField:
    """base + stiffness (x - center)^2 / 2: a parabolic well, or a graded-index guide."""

    stiffness: float
    base: float = 0.0
    center: float = 0.0

    def evaluate(self, x, z):
        offset = x - self.center
        value = self.base + 0.5 * self.stiffness * offset**2
        return value, self.stiffness * offset, np.zeros_like(z, dtype=float)


@dataclass(frozen=True)
class GaussianField:
    """base + height exp(-((x - cx)/wx)^2 - ((z - cz)/wz)^2); an infinite wz makes it z-invariant."""

    height: float
    width_x: float
    base: float = 0.0
    center_x: float = 0.0
    center_z: float = 0.0
    width_z: float = float("inf")

    def __post_init__(self):
        if self.width_x <= 0 or self.width_z <= 0:
            raise ConfigurationError("Gaussian field widths must be positive", key="medium.field")

    def evaluate(self, x, z):
        u = (x - self.center_x) / self.width_x
        v = (z - self.center_z) / self.width_z
        bump = self.height * np.exp(-(u**2) - v**2)
        return self.base + bump, -2.0 * u / self.width_x * bump, -2.0 * v / self.width_z * bump


@dataclass(frozen=True)
class TableField:
    """Bicubic spline through values sampled on a rectangular (x, z) grid."""

    x: tuple[float, ...]
    z: tuple[float, ...]
    values: tuple[tuple[float, ...], ...]
    _spline: RectBivariateSpline = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        z = np.asarray(self.z, dtype=float)
        grid = np.asarray(self.values, dtype=float)
        if x.size < 4 or z.size < 4:
            raise ConfigurationError("tabulated fields need at least 4 samples per axis", key="medium.field")
        if np.any(np.diff(x) <= 0) or np.any(np.diff(z) <= 0):
            raise ConfigurationError("tabulated axes must be strictly increasing", key="medium.field")
        if grid.shape != (x.size, z.size):
            raise ConfigurationError(
                f"tabulated values must have shape ({x.size}, {z.size}), got {grid.shape}",
                key="medium.field.values",
            )
        object.__setattr__(self, "_spline", RectBivariateSpline(x, z, grid, kx=3, ky=3))

    @property
    def box(self) -> tuple[float, float, float, float]:
        return (self.x[0], self.x[-1], self.z[0], self.z[-1])

    def evaluate(self, x, z):
        value = self._spline.ev(x, z)
        return value, self._spline.ev(x, z, dx=1), self._spline.ev(x, z, dy=1)


@dataclass(frozen=True)
class Medium:
    """A refractive index n(x, z) or a potential energy V(x, z) with its gradient.

    ``domain`` is (x_min, x_max, z_min, z_max); tabulated fields default to
    their grid box, analytic ones to the whole plane.
    """

    kind: MediumKind
    field: Field
    domain: tuple[float, float, float, float] | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", MediumKind(self.kind))
        if self.domain is None and isinstance(self.field, TableField):
            object.__setattr__(self, "domain", self.field.box)
        if self.domain is not None:
            x_min, x_max, z_min, z_max = self.domain
            if x_min >= x_max or z_min >= z_max:
                raise ConfigurationError("medium domain box is empty", key="medium.domain")

    def evaluate(self, positions: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Values (N,) and gradients (N, 2) at ray positions (N, 2)."""
        positions = np.asarray(positions, dtype=float)
        x = positions[:, 0]
        z = positions[:, 1]
        if self.domain is not None:
            x_min, x_max, z_min, z_max = self.domain
            outside = (x < x_min) | (x > x_max) | (z < z_min) | (z > z_max)
            if np.any(outside):
                rays = np.flatnonzero(outside)
                raise OutOfDomainError(
                    f"{rays.size} ray(s) left the medium domain {self.domain}", rays=rays
                )
        value, grad_x, grad_z = self.field.evaluate(x, z)
        value = np.asarray(value, dtype=float)
        if self.kind is MediumKind.INDEX_FIELD and np.any(value <= 0):
            rays = np.flatnonzero(value <= 0)
            raise OutOfDomainError("refractive index must stay positive", rays=rays)
        return value, np.column_stack((grad_x, grad_z)).astype(float)


def eval_medium(medium: Medium, position) -> tuple[float, np.ndarray]:
    """Value (n or V) and spatial gradient at a single point."""
    values, gradients = medium.evaluate(np.asarray(position, dtype=float).reshape(1, 2))
    return float(values[0]), gradients[0]
