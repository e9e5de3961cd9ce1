"""Unit conventions and the de Broglie mapping between particle energies and wavenumbers."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from helmray.errors import ConfigurationError, EvanescentRegionError


class System(str, Enum):
    EM = "em"
    QUANTUM = "quantum"
    RELATIVISTIC = "relativistic"
    MASSLESS = "massless"


class UnitMode(str, Enum):
    EM = "em"
    QUANTUM = "quantum"
    RELATIVISTIC = "relativistic"


SYSTEM_UNIT_MODES = {
    System.EM: UnitMode.EM,
    System.QUANTUM: UnitMode.QUANTUM,
    System.RELATIVISTIC: UnitMode.RELATIVISTIC,
    System.MASSLESS: UnitMode.RELATIVISTIC,
}


@dataclass(frozen=True)
class Units:
    """Normalization shared by every quantity of one run.

    Lengths are measured in units of the beam waist w0. ``mass`` is m in
    QUANTUM mode and the rest mass m0 in RELATIVISTIC mode (0 for massless
    particles); it is unused in EM mode.
    """

    mode: UnitMode
    hbar: float = 1.0
    mass: float = 1.0
    c: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "mode", UnitMode(self.mode))
        if self.hbar <= 0:
            raise ConfigurationError("hbar must be positive", key="units.hbar")
        if self.c <= 0:
            raise ConfigurationError("c must be positive", key="units.c")
        if self.mass < 0:
            raise ConfigurationError("mass must be nonnegative", key="units.mass")
        if self.mode is UnitMode.QUANTUM and self.mass == 0:
            raise ConfigurationError("QUANTUM mode needs a positive mass", key="units.mass")

    @property
    def planck(self) -> float:
        """h = 2 pi hbar."""
        return 2.0 * math.pi * self.hbar

    @property
    def rest_energy(self) -> float:
        return self.mass * self.c**2

    @classmethod
    def for_system(cls, system: System | str, hbar: float = 1.0, mass: float = 1.0, c: float = 1.0) -> Units:
        system = System(system)
        if system is System.MASSLESS:
            mass = 0.0
        return cls(mode=SYSTEM_UNIT_MODES[system], hbar=hbar, mass=mass, c=c)


def launch_wavenumber(wavelength: float) -> float:
    """k0 = 2 pi / lambda0."""
    if wavelength <= 0:
        raise ConfigurationError("wavelength must be positive", key="beam.wavelength")
    return 2.0 * math.pi / wavelength


def launch_energy(system: System | str, wavelength: float, units: Units) -> float:
    """Total energy fixed by the field-free launch wavelength.

    EM mode returns the angular frequency omega = c k0.
    """
    system = System(system)
    k0 = launch_wavenumber(wavelength)
    p0 = units.hbar * k0
    if system is System.QUANTUM:
        return p0**2 / (2.0 * units.mass)
    if system is System.RELATIVISTIC:
        return math.sqrt((p0 * units.c) ** 2 + units.rest_energy**2)
    if system is System.EM:
        return units.c * k0
    return units.hbar * units.c * k0


def energy_identification(relativistic_energy: float, units: Units) -> float:
    """Non-relativistic energy matching a relativistic one: E - m0 c^2."""
    return relativistic_energy - units.rest_energy


def de_broglie_wavenumber_sq(
    energy: float,
    potential: float | np.ndarray,
    rest_mass: float,
    system: System | str,
    hbar: float = 1.0,
    c: float = 1.0,
) -> float | np.ndarray:
    """Squared local wavenumber of a mono-energetic matter wave.

    QUANTUM: 2m(E - V)/hbar^2. RELATIVISTIC: ((E - V)/hbar c)^2 - (m0 c/hbar)^2.
    MASSLESS: ((E - V)/hbar c)^2, the same as (omega n/c)^2 with n = 1 - V/E.
    """
    system = System(system)
    kinetic = energy - np.asarray(potential, dtype=float)
    if system is System.QUANTUM:
        k_sq = 2.0 * rest_mass * kinetic / hbar**2
    elif system is System.RELATIVISTIC:
        k_sq = (kinetic / (hbar * c)) ** 2 - (rest_mass * c / hbar) ** 2
    elif system is System.MASSLESS:
        k_sq = (kinetic / (hbar * c)) ** 2
    else:
        raise ConfigurationError("the de Broglie mapping applies to particle systems only", key="system")

    forbidden = (kinetic < 0) | (k_sq < 0)
    if np.any(forbidden):
        rays = np.flatnonzero(np.atleast_1d(forbidden))
        raise EvanescentRegionError(
            f"classically forbidden region: E - V too small for {system.value} propagation",
            rays=rays,
        )
    if np.ndim(k_sq) == 0:
        return float(k_sq)
    return k_sq
