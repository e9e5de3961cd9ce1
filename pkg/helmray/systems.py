"""The Hamiltonian ray systems: Helmholtz optics, Schroedinger and Klein-Gordon matter waves.

All systems act on canonical momenta p (p = hbar k for light) and share one
force layout: an external part from the medium gradient plus a Wave Potential
part directed along the wavefront tangent.
"""

from __future__ import annotations

import numpy as np

from helmray.errors import EvanescentRegionError
from helmray.units import System


class HamiltonianSystem:
    #: the velocity depends on position as well as momentum
    position_dependent_velocity = False

    def __init__(self, scenario):
        self.scenario = scenario
        self.units = scenario.units
        self.energy = scenario.energy

    @property
    def on_shell(self) -> float:
        return self.energy

    @property
    def energy_scale(self) -> float:
        """Normalization of the relative Hamiltonian drift."""
        return abs(self.energy)

    def velocity(self, momenta: np.ndarray, values: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def external_force(self, values: np.ndarray, gradients: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def wave_force_scale(self, values: np.ndarray) -> np.ndarray:
        return np.ones_like(values)

    def hamiltonian(self, momenta: np.ndarray, values: np.ndarray, potentials: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def force(self, values, gradients, wave_gradients) -> np.ndarray:
        return self.external_force(values, gradients) - self.wave_force_scale(values)[:, None] * wave_gradients


class ElectromagneticSystem(HamiltonianSystem):
    """D = (c/2k0)(k^2 - (n k0)^2) + W, on shell D = 0.

    Massless particles run through the same equations with n = 1 - V/E and
    their Wave Potential Q = hbar W kept in energy units.
    """

    def __init__(self, scenario):
        super().__init__(scenario)
        self.k0 = scenario.k0
        self.p0 = scenario.p0
        self.massless = scenario.system is System.MASSLESS

    @property
    def on_shell(self) -> float:
        return 0.0

    @property
    def energy_scale(self) -> float:
        return self.units.c * self.k0

    def index(self, values, gradients):
        if not self.massless:
            return values, gradients
        return 1.0 - values / self.energy, -gradients / self.energy

    def velocity(self, momenta, values):
        return self.units.c * momenta / self.p0

    def external_force(self, values, gradients):
        n, grad_n = self.index(values, gradients)
        return (self.units.hbar * self.units.c * self.k0) * n[:, None] * grad_n

    def wave_force_scale(self, values):
        scale = 1.0 if self.massless else self.units.hbar
        return np.full_like(values, scale, dtype=float)

    def hamiltonian(self, momenta, values, potentials):
        n, _ = self.index(values, np.zeros_like(momenta))
        k_sq = (momenta[:, 0] ** 2 + momenta[:, 1] ** 2) / self.units.hbar**2
        wave = potentials / self.units.hbar if self.massless else potentials
        return self.units.c / (2.0 * self.k0) * (k_sq - (n * self.k0) ** 2) + wave


class SchroedingerSystem(HamiltonianSystem):
    """H = p^2/2m + V + Q."""

    def velocity(self, momenta, values):
        return momenta / self.units.mass

    def external_force(self, values, gradients):
        return -gradients

    def hamiltonian(self, momenta, values, potentials):
        p_sq = momenta[:, 0] ** 2 + momenta[:, 1] ** 2
        return p_sq / (2.0 * self.units.mass) + values + potentials


class KleinGordonSystem(HamiltonianSystem):
    """H = V + sqrt((pc)^2 + (m0 c^2)^2 + 2 E Q)."""

    position_dependent_velocity = True

    def velocity(self, momenta, values):
        return self.units.c**2 * momenta / (self.energy - values)[:, None]

    def external_force(self, values, gradients):
        return -gradients

    def wave_force_scale(self, values):
        return 1.0 / (1.0 - values / self.energy)

    def hamiltonian(self, momenta, values, potentials):
        c = self.units.c
        p_sq = momenta[:, 0] ** 2 + momenta[:, 1] ** 2
        radicand = p_sq * c**2 + self.units.rest_energy**2 + 2.0 * self.energy * potentials
        if np.any(radicand < 0):
            raise EvanescentRegionError(
                "negative radicand in the relativistic Hamiltonian", rays=np.flatnonzero(radicand < 0)
            )
        return values + np.sqrt(radicand)


def system_for(scenario) -> HamiltonianSystem:
    if scenario.system in (System.EM, System.MASSLESS):
        return ElectromagneticSystem(scenario)
    if scenario.system is System.QUANTUM:
        return SchroedingerSystem(scenario)
    return KleinGordonSystem(scenario)
