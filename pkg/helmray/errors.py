"""Exception hierarchy shared by the simulator, the analyses and the command line."""

from __future__ import annotations

from typing import Any, Iterable


class HelmrayError(ValueError):
    """Base class for every domain error raised by helmray."""


class ConfigurationError(HelmrayError):
    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        super().__init__(message)
        self.key = key
        self.line = line

    def __str__(self):
        message = super().__str__()
        if self.key and not message.startswith(self.key):
            message = f"{self.key}: {message}"
        if self.line is not None:
            message = f"line {self.line}: {message}"
        return message


class StencilError(HelmrayError):
    pass


class IdentificationError(HelmrayError):
    pass


class OracleResolutionError(HelmrayError):
    pass


class RecordError(HelmrayError):
    pass


class SimulationFault(HelmrayError):
    """A physics fault that aborts a run.

    ``record`` is filled by ``dynamics.run`` with the trajectory record
    accumulated up to the fault.
    """

    def __init__(self, message: str, step: int | None = None, rays: Iterable[int] = ()):
        super().__init__(message)
        self.step = step
        self.rays = tuple(int(ray) for ray in rays)
        self.record: Any = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": type(self).__name__,
            "message": str(self),
            "step": self.step,
            "rays": list(self.rays),
        }


class CrossingFault(SimulationFault):
    pass


class EvanescentRegionError(SimulationFault):
    pass


class OutOfDomainError(SimulationFault):
    pass


class PartialProfileWarning(UserWarning):
    pass
