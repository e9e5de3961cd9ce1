"""Finite-difference weights on the non-uniform arc-length grid of a wavefront."""

from __future__ import annotations

import math

import numpy as np

from helmray.errors import ConfigurationError, StencilError

MIN_STENCIL_POINTS = 5
EDGE_POLICIES = ("copy", "one_sided")


def segment_lengths(positions: np.ndarray) -> np.ndarray:
    """Euclidean lengths of the polyline segments joining consecutive rays."""
    steps = np.diff(np.asarray(positions, dtype=float), axis=0)
    return np.hypot(steps[:, 0], steps[:, 1])


def arc_coordinates(segments: np.ndarray) -> np.ndarray:
    return np.concatenate(([0.0], np.cumsum(segments)))


def voronoi_widths(segments: np.ndarray) -> np.ndarray:
    """Tube widths: half the distance between the two neighbours, the full segment at the edges."""
    segments = np.asarray(segments, dtype=float)
    widths = np.empty(segments.size + 1)
    widths[0] = segments[0]
    widths[-1] = segments[-1]
    widths[1:-1] = 0.5 * (segments[:-1] + segments[1:])
    return widths


def lagrange_weights(offsets, derivative: int) -> np.ndarray:
    """Weights w with sum(w * f(offsets)) ~ f^(derivative)(0).

    Solves the moment conditions of the interpolating polynomial through the
    given node offsets, which need not be uniform.
    """
    offsets = np.asarray(offsets, dtype=float)
    count = offsets.size
    if derivative >= count:
        raise StencilError(f"{count} nodes cannot resolve derivative order {derivative}")
    vandermonde = np.vander(offsets, count, increasing=True).T
    rhs = np.zeros(count)
    rhs[derivative] = math.factorial(derivative)
    return np.linalg.solve(vandermonde, rhs)


def _check(segments: np.ndarray, values: np.ndarray, policy: str):
    if policy not in EDGE_POLICIES:
        raise ConfigurationError(f"unknown edge stencil policy {policy!r}", key="regularization.edge_stencil_policy")
    if values.size < MIN_STENCIL_POINTS:
        raise StencilError(f"wavefront stencils need at least {MIN_STENCIL_POINTS} rays, got {values.size}")
    if segments.size != values.size - 1:
        raise StencilError("segment count does not match the number of samples")


def _forward(a: float, b: float, f0: float, f1: float, f2: float) -> float:
    """One-sided 3-point d f / d s at the first of three nodes spaced a, b."""
    return (-2 * a - b) / (a * (a + b)) * f0 + (a + b) / (a * b) * f1 - a / (b * (a + b)) * f2


def _backward(a: float, b: float, f0: float, f1: float, f2: float) -> float:
    """One-sided 3-point d f / d s at the last of three nodes spaced a, b."""
    return b / (a * (a + b)) * f0 - (a + b) / (a * b) * f1 + (a + 2 * b) / (b * (a + b)) * f2


def first_derivative(segments, values, policy: str = "copy") -> np.ndarray:
    """d f / d s with 3-point non-uniform central differences.

    "one_sided": edges use the one-sided 3-point formula.
    "copy": the samples at the two edge rays are never read. Rays next to an
    edge differentiate one-sidedly inwards and edge rays extrapolate that
    gradient linearly in arc length.
    """
    segments = np.asarray(segments, dtype=float)
    values = np.asarray(values, dtype=float)
    _check(segments, values, policy)

    a = segments[:-1]
    b = segments[1:]
    result = np.empty_like(values)
    result[1:-1] = (
        -b / (a * (a + b)) * values[:-2]
        + (b - a) / (a * b) * values[1:-1]
        + a / (b * (a + b)) * values[2:]
    )

    if policy == "one_sided":
        result[0] = _forward(segments[0], segments[1], *values[:3])
        result[-1] = _backward(segments[-2], segments[-1], *values[-3:])
        return result

    result[1] = _forward(segments[1], segments[2], *values[1:4])
    result[-2] = _backward(segments[-3], segments[-2], *values[-4:-1])
    result[0] = result[1] + (result[1] - result[2]) * (segments[0] / segments[1])
    result[-1] = result[-2] + (result[-2] - result[-3]) * (segments[-1] / segments[-2])
    return result


def second_derivative(segments, values, policy: str = "copy") -> np.ndarray:
    """d^2 f / d s^2 with 3-point non-uniform differences.

    Edges: "copy" repeats the nearest interior value, "one_sided" uses a
    4-point one-sided stencil.
    """
    segments = np.asarray(segments, dtype=float)
    values = np.asarray(values, dtype=float)
    _check(segments, values, policy)

    a = segments[:-1]
    b = segments[1:]
    result = np.empty_like(values)
    result[1:-1] = 2.0 * (
        values[:-2] / (a * (a + b))
        - values[1:-1] / (a * b)
        + values[2:] / (b * (a + b))
    )

    if policy == "copy":
        result[0] = result[1]
        result[-1] = result[-2]
        return result

    left = np.concatenate(([0.0], np.cumsum(segments[:3])))
    result[0] = lagrange_weights(left, 2) @ values[:4]
    # nodes counted inwards from the right edge mirror the left ones
    right = -np.concatenate(([0.0], np.cumsum(segments[::-1][:3])))
    result[-1] = lagrange_weights(right, 2) @ values[::-1][:4]
    return result
