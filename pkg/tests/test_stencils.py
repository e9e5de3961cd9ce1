import numpy as np
import pytest

from helmray.errors import ConfigurationError, StencilError
from helmray.stencils import (
    first_derivative,
    lagrange_weights,
    second_derivative,
    segment_lengths,
    voronoi_widths,
)

SEGMENTS = np.array([0.3, 0.5, 0.4, 0.6, 0.2])
NODES = np.concatenate(([0.0], np.cumsum(SEGMENTS)))


def line(xs):
    xs = np.asarray(xs, dtype=float)
    return np.column_stack((xs, np.zeros_like(xs)))


@pytest.mark.parametrize("policy", ["copy", "one_sided"])
def test_constant_samples_have_zero_derivatives(policy):
    values = np.full(6, 2.5)

    np.testing.assert_allclose(first_derivative(SEGMENTS, values, policy), 0.0, atol=1e-12)
    np.testing.assert_allclose(second_derivative(SEGMENTS, values, policy), 0.0, atol=1e-12)


def test_second_difference_of_a_bump():
    h = 0.5
    result = second_derivative(np.full(4, h), [0.0, 1.0, 2.0, 1.0, 0.0])

    assert result[2] == pytest.approx(-2.0 / h**2)
    assert result[0] == result[1]
    assert result[-1] == result[-2]


def test_gaussian_laplacian_converges_at_second_order():
    errors = []
    for count in (61, 121):
        xs = np.linspace(-3.0, 3.0, count)
        values = np.exp(-(xs**2))
        result = second_derivative(segment_lengths(line(xs)), values)
        centre = count // 2
        errors.append(abs(result[centre] - (4 * xs[centre] ** 2 - 2) * values[centre]))

    assert errors[0] / errors[1] == pytest.approx(4.0, abs=0.2)


def test_cosine_laplacian_converges_at_second_order():
    errors = []
    for count in (21, 41):
        xs = np.linspace(0.0, 2.0, count)
        result = second_derivative(segment_lengths(line(xs)), np.cos(xs))
        errors.append(np.max(np.abs(result[1:-1] + np.cos(xs[1:-1]))))

    assert errors[0] / errors[1] == pytest.approx(4.0, abs=0.2)


@pytest.mark.parametrize("policy", ["copy", "one_sided"])
def test_linear_samples_have_slope_one_over_h(policy):
    h = 0.5
    result = first_derivative(np.full(4, h), [0.0, 1.0, 2.0, 3.0, 4.0], policy)

    np.testing.assert_allclose(result, 1.0 / h)


@pytest.mark.parametrize("policy", ["copy", "one_sided"])
def test_first_derivative_is_exact_for_quadratics_on_uneven_grids(policy):
    result = first_derivative(SEGMENTS, NODES**2, policy)

    np.testing.assert_allclose(result, 2.0 * NODES, atol=1e-12)


def test_copy_policy_never_reads_the_edge_samples():
    values = NODES**2
    perturbed = values.copy()
    perturbed[0] += 10.0
    perturbed[-1] -= 10.0

    np.testing.assert_array_equal(first_derivative(SEGMENTS, values), first_derivative(SEGMENTS, perturbed))


def test_one_sided_second_derivative_is_exact_for_cubics_at_the_edges():
    result = second_derivative(SEGMENTS, NODES**3, "one_sided")

    assert result[0] == pytest.approx(6.0 * NODES[0], abs=1e-10)
    assert result[-1] == pytest.approx(6.0 * NODES[-1], rel=1e-10)


def test_mirrored_samples_give_antisymmetric_slopes():
    values = np.exp(-(NODES - NODES[-1] / 2) ** 2)
    forward = first_derivative(SEGMENTS, values)
    mirrored = first_derivative(SEGMENTS[::-1], values[::-1])

    np.testing.assert_allclose(mirrored, -forward[::-1], atol=1e-13)


def test_lagrange_weights_on_uniform_nodes():
    np.testing.assert_allclose(lagrange_weights([-1.0, 0.0, 1.0], 2), [1.0, -2.0, 1.0], atol=1e-12)
    np.testing.assert_allclose(lagrange_weights([-1.0, 0.0, 1.0], 1), [-0.5, 0.0, 0.5], atol=1e-12)
    with pytest.raises(StencilError):
        lagrange_weights([0.0, 1.0], 2)


def test_voronoi_widths_use_full_segments_at_the_edges():
    assert voronoi_widths(np.array([1.0, 1.0])).tolist() == [1.0, 1.0, 1.0]
    assert voronoi_widths(np.array([1.0, 3.0, 2.0])).tolist() == [1.0, 2.0, 2.5, 2.0]


def test_too_few_rays_or_unknown_policy():
    with pytest.raises(StencilError, match="at least 5"):
        second_derivative(np.ones(3), np.ones(4))
    with pytest.raises(ConfigurationError):
        first_derivative(np.ones(4), np.ones(5), "mirror")
