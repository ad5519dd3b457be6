import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from spmrf.grid import DifferenceOperator, Grid, difference, scale_factors

finite = st.floats(-1e3, 1e3, allow_nan=False)


def test_first_difference_example():
    g = Grid.regular_grid(3)
    np.testing.assert_array_equal(difference([3, 1, 4], 1, g), [-2, 3])


def test_second_difference_regular_example():
    g = Grid.regular_grid(3)
    np.testing.assert_array_equal(difference([3, 1, 4], 2, g), [5])


def test_second_difference_irregular():
    # spacings 1 then 2: r = 2, increment theta3 - 3 theta2 + 2 theta1
    g = Grid([0.0, 1.0, 3.0])
    th = np.array([0.7, -1.1, 2.5])
    np.testing.assert_allclose(difference(th, 2, g), [2 * th[0] - 3 * th[1] + th[2]])


def test_scale_factors():
    g = Grid([0.0, 1.0, 3.0])
    np.testing.assert_allclose(scale_factors(1, g), [1.0, 2.0])
    # delta_2^2 (delta_1 + delta_2) / 2 = 4 * 3 / 2
    np.testing.assert_allclose(scale_factors(2, g), [6.0])
    np.testing.assert_allclose(scale_factors(2, Grid.regular_grid(6)), np.ones(4))


def test_quadratics_have_zero_second_difference():
    s = np.array([0.0, 0.3, 1.0, 2.5, 2.6])
    # linear functions are annihilated on any grid
    np.testing.assert_allclose(difference(3 * s - 1, 2, Grid(s)), 0, atol=1e-12)


@pytest.mark.parametrize("bad", [[1.0], [1.0, 1.0, 2.0], [2.0, 1.0], [0.0, np.nan]])
def test_grid_validation(bad):
    with pytest.raises(ValueError):
        Grid(bad)


def test_order_checks():
    with pytest.raises(ValueError):
        difference([1, 2, 3], 3, Grid.regular_grid(3))
    with pytest.raises(ValueError):
        Grid.regular_grid(3).check_order(2)
    with pytest.raises(ValueError):
        difference([1, 2], 1, Grid.regular_grid(3))


def test_densify():
    g = Grid.regular_grid(4).densify(3)
    assert g.n == 10 and g.regular
    np.testing.assert_allclose(g.spacings, 1 / 3)
    with pytest.raises(ValueError):
        Grid([0, 1, 3]).densify(2)


@given(arrays(float, 8, elements=finite), arrays(float, 8, elements=finite),
       finite, st.integers(1, 2))
def test_difference_is_linear(a, b, c, k):
    g = Grid(np.cumsum(np.linspace(0.5, 2.0, 8)))
    lhs = difference(a + c * b, k, g)
    rhs = difference(a, k, g) + c * difference(b, k, g)
    np.testing.assert_allclose(lhs, rhs, atol=1e-6 * (1 + abs(c)) * 1e3)


@given(st.lists(st.floats(0.1, 5.0), min_size=4, max_size=12), st.integers(1, 2), st.data())
def test_operator_roundtrip_and_adjoint(spacings, k, data):
    g = Grid(np.concatenate([[0.0], np.cumsum(spacings)]))
    op = DifferenceOperator(g, k)
    n = g.n
    th = np.array(data.draw(st.lists(finite, min_size=n, max_size=n)))
    np.testing.assert_allclose(op.integrate(op.apply(th)), th, atol=1e-6, rtol=1e-8)
    # <L^{-1} b, v> == <b, L^{-T} v>
    b = np.linspace(-1, 1, n)
    v = np.cos(np.arange(n))
    assert np.dot(op.integrate(b), v) == pytest.approx(np.dot(b, op.integrate_adjoint(v)), rel=1e-8, abs=1e-8)
