import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from riskmpc.geometry import (
    ArcPath,
    CircleShape,
    Configuration,
    PathRangeWarning,
    collision_indicator,
    nearest_lambda,
    path_eval,
    wrap_2pi,
    wrap_pi,
)

angles = st.floats(-100.0, 100.0, allow_nan=False)


def test_collision_boundary_counts():
    assert collision_indicator((0, 0), (3.0, 0), 1.5, 1.5) == 1


def test_collision_just_outside():
    assert collision_indicator((0, 0), (3.001, 0), 1.5, 1.5) == 0


def test_collision_coincident_centers():
    assert collision_indicator((0, 0), (0, 0), 0.1, 0.2) == 1


def test_collision_rejects_bad_radius():
    with pytest.raises(ValueError):
        collision_indicator((0, 0), (1, 0), 0.0, 1.0)
    with pytest.raises(ValueError):
        CircleShape(-1.0)


@given(st.floats(-50, 50), st.floats(-50, 50), st.floats(-50, 50), st.floats(-50, 50))
def test_collision_symmetric(a, b, c, d):
    assert collision_indicator((a, b), (c, d), 1.5, 1.5) == collision_indicator((c, d), (a, b), 1.5, 1.5)


@given(angles)
def test_wrap_2pi_range(a):
    w = wrap_2pi(a)
    assert 0.0 <= w < 2 * math.pi
    assert math.isclose(math.cos(w), math.cos(a), abs_tol=1e-9)
    assert math.isclose(math.sin(w), math.sin(a), abs_tol=1e-9)


@given(angles)
def test_wrap_pi_range(a):
    w = wrap_pi(a)
    assert -math.pi < w <= math.pi
    assert math.isclose(math.sin(w), math.sin(a), abs_tol=1e-9)


def test_configuration_wraps_heading():
    c = Configuration(1, 2, -math.pi / 2)
    assert c.theta == pytest.approx(1.5 * math.pi)
    assert np.array_equal(Configuration.from_array(c.as_array()).as_array(), c.as_array())


def test_path_goal_point(case_path):
    c = path_eval(case_path, 0.0)
    assert (c.c1, c.c2, c.theta) == pytest.approx((65.0, 5.0, 0.0))


def test_straight_path_point():
    path = ArcPath(Configuration(0, 0, 0), 0.0, -50.0, 0.0)
    c = path_eval(path, -10.0)
    assert (c.c1, c.c2, c.theta) == pytest.approx((-10.0, 0.0, 0.0))


def test_path_start_against_ode(case_path):
    # integrate the unit-speed arc backwards from the goal
    def rhs(_, y):
        return [math.cos(y[2]), math.sin(y[2]), 0.003]

    sol = solve_ivp(rhs, (0.0, -95.0), [65.0, 5.0, 0.0], rtol=1e-12, atol=1e-12)
    c = path_eval(case_path, -95.0)
    assert c.c1 == pytest.approx(sol.y[0, -1], abs=1e-8)
    assert c.c2 == pytest.approx(sol.y[1, -1], abs=1e-8)
    assert c.theta == pytest.approx(wrap_2pi(-0.285), abs=1e-12)


def test_path_clamps_with_warning(case_path):
    with pytest.warns(PathRangeWarning):
        c = path_eval(case_path, 5.0)
    assert (c.c1, c.c2) == pytest.approx((65.0, 5.0))


def test_path_rejects_empty_range():
    with pytest.raises(ValueError):
        ArcPath(Configuration(0, 0, 0), 0.0, 0.0, 0.0)


@settings(max_examples=50)
@given(st.floats(-0.05, 0.05), st.floats(-90.0, -1.0), st.floats(0.5, 5.0))
def test_path_unit_speed(kappa, lam, h):
    # chord between nearby points approaches the arc length between them
    path = ArcPath(Configuration(3, -2, 0.7), kappa, -100.0, 0.0)
    x0, y0 = path.position(lam)
    x1, y1 = path.position(lam + h)
    chord = math.hypot(x1 - x0, y1 - y0)
    expected = h if abs(kappa) < 1e-12 else 2 * abs(math.sin(kappa * h / 2) / kappa)
    assert chord == pytest.approx(expected, rel=1e-9, abs=1e-12)


def test_nearest_lambda_on_path(case_path):
    lam = case_path.lambda_0 + 10.0
    c = path_eval(case_path, lam)
    assert nearest_lambda(case_path, c) == pytest.approx(lam, abs=1e-4)


def test_nearest_lambda_straight_projection(straight_path):
    path = ArcPath(Configuration(10, 0, 0), 0.0, -20.0, 0.0)
    lam = nearest_lambda(path, Configuration(5, 3, 0))
    x, y = path.position(lam)
    assert (float(x), float(y)) == pytest.approx((5.0, 0.0), abs=1e-4)


def test_nearest_lambda_against_dense_grid(case_path):
    ego = Configuration(-10, 10, 0)
    grid = np.arange(case_path.lambda_0, case_path.lambda_g + 1e-9, 1e-3)
    px, py = case_path.position(grid)
    oracle = grid[np.argmin((px - ego.c1) ** 2 + (py - ego.c2) ** 2)]
    assert nearest_lambda(case_path, ego) == pytest.approx(oracle, abs=2e-3)


def test_nearest_lambda_at_path_end(case_path):
    assert nearest_lambda(case_path, Configuration(200, 5, 0)) == pytest.approx(0.0, abs=1e-6)
