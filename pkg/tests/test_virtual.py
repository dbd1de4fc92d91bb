import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import oracle_fk
from virtual_axis.geometry import Frame, angle_diff, random_rotation
from virtual_axis.ik import ik_original
from virtual_axis.robot import RobotModel, WorkspaceShell, fk_virtual_wcp
from virtual_axis.virtual import (
    NO_SMOOTHING,
    TOOL_DOWN,
    QuinticPatch,
    SmoothingParams,
    VirtualJoints,
    boundary_crossing,
    distance_to_shell,
    ik_virtual,
    ik_virtual_tcp,
    smooth_elbow_angle,
    sweep_line,
)

BOUNDARY_X = 602.640025222354  # sqrt(680^2 - 315^2)
L0, L1 = (500.0, 0.0, 215.0), (1300.0, 0.0, 215.0)


def tool_down_wcp(x, y, z):
    return Frame([x, y, z], TOOL_DOWN)


# -- smoothing ---------------------------------------------------------------

@pytest.mark.parametrize("eps", [0.01, 0.05, 0.2])
def test_patch_boundary_conditions(eps):
    p = QuinticPatch.for_epsilon(eps)
    c0 = 1 - eps
    w = 1 - c0 * c0
    assert abs(p.derivative(c0) - math.acos(c0)) <= 1e-10
    assert abs(p.derivative(c0, 1) + 1 / math.sqrt(w)) <= 1e-10 * max(1, 1 / math.sqrt(w))
    assert abs(p.derivative(c0, 2) + c0 / w ** 1.5) <= 1e-10 * max(1, c0 / w ** 1.5)
    for order in range(3):
        assert abs(p.derivative(1.0, order)) <= 1e-10


def test_smooth_elbow_examples():
    params = SmoothingParams(0.05, True)
    assert smooth_elbow_angle(0.95, params) == math.acos(0.95)
    assert smooth_elbow_angle(1.0, params) == pytest.approx(0.0, abs=1e-12)
    assert smooth_elbow_angle(0.99, params) != pytest.approx(math.acos(0.99), abs=1e-6)
    assert math.acos(0.99) == pytest.approx(0.14154, abs=1e-5)
    assert smooth_elbow_angle(0.99, NO_SMOOTHING) == math.acos(0.99)
    assert smooth_elbow_angle(1 + 1e-13, params) == pytest.approx(0.0, abs=1e-12)


def test_smoothed_second_difference_continuous_at_patch_start():
    params = SmoothingParams(0.05, True)
    c0, h = 0.95, 1e-5

    def one_sided(sign):
        # second-order accurate one-sided stencil for f''(c0)
        f = [smooth_elbow_angle(c0 + sign * k * h, params) for k in range(4)]
        return (2 * f[0] - 5 * f[1] + 4 * f[2] - f[3]) / h ** 2

    left, right = one_sided(-1), one_sided(+1)
    assert abs(right - left) / abs(left) < 1e-4
    assert left == pytest.approx(-0.95 / (1 - 0.95 ** 2) ** 1.5, rel=1e-4)


@given(st.floats(0.001, 0.5), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
@settings(max_examples=200)
def test_patch_monotone_and_bounded(eps, t, u):
    params = SmoothingParams(eps, True)
    lo, hi = sorted((t, u))
    a = smooth_elbow_angle(1 - eps + lo * eps, params)
    b = smooth_elbow_angle(1 - eps + hi * eps, params)
    assert 0.0 <= b <= a + 1e-12
    assert a <= math.acos(1 - eps) + 1e-12


def test_smoothing_params_validation():
    for eps in (0.0, 1.0, -0.1):
        with pytest.raises(ValueError):
            SmoothingParams(eps, True)


# -- shell distance ----------------------------------------------------------

def test_distance_examples():
    shell = WorkspaceShell(50.0, 680.0)
    assert distance_to_shell(shell, (400, 0, 0)) == 0.0
    assert distance_to_shell(shell, (1300, 0, 315)) == pytest.approx(657.619153571001, abs=1e-9)
    assert distance_to_shell(shell, (20, 0, 0)) == -30.0
    assert distance_to_shell(shell, (50, 0, 0)) == 0.0
    assert distance_to_shell(shell, (680, 0, 0)) == 0.0


def test_workspace_shell_validation():
    with pytest.raises(ValueError):
        WorkspaceShell(100.0, 50.0)
    with pytest.raises(ValueError):
        WorkspaceShell(-1.0, 50.0)


# -- virtual IK --------------------------------------------------------------

def test_inside_reduces_to_original(model, rng):
    for s in range(8):
        f = Frame([400.0, 150.0, 200.0], random_rotation(rng))
        sol = ik_virtual(model, f, s)
        assert sol.v == 0.0
        np.testing.assert_allclose(sol.q, ik_original(model, f, s).q, atol=0.0)


def test_outer_example(model):
    sol = ik_virtual(model, tool_down_wcp(1300, 0, 315), 0)
    assert sol.v == pytest.approx(657.619153571001, abs=1e-9)
    assert sol.q[2] == pytest.approx(-math.pi / 2, abs=1e-15)
    assert sol.q[1] == pytest.approx(0.237725843794311, abs=1e-12)
    assert fk_virtual_wcp(model, sol.as_array()).allclose(tool_down_wcp(1300, 0, 315), 1e-9)


@pytest.mark.parametrize("norm, expected", [(0.0, -50.0), (20.0, -30.0), (49.0, -1.0)])
def test_inner_void(model, rng, norm, expected):
    for s in range(8):
        direction = rng.normal(size=3)
        p = norm * direction / np.linalg.norm(direction)
        f = Frame(p, random_rotation(rng))
        sol = ik_virtual(model, f, s)
        assert sol.v == pytest.approx(expected, abs=1e-12)
        if norm > 0:
            assert sol.q[2] == pytest.approx(math.pi / 2)
        assert fk_virtual_wcp(model, sol.as_array()).allclose(f, 1e-9)


def test_inner_void_with_longer_upper_arm(rng):
    m = RobotModel(l23=400.0, l35=300.0)
    for p in ([30.0, 0.0, 10.0], [0.0, 0.0, 0.0], [-5.0, 60.0, 20.0]):
        f = Frame(p, random_rotation(rng))
        sol = ik_virtual(m, f, 3)
        assert abs(sol.v) == pytest.approx(100.0 - np.linalg.norm(p), abs=1e-12)
        assert fk_virtual_wcp(m, sol.as_array()).allclose(f, 1e-9)


def test_totality_and_minimality(model, rng):
    shell = model.shell
    for _ in range(2000):
        f = Frame(rng.uniform(-1500, 1500, 3), random_rotation(rng))
        s = int(rng.integers(8))
        sol = ik_virtual(model, f, s)
        qt = sol.as_array()
        np.testing.assert_allclose(oracle_fk(sol.q, sol.v), f.as_matrix(), atol=1e-9)
        assert abs(sol.v) == pytest.approx(abs(distance_to_shell(shell, f.position)), abs=1e-12)
        assert np.all(np.abs(sol.q) <= math.pi)
        assert VirtualJoints.from_array(qt).v == sol.v


def test_outer_branch_honors_shoulder_and_wrist(model):
    f = Frame([900.0, 300.0, -200.0], TOOL_DOWN)
    sols = [ik_virtual(model, f, s) for s in range(8)]
    for s, sol in enumerate(sols):
        assert fk_virtual_wcp(model, sol.as_array()).allclose(f, 1e-9)
        back = bool(s & 1)
        assert (sol.v < 0) == back or sol.v > 0
        assert (sol.q[4] < 0) == bool(s & 4)
    # elbow bit is irrelevant outside the shell
    np.testing.assert_array_equal(sols[0].q, sols[2].q)


def test_tcp_variant(model):
    sol = ik_virtual_tcp(model, Frame([1300.0, 0.0, 215.0], TOOL_DOWN), 0)
    assert sol.v == pytest.approx(657.619153571001, abs=1e-9)


def test_smoothing_keeps_v_and_changes_only_near_boundary(model):
    params = SmoothingParams(0.01, True)
    f = tool_down_wcp(500, 0, 315)
    a, b = ik_virtual(model, f, 0), ik_virtual(model, f, 0, params)
    np.testing.assert_array_equal(a.q, b.q)
    g = tool_down_wcp(BOUNDARY_X - 0.01, 0, 315)
    a, b = ik_virtual(model, g, 0), ik_virtual(model, g, 0, params)
    assert a.v == b.v == 0.0
    assert abs(a.q[2] - b.q[2]) > 1e-6


# -- sweep -------------------------------------------------------------------

def test_sweep_reference_values(model):
    table = sweep_line(model, L0, L1, TOOL_DOWN, 0, 801)
    assert table.v[0] == 0.0
    assert table.x[-1] == 1300.0
    assert table.v[-1] == pytest.approx(657.619153571001, abs=1e-9)
    for col in (0, 3, 5):
        assert np.max(np.abs(angle_diff(table.q[:, col], table.q[0, col]))) <= 1e-9
    beyond = table.x > BOUNDARY_X
    np.testing.assert_allclose(table.v[beyond], np.sqrt(table.x[beyond] ** 2 + 315 ** 2) - 680, atol=1e-9)
    assert np.all(table.v[~beyond] == 0.0)
    assert np.all(np.diff(table.v[beyond]) > 0)


def test_boundary_crossing(model):
    p = boundary_crossing(model, L0, L1)
    assert p[0] == pytest.approx(BOUNDARY_X, abs=1e-9)
    assert boundary_crossing(model, (300, 0, 215), (400, 0, 215)) is None
    sol = ik_virtual_tcp(model, Frame(p, TOOL_DOWN), 0)
    assert abs(sol.v) <= 1e-6


def _max_jump(model, n, smoothing=NO_SMOOTHING):
    table = sweep_line(model, L0, L1, TOOL_DOWN, 0, n, smoothing)
    return float(np.max(np.abs(angle_diff(table.q[1:], table.q[:-1]))))


def test_sweep_continuity_dense(model):
    assert _max_jump(model, 10_000, SmoothingParams(0.01, True)) < 0.01
    # without smoothing q3 has a square-root kink: jumps still vanish, like n^-1/2
    raw = [_max_jump(model, n) for n in (1_000, 10_000, 100_000)]
    assert raw[0] > raw[1] > raw[2]
    assert raw[2] < 0.01


def test_sweep_smoothing_identical_away_from_boundary(model):
    a = sweep_line(model, L0, L1, TOOL_DOWN, 0, 801)
    b = sweep_line(model, L0, L1, TOOL_DOWN, 0, 801, SmoothingParams(0.01, True))
    far = a.x < BOUNDARY_X - 25.0
    np.testing.assert_array_equal(a.q[far], b.q[far])
    np.testing.assert_array_equal(a.v, b.v)


def test_sweep_csv_schema(model):
    text = sweep_line(model, L0, L1, TOOL_DOWN, 0, 3).to_csv()
    lines = text.split("\n")
    assert lines[0] == "x,q1,q2,q3,q4,q5,q6,v"
    assert len(lines) == 5 and lines[-1] == ""
    assert float(lines[1].split(",")[0]) == 500.0


def test_sweep_requires_two_samples(model):
    with pytest.raises(ValueError):
        sweep_line(model, L0, L1, TOOL_DOWN, 0, 1)
