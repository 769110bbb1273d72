import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dubins_smc.frenet import (FrameSingularityError, from_transverse, rates, to_transverse,
                               transverse_rates)
from dubins_smc.plant import Pose
from dubins_smc.refpath import circle, line, benchmark_path


def test_line_errors_by_hand():
    path = line((0, 0), (10, 0))
    ts = to_transverse(Pose(2.0, 0.3, 0.2), path)
    assert ts.y_err == pytest.approx(0.3)
    assert ts.theta_err == pytest.approx(0.2)
    assert ts.curv_sign == 1.0 and ts.kappa_abs == 0.0
    assert ts.x_err == pytest.approx(0.0, abs=1e-12)


def test_clockwise_arc_flips_signs():
    # CW circle of radius 2 centred at origin, starting at (0, 2) heading +x
    path = circle((0, 0), 2.0, start_angle=np.pi / 2, sweep=-np.pi)
    # a point 0.3 towards the centre is at positive y_err; turning right is positive theta_err
    ts = to_transverse(Pose(0.0, 1.7, -0.1), path)
    assert ts.curv_sign == -1.0
    assert ts.kappa_abs == pytest.approx(0.5)
    assert ts.y_err == pytest.approx(0.3)
    assert ts.theta_err == pytest.approx(0.1)


def test_counterclockwise_arc_centre_side_positive():
    path = circle((0, 0), 2.0, start_angle=-np.pi / 2, sweep=np.pi)
    ts = to_transverse(Pose(1.6, 0.0, np.pi / 2 + 0.2), path)
    assert ts.curv_sign == 1.0
    assert ts.y_err == pytest.approx(0.4)
    assert ts.theta_err == pytest.approx(0.2)


@settings(max_examples=80, deadline=None)
@given(st.floats(0.01, 0.99), st.floats(-0.7, 0.7), st.floats(-1.4, 1.4))
def test_from_transverse_roundtrip(s, y, th):
    path = benchmark_path()
    pose = Pose(*from_transverse(path, s, y, th))
    ts = to_transverse(pose, path, neighborhood=0.8)
    assert ts.s_hat == pytest.approx(s, abs=1e-9)
    assert ts.y_err == pytest.approx(y, abs=1e-9)
    assert ts.theta_err == pytest.approx(th, abs=1e-9)


def test_singularity_guard():
    with pytest.raises(FrameSingularityError):
        rates(2.0, 0.0, 0.5, 1.0, 0.8, 0.0, 0.0, 0.0)


def test_rates_on_straight_line_by_hand():
    dy, dth = rates(0.1, 0.3, 0.0, 1.0, 0.8, 0.5, 0.1, -0.1)
    assert dy == pytest.approx(np.sin(0.3) * 1.1 * 0.8)
    assert dth == pytest.approx(0.9 * 0.5)


def _reproject_rates(path, pose, v, omega, d1, d2, h):
    """Central finite difference of the transverse errors under the world-frame kinematics."""
    out = []
    for sgn_h in (-1.0, 1.0):
        t = sgn_h * h
        spd = (1 + d1) * v
        w = (1 + d2) * omega
        if w == 0:
            x, y = pose.x + t * spd * np.cos(pose.theta), pose.y + t * spd * np.sin(pose.theta)
        else:
            # exact arc under constant turn rate
            x = pose.x + spd / w * (np.sin(pose.theta + w * t) - np.sin(pose.theta))
            y = pose.y - spd / w * (np.cos(pose.theta + w * t) - np.cos(pose.theta))
        ts = to_transverse(Pose(x, y, pose.theta + w * t), path, neighborhood=0.8)
        out.append(ts)
    dy = (out[1].y_err - out[0].y_err) / (2 * h)
    dth = (out[1].theta_err - out[0].theta_err) / (2 * h)
    return dy, dth


@pytest.mark.parametrize("s, y, th, omega, d1, d2", [
    (0.1, 0.3, 0.4, 0.5, 0.1, -0.1),
    (0.5, -0.2, -0.6, -1.0, -0.1, 0.1),
    (0.9, 0.5, 0.2, 1.0, 0.05, 0.0),
    (0.9, -0.6, -1.2, -0.3, 0.0, 0.08),
])
def test_rates_match_reprojection(s, y, th, omega, d1, d2):
    path = benchmark_path()
    pose = Pose(*from_transverse(path, s, y, th))
    ts = to_transverse(pose, path, neighborhood=0.8)
    pred = transverse_rates(ts, 0.8, omega, d1, d2)
    dy, dth = _reproject_rates(path, pose, 0.8, omega, d1, d2, 1e-5)
    assert dy == pytest.approx(pred.dy, rel=1e-6, abs=1e-8)
    assert dth == pytest.approx(pred.dtheta, rel=1e-6, abs=1e-8)
