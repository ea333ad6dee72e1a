import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clutterseg.core import (
    EgoState,
    SensorMount,
    compensate_velocity,
    integrate_pose,
    to_sensor_frame,
    to_vehicle_frame,
    transform_to_latest,
)
from clutterseg.errors import DomainError

ORIGIN = SensorMount(1, 0.0, 0.0, 0.0)


def test_vehicle_frame_identity_mount():
    assert to_vehicle_frame(10.0, 0.0, ORIGIN) == pytest.approx((10.0, 0.0))


def test_vehicle_frame_rotated_mount():
    m = SensorMount(2, 0.0, 0.0, 90.0)
    x, y = to_vehicle_frame(10.0, 0.0, m)
    assert x == pytest.approx(0.0, abs=1e-12)
    assert y == pytest.approx(10.0)


def test_vehicle_frame_offset_mount():
    m = SensorMount(1, 1.0, 0.5, 10.0)
    x, y = to_vehicle_frame(5.0, 30.0, m)
    assert x == pytest.approx(1 + 5 * math.cos(math.radians(40)), abs=1e-12)
    assert y == pytest.approx(0.5 + 5 * math.sin(math.radians(40)), abs=1e-12)
    assert (round(x, 3), round(y, 3)) == (4.830, 3.714)


@pytest.mark.parametrize("r,az,field", [(-1.0, 0.0, "range"), (101.0, 0.0, "range"), (10.0, 61.0, "azimuth")])
def test_vehicle_frame_domain_errors(r, az, field):
    with pytest.raises(DomainError) as exc:
        to_vehicle_frame(r, az, ORIGIN)
    assert exc.value.field == field


def test_round_trip_random(rng):
    m = SensorMount(3, -0.5, 0.9, 90.0)
    r = rng.uniform(0.1, 100.0, 10_000)
    az = rng.uniform(-60.0, 60.0, 10_000)
    x, y = to_vehicle_frame(r, az, m)
    r2, az2 = to_sensor_frame(x, y, m)
    assert np.max(np.abs(r2 - r) / r) < 1e-9
    assert np.max(np.abs(az2 - az) / np.maximum(np.abs(az), 1.0)) < 1e-9


def test_compensation_stationary_ego():
    ego = EgoState(0, 0, 0, 0.0, 0.0, 0)
    assert compensate_velocity(3.2, (10.0, 1.0), ego, ORIGIN) == 3.2


def test_compensation_dead_ahead():
    ego = EgoState(0, 0, 0, 10.0, 0.0, 0)
    assert compensate_velocity(-10.0, (10.0, 0.0), ego, ORIGIN) == 0.0


def test_compensation_sixty_degrees():
    ego = EgoState(0, 0, 0, 10.0, 0.0, 0)
    pos = to_vehicle_frame(20.0, 60.0, ORIGIN)
    v_rel = -10.0 * math.cos(math.radians(60.0))
    assert v_rel == pytest.approx(-5.0)
    assert compensate_velocity(v_rel, pos, ego, ORIGIN) == pytest.approx(0.0, abs=1e-12)


def test_compensation_zero_line_of_sight():
    ego = EgoState(0, 0, 0, 10.0, 0.0, 0)
    with pytest.raises(DomainError):
        compensate_velocity(0.0, (0.0, 0.0), ego, ORIGIN)


@settings(max_examples=200, deadline=None)
@given(
    speed=st.floats(-30, 30), yaw_rate=st.floats(-1, 1),
    mx=st.floats(-2, 4), my=st.floats(-1, 1), yaw=st.floats(-180, 180),
    r=st.floats(0.5, 100), az=st.floats(-60, 60),
)
def test_stationary_target_cancels(speed, yaw_rate, mx, my, yaw, r, az):
    mount = SensorMount(1, mx, my, yaw)
    ego = EgoState(0, 0, 0, speed, yaw_rate, 0)
    pos = np.array(to_vehicle_frame(r, az, mount))
    # independent route: velocity of a world-fixed point relative to the sensor, in the vehicle frame
    v_point = -np.array([speed, 0.0]) - yaw_rate * np.array([-pos[1], pos[0]])
    u = (pos - mount.position) / np.linalg.norm(pos - mount.position)
    v_rel = float(u @ v_point)
    assert abs(compensate_velocity(v_rel, pos, ego, mount)) < 1e-9


def test_transform_identity_exact(rng):
    p = rng.normal(size=(50, 2)) * 30
    pose = (3.3, -1.2, 0.77)
    out = transform_to_latest(p, pose, pose)
    assert np.array_equal(out, p)


def test_transform_translation():
    assert np.allclose(transform_to_latest([10.0, 0.0], (0, 0, 0), (5, 0, 0)), [5.0, 0.0])


def test_transform_rotation():
    assert np.allclose(transform_to_latest([10.0, 0.0], (0, 0, 0), (0, 0, math.pi / 2)), [0.0, -10.0])


def test_transform_composition(rng):
    for _ in range(100):
        p = rng.normal(size=(5, 2)) * 20
        a, b, c = (tuple(rng.normal(size=3) * [10, 10, 1]) for _ in range(3))
        direct = transform_to_latest(p, a, c)
        via = transform_to_latest(transform_to_latest(p, a, b), b, c)
        assert np.allclose(direct, via, atol=1e-9, rtol=0)


def test_transform_rejects_non_finite():
    with pytest.raises(DomainError):
        transform_to_latest([1.0, 0.0], (0, 0, float("nan")), (0, 0, 0))


def test_integrate_pose_straight_and_arc():
    ego = EgoState(0, 0, 0, 10.0, 0.0, 0)
    assert integrate_pose(ego, 10.0, 0.0, 1_000_000).x == pytest.approx(10.0)
    # quarter circle of radius 10
    arc = integrate_pose(ego, 10.0, 1.0, int(math.pi / 2 * 1e6))
    assert (arc.x, arc.y) == pytest.approx((10.0, 10.0), abs=1e-4)


def test_mount_validation():
    with pytest.raises(DomainError):
        SensorMount(5, 0, 0, 0)
    with pytest.raises(DomainError):
        SensorMount(1, 0, 0, 0, fov_half_angle=95)
