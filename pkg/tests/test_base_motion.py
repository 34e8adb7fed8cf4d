import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from doorteleop.base_motion import BasePose, WheelCommand, camera_pose_of, drive, orient
from doorteleop.geometry import DeviationAngle, DriveGeometry, default_camera_mount

GEOM = DriveGeometry(wheel_radius=0.10, half_track=0.25)
angle = st.floats(-math.pi + 1e-9, math.pi, allow_nan=False)


class TestOrient:
    def test_zero_correction_is_identity(self):
        pose = BasePose(0.4, -0.2, 0.3)
        new, wheels = orient(pose, DeviationAngle(0.0), GEOM)
        assert new == pose
        assert wheels == WheelCommand(0.0, 0.0)

    def test_tenth_radian(self):
        new, wheels = orient(BasePose(1, 2, 0.0), DeviationAngle(0.1), GEOM)
        assert new.heading == pytest.approx(0.1, abs=1e-15)
        assert (new.x, new.y) == (1.0, 2.0)
        assert wheels.left_rotation == pytest.approx(-0.25, abs=1e-15)
        assert wheels.right_rotation == pytest.approx(0.25, abs=1e-15)

    def test_inverse_pair_returns_home(self):
        pose = BasePose(0.3, 0.7, 0.25)
        once, _ = orient(pose, DeviationAngle(0.8), GEOM)
        back, _ = orient(once, DeviationAngle(-0.8), GEOM)
        assert back == pose

    @given(angle, angle)
    def test_position_fixed_and_wheels_opposite(self, heading, theta):
        pose = BasePose(1.5, -2.5, heading)
        new, wheels = orient(pose, DeviationAngle(theta), GEOM)
        assert (new.x, new.y) == (pose.x, pose.y)
        assert wheels.left_rotation == -wheels.right_rotation
        lhs = wheels.right_rotation * GEOM.wheel_radius
        rhs = theta * GEOM.half_track
        assert abs(lhs - rhs) <= math.ulp(max(abs(lhs), abs(rhs), 1e-300))


class TestDrive:
    def test_straight_ahead(self):
        assert drive(BasePose(0, 0, 0), 0.4) == BasePose(0.4, 0, 0)

    def test_zero_distance(self):
        pose = BasePose(0.1, 0.2, -1.0)
        assert drive(pose, 0.0) == pose

    def test_heading_north(self):
        new = drive(BasePose(0, 0, math.pi / 2), 1.0)
        assert new.x == pytest.approx(0.0, abs=1e-12)
        assert new.y == pytest.approx(1.0, abs=1e-12)

    @given(angle, st.floats(-5, 5, allow_nan=False))
    def test_heading_unchanged(self, heading, dist):
        assert drive(BasePose(0, 0, heading), dist).heading == BasePose(0, 0, heading).heading


class TestCameraPoseOf:
    def test_identity_pose_puts_camera_at_mount_offset(self):
        cam = camera_pose_of(BasePose(), default_camera_mount())
        center = cam.inverse().translation
        assert (center.x, center.y, center.z) == pytest.approx(
            (0.15, 0.015, -0.22), abs=1e-15
        )
        # optical axis (+z camera) points along world +x
        view_dir_world = cam.inverse().apply_direction(np.array([0.0, 0.0, 1.0]))
        assert view_dir_world == pytest.approx([1.0, 0.0, 0.0], abs=1e-15)

    @given(angle, st.floats(-3, 3), st.floats(-3, 3), *(st.floats(-4, 4),) * 3)
    def test_composition_reproduces_base_coordinates(self, heading, bx, by, wx, wy, wz):
        pose = BasePose(bx, by, heading)
        mount = default_camera_mount()
        cam = camera_pose_of(pose, mount)
        w = np.array([wx, wy, wz])
        via_camera = mount.apply(cam.apply(w))
        direct = pose.world_from_base().inverse().apply(w)
        assert np.allclose(via_camera, direct, atol=1e-9)

    def test_half_turn_flips_view_direction(self):
        mount = default_camera_mount()
        fwd = camera_pose_of(BasePose(0, 0, 0.0), mount)
        back = camera_pose_of(BasePose(0, 0, math.pi), mount)
        d1 = fwd.inverse().apply_direction(np.array([0.0, 0.0, 1.0]))
        d2 = back.inverse().apply_direction(np.array([0.0, 0.0, 1.0]))
        assert float(d1 @ d2) == pytest.approx(-1.0, abs=1e-12)


def test_heading_normalized_to_half_open_interval():
    assert BasePose(0, 0, 3 * math.pi).heading == pytest.approx(math.pi)
    assert BasePose(0, 0, -math.pi).heading == pytest.approx(math.pi)
    assert BasePose(0, 0, 2 * math.pi).heading == pytest.approx(0.0)
