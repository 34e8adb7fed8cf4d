"""Differential-drive base: in-place orientation corrections and
straight drives under ideal (no-slip) kinematics.

The base pose lives on the world z = 0 plane; the camera hangs off the
base through a fixed camera→base mount transform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import DeviationAngle, DriveGeometry, RigidTransform, Vector3


def _wrap_angle(a: float) -> float:
    """Normalize to (-pi, pi]."""
    a = math.fmod(a, 2.0 * math.pi)
    if a <= -math.pi:
        a += 2.0 * math.pi
    elif a > math.pi:
        a -= 2.0 * math.pi
    return a


@dataclass(frozen=True)
class BasePose:
    """World-frame pose of the base: position on the ground plane and
    heading (CCW-positive about world up, normalized to (-pi, pi])."""

    x: float = 0.0
    y: float = 0.0
    heading: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "heading", _wrap_angle(self.heading))

    def world_from_base(self) -> RigidTransform:
        """base→world transform for this pose."""
        c, s = math.cos(self.heading), math.sin(self.heading)
        rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
        return RigidTransform(rot, Vector3(self.x, self.y, 0.0))


@dataclass(frozen=True)
class WheelCommand:
    """Signed wheel rotations, radians. An in-place rotation drives the
    wheels by equal and opposite angles."""

    left_rotation: float
    right_rotation: float


def orient(
    pose: BasePose, theta_diff: DeviationAngle, g: DriveGeometry
) -> tuple[BasePose, WheelCommand]:
    """Rotate the base in place by the deviation correction.

    Position is unchanged; heading increases by theta_diff. The wheels
    turn theta_w = theta_diff * half_track / wheel_radius in opposite
    directions (left negative for a CCW correction).
    """
    theta_w = (theta_diff.theta_diff * g.half_track) / g.wheel_radius
    new_pose = BasePose(pose.x, pose.y, pose.heading + theta_diff.theta_diff)
    return new_pose, WheelCommand(-theta_w, theta_w)


def drive(pose: BasePose, distance: float) -> BasePose:
    """Translate along the current heading; heading is unchanged."""
    return BasePose(
        pose.x + distance * math.cos(pose.heading),
        pose.y + distance * math.sin(pose.heading),
        pose.heading,
    )


def camera_pose_of(pose: BasePose, mount: RigidTransform) -> RigidTransform:
    """World→camera transform for a base pose and camera→base mount."""
    world_from_camera = pose.world_from_base().compose(mount)
    return world_from_camera.inverse()
