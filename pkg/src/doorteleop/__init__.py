"""Human-in-the-loop RGBD teleoperation workbench for door opening:
simulated depth camera, operator pick session, differential-drive base
and the host↔slave parameter link."""

from .geometry import (
    DeviationAngle,
    DriveGeometry,
    FrameId,
    MeasureResult,
    Point3,
    RigidTransform,
    RotationDirection,
    Vector3,
    default_camera_mount,
    deviation_angle,
    distance_and_rotation,
    plane_normal,
    transform_point,
    wheel_rotation,
)
from .base_motion import BasePose, WheelCommand, camera_pose_of, drive, orient
from .session import (
    HoverReadout,
    ParameterSet,
    PixelSelection,
    SelectionMode,
    Session,
    SessionState,
)
from .service import ServiceConfig, TeleopService, run_script, serve

__version__ = "0.1.0"

__all__ = [
    "BasePose",
    "DeviationAngle",
    "DriveGeometry",
    "FrameId",
    "HoverReadout",
    "MeasureResult",
    "ParameterSet",
    "PixelSelection",
    "Point3",
    "RigidTransform",
    "RotationDirection",
    "SelectionMode",
    "ServiceConfig",
    "Session",
    "SessionState",
    "TeleopService",
    "Vector3",
    "WheelCommand",
    "camera_pose_of",
    "default_camera_mount",
    "deviation_angle",
    "distance_and_rotation",
    "drive",
    "orient",
    "plane_normal",
    "run_script",
    "serve",
    "transform_point",
    "wheel_rotation",
]
