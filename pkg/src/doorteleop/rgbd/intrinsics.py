"""Pinhole camera intrinsics and the camera-frame projection."""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..geometry import FrameId, Point3


@dataclass(frozen=True)
class CameraIntrinsics:
    width: int
    height: int
    fx: float
    fy: float
    cx: float
    cy: float
    depth_min: float = 0.5
    depth_max: float = 3.5

    def __post_init__(self) -> None:
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be > 0")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the image")
        if not (0 < self.depth_min < self.depth_max):
            raise ValueError("require 0 < depth_min < depth_max")

    def contains(self, u: int, v: int) -> bool:
        return 0 <= u < self.width and 0 <= v < self.height


def default_intrinsics() -> CameraIntrinsics:
    """640x480 sensor with 58°x45° field of view, range 0.5-3.5 m."""
    w, h = 640, 480
    fx = (w / 2) / math.tan(math.radians(58.0) / 2)
    fy = (h / 2) / math.tan(math.radians(45.0) / 2)
    return CameraIntrinsics(w, h, fx, fy, (w - 1) / 2, (h - 1) / 2)


def project(intr: CameraIntrinsics, p: Point3) -> tuple[float, float]:
    """Camera-frame point → continuous pixel coordinates."""
    if p.frame is not FrameId.CAMERA:
        raise ValueError(f"expected a camera-frame point, got {p.frame.value}")
    if p.z <= 0:
        raise ValueError("point must be in front of the camera (z > 0)")
    return intr.fx * p.x / p.z + intr.cx, intr.fy * p.y / p.z + intr.cy
