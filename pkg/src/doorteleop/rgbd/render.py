"""Frame rendering on top of the raycast kernels, plus deprojection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..geometry import FrameId, Point3, RigidTransform
from .intrinsics import CameraIntrinsics, default_intrinsics
from .kernels import raycast
from .scene import CompiledScene, SceneDescriptor, compile_scene

DEFAULT_FRAME_INTERVAL_MS = 1000.0 / 30.0


@dataclass(frozen=True)
class Frame:
    """One aligned color + depth capture. Depth is camera-frame z in
    meters with 0.0 meaning hole or out of range; arrays are read-only."""

    color: np.ndarray
    depth: np.ndarray
    intrinsics: CameraIntrinsics
    camera_pose: RigidTransform  # world→camera
    timestamp_ms: float
    frame_index: int = 0

    def __post_init__(self) -> None:
        if self.color.shape[:2] != self.depth.shape:
            raise ValueError("color and depth dimensions must match")
        self.color.setflags(write=False)
        self.depth.setflags(write=False)


def render(
    scene,
    camera_pose: RigidTransform,
    *,
    intrinsics: CameraIntrinsics | None = None,
    frame_index: int = 0,
    noise_sigma_at_1m: float | None = None,
    timestamp_ms: float | None = None,
    impl: str | None = None,
) -> Frame:
    """Raycast the scene into an aligned color + depth frame.

    Deterministic: identical (scene, pose, frame_index) yield bitwise
    identical frames. Depth noise, when enabled, is Gaussian with
    sigma(z) = sigma_at_1m * z^2, seeded from (scene seed, frame_index),
    and noisy values are clipped into the valid depth range.
    """
    compiled = scene if isinstance(scene, CompiledScene) else compile_scene(scene)
    descriptor = compiled.descriptor
    intr = intrinsics or default_intrinsics()

    cam_rot = camera_pose.rotation
    cam_origin = camera_pose.inverse().translation.as_array()
    depth, obj = raycast(intr, cam_rot, cam_origin, compiled, impl=impl)

    out_of_range = (depth != 0.0) & ((depth < intr.depth_min) | (depth > intr.depth_max))
    depth[out_of_range] = 0.0

    sigma = (
        descriptor.depth_noise_sigma_at_1m
        if noise_sigma_at_1m is None
        else noise_sigma_at_1m
    )
    if sigma > 0.0:
        rng = np.random.default_rng([descriptor.seed, frame_index])
        noise = rng.standard_normal(depth.shape)
        nz = depth != 0.0
        depth[nz] = np.clip(
            depth[nz] + noise[nz] * sigma * depth[nz] ** 2,
            intr.depth_min,
            intr.depth_max,
        )

    color = compiled.palette[obj]
    if timestamp_ms is None:
        timestamp_ms = frame_index * DEFAULT_FRAME_INTERVAL_MS
    return Frame(color, depth, intr, camera_pose, timestamp_ms, frame_index)


def deproject(frame: Frame, u: int, v: int) -> Point3 | None:
    """Pixel → camera-frame point, or None when the pixel has no depth."""
    intr = frame.intrinsics
    if not intr.contains(u, v):
        raise ValueError(f"pixel ({u}, {v}) outside {intr.width}x{intr.height} image")
    d = float(frame.depth[v, u])
    if d == 0.0:
        return None
    return Point3(
        (u - intr.cx) * d / intr.fx,
        (v - intr.cy) * d / intr.fy,
        d,
        FrameId.CAMERA,
    )


def deproject_all(frame: Frame) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized deprojection of every pixel.

    Returns (points, mask): points is (H, W, 3) camera-frame
    coordinates (garbage where mask is False), mask marks nonzero depth.
    """
    intr = frame.intrinsics
    d = frame.depth
    us = np.arange(intr.width, dtype=np.float64)[None, :]
    vs = np.arange(intr.height, dtype=np.float64)[:, None]
    x = (us - intr.cx) * d / intr.fx
    y = (vs - intr.cy) * d / intr.fy
    return np.stack([x, y, d], axis=-1), d != 0.0
