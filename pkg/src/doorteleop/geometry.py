"""Core 3D geometry for the door workbench.

Pure, stateless operations: camera/base frame conversion, two-point
distance + rotation-direction measurement, three-point plane normals,
the signed deviation angle between the robot forward axis and the door
plane normal, and the wheel rotation that cancels it.

Conventions: base frame is x forward, y left, z up; angles are radians,
counterclockwise-positive about +z.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import CollinearPointsError, DegenerateNormalError, FrameTagError

# Relative collinearity threshold for the three-point normal; absolute
# thresholds break at different scene scales.
COLLINEAR_REL_TOL = 1e-6

# Horizontal projection below this is a horizontal plane (no yaw defined).
DEGENERATE_NORMAL_TOL = 1e-9

_ORTHONORMAL_TOL = 1e-9


class FrameId(enum.Enum):
    CAMERA = "camera"
    BASE = "base"
    WORLD = "world"


class RotationDirection(enum.Enum):
    CW = "CW"
    CCW = "CCW"


def _require_finite(*values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise ValueError(f"non-finite component: {v!r}")


@dataclass(frozen=True)
class Point3:
    """A 3D point in meters, tagged with the frame it lives in."""

    x: float
    y: float
    z: float
    frame: FrameId

    def __post_init__(self) -> None:
        for name in ("x", "y", "z"):  # plain floats, numpy scalars shed
            object.__setattr__(self, name, float(getattr(self, name)))
        _require_finite(self.x, self.y, self.z)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=np.float64)


@dataclass(frozen=True)
class Vector3:
    """A 3D direction or displacement."""

    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        for name in ("x", "y", "z"):
            object.__setattr__(self, name, float(getattr(self, name)))
        _require_finite(self.x, self.y, self.z)

    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)

    def scaled(self, k: float) -> "Vector3":
        return Vector3(k * self.x, k * self.y, k * self.z)

    def dot(self, other: "Vector3") -> float:
        return self.x * other.x + self.y * other.y + self.z * other.z

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=np.float64)


@dataclass(frozen=True)
class RigidTransform:
    """Rotation + translation between two frames.

    `rotation` maps source-frame coordinates into the target frame;
    `translation` is the source origin expressed in the target frame.
    The rotation must be orthonormal with determinant +1 (tol 1e-9).
    """

    rotation: np.ndarray
    translation: Vector3

    def __post_init__(self) -> None:
        r = np.asarray(self.rotation, dtype=np.float64)
        if r.shape != (3, 3):
            raise ValueError(f"rotation must be 3x3, got {r.shape}")
        if np.max(np.abs(r.T @ r - np.eye(3))) > _ORTHONORMAL_TOL:
            raise ValueError("rotation is not orthonormal within 1e-9")
        if abs(np.linalg.det(r) - 1.0) > _ORTHONORMAL_TOL:
            raise ValueError("rotation determinant is not +1 within 1e-9")
        r.setflags(write=False)
        object.__setattr__(self, "rotation", r)

    def apply(self, xyz: np.ndarray) -> np.ndarray:
        """Transform one point (3,) or a batch (N, 3)."""
        xyz = np.asarray(xyz, dtype=np.float64)
        return xyz @ self.rotation.T + self.translation.as_array()

    def apply_direction(self, xyz: np.ndarray) -> np.ndarray:
        """Rotate a direction without translating."""
        return np.asarray(xyz, dtype=np.float64) @ self.rotation.T

    def inverse(self) -> "RigidTransform":
        rt = self.rotation.T
        t = -(rt @ self.translation.as_array())
        return RigidTransform(rt.copy(), Vector3(t[0], t[1], t[2]))

    def compose(self, inner: "RigidTransform") -> "RigidTransform":
        """self ∘ inner: apply `inner` first, then `self`."""
        r = self.rotation @ inner.rotation
        t = self.apply(inner.translation.as_array())
        return RigidTransform(r, Vector3(t[0], t[1], t[2]))

    def matrix(self) -> np.ndarray:
        """Homogeneous 4x4 form."""
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation.as_array()
        return m


@dataclass(frozen=True)
class MeasureResult:
    """Distance between two picked points plus the rotation direction
    implied by their left/right (base y) ordering."""

    distance: float
    rotation_direction: RotationDirection

    def __post_init__(self) -> None:
        if self.distance < 0:
            raise ValueError("distance must be >= 0")


@dataclass(frozen=True)
class DeviationAngle:
    """Signed yaw correction, radians in (-pi, pi].

    Positive means a counterclockwise correction about base +z; zero
    means the base forward axis is already perpendicular to the plane.
    """

    theta_diff: float

    def __post_init__(self) -> None:
        if not (-math.pi < self.theta_diff <= math.pi):
            raise ValueError("theta_diff must be in (-pi, pi]")


@dataclass(frozen=True)
class DriveGeometry:
    """Differential-drive dimensions: wheel radius and the distance from
    each drive wheel to the in-place rotation axis."""

    wheel_radius: float = 0.10
    half_track: float = 0.25

    def __post_init__(self) -> None:
        if self.wheel_radius <= 0 or self.half_track <= 0:
            raise ValueError("wheel_radius and half_track must be > 0")


def default_camera_mount() -> RigidTransform:
    """Camera→base transform for the stock front-mounted RGBD camera.

    The optical axis (+z camera) points along base +x, image right maps
    to base −y, image down to base −z. The camera sits 0.15 m ahead,
    0.015 m left and 0.22 m below the base origin.
    """
    rotation = np.array(
        [
            [0.0, 0.0, 1.0],
            [-1.0, 0.0, 0.0],
            [0.0, -1.0, 0.0],
        ]
    )
    return RigidTransform(rotation, Vector3(0.15, 0.015, -0.22))


def transform_point(t: RigidTransform, p: Point3) -> Point3:
    """Convert a camera-frame point to the base frame."""
    if p.frame is not FrameId.CAMERA:
        raise FrameTagError(f"expected a camera-frame point, got {p.frame.value}")
    out = t.apply(p.as_array())
    return Point3(out[0], out[1], out[2], FrameId.BASE)


def distance_and_rotation(p1: Point3, p2: Point3) -> MeasureResult:
    """Measure a picked pair: Euclidean distance and rotation direction.

    The first point marks the rotation axis (door hinge / handle
    spindle), the second the moving end. Direction is CCW when the
    axis point is to the left (greater base y) of the moving end,
    CW otherwise, ties included.
    """
    if p1.frame is not FrameId.BASE or p2.frame is not FrameId.BASE:
        raise FrameTagError("both points must be in the base frame")
    d = math.sqrt(
        (p1.x - p2.x) ** 2 + (p1.y - p2.y) ** 2 + (p1.z - p2.z) ** 2
    )
    direction = (
        RotationDirection.CCW if p1.y - p2.y > 0 else RotationDirection.CW
    )
    return MeasureResult(d, direction)


def plane_normal(pa: Point3, pb: Point3, pc: Point3) -> Vector3:
    """Normal of the plane through three picked points.

    Returns the raw cross product (pb − pa) × (pc − pa), unnormalized.
    Raises CollinearPointsError when the points do not span a plane.
    """
    for p in (pa, pb, pc):
        if p.frame is not FrameId.BASE:
            raise FrameTagError("plane points must be in the base frame")
    abx, aby, abz = pb.x - pa.x, pb.y - pa.y, pb.z - pa.z
    acx, acy, acz = pc.x - pa.x, pc.y - pa.y, pc.z - pa.z
    nx = aby * acz - abz * acy
    ny = acx * abz - abx * acz
    nz = abx * acy - acx * aby
    norm_ab = math.sqrt(abx * abx + aby * aby + abz * abz)
    norm_ac = math.sqrt(acx * acx + acy * acy + acz * acz)
    norm_n = math.sqrt(nx * nx + ny * ny + nz * nz)
    if norm_n < COLLINEAR_REL_TOL * norm_ab * norm_ac:
        raise CollinearPointsError("picked points are collinear")
    return Vector3(nx, ny, nz)


def deviation_angle(n: Vector3) -> DeviationAngle:
    """Signed yaw between the base forward axis and the door-plane
    normal's opposite.

    The normal is first oriented to point from the door toward the
    robot (n.x <= 0). The returned angle rotates base +x onto −n, so it
    is the counterclockwise-positive correction the base must execute;
    zero means already perpendicular. Scale- and sign-invariant in n.
    """
    nx, ny = n.x, n.y
    if math.hypot(nx, ny) < DEGENERATE_NORMAL_TOL * max(n.norm(), 1.0):
        raise DegenerateNormalError("plane normal has no horizontal component")
    if nx > 0:
        nx, ny = -nx, -ny
    # after the flip -nx >= 0, so atan2 lands in [-pi/2, pi/2]
    return DeviationAngle(math.atan2(-ny, -nx))


def wheel_rotation(theta_diff: DeviationAngle, g: DriveGeometry) -> float:
    """Wheel rotation angle that turns the base in place by theta_diff.

    The two wheels rotate by this angle in opposite directions (left
    wheel −θw, right wheel +θw for a CCW correction). Satisfies
    θw · wheel_radius = θ_diff · half_track to one rounding.
    """
    return (theta_diff.theta_diff * g.half_track) / g.wheel_radius
