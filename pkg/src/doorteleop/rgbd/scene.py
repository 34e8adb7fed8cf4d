"""Parametric door/handle/wall scene: JSON descriptor, validation, and
compilation into the flat arrays the raycast kernels consume.

Scene document (JSON, "version": 1):

    door.hinge_position   [x, y, z] world, bottom of the hinge edge on
                          the door front face
    door.width/height/thickness/yaw/hinge_side
    handle.mount_offset_from_moving_edge, height_on_door, length,
          cross_section [depth, height], standoff_from_door_face
    wall.width/height     wall plane extents around the doorway
    specular_patches      [{surface, u_min, u_max, v_min, v_max}, ...]
    depth_noise_sigma_at_1m, seed, colors (optional)

World frame: x forward from the robot start, y left, z up. Door yaw is
compass-style: positive turns the assembly clockwise viewed from above,
so the outward (robot-facing) normal is Rz(-yaw) @ (-1, 0, 0) and the
deviation correction measured by a robot at heading 0 equals -yaw.

Surface-local patch coordinates: door face (u from the hinge edge along
the width, v up from the bottom); handle face (u from the spindle end
toward the free end, v up from the handle bottom); wall (u along the
wall from the doorway center, v up from the doorway bottom).
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import SceneParseError, SceneValidationError

SCHEMA_VERSION = 1

SURFACE_WALL = 1
SURFACE_DOOR = 2
SURFACE_HANDLE = 3

_SURFACE_IDS = {"wall": SURFACE_WALL, "door": SURFACE_DOOR, "handle": SURFACE_HANDLE}

DEFAULT_COLORS = {
    "background": (18, 22, 30),
    "wall": (176, 174, 168),
    "door": (142, 96, 58),
    "handle": (210, 214, 222),
}


class HingeSide(enum.Enum):
    LEFT = "left"
    RIGHT = "right"


@dataclass(frozen=True)
class DoorSpec:
    hinge_position: tuple[float, float, float]
    width: float
    height: float
    thickness: float
    yaw: float
    hinge_side: HingeSide


@dataclass(frozen=True)
class HandleSpec:
    mount_offset_from_moving_edge: float
    height_on_door: float
    length: float
    cross_section: tuple[float, float]  # (depth along door normal, vertical height)
    standoff_from_door_face: float


@dataclass(frozen=True)
class WallSpec:
    width: float
    height: float


@dataclass(frozen=True)
class SpecularPatch:
    """Axis-aligned rectangle in a surface's local 2D coordinates whose
    depth returns read as zero (mirror-like material)."""

    surface: str
    u_min: float
    u_max: float
    v_min: float
    v_max: float


@dataclass(frozen=True)
class SceneDescriptor:
    door: DoorSpec
    handle: HandleSpec
    wall: WallSpec
    specular_patches: tuple[SpecularPatch, ...] = ()
    depth_noise_sigma_at_1m: float = 0.0
    seed: int = 0
    colors: dict = field(default_factory=lambda: dict(DEFAULT_COLORS))


def _need(obj: dict, key: str, where: str):
    if key not in obj:
        raise SceneParseError(f"{where}: missing required field '{key}'")
    return obj[key]


def _num(obj: dict, key: str, where: str) -> float:
    v = _need(obj, key, where)
    if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
        raise SceneParseError(f"{where}.{key}: expected a finite number, got {v!r}")
    return float(v)


def _vec3(obj: dict, key: str, where: str) -> tuple[float, float, float]:
    v = _need(obj, key, where)
    if not (isinstance(v, list) and len(v) == 3):
        raise SceneParseError(f"{where}.{key}: expected [x, y, z]")
    out = []
    for c in v:
        if not isinstance(c, (int, float)) or isinstance(c, bool) or not math.isfinite(c):
            raise SceneParseError(f"{where}.{key}: non-finite component {c!r}")
        out.append(float(c))
    return (out[0], out[1], out[2])


def load_scene(document: str) -> SceneDescriptor:
    """Parse and validate a scene document."""
    try:
        raw = json.loads(document)
    except json.JSONDecodeError as e:
        raise SceneParseError(f"line {e.lineno}, column {e.colno}: {e.msg}") from e
    if not isinstance(raw, dict):
        raise SceneParseError("top level must be a JSON object")
    version = raw.get("version")
    if version != SCHEMA_VERSION:
        raise SceneParseError(
            f"version: expected {SCHEMA_VERSION}, got {version!r} (field is mandatory)"
        )

    d = _need(raw, "door", "door")
    side_raw = _need(d, "hinge_side", "door")
    try:
        side = HingeSide(str(side_raw).lower())
    except ValueError:
        raise SceneParseError(f"door.hinge_side: expected 'left' or 'right', got {side_raw!r}")
    door = DoorSpec(
        hinge_position=_vec3(d, "hinge_position", "door"),
        width=_num(d, "width", "door"),
        height=_num(d, "height", "door"),
        thickness=_num(d, "thickness", "door"),
        yaw=_num(d, "yaw", "door"),
        hinge_side=side,
    )

    h = _need(raw, "handle", "handle")
    cs = _need(h, "cross_section", "handle")
    if not (isinstance(cs, list) and len(cs) == 2):
        raise SceneParseError("handle.cross_section: expected [depth, height]")
    handle = HandleSpec(
        mount_offset_from_moving_edge=_num(h, "mount_offset_from_moving_edge", "handle"),
        height_on_door=_num(h, "height_on_door", "handle"),
        length=_num(h, "length", "handle"),
        cross_section=(float(cs[0]), float(cs[1])),
        standoff_from_door_face=_num(h, "standoff_from_door_face", "handle"),
    )

    w = _need(raw, "wall", "wall")
    wall = WallSpec(width=_num(w, "width", "wall"), height=_num(w, "height", "wall"))

    patches = []
    for i, p in enumerate(raw.get("specular_patches", [])):
        where = f"specular_patches[{i}]"
        surf = _need(p, "surface", where)
        if surf not in _SURFACE_IDS:
            raise SceneParseError(f"{where}.surface: expected wall|door|handle, got {surf!r}")
        patches.append(
            SpecularPatch(
                surface=surf,
                u_min=_num(p, "u_min", where),
                u_max=_num(p, "u_max", where),
                v_min=_num(p, "v_min", where),
                v_max=_num(p, "v_max", where),
            )
        )

    colors = dict(DEFAULT_COLORS)
    for name, rgb in raw.get("colors", {}).items():
        if name not in colors:
            raise SceneParseError(f"colors.{name}: unknown object name")
        if not (isinstance(rgb, list) and len(rgb) == 3):
            raise SceneParseError(f"colors.{name}: expected [r, g, b]")
        colors[name] = tuple(int(c) for c in rgb)

    sigma = float(raw.get("depth_noise_sigma_at_1m", 0.0))
    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise SceneParseError(f"seed: expected an integer, got {seed!r}")

    scene = SceneDescriptor(
        door=door,
        handle=handle,
        wall=wall,
        specular_patches=tuple(patches),
        depth_noise_sigma_at_1m=sigma,
        seed=seed,
        colors=colors,
    )
    validate_scene(scene)
    return scene


def load_scene_file(path) -> SceneDescriptor:
    with open(path, "r", encoding="utf-8") as f:
        return load_scene(f.read())


def validate_scene(s: SceneDescriptor) -> None:
    """Check descriptor invariants; raises SceneValidationError naming
    the violated one."""
    d, h, w = s.door, s.handle, s.wall

    def check(cond: bool, invariant: str) -> None:
        if not cond:
            raise SceneValidationError(invariant)

    check(d.width > 0, "door.width must be > 0")
    check(d.height > 0, "door.height must be > 0")
    check(d.thickness > 0, "door.thickness must be > 0")
    check(h.length > 0, "handle.length must be > 0")
    check(h.cross_section[0] > 0 and h.cross_section[1] > 0,
          "handle.cross_section components must be > 0")
    check(h.mount_offset_from_moving_edge >= 0,
          "handle.mount_offset_from_moving_edge must be >= 0")
    check(h.standoff_from_door_face >= 0,
          "handle.standoff_from_door_face must be >= 0")
    check(
        h.mount_offset_from_moving_edge + h.length <= d.width,
        "handle must fit on door face: mount_offset_from_moving_edge + length <= door.width",
    )
    check(
        h.height_on_door - h.cross_section[1] / 2 >= 0
        and h.height_on_door + h.cross_section[1] / 2 <= d.height,
        "handle must fit on door face: height_on_door +/- cross_section height within door",
    )
    check(w.width >= d.width, "wall.width must cover the doorway")
    check(w.height >= d.height, "wall.height must cover the doorway")
    check(s.depth_noise_sigma_at_1m >= 0, "depth_noise_sigma_at_1m must be >= 0")
    check(s.seed >= 0, "seed must be >= 0")

    bounds = {
        "wall": (-w.width / 2, w.width / 2, 0.0, w.height),
        "door": (0.0, d.width, 0.0, d.height),
        "handle": (0.0, h.length, 0.0, h.cross_section[1]),
    }
    for i, p in enumerate(s.specular_patches):
        u0, u1, v0, v1 = bounds[p.surface]
        check(p.u_min < p.u_max and p.v_min < p.v_max,
              f"specular_patches[{i}]: rectangle must have positive area")
        check(
            u0 <= p.u_min and p.u_max <= u1 and v0 <= p.v_min and p.v_max <= v1,
            f"specular_patches[{i}]: rectangle must lie on the {p.surface} surface",
        )


def scene_to_document(s: SceneDescriptor) -> str:
    """Serialize back to the version-1 JSON document."""
    doc = {
        "version": SCHEMA_VERSION,
        "door": {
            "hinge_position": list(s.door.hinge_position),
            "width": s.door.width,
            "height": s.door.height,
            "thickness": s.door.thickness,
            "yaw": s.door.yaw,
            "hinge_side": s.door.hinge_side.value,
        },
        "handle": {
            "mount_offset_from_moving_edge": s.handle.mount_offset_from_moving_edge,
            "height_on_door": s.handle.height_on_door,
            "length": s.handle.length,
            "cross_section": list(s.handle.cross_section),
            "standoff_from_door_face": s.handle.standoff_from_door_face,
        },
        "wall": {"width": s.wall.width, "height": s.wall.height},
        "specular_patches": [
            {
                "surface": p.surface,
                "u_min": p.u_min,
                "u_max": p.u_max,
                "v_min": p.v_min,
                "v_max": p.v_max,
            }
            for p in s.specular_patches
        ],
        "depth_noise_sigma_at_1m": s.depth_noise_sigma_at_1m,
        "seed": s.seed,
        "colors": {k: list(v) for k, v in s.colors.items()},
    }
    return json.dumps(doc, indent=2)


# --- derived geometry ----------------------------------------------------


def door_axes(s: SceneDescriptor) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(width_dir, outward_normal, up) in world coordinates.

    width_dir points from the hinge edge toward the moving edge; the
    outward normal faces the robot side.
    """
    yaw = s.door.yaw
    n = np.array([-math.cos(yaw), math.sin(yaw), 0.0])
    u_pl = np.array([-math.sin(yaw), -math.cos(yaw), 0.0])  # z_hat x n
    w_dir = u_pl if s.door.hinge_side is HingeSide.LEFT else -u_pl
    return w_dir, n, np.array([0.0, 0.0, 1.0])


def door_face_point(s: SceneDescriptor, u: float, v: float) -> np.ndarray:
    """World point on the door front face; u from the hinge edge along
    the width, v up from the bottom."""
    w_dir, _, up = door_axes(s)
    hinge = np.asarray(s.door.hinge_position)
    return hinge + u * w_dir + v * up


def handle_face_point(s: SceneDescriptor, u: float, dv: float = 0.0) -> np.ndarray:
    """World point on the handle front face; u from the spindle end
    toward the free end, dv vertical offset from the handle centerline."""
    w_dir, n, up = door_axes(s)
    h = s.handle
    spindle_u = s.door.width - h.mount_offset_from_moving_edge
    face_off = h.standoff_from_door_face + h.cross_section[0]
    base = door_face_point(s, spindle_u, h.height_on_door) + face_off * n
    return base + u * (-w_dir) + dv * up


def door_outward_normal(s: SceneDescriptor) -> np.ndarray:
    return door_axes(s)[1]


class CompiledScene:
    """Flat-array form of the scene consumed by the raycast kernels.

    Boxes are index 0 = door, 1 = handle; object ids are 0 sky, 1 wall,
    2 door, 3 handle (matching patch surface ids).
    """

    def __init__(self, s: SceneDescriptor):
        self.descriptor = s
        d, h = s.door, s.handle
        w_dir, n, up = door_axes(s)
        hinge = np.asarray(d.hinge_position, dtype=np.float64)

        # wall plane through the door back face; origin at the doorway
        # bottom-center
        u_pl = w_dir if d.hinge_side is HingeSide.LEFT else -w_dir
        self.wall_origin = hinge + (d.width / 2) * w_dir - d.thickness * n
        self.wall_normal = n
        self.wall_u = u_pl
        self.wall_v = up
        self.wall_ext = np.array(
            [-s.wall.width / 2, s.wall.width / 2, 0.0, s.wall.height]
        )
        self.wall_hole = np.array([-d.width / 2, d.width / 2, 0.0, d.height])

        door_center = (
            hinge + (d.width / 2) * w_dir + (d.height / 2) * up - (d.thickness / 2) * n
        )
        handle_center_u = d.width - h.mount_offset_from_moving_edge - h.length / 2
        handle_center = (
            door_face_point(s, handle_center_u, h.height_on_door)
            + (h.standoff_from_door_face + h.cross_section[0] / 2) * n
        )
        self.box_center = np.stack([door_center, handle_center])
        self.box_axes = np.stack(
            [
                np.stack([w_dir, n, up]),
                np.stack([-w_dir, n, up]),
            ]
        )
        self.box_half = np.array(
            [
                [d.width / 2, d.thickness / 2, d.height / 2],
                [h.length / 2, h.cross_section[0] / 2, h.cross_section[1] / 2],
            ]
        )

        if s.specular_patches:
            self.patch_surface = np.array(
                [_SURFACE_IDS[p.surface] for p in s.specular_patches], dtype=np.int64
            )
            self.patch_rect = np.array(
                [[p.u_min, p.u_max, p.v_min, p.v_max] for p in s.specular_patches]
            )
        else:
            self.patch_surface = np.zeros(0, dtype=np.int64)
            self.patch_rect = np.zeros((0, 4))

        self.palette = np.array(
            [
                s.colors["background"],
                s.colors["wall"],
                s.colors["door"],
                s.colors["handle"],
            ],
            dtype=np.uint8,
        )


def compile_scene(s: SceneDescriptor) -> CompiledScene:
    return CompiledScene(s)
