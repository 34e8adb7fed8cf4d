"""Headless click scripts: the action vocabulary shared by the script
runner and the live operator socket, plus a planner that turns scene
ground truth into operator-like pixel picks.

Script files are JSON Lines, one action per line:

    {"op": "hover", "u": 320, "v": 240}
    {"op": "select", "mode": "WidthP1", "u": 101, "v": 204}
    {"op": "approach", "target": 1.0}
    {"op": "confirm"}
    {"op": "orient"}
    {"op": "select", "mode": "Contact", "u": 330, "v": 255}
    {"op": "finalize"}
    {"op": "reset", "state": "AwaitNormalPoints"}
"""

from __future__ import annotations

import json
import math

import numpy as np

from . import base_motion
from .geometry import FrameId, Point3
from .rgbd.intrinsics import project
from .rgbd.render import deproject
from .rgbd.scene import SceneDescriptor, door_face_point, handle_face_point
from .session import (
    DEFAULT_HANDLE_STANDOFF_M,
    DEFAULT_WIDTH_STANDOFF_M,
    PixelSelection,
    SelectionMode,
    Session,
    SessionState,
)

VALID_OPS = {"hover", "select", "approach", "confirm", "orient", "finalize", "reset"}


def parse_script(text: str) -> list[dict]:
    """JSON Lines → action list; raises ValueError naming the bad line."""
    actions = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            action = json.loads(line)
        except json.JSONDecodeError as e:
            raise ValueError(f"line {lineno}: invalid JSON ({e.msg})") from e
        if not isinstance(action, dict) or "op" not in action:
            raise ValueError(f"line {lineno}: expected an object with an 'op' field")
        if action["op"] not in VALID_OPS:
            raise ValueError(f"line {lineno}: unknown op {action['op']!r}")
        action["line"] = lineno
        actions.append(action)
    return actions


def serialize_script(actions: list[dict]) -> str:
    lines = []
    for a in actions:
        a = {k: v for k, v in a.items() if k != "line"}
        lines.append(json.dumps(a, sort_keys=True))
    return "\n".join(lines) + "\n"


def apply_action(session: Session, action: dict) -> dict:
    """Execute one action against a session; returns a JSON-ready result.

    This is the single interpreter used by both the script runner and
    the live operator socket, so the two paths cannot diverge.
    """
    op = action["op"]
    if op == "hover":
        readout = session.hover(int(action["u"]), int(action["v"]))
        if readout.empty:
            return {"op": op, "no_data": True}
        return {
            "op": op,
            "camera_point": [readout.camera_point.x, readout.camera_point.y, readout.camera_point.z],
            "base_point": [readout.base_point.x, readout.base_point.y, readout.base_point.z],
            "standoff": readout.standoff,
        }
    if op == "select":
        selection = PixelSelection(
            u=int(action["u"]),
            v=int(action["v"]),
            mode=SelectionMode(action["mode"]),
            frame_timestamp=action.get("frame_timestamp"),
        )
        event = session.select(selection)
        return {"op": op, **event}
    if op == "approach":
        target = float(action.get("target", DEFAULT_HANDLE_STANDOFF_M))
        cmd = session.begin_approach(target)
        return {"op": op, "target": target, "drive_distance": cmd.distance}
    if op == "confirm":
        residual = session.confirm_standoff()
        return {"op": op, "residual": residual}
    if op == "orient":
        event = session.orient_base()
        return {"op": op, **event}
    if op == "finalize":
        params = session.finalize()
        sent = session.events[-1]  # the "sent" event finalize just appended
        return {"op": op, "parameters": params.to_payload(), "ack_of": sent.get("ack_of")}
    if op == "reset":
        session.reset_to(SessionState(action["state"]))
        return {"op": op, "state": action["state"]}
    raise ValueError(f"unknown op {op!r}")


class PickPlanner:
    """Builds operator-like click scripts from scene ground truth.

    Runs a noise-free shadow session while planning so each stage's
    pixels are projected from the pose the real run will actually be
    in; planned picks are verified against the shadow frame and a
    planning error is raised if one lands off its intended surface.
    """

    #: pixels to step a pick inward from a projected edge point, along
    #: the pick line, so rounding never falls off the surface
    EDGE_NUDGE_PX = 1.5

    def __init__(self, scene: SceneDescriptor, **session_kwargs):
        session_kwargs.setdefault("noise_sigma_at_1m", 0.0)
        session_kwargs.setdefault("send_params", lambda params: None)
        self.scene = scene
        self.session = Session(scene, **session_kwargs)
        self.actions: list[dict] = []

    # -- pixel planning helpers

    def _world_to_pixel(self, world_pt: np.ndarray) -> tuple[float, float]:
        cam = base_motion.camera_pose_of(self.session.pose, self.session.mount)
        c = cam.apply(world_pt)
        return project(
            self.session.intrinsics, Point3(c[0], c[1], c[2], FrameId.CAMERA)
        )

    def _checked_pixel(
        self, world_pt: np.ndarray, uv: tuple[float, float], tol_m: float = 0.05
    ) -> tuple[int, int]:
        u, v = int(round(uv[0])), int(round(uv[1]))
        intr = self.session.intrinsics
        if not intr.contains(u, v):
            raise RuntimeError(f"planned pick ({u}, {v}) is outside the image")
        cam_pt = deproject(self.session.current_frame(), u, v)
        if cam_pt is None:
            raise RuntimeError(f"planned pick ({u}, {v}) reads zero depth")
        world_from_cam = base_motion.camera_pose_of(
            self.session.pose, self.session.mount
        ).inverse()
        got = world_from_cam.apply(cam_pt.as_array())
        if np.linalg.norm(got - world_pt) > tol_m:
            raise RuntimeError(
                f"planned pick ({u}, {v}) landed {np.linalg.norm(got - world_pt):.3f} m "
                "from its target"
            )
        return u, v

    def _pair_pixels(
        self, pt1: np.ndarray, pt2: np.ndarray
    ) -> tuple[tuple[int, int], tuple[int, int]]:
        """Project two endpoint picks, stepping each a little toward the
        other so integer pixels stay on the surface."""
        uv1 = np.array(self._world_to_pixel(pt1))
        uv2 = np.array(self._world_to_pixel(pt2))
        step = uv2 - uv1
        step = step / max(np.linalg.norm(step), 1e-9) * self.EDGE_NUDGE_PX
        return (
            self._checked_pixel(pt1, tuple(uv1 + step)),
            self._checked_pixel(pt2, tuple(uv2 - step)),
        )

    # -- script steps

    def _do(self, action: dict) -> dict:
        result = apply_action(self.session, action)
        self.actions.append(action)
        return result

    def hover_door_center(self) -> dict:
        # a handle-free spot: door center, below the handle bar
        s = self.scene
        center = door_face_point(
            s, s.door.width / 2, s.handle.height_on_door - 0.30
        )
        u, v = self._checked_pixel(center, self._world_to_pixel(center))
        return self._do({"op": "hover", "u": u, "v": v})

    def approach(self, target: float) -> dict:
        self.hover_door_center()
        return self._do({"op": "approach", "target": target})

    def confirm(self) -> dict:
        return self._do({"op": "confirm"})

    def pick_width(self, fracs: tuple[float, float] = (0.0, 1.0)) -> dict:
        """Width pair: first pick on the hinge side, second on the
        moving-edge side, at equal heights."""
        s = self.scene
        h = s.handle.height_on_door
        p_hinge = door_face_point(s, fracs[0] * s.door.width, h)
        p_moving = door_face_point(s, fracs[1] * s.door.width, h)
        (u1, v1), (u2, v2) = self._pair_pixels(p_hinge, p_moving)
        self._do({"op": "select", "mode": "WidthP1", "u": u1, "v": v1})
        return self._do({"op": "select", "mode": "WidthP2", "u": u2, "v": v2})

    def pick_handle(self) -> dict:
        s = self.scene
        p_axis = handle_face_point(s, 0.0)
        p_free = handle_face_point(s, s.handle.length)
        (u1, v1), (u2, v2) = self._pair_pixels(p_axis, p_free)
        self._do({"op": "select", "mode": "HandleP1", "u": u1, "v": v1})
        return self._do({"op": "select", "mode": "HandleP2", "u": u2, "v": v2})

    def _visible_u_span(self, heights: tuple[float, float], margin_px: float = 10.0) -> tuple[float, float]:
        """Door-width fraction range whose picks (at both heights) land
        inside the image with some border margin."""
        s = self.scene
        intr = self.session.intrinsics
        good: list[float] = []
        for frac in np.linspace(0.03, 0.97, 48):
            ok = True
            for h in heights:
                pt = door_face_point(s, frac * s.door.width, h)
                cam = base_motion.camera_pose_of(
                    self.session.pose, self.session.mount
                ).apply(pt)
                if cam[2] < intr.depth_min + 0.02:
                    ok = False
                    break
                u, v = project(intr, Point3(cam[0], cam[1], cam[2], FrameId.CAMERA))
                if not (
                    margin_px <= u <= intr.width - 1 - margin_px
                    and margin_px <= v <= intr.height - 1 - margin_px
                ):
                    ok = False
                    break
            if ok:
                good.append(float(frac))
        if not good or max(good) - min(good) < 0.15:
            raise RuntimeError("not enough of the door face is in view for a normal triple")
        return min(good), max(good)

    def pick_normals(self) -> dict:
        """Well-spread triangle on the visible part of the door face;
        the apex stays below the handle bar so no ray clips it."""
        s = self.scene
        w = s.door.width
        hv = s.handle.height_on_door
        heights = (hv - 0.33, hv - 0.05)
        lo, hi = self._visible_u_span(heights)
        pa, pb = lo + 0.05 * (hi - lo), hi - 0.05 * (hi - lo)
        spots = [
            ("NormalPA", door_face_point(s, pa * w, heights[0])),
            ("NormalPB", door_face_point(s, pb * w, heights[0])),
            ("NormalPC", door_face_point(s, (pa + pb) / 2 * w, heights[1])),
        ]
        result = {}
        for mode, pt in spots:
            u, v = self._checked_pixel(pt, self._world_to_pixel(pt))
            result = self._do({"op": "select", "mode": mode, "u": u, "v": v})
        return result

    def orient(self) -> dict:
        return self._do({"op": "orient"})

    def pick_contact(self) -> dict:
        s = self.scene
        pt = handle_face_point(s, 0.85 * s.handle.length)
        u, v = self._checked_pixel(pt, self._world_to_pixel(pt))
        return self._do({"op": "select", "mode": "Contact", "u": u, "v": v})

    def reset(self, state: str) -> dict:
        return self._do({"op": "reset", "state": state})

    def finalize(self) -> dict:
        return self._do({"op": "finalize"})


def plan_width_script(
    scene: SceneDescriptor,
    width_standoff: float = DEFAULT_WIDTH_STANDOFF_M,
    fracs: tuple[float, float] = (0.0, 1.0),
    **session_kwargs,
) -> list[dict]:
    """Approach to the width standoff and pick the two door edges."""
    planner = PickPlanner(scene, **session_kwargs)
    planner.approach(width_standoff)
    planner.pick_width(fracs)
    return planner.actions


def plan_handle_script(
    scene: SceneDescriptor,
    width_standoff: float = DEFAULT_WIDTH_STANDOFF_M,
    handle_standoff: float = DEFAULT_HANDLE_STANDOFF_M,
    **session_kwargs,
) -> list[dict]:
    """Width stage then the two handle-end picks at the close standoff."""
    planner = PickPlanner(scene, **session_kwargs)
    planner.approach(width_standoff)
    planner.pick_width()
    planner.approach(handle_standoff)
    planner.confirm()
    planner.pick_handle()
    return planner.actions


def plan_full_script(
    scene: SceneDescriptor,
    width_standoff: float = DEFAULT_WIDTH_STANDOFF_M,
    handle_standoff: float = DEFAULT_HANDLE_STANDOFF_M,
    width_fracs: tuple[float, float] = (0.0, 1.0),
    include_finalize: bool = True,
    **session_kwargs,
) -> list[dict]:
    """The whole procedure: width, approach, handle, normal, orient,
    contact, ship."""
    planner = PickPlanner(scene, **session_kwargs)
    planner.approach(width_standoff)
    planner.pick_width(width_fracs)
    planner.approach(handle_standoff)
    planner.confirm()
    planner.pick_handle()
    planner.pick_normals()
    planner.orient()
    planner.pick_contact()
    if include_finalize:
        planner.finalize()
    return planner.actions


def plan_alignment_script(
    scene: SceneDescriptor,
    width_standoff: float = DEFAULT_WIDTH_STANDOFF_M,
    handle_standoff: float = 0.85,
    **session_kwargs,
) -> list[dict]:
    """Alignment study: run to the normal stage, orient, then re-measure
    the residual deviation with a fresh normal triple. Uses inner width
    picks so yawed doors keep every pick in view."""
    planner = PickPlanner(scene, **session_kwargs)
    planner.approach(width_standoff)
    planner.pick_width((0.15, 0.85))
    planner.approach(handle_standoff)
    planner.confirm()
    planner.pick_handle()
    planner.pick_normals()
    planner.orient()
    planner.reset(SessionState.AWAIT_NORMAL_POINTS.value)
    planner.pick_normals()
    return planner.actions
