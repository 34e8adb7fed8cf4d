"""Operator session: the standard door-measurement procedure as an
explicit state machine over pixel picks.

Stage order: width pair at ~1.0 m, approach to ~0.75 m, handle pair,
normal triple, in-place orient, contact pick, send. Backward resets
re-open an earlier stage and clear everything measured at or after it.
The session owns the simulated base pose and the live frame; every
mutation is serialized through one lock.
"""

from __future__ import annotations

import enum
import threading
from dataclasses import dataclass

from . import base_motion
from .errors import (
    CollinearPointsError,
    DegenerateNormalError,
    HolePickError,
    InvalidParametersError,
    NoStandoffError,
    TransportClosed,
    WrongStateError,
)
from .geometry import (
    DeviationAngle,
    DriveGeometry,
    FrameId,
    MeasureResult,
    Point3,
    RotationDirection,
    Vector3,
    default_camera_mount,
    deviation_angle,
    distance_and_rotation,
    plane_normal,
    transform_point,
)
from .rgbd.intrinsics import CameraIntrinsics, default_intrinsics
from .rgbd.render import Frame, deproject, render
from .rgbd.scene import SceneDescriptor, compile_scene

DEFAULT_WIDTH_STANDOFF_M = 1.0
DEFAULT_HANDLE_STANDOFF_M = 0.75
STALE_SELECTION_MS = 500.0


class SessionState(enum.Enum):
    AWAIT_WIDTH_POINTS = "AwaitWidthPoints"
    APPROACHING = "Approaching"
    AWAIT_HANDLE_POINTS = "AwaitHandlePoints"
    AWAIT_NORMAL_POINTS = "AwaitNormalPoints"
    ORIENTING = "Orienting"
    AWAIT_CONTACT_POINT = "AwaitContactPoint"
    READY_TO_SEND = "ReadyToSend"
    SENT = "Sent"

    @property
    def order(self) -> int:
        return _STATE_ORDER[self]


_STATE_ORDER = {s: i for i, s in enumerate(SessionState)}


class SelectionMode(enum.Enum):
    WIDTH_P1 = "WidthP1"
    WIDTH_P2 = "WidthP2"
    HANDLE_P1 = "HandleP1"
    HANDLE_P2 = "HandleP2"
    NORMAL_PA = "NormalPA"
    NORMAL_PB = "NormalPB"
    NORMAL_PC = "NormalPC"
    CONTACT = "Contact"


_MODES_BY_STATE = {
    SessionState.AWAIT_WIDTH_POINTS: {SelectionMode.WIDTH_P1, SelectionMode.WIDTH_P2},
    SessionState.AWAIT_HANDLE_POINTS: {SelectionMode.HANDLE_P1, SelectionMode.HANDLE_P2},
    SessionState.AWAIT_NORMAL_POINTS: {
        SelectionMode.NORMAL_PA,
        SelectionMode.NORMAL_PB,
        SelectionMode.NORMAL_PC,
    },
    SessionState.AWAIT_CONTACT_POINT: {SelectionMode.CONTACT},
}


@dataclass(frozen=True)
class PixelSelection:
    u: int
    v: int
    mode: SelectionMode
    frame_timestamp: float | None = None


@dataclass(frozen=True)
class HoverReadout:
    """Live cursor readout: dual-frame coordinates plus the forward
    (base x) standoff; all None over holes and sky."""

    camera_point: Point3 | None = None
    base_point: Point3 | None = None
    standoff: float | None = None

    @property
    def empty(self) -> bool:
        return self.camera_point is None


@dataclass(frozen=True)
class DriveCommand:
    distance: float


@dataclass(frozen=True)
class ParameterSet:
    """The payload shipped to the slave: everything the downstream
    motion planner needs to twist the handle and pull the door."""

    door_width: float
    door_rotation: RotationDirection
    handle_length: float
    handle_rotation: RotationDirection
    contact_point: Point3
    deviation_at_capture: float

    def __post_init__(self) -> None:
        if not (self.door_width > self.handle_length > 0):
            raise InvalidParametersError(
                "require door_width > handle_length > 0, got "
                f"{self.door_width} / {self.handle_length}"
            )
        if self.contact_point.frame is not FrameId.BASE:
            raise InvalidParametersError("contact point must be in the base frame")

    def to_payload(self) -> dict:
        return {
            "door_width": self.door_width,
            "door_rotation": self.door_rotation.value,
            "handle_length": self.handle_length,
            "handle_rotation": self.handle_rotation.value,
            "contact_point": {
                "x": self.contact_point.x,
                "y": self.contact_point.y,
                "z": self.contact_point.z,
            },
            "deviation_at_capture": self.deviation_at_capture,
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "ParameterSet":
        cp = payload["contact_point"]
        return cls(
            door_width=payload["door_width"],
            door_rotation=RotationDirection(payload["door_rotation"]),
            handle_length=payload["handle_length"],
            handle_rotation=RotationDirection(payload["handle_rotation"]),
            contact_point=Point3(cp["x"], cp["y"], cp["z"], FrameId.BASE),
            deviation_at_capture=payload["deviation_at_capture"],
        )


def _point_list(p: Point3) -> list[float]:
    return [p.x, p.y, p.z]


class Session:
    """One operator session against one simulated scene."""

    def __init__(
        self,
        scene: SceneDescriptor,
        *,
        intrinsics: CameraIntrinsics | None = None,
        mount=None,
        drive_geometry: DriveGeometry | None = None,
        start_pose: base_motion.BasePose | None = None,
        noise_sigma_at_1m: float | None = None,
        frame_rate_hz: float = 30.0,
        render_impl: str | None = None,
        send_params=None,
        send_motion=None,
    ):
        self._compiled = compile_scene(scene)
        self._intrinsics = intrinsics or default_intrinsics()
        self._mount = mount or default_camera_mount()
        self._geometry = drive_geometry or DriveGeometry()
        self._pose = start_pose or base_motion.BasePose()
        self._noise = noise_sigma_at_1m
        self._interval_ms = 1000.0 / frame_rate_hz
        self._render_impl = render_impl
        self._send_params = send_params
        self._send_motion = send_motion

        self._lock = threading.RLock()
        self._frame: Frame | None = None
        self._frame_index = -1

        self._state = SessionState.AWAIT_WIDTH_POINTS
        self._picks: dict[SelectionMode, Point3] = {}
        self._door: MeasureResult | None = None
        self._width_height_difference: float | None = None
        self._handle: MeasureResult | None = None
        self._normal: Vector3 | None = None
        self._deviation: DeviationAngle | None = None
        self._contact: Point3 | None = None

        self._last_hover_pixel: tuple[int, int] | None = None
        self._last_standoff: float | None = None
        self._last_target: float | None = None

        self._events: list[dict] = []
        self._state_trace: list[str] = [self._state.value]
        self._selection_log: list[PixelSelection] = []

    # --- frame handling ---------------------------------------------------

    def _render_now(self) -> Frame:
        self._frame_index += 1
        cam = base_motion.camera_pose_of(self._pose, self._mount)
        self._frame = render(
            self._compiled,
            cam,
            intrinsics=self._intrinsics,
            frame_index=self._frame_index,
            noise_sigma_at_1m=self._noise,
            timestamp_ms=self._frame_index * self._interval_ms,
            impl=self._render_impl,
        )
        return self._frame

    def current_frame(self) -> Frame:
        with self._lock:
            return self._frame if self._frame is not None else self._render_now()

    @property
    def pose(self) -> base_motion.BasePose:
        return self._pose

    @property
    def intrinsics(self) -> CameraIntrinsics:
        return self._intrinsics

    @property
    def mount(self):
        """The fixed camera→base transform."""
        return self._mount

    @property
    def drive_geometry(self) -> DriveGeometry:
        return self._geometry

    # --- readouts -----------------------------------------------------------

    def hover(self, u: int, v: int) -> HoverReadout:
        """Deproject the cursor pixel into both frames; holes and sky
        give an empty readout, never an error."""
        with self._lock:
            frame = self.current_frame()
            self._last_hover_pixel = (u, v)
            cam_pt = deproject(frame, u, v)
            if cam_pt is None:
                self._last_standoff = None
                return HoverReadout()
            base_pt = transform_point(self._mount, cam_pt)
            self._last_standoff = base_pt.x
            return HoverReadout(cam_pt, base_pt, base_pt.x)

    def current_state(self) -> SessionState:
        return self._state

    # --- picking ------------------------------------------------------------

    def select(self, selection: PixelSelection) -> dict:
        """Store one picked point; completes measurements when a pair
        or triple fills up. Returns the resulting event."""
        with self._lock:
            allowed = _MODES_BY_STATE.get(self._state, set())
            if selection.mode not in allowed:
                raise WrongStateError(
                    f"{selection.mode.value} is not legal in {self._state.value}"
                )
            frame = self.current_frame()
            if not self._intrinsics.contains(selection.u, selection.v):
                raise ValueError(
                    f"pixel ({selection.u}, {selection.v}) outside the image"
                )
            if (
                selection.frame_timestamp is not None
                and abs(selection.frame_timestamp - frame.timestamp_ms)
                > STALE_SELECTION_MS
            ):
                frame = self._render_now()
            cam_pt = deproject(frame, selection.u, selection.v)
            if cam_pt is None:
                raise HolePickError(
                    f"pixel ({selection.u}, {selection.v}) has no depth; pick a "
                    "measurable area"
                )
            base_pt = transform_point(self._mount, cam_pt)
            self._picks[selection.mode] = base_pt
            self._selection_log.append(selection)
            event = {
                "kind": "point_stored",
                "mode": selection.mode.value,
                "pixel": [selection.u, selection.v],
                "base_point": _point_list(base_pt),
            }
            completed = self._maybe_complete_stage()
            if completed is not None:
                event = completed
            self._events.append(event)
            return event

    def _maybe_complete_stage(self) -> dict | None:
        picks = self._picks
        if self._state is SessionState.AWAIT_WIDTH_POINTS:
            if SelectionMode.WIDTH_P1 in picks and SelectionMode.WIDTH_P2 in picks:
                p1, p2 = picks[SelectionMode.WIDTH_P1], picks[SelectionMode.WIDTH_P2]
                result = distance_and_rotation(p1, p2)
                if result.distance <= 0:
                    del picks[SelectionMode.WIDTH_P1], picks[SelectionMode.WIDTH_P2]
                    raise InvalidParametersError("door width measured as zero; re-pick")
                self._door = result
                self._width_height_difference = abs(p1.z - p2.z)
                self._transition(SessionState.APPROACHING)
                return {
                    "kind": "width_measured",
                    "door_width": result.distance,
                    "door_rotation": result.rotation_direction.value,
                    "pick_height_difference": self._width_height_difference,
                }
        elif self._state is SessionState.AWAIT_HANDLE_POINTS:
            if SelectionMode.HANDLE_P1 in picks and SelectionMode.HANDLE_P2 in picks:
                p1, p2 = picks[SelectionMode.HANDLE_P1], picks[SelectionMode.HANDLE_P2]
                result = distance_and_rotation(p1, p2)
                assert self._door is not None
                if not (0 < result.distance < self._door.distance):
                    del picks[SelectionMode.HANDLE_P1], picks[SelectionMode.HANDLE_P2]
                    raise InvalidParametersError(
                        f"handle length {result.distance:.4f} must be positive and "
                        f"smaller than the door width {self._door.distance:.4f}; re-pick"
                    )
                self._handle = result
                self._transition(SessionState.AWAIT_NORMAL_POINTS)
                return {
                    "kind": "handle_measured",
                    "handle_length": result.distance,
                    "handle_rotation": result.rotation_direction.value,
                }
        elif self._state is SessionState.AWAIT_NORMAL_POINTS:
            triple = (
                SelectionMode.NORMAL_PA,
                SelectionMode.NORMAL_PB,
                SelectionMode.NORMAL_PC,
            )
            if all(m in picks for m in triple):
                pa, pb, pc = (picks[m] for m in triple)
                try:
                    normal = plane_normal(pa, pb, pc)
                    deviation = deviation_angle(normal)
                except (CollinearPointsError, DegenerateNormalError):
                    for m in triple:
                        del picks[m]
                    raise
                self._normal = normal
                self._deviation = deviation
                self._transition(SessionState.ORIENTING)
                return {
                    "kind": "normal_computed",
                    "normal": [normal.x, normal.y, normal.z],
                    "deviation_rad": deviation.theta_diff,
                }
        elif self._state is SessionState.AWAIT_CONTACT_POINT:
            if SelectionMode.CONTACT in picks:
                self._contact = picks[SelectionMode.CONTACT]
                self._transition(SessionState.READY_TO_SEND)
                return {
                    "kind": "contact_stored",
                    "contact_point": _point_list(self._contact),
                }
        return None

    # --- base motion ----------------------------------------------------------

    def begin_approach(self, target_standoff: float = DEFAULT_HANDLE_STANDOFF_M) -> DriveCommand:
        """Drive straight so the last hovered surface point sits
        target_standoff meters ahead of the base."""
        with self._lock:
            if self._state not in (
                SessionState.AWAIT_WIDTH_POINTS,
                SessionState.APPROACHING,
            ):
                raise WrongStateError(
                    f"approach is not legal in {self._state.value}"
                )
            if self._last_standoff is None:
                raise NoStandoffError(
                    "no standoff measured yet; hover over the target surface first"
                )
            distance = self._last_standoff - target_standoff
            self._pose = base_motion.drive(self._pose, distance)
            self._last_target = target_standoff
            self._relay_motion("drive", {"distance": distance})
            self._render_now()
            self._rehover()
            self._events.append(
                {
                    "kind": "approach",
                    "target_standoff": target_standoff,
                    "drive_distance": distance,
                    "standoff_after": self._last_standoff,
                }
            )
            return DriveCommand(distance)

    def confirm_standoff(self) -> float:
        """Re-hover the last pixel and report the residual against the
        last approach target; in Approaching this confirms the distance
        and opens the handle-measurement stage."""
        with self._lock:
            if self._last_target is None:
                raise NoStandoffError("no approach target set; approach first")
            self._rehover()
            if self._last_standoff is None:
                raise NoStandoffError(
                    "last hovered pixel no longer reads depth; hover again"
                )
            residual = self._last_standoff - self._last_target
            self._events.append(
                {
                    "kind": "standoff_confirmed",
                    "standoff": self._last_standoff,
                    "target": self._last_target,
                    "residual": residual,
                }
            )
            if self._state is SessionState.APPROACHING:
                self._transition(SessionState.AWAIT_HANDLE_POINTS)
            return residual

    def orient_base(self) -> dict:
        """Execute the in-place correction for the captured deviation."""
        with self._lock:
            if self._state is not SessionState.ORIENTING:
                raise WrongStateError(f"orient is not legal in {self._state.value}")
            assert self._deviation is not None
            self._pose, wheels = base_motion.orient(
                self._pose, self._deviation, self._geometry
            )
            self._relay_motion(
                "orient",
                {
                    "theta_diff": self._deviation.theta_diff,
                    "left_rotation": wheels.left_rotation,
                    "right_rotation": wheels.right_rotation,
                },
            )
            self._render_now()
            self._rehover()
            event = {
                "kind": "oriented",
                "theta_diff": self._deviation.theta_diff,
                "left_rotation": wheels.left_rotation,
                "right_rotation": wheels.right_rotation,
                "heading_after": self._pose.heading,
            }
            self._events.append(event)
            self._transition(SessionState.AWAIT_CONTACT_POINT)
            return event

    def _rehover(self) -> None:
        if self._last_hover_pixel is None:
            return
        u, v = self._last_hover_pixel
        assert self._frame is not None
        cam_pt = deproject(self._frame, u, v)
        if cam_pt is None:
            self._last_standoff = None
        else:
            self._last_standoff = transform_point(self._mount, cam_pt).x

    def _relay_motion(self, kind: str, payload: dict) -> None:
        if self._send_motion is None:
            return
        try:
            self._send_motion(kind, payload)
        except Exception as e:  # motion relay is advisory; the sim is authoritative
            self._events.append(
                {"kind": "motion_relay_failed", "command": kind, "error": str(e)}
            )

    # --- lifecycle --------------------------------------------------------------

    def reset_to(self, state: SessionState) -> None:
        """Re-open an earlier stage, clearing everything measured at or
        after it. Forward resets are illegal."""
        with self._lock:
            if state.order > self._state.order:
                raise WrongStateError(
                    f"cannot reset forward from {self._state.value} to {state.value}"
                )
            if state.order <= SessionState.AWAIT_WIDTH_POINTS.order:
                self._picks.pop(SelectionMode.WIDTH_P1, None)
                self._picks.pop(SelectionMode.WIDTH_P2, None)
                self._door = None
                self._width_height_difference = None
            if state.order <= SessionState.AWAIT_HANDLE_POINTS.order:
                self._picks.pop(SelectionMode.HANDLE_P1, None)
                self._picks.pop(SelectionMode.HANDLE_P2, None)
                self._handle = None
            if state.order <= SessionState.AWAIT_NORMAL_POINTS.order:
                self._picks.pop(SelectionMode.NORMAL_PA, None)
                self._picks.pop(SelectionMode.NORMAL_PB, None)
                self._picks.pop(SelectionMode.NORMAL_PC, None)
                self._normal = None
                self._deviation = None
            if state.order <= SessionState.AWAIT_CONTACT_POINT.order:
                self._picks.pop(SelectionMode.CONTACT, None)
                self._contact = None
            self._events.append({"kind": "reset", "to": state.value})
            self._transition(state)

    def finalize(self) -> ParameterSet:
        """Build the parameter set and ship it; Sent only after the
        slave acknowledges. Transport failures leave the session in
        ReadyToSend for an explicit retry."""
        with self._lock:
            if self._state is not SessionState.READY_TO_SEND:
                raise WrongStateError(
                    f"finalize is not legal in {self._state.value}"
                )
            assert (
                self._door is not None
                and self._handle is not None
                and self._deviation is not None
                and self._contact is not None
            )
            params = ParameterSet(
                door_width=self._door.distance,
                door_rotation=self._door.rotation_direction,
                handle_length=self._handle.distance,
                handle_rotation=self._handle.rotation_direction,
                contact_point=self._contact,
                deviation_at_capture=self._deviation.theta_diff,
            )
            if self._send_params is None:
                raise TransportClosed("no slave link configured")
            ack = self._send_params(params)
            self._events.append(
                {
                    "kind": "sent",
                    "ack_of": ack.payload.get("ack_of") if ack is not None else None,
                    "parameters": params.to_payload(),
                }
            )
            self._transition(SessionState.SENT)
            return params

    def _transition(self, state: SessionState) -> None:
        self._state = state
        self._state_trace.append(state.value)

    # --- introspection -------------------------------------------------------------

    @property
    def events(self) -> list[dict]:
        with self._lock:
            return list(self._events)

    @property
    def state_trace(self) -> list[str]:
        with self._lock:
            return list(self._state_trace)

    @property
    def selection_log(self) -> list[PixelSelection]:
        with self._lock:
            return list(self._selection_log)

    def snapshot(self) -> dict:
        """JSON-ready view of everything measured so far."""
        with self._lock:
            measured = {}
            if self._door is not None:
                measured["door_width"] = self._door.distance
                measured["door_rotation"] = self._door.rotation_direction.value
                measured["width_pick_height_difference"] = self._width_height_difference
            if self._handle is not None:
                measured["handle_length"] = self._handle.distance
                measured["handle_rotation"] = self._handle.rotation_direction.value
            if self._normal is not None:
                measured["plane_normal"] = [self._normal.x, self._normal.y, self._normal.z]
            if self._deviation is not None:
                measured["deviation_rad"] = self._deviation.theta_diff
            if self._contact is not None:
                measured["contact_point"] = _point_list(self._contact)
            return {
                "state": self._state.value,
                "pose": {
                    "x": self._pose.x,
                    "y": self._pose.y,
                    "heading": self._pose.heading,
                },
                "picks": {
                    mode.value: _point_list(p) for mode, p in self._picks.items()
                },
                "measured": measured,
                "last_standoff": self._last_standoff,
            }
