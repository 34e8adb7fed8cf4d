import dataclasses
import json
import math
import random

import pytest

from conftest import minimal_scene_doc
from doorteleop.errors import (
    CollinearPointsError,
    HolePickError,
    InvalidParametersError,
    NoStandoffError,
    TransportClosed,
    WrongStateError,
)
from doorteleop.rgbd.scene import load_scene
from doorteleop.scripting import PickPlanner, apply_action, plan_full_script
from doorteleop.session import (
    PixelSelection,
    SelectionMode,
    Session,
    SessionState,
)

ACK = type("Ack", (), {"payload": {"ack_of": 1}})()


def make_session(scene=None, **kwargs) -> Session:
    scene = scene or load_scene(minimal_scene_doc())
    kwargs.setdefault("send_params", lambda p: ACK)
    return Session(scene, **kwargs)


def patched_scene():
    doc = json.loads(minimal_scene_doc())
    doc["specular_patches"] = [
        {"surface": "door", "u_min": 0.10, "u_max": 0.30, "v_min": 0.55, "v_max": 0.75}
    ]
    return load_scene(json.dumps(doc))


def patch_pixel(session) -> tuple[int, int]:
    """A pixel whose ray lands inside the door patch above."""
    import numpy as np

    from doorteleop.base_motion import camera_pose_of
    from doorteleop.geometry import FrameId, Point3
    from doorteleop.rgbd.intrinsics import project
    from doorteleop.rgbd.scene import door_face_point

    pt = door_face_point(session._compiled.descriptor, 0.20, 0.65)
    cam = camera_pose_of(session.pose, session.mount).apply(pt)
    u, v = project(session.intrinsics, Point3(cam[0], cam[1], cam[2], FrameId.CAMERA))
    return int(round(u)), int(round(v))


class TestHover:
    def test_door_plane_one_meter_ahead(self):
        doc = json.loads(minimal_scene_doc())
        doc["door"]["hinge_position"] = [1.15, 0.45, -1.0]  # face 1.0 m from the camera
        session = make_session(load_scene(json.dumps(doc)))
        frame = session.current_frame()
        readout = session.hover(319, 240)
        assert not readout.empty
        assert readout.standoff == pytest.approx(1.0 + 0.15, abs=1e-9)
        assert readout.base_point.x == readout.standoff
        assert readout.camera_point.z == pytest.approx(1.0, abs=1e-9)

    def test_hole_gives_empty_readout(self):
        session = make_session(patched_scene())
        u, v = patch_pixel(session)
        readout = session.hover(u, v)
        assert readout.empty
        assert readout.base_point is None and readout.standoff is None

    def test_sky_gives_empty_readout(self):
        doc = json.loads(minimal_scene_doc())
        doc["wall"] = {"width": 1.2, "height": 2.2}  # narrow wall, sky at the sides
        session = make_session(load_scene(json.dumps(doc)))
        readout = session.hover(3, 240)
        assert readout.empty


class TestSelect:
    def test_fresh_session_state(self):
        assert make_session().current_state() is SessionState.AWAIT_WIDTH_POINTS

    def test_wrong_mode_rejected_without_mutation(self):
        session = make_session()
        before = session.snapshot()
        with pytest.raises(WrongStateError):
            session.select(PixelSelection(320, 240, SelectionMode.CONTACT))
        assert session.snapshot() == before

    def test_hole_pick_rejected_without_mutation(self):
        session = make_session(patched_scene())
        u, v = patch_pixel(session)
        before = session.snapshot()
        with pytest.raises(HolePickError):
            session.select(PixelSelection(u, v, SelectionMode.WIDTH_P1))
        assert session.snapshot() == before

    def test_repick_last_wins_then_pair_completes(self):
        session = make_session()
        session.select(PixelSelection(200, 240, SelectionMode.WIDTH_P1))
        session.select(PixelSelection(210, 240, SelectionMode.WIDTH_P1))
        assert session.current_state() is SessionState.AWAIT_WIDTH_POINTS
        picks = session.snapshot()["picks"]
        assert len(picks) == 1
        event = session.select(PixelSelection(420, 240, SelectionMode.WIDTH_P2))
        assert event["kind"] == "width_measured"
        assert session.current_state() is SessionState.APPROACHING

    def test_hinge_left_measures_ccw(self, reference_scene):
        planner = PickPlanner(reference_scene)
        planner.approach(1.0)
        event = planner.pick_width()
        assert event["door_rotation"] == "CCW"
        assert 0.89 <= event["door_width"] <= 0.91

    def test_collinear_normals_clear_picks(self):
        session = make_session()
        # skip ahead: width pair, approach, confirm
        session.select(PixelSelection(200, 240, SelectionMode.WIDTH_P1))
        session.select(PixelSelection(420, 240, SelectionMode.WIDTH_P2))
        session.hover(320, 240)
        session.begin_approach(0.75)
        session.confirm_standoff()
        session.select(PixelSelection(300, 300, SelectionMode.HANDLE_P1))
        session.select(PixelSelection(360, 300, SelectionMode.HANDLE_P2))
        assert session.current_state() is SessionState.AWAIT_NORMAL_POINTS
        session.select(PixelSelection(200, 300, SelectionMode.NORMAL_PA))
        session.select(PixelSelection(300, 300, SelectionMode.NORMAL_PB))
        with pytest.raises(CollinearPointsError):
            session.select(PixelSelection(400, 300, SelectionMode.NORMAL_PC))
        assert session.current_state() is SessionState.AWAIT_NORMAL_POINTS
        picks = session.snapshot()["picks"]
        assert not any(k.startswith("Normal") for k in picks)


class TestApproach:
    def test_drive_is_standoff_minus_target(self):
        doc = json.loads(minimal_scene_doc())
        doc["door"]["hinge_position"] = [1.15, 0.45, -1.0]
        session = make_session(load_scene(json.dumps(doc)))
        session.hover(319, 240)  # standoff 1.15
        cmd = session.begin_approach(0.75)
        assert cmd.distance == pytest.approx(0.40, abs=1e-9)
        assert session.pose.x == pytest.approx(0.40, abs=1e-9)

    def test_zero_drive_at_target(self, reference_scene):
        session = make_session(reference_scene)
        session.hover(319, 240)
        standoff = session.snapshot()["last_standoff"]
        cmd = session.begin_approach(standoff)
        assert cmd.distance == 0.0

    def test_requires_standoff(self):
        session = make_session()
        with pytest.raises(NoStandoffError):
            session.begin_approach(0.75)

    def test_confirm_advances_from_approaching(self, reference_scene):
        session = make_session(reference_scene)
        session.select(PixelSelection(200, 240, SelectionMode.WIDTH_P1))
        session.select(PixelSelection(420, 240, SelectionMode.WIDTH_P2))
        assert session.current_state() is SessionState.APPROACHING
        session.hover(319, 240)
        session.begin_approach(0.75)
        residual = session.confirm_standoff()
        assert abs(residual) <= 5e-3
        assert session.current_state() is SessionState.AWAIT_HANDLE_POINTS

    def test_confirm_without_target(self):
        session = make_session()
        with pytest.raises(NoStandoffError):
            session.confirm_standoff()


class TestResetAndFinalize:
    def _ready_session(self, reference_scene):
        session = make_session(reference_scene)
        for action in plan_full_script(reference_scene, include_finalize=False):
            apply_action(session, action)
        assert session.current_state() is SessionState.READY_TO_SEND
        return session

    def test_reset_clears_downstream(self, reference_scene):
        session = self._ready_session(reference_scene)
        session.reset_to(SessionState.AWAIT_HANDLE_POINTS)
        snap = session.snapshot()
        assert "door_width" in snap["measured"]
        assert "handle_length" not in snap["measured"]
        assert "deviation_rad" not in snap["measured"]
        assert "contact_point" not in snap["measured"]
        assert session.current_state() is SessionState.AWAIT_HANDLE_POINTS

    def test_forward_reset_rejected(self):
        session = make_session()
        with pytest.raises(WrongStateError):
            session.reset_to(SessionState.SENT)

    def test_finalize_happy_path_then_wrong_state(self, reference_scene):
        session = self._ready_session(reference_scene)
        params = session.finalize()
        assert params.door_width > params.handle_length > 0
        assert session.current_state() is SessionState.SENT
        with pytest.raises(WrongStateError):
            session.finalize()

    def test_finalize_before_contact_rejected(self, reference_scene):
        session = make_session(reference_scene)
        with pytest.raises(WrongStateError):
            session.finalize()

    def test_transport_failure_keeps_ready_state(self, reference_scene):
        def broken(params):
            raise TransportClosed("slave is gone")

        session = make_session(reference_scene, send_params=broken)
        for action in plan_full_script(reference_scene, include_finalize=False):
            apply_action(session, action)
        with pytest.raises(TransportClosed):
            session.finalize()
        assert session.current_state() is SessionState.READY_TO_SEND
        session._send_params = lambda p: ACK  # slave back up; explicit retry works
        session.finalize()
        assert session.current_state() is SessionState.SENT


class TestStateMachineClosure:
    def test_random_action_fuzz(self, reference_scene):
        rng = random.Random(20240817)
        session = make_session(reference_scene)
        intr = session.intrinsics
        states = set(SessionState)
        for _ in range(400):
            roll = rng.random()
            before = session.snapshot()
            try:
                if roll < 0.55:
                    session.select(
                        PixelSelection(
                            rng.randrange(intr.width),
                            rng.randrange(intr.height),
                            rng.choice(list(SelectionMode)),
                        )
                    )
                elif roll < 0.65:
                    session.hover(rng.randrange(intr.width), rng.randrange(intr.height))
                elif roll < 0.75:
                    session.begin_approach(rng.uniform(0.7, 1.3))
                elif roll < 0.82:
                    session.confirm_standoff()
                elif roll < 0.90:
                    session.orient_base()
                elif roll < 0.96:
                    session.reset_to(rng.choice(list(SessionState)))
                else:
                    session.finalize()
            except (WrongStateError, HolePickError, NoStandoffError):
                assert session.snapshot() == before  # rejected actions mutate nothing
            except (CollinearPointsError, InvalidParametersError, TransportClosed):
                pass  # legal actions whose computation failed downstream
            assert session.current_state() in states

    def test_contact_requires_normal_stage_first(self, reference_scene):
        session = make_session(reference_scene)
        order = [s.value for s in SessionState]
        assert order.index("AwaitNormalPoints") < order.index("AwaitContactPoint")
        with pytest.raises(WrongStateError):
            session.select(PixelSelection(320, 240, SelectionMode.CONTACT))


class TestReplayDeterminism:
    def test_parameters_reproducible_from_logged_actions(self, reference_scene):
        actions = plan_full_script(reference_scene, include_finalize=False)
        first = make_session(reference_scene)
        for a in actions:
            apply_action(first, a)
        second = make_session(reference_scene)
        for a in actions:
            apply_action(second, a)
        assert first.snapshot() == second.snapshot()
        assert first.events == second.events
