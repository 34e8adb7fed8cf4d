import dataclasses
import json
import math
from pathlib import Path

import pytest

from doorteleop.rgbd.scene import SceneDescriptor, load_scene, load_scene_file

REPO_ROOT = Path(__file__).resolve().parent.parent
REFERENCE_SCENE_PATH = REPO_ROOT / "scenes" / "reference.json"


@pytest.fixture(scope="session")
def reference_scene() -> SceneDescriptor:
    return load_scene_file(REFERENCE_SCENE_PATH)


def scene_with(scene: SceneDescriptor, **changes) -> SceneDescriptor:
    """Clone a scene, replacing top-level or door fields."""
    door_changes = {k[5:]: v for k, v in changes.items() if k.startswith("door_")}
    top = {k: v for k, v in changes.items() if not k.startswith("door_")}
    if door_changes:
        top["door"] = dataclasses.replace(scene.door, **door_changes)
    return dataclasses.replace(scene, **top)


def scene_with_yaw(scene: SceneDescriptor, yaw_deg: float) -> SceneDescriptor:
    return scene_with(scene, door_yaw=math.radians(yaw_deg))


def minimal_scene_doc(**overrides) -> str:
    doc = {
        "version": 1,
        "door": {
            "hinge_position": [1.3, 0.45, -1.0],
            "width": 0.9,
            "height": 2.0,
            "thickness": 0.04,
            "yaw": 0.0,
            "hinge_side": "left",
        },
        "handle": {
            "mount_offset_from_moving_edge": 0.35,
            "height_on_door": 0.95,
            "length": 0.11,
            "cross_section": [0.02, 0.03],
            "standoff_from_door_face": 0.06,
        },
        "wall": {"width": 5.0, "height": 3.0},
    }
    doc.update(overrides)
    return json.dumps(doc)
