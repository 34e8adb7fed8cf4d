import json

import pytest

from conftest import minimal_scene_doc
from doorteleop.errors import SceneParseError, SceneValidationError
from doorteleop.rgbd.scene import (
    HingeSide,
    SceneDescriptor,
    load_scene,
    scene_to_document,
)


class TestLoadScene:
    def test_minimal_document_echoes_fields(self):
        scene = load_scene(minimal_scene_doc())
        assert scene.door.width == 0.9
        assert scene.door.height == 2.0
        assert scene.handle.length == 0.11
        assert scene.door.hinge_side is HingeSide.LEFT
        assert scene.specular_patches == ()
        assert scene.depth_noise_sigma_at_1m == 0.0

    def test_patch_carried_through(self):
        doc = json.loads(minimal_scene_doc())
        doc["specular_patches"] = [
            {"surface": "handle", "u_min": 0.02, "u_max": 0.08, "v_min": 0.005, "v_max": 0.025}
        ]
        scene = load_scene(json.dumps(doc))
        assert len(scene.specular_patches) == 1
        assert scene.specular_patches[0].surface == "handle"
        assert scene.specular_patches[0].u_max == 0.08

    def test_nonpositive_handle_rejected(self):
        doc = json.loads(minimal_scene_doc())
        doc["handle"]["length"] = 0.0
        with pytest.raises(SceneValidationError, match="handle.length"):
            load_scene(json.dumps(doc))

    def test_handle_must_fit_on_door(self):
        doc = json.loads(minimal_scene_doc())
        doc["handle"]["length"] = 0.7
        with pytest.raises(SceneValidationError, match="fit on door"):
            load_scene(json.dumps(doc))

    def test_patch_must_lie_on_surface(self):
        doc = json.loads(minimal_scene_doc())
        doc["specular_patches"] = [
            {"surface": "door", "u_min": 0.5, "u_max": 1.2, "v_min": 0.1, "v_max": 0.2}
        ]
        with pytest.raises(SceneValidationError, match="door surface"):
            load_scene(json.dumps(doc))

    def test_version_field_mandatory(self):
        doc = json.loads(minimal_scene_doc())
        del doc["version"]
        with pytest.raises(SceneParseError, match="version"):
            load_scene(json.dumps(doc))

    def test_malformed_json_names_line(self):
        with pytest.raises(SceneParseError, match=r"line \d+"):
            load_scene('{\n  "version": 1,\n  "door": }\n')

    def test_missing_field_named(self):
        doc = json.loads(minimal_scene_doc())
        del doc["door"]["width"]
        with pytest.raises(SceneParseError, match="width"):
            load_scene(json.dumps(doc))

    def test_negative_seed_rejected(self):
        with pytest.raises(SceneValidationError, match="seed"):
            load_scene(minimal_scene_doc(seed=-3))

    def test_unknown_hinge_side(self):
        doc = json.loads(minimal_scene_doc())
        doc["door"]["hinge_side"] = "top"
        with pytest.raises(SceneParseError, match="hinge_side"):
            load_scene(json.dumps(doc))

    def test_round_trips_through_serialization(self):
        scene = load_scene(minimal_scene_doc(seed=9, depth_noise_sigma_at_1m=0.002))
        again = load_scene(scene_to_document(scene))
        assert again == scene
