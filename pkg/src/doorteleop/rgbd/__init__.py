from .intrinsics import CameraIntrinsics, default_intrinsics, project
from .scene import SceneDescriptor, load_scene, load_scene_file
from .render import Frame, deproject, render
from . import png_io

__all__ = [
    "CameraIntrinsics",
    "default_intrinsics",
    "project",
    "SceneDescriptor",
    "load_scene",
    "load_scene_file",
    "Frame",
    "deproject",
    "render",
    "png_io",
]
