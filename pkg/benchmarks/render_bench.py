"""Benchmark the raycast renderer: numba kernel vs pure-numpy fallback.

    python benchmarks/render_bench.py [--frames 20] [--scene scenes/reference.json]

The numba timing excludes the one-time JIT compile (first call warms it
up). Run with DOORTELEOP_DISABLE_NUMBA=1 to confirm the fallback is the
one being exercised by default dispatch.
"""

import argparse
import math
import statistics
import time
from pathlib import Path

from doorteleop.base_motion import BasePose, camera_pose_of
from doorteleop.geometry import default_camera_mount
from doorteleop.rgbd import kernels
from doorteleop.rgbd.render import render
from doorteleop.rgbd.scene import compile_scene, load_scene_file

REPO_ROOT = Path(__file__).resolve().parent.parent


def time_impl(compiled, poses, impl: str) -> list[float]:
    mount = default_camera_mount()
    render(compiled, camera_pose_of(poses[0], mount), impl=impl)  # warmup / JIT
    samples = []
    for pose in poses:
        cam = camera_pose_of(pose, mount)
        t0 = time.perf_counter()
        render(compiled, cam, impl=impl)
        samples.append((time.perf_counter() - t0) * 1000.0)
    return samples


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--frames", type=int, default=20)
    parser.add_argument(
        "--scene", default=str(REPO_ROOT / "scenes" / "reference.json")
    )
    args = parser.parse_args()

    scene = load_scene_file(args.scene)
    compiled = compile_scene(scene)
    poses = [
        BasePose(0.02 * i, 0.0, math.radians(0.5) * i) for i in range(args.frames)
    ]

    results = {}
    impls = ["numpy"] + (["numba"] if kernels.HAVE_NUMBA else [])
    for impl in impls:
        samples = time_impl(compiled, poses, impl)
        results[impl] = samples
        print(
            f"{impl:>6}: median {statistics.median(samples):8.2f} ms/frame   "
            f"min {min(samples):8.2f}   max {max(samples):8.2f}   "
            f"({len(samples)} frames, 640x480)"
        )
    if not kernels.HAVE_NUMBA:
        print(" numba: unavailable or disabled (DOORTELEOP_DISABLE_NUMBA / NUMBA_DISABLE_JIT)")
    if len(results) == 2:
        speedup = statistics.median(results["numpy"]) / statistics.median(results["numba"])
        print(f"speedup: {speedup:.1f}x (numba over numpy)")


if __name__ == "__main__":
    main()
