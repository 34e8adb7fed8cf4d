"""Raycast kernels: per-pixel intersection of camera rays with the
wall plane (doorway hole cut out), the door slab and the handle bar.

Two interchangeable implementations share the same arithmetic: a
numba-compiled pixel loop (hot path) and a vectorized pure-numpy
fallback. Setting DOORTELEOP_DISABLE_NUMBA=1 (or NUMBA_DISABLE_JIT)
selects the fallback. Depth is camera-frame z in meters; 0.0 encodes
sky, out-of-range and specular-patch pixels. Object ids: 0 sky, 1 wall,
2 door, 3 handle.
"""

from __future__ import annotations

import os

import numpy as np

_RAY_EPS = 1e-9
_DENOM_EPS = 1e-12

try:
    if os.environ.get("DOORTELEOP_DISABLE_NUMBA") or "NUMBA_DISABLE_JIT" in os.environ:
        raise ImportError
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

    def njit(*args, **kwargs):  # fallback decorator, keeps the source importable
        def wrap(f):
            return f

        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return wrap


@njit(cache=True)
def _raycast_pixels(
    width,
    height,
    fx,
    fy,
    cx,
    cy,
    cam_rot,
    cam_origin,
    wall_origin,
    wall_normal,
    wall_u,
    wall_v,
    wall_ext,
    wall_hole,
    box_center,
    box_axes,
    box_half,
    patch_surface,
    patch_rect,
    out_depth,
    out_obj,
):
    ox, oy, oz = cam_origin[0], cam_origin[1], cam_origin[2]
    won = (
        (wall_origin[0] - ox) * wall_normal[0]
        + (wall_origin[1] - oy) * wall_normal[1]
        + (wall_origin[2] - oz) * wall_normal[2]
    )
    n_patches = patch_surface.shape[0]
    for v in range(height):
        dy = (v - cy) / fy
        for u in range(width):
            dx = (u - cx) / fx
            # world ray direction, camera z component fixed at 1 so the
            # ray parameter equals camera depth
            dwx = cam_rot[0, 0] * dx + cam_rot[1, 0] * dy + cam_rot[2, 0]
            dwy = cam_rot[0, 1] * dx + cam_rot[1, 1] * dy + cam_rot[2, 1]
            dwz = cam_rot[0, 2] * dx + cam_rot[1, 2] * dy + cam_rot[2, 2]

            best = np.inf
            obj = 0
            face_u = 0.0
            face_v = 0.0
            on_face = False

            denom = dwx * wall_normal[0] + dwy * wall_normal[1] + dwz * wall_normal[2]
            if abs(denom) > _DENOM_EPS:
                s = won / denom
                if s > _RAY_EPS:
                    px = ox + s * dwx - wall_origin[0]
                    py = oy + s * dwy - wall_origin[1]
                    pz = oz + s * dwz - wall_origin[2]
                    a = px * wall_u[0] + py * wall_u[1] + pz * wall_u[2]
                    b = px * wall_v[0] + py * wall_v[1] + pz * wall_v[2]
                    if wall_ext[0] <= a <= wall_ext[1] and wall_ext[2] <= b <= wall_ext[3]:
                        inside_hole = (
                            wall_hole[0] <= a <= wall_hole[1]
                            and wall_hole[2] <= b <= wall_hole[3]
                        )
                        if not inside_hole:
                            best = s
                            obj = 1
                            face_u = a
                            face_v = b
                            on_face = True

            for k in range(2):
                plx = (
                    box_axes[k, 0, 0] * (ox - box_center[k, 0])
                    + box_axes[k, 0, 1] * (oy - box_center[k, 1])
                    + box_axes[k, 0, 2] * (oz - box_center[k, 2])
                )
                ply = (
                    box_axes[k, 1, 0] * (ox - box_center[k, 0])
                    + box_axes[k, 1, 1] * (oy - box_center[k, 1])
                    + box_axes[k, 1, 2] * (oz - box_center[k, 2])
                )
                plz = (
                    box_axes[k, 2, 0] * (ox - box_center[k, 0])
                    + box_axes[k, 2, 1] * (oy - box_center[k, 1])
                    + box_axes[k, 2, 2] * (oz - box_center[k, 2])
                )
                dlx = box_axes[k, 0, 0] * dwx + box_axes[k, 0, 1] * dwy + box_axes[k, 0, 2] * dwz
                dly = box_axes[k, 1, 0] * dwx + box_axes[k, 1, 1] * dwy + box_axes[k, 1, 2] * dwz
                dlz = box_axes[k, 2, 0] * dwx + box_axes[k, 2, 1] * dwy + box_axes[k, 2, 2] * dwz

                tmin = -np.inf
                tmax = np.inf
                hit_axis = -1
                ok = True
                for i in range(3):
                    if i == 0:
                        p_i, d_i = plx, dlx
                    elif i == 1:
                        p_i, d_i = ply, dly
                    else:
                        p_i, d_i = plz, dlz
                    h_i = box_half[k, i]
                    if abs(d_i) < _DENOM_EPS:
                        if abs(p_i) > h_i:
                            ok = False
                            break
                    else:
                        t1 = (-h_i - p_i) / d_i
                        t2 = (h_i - p_i) / d_i
                        if t1 > t2:
                            t1, t2 = t2, t1
                        if t1 > tmin:
                            tmin = t1
                            hit_axis = i
                        if t2 < tmax:
                            tmax = t2
                        if tmin > tmax:
                            ok = False
                            break
                if ok and _RAY_EPS < tmin < best:
                    best = tmin
                    obj = 2 + k
                    if hit_axis == 1 and dly < 0.0:
                        face_u = (plx + tmin * dlx) + box_half[k, 0]
                        face_v = (plz + tmin * dlz) + box_half[k, 2]
                        on_face = True
                    else:
                        on_face = False

            out_obj[v, u] = obj
            if obj == 0:
                out_depth[v, u] = 0.0
            else:
                z = best
                holed = False
                if on_face:
                    for j in range(n_patches):
                        if patch_surface[j] == obj:
                            if (
                                patch_rect[j, 0] <= face_u <= patch_rect[j, 1]
                                and patch_rect[j, 2] <= face_v <= patch_rect[j, 3]
                            ):
                                holed = True
                                break
                if holed:
                    out_depth[v, u] = 0.0
                else:
                    out_depth[v, u] = z


def raycast_numba(intr, cam_rot, cam_origin, compiled):
    depth = np.empty((intr.height, intr.width), dtype=np.float64)
    obj = np.empty((intr.height, intr.width), dtype=np.uint8)
    _raycast_pixels(
        intr.width,
        intr.height,
        intr.fx,
        intr.fy,
        intr.cx,
        intr.cy,
        cam_rot,
        cam_origin,
        compiled.wall_origin,
        compiled.wall_normal,
        compiled.wall_u,
        compiled.wall_v,
        compiled.wall_ext,
        compiled.wall_hole,
        compiled.box_center,
        compiled.box_axes,
        compiled.box_half,
        compiled.patch_surface,
        compiled.patch_rect,
        depth,
        obj,
    )
    return depth, obj


def raycast_numpy(intr, cam_rot, cam_origin, compiled):
    """Vectorized fallback; mirrors the compiled kernel's arithmetic."""
    h, w = intr.height, intr.width
    us = np.arange(w, dtype=np.float64)
    vs = np.arange(h, dtype=np.float64)
    dx = (us[None, :] - intr.cx) / intr.fx  # broadcast rows
    dy = (vs[:, None] - intr.cy) / intr.fy
    r = cam_rot
    dwx = r[0, 0] * dx + r[1, 0] * dy + r[2, 0]
    dwy = r[0, 1] * dx + r[1, 1] * dy + r[2, 1]
    dwz = r[0, 2] * dx + r[1, 2] * dy + r[2, 2]
    ox, oy, oz = cam_origin

    best = np.full((h, w), np.inf)
    obj = np.zeros((h, w), dtype=np.uint8)
    face_u = np.zeros((h, w))
    face_v = np.zeros((h, w))
    on_face = np.zeros((h, w), dtype=bool)

    nrm = compiled.wall_normal
    won = (
        (compiled.wall_origin[0] - ox) * nrm[0]
        + (compiled.wall_origin[1] - oy) * nrm[1]
        + (compiled.wall_origin[2] - oz) * nrm[2]
    )
    denom = dwx * nrm[0] + dwy * nrm[1] + dwz * nrm[2]
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(np.abs(denom) > _DENOM_EPS, won / denom, np.inf)
    valid = s > _RAY_EPS
    px = ox + s * dwx - compiled.wall_origin[0]
    py = oy + s * dwy - compiled.wall_origin[1]
    pz = oz + s * dwz - compiled.wall_origin[2]
    a = px * compiled.wall_u[0] + py * compiled.wall_u[1] + pz * compiled.wall_u[2]
    b = px * compiled.wall_v[0] + py * compiled.wall_v[1] + pz * compiled.wall_v[2]
    ext, hole = compiled.wall_ext, compiled.wall_hole
    on_wall = (
        valid
        & (a >= ext[0])
        & (a <= ext[1])
        & (b >= ext[2])
        & (b <= ext[3])
        & ~((a >= hole[0]) & (a <= hole[1]) & (b >= hole[2]) & (b <= hole[3]))
    )
    hit = on_wall & (s < best)
    best[hit] = s[hit]
    obj[hit] = 1
    face_u[hit] = a[hit]
    face_v[hit] = b[hit]
    on_face[hit] = True

    for k in range(2):
        axes = compiled.box_axes[k]
        center = compiled.box_center[k]
        half = compiled.box_half[k]
        rel = np.array([ox, oy, oz]) - center
        pl = np.array([axes[i, 0] * rel[0] + axes[i, 1] * rel[1] + axes[i, 2] * rel[2] for i in range(3)])
        dl = [axes[i, 0] * dwx + axes[i, 1] * dwy + axes[i, 2] * dwz for i in range(3)]

        tmin = np.full((h, w), -np.inf)
        tmax = np.full((h, w), np.inf)
        hit_axis = np.full((h, w), -1, dtype=np.int8)
        ok = np.ones((h, w), dtype=bool)
        for i in range(3):
            d_i = dl[i]
            parallel = np.abs(d_i) < _DENOM_EPS
            ok &= ~(parallel & (abs(pl[i]) > half[i]))
            with np.errstate(divide="ignore", invalid="ignore"):
                t1 = (-half[i] - pl[i]) / d_i
                t2 = (half[i] - pl[i]) / d_i
            lo = np.minimum(t1, t2)
            hi = np.maximum(t1, t2)
            enters = ~parallel & (lo > tmin)
            tmin = np.where(enters, lo, tmin)
            hit_axis = np.where(enters, np.int8(i), hit_axis)
            tmax = np.where(~parallel, np.minimum(tmax, hi), tmax)
        ok &= tmin <= tmax
        hit = ok & (tmin > _RAY_EPS) & (tmin < best)
        best[hit] = tmin[hit]
        obj[hit] = 2 + k
        front = hit & (hit_axis == 1) & (dl[1] < 0.0)
        fu = (pl[0] + tmin * dl[0]) + half[0]
        fv = (pl[2] + tmin * dl[2]) + half[2]
        face_u[front] = fu[front]
        face_v[front] = fv[front]
        on_face[hit] = False
        on_face[front] = True

    depth = np.where(obj > 0, best, 0.0)
    for j in range(compiled.patch_surface.shape[0]):
        rect = compiled.patch_rect[j]
        holed = (
            on_face
            & (obj == compiled.patch_surface[j])
            & (face_u >= rect[0])
            & (face_u <= rect[1])
            & (face_v >= rect[2])
            & (face_v <= rect[3])
        )
        depth[holed] = 0.0
    return depth, obj


def raycast(intr, cam_rot, cam_origin, compiled, impl: str | None = None):
    """Dispatch to the compiled kernel when available, else the numpy
    fallback; `impl` forces one path ("numba" / "numpy")."""
    if impl is None:
        impl = "numba" if HAVE_NUMBA else "numpy"
    if impl == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError("numba path requested but numba is unavailable/disabled")
        return raycast_numba(intr, cam_rot, cam_origin, compiled)
    if impl == "numpy":
        return raycast_numpy(intr, cam_rot, cam_origin, compiled)
    raise ValueError(f"unknown raycast impl {impl!r}")
