"""Depth / object-id rendering and mask projection for posed frames.

Depth maps store the camera-frame z coordinate (meters) of the nearest
ray-box intersection per pixel, ``BACKGROUND_DEPTH`` where nothing is hit.
Rays pass through pixel centers. A projected mask point is considered
visible when its depth agrees with the depth buffer within 1 cm.
"""

from __future__ import annotations

import numpy as np

from relwit.scenekit.model import BACKGROUND_DEPTH, Scene

DEPTH_AGREEMENT = 0.01  # meters; mask-visibility depth test tolerance


def _pixel_rays(pose, width: int, height: int) -> np.ndarray:
    """World-frame ray directions through all pixel centers, z_cam-normalized.

    Directions have unit camera-frame z, so the ray parameter t equals the
    camera-frame depth of the hit point. Shape (H*W, 3).
    """
    us = (np.arange(width) + 0.5 - pose.cx) / pose.fx
    vs = (np.arange(height) + 0.5 - pose.cy) / pose.fy
    uu, vv = np.meshgrid(us, vs)
    dirs_cam = np.stack([uu.ravel(), vv.ravel(), np.ones(uu.size)], axis=1)
    return dirs_cam @ pose.rotation  # R^T applied row-wise


def _ray_box_enter(origin: np.ndarray, dirs: np.ndarray, box) -> np.ndarray:
    """Per-ray entry parameter t for an oriented box; inf where the ray misses.

    Rays starting inside the box report the exit parameter (the first visible
    surface along the ray). Slab method in the box frame.
    """
    o = (origin - box.center) @ box.rotation
    d = dirs @ box.rotation
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / d
        t1 = (-box.half_extents - o) * inv
        t2 = (box.half_extents - o) * inv
    near = np.minimum(t1, t2)
    far = np.maximum(t1, t2)
    # Parallel rays: inside the slab -> unbounded, outside -> miss.
    par = d == 0.0
    if par.any():
        inside_slab = np.abs(o) <= box.half_extents
        near = np.where(par, np.where(inside_slab, -np.inf, np.inf), near)
        far = np.where(par, np.where(inside_slab, np.inf, -np.inf), far)
    t_enter = near.max(axis=1)
    t_exit = far.min(axis=1)
    hit = (t_enter <= t_exit) & (t_exit > 1e-9)
    t = np.where(t_enter > 1e-9, t_enter, t_exit)
    return np.where(hit, t, np.inf)


def _render_buffers(scene: Scene, frame_index: int) -> tuple[np.ndarray, np.ndarray]:
    """Joint z-buffer render of (depth, object-id map) for one frame."""
    frame = scene.frame_by_index(frame_index)
    width, height = scene.resolution
    origin = frame.pose.camera_center
    dirs = _pixel_rays(frame.pose, width, height)
    depth = np.full(dirs.shape[0], BACKGROUND_DEPTH)
    idmap = np.full(dirs.shape[0], -1, dtype=np.int64)
    for obj in scene.objects:
        for box in obj.render_boxes:
            t = _ray_box_enter(origin, dirs, box)
            closer = t < depth
            depth[closer] = t[closer]
            idmap[closer] = obj.id
    return depth.reshape(height, width), idmap.reshape(height, width)


def render_depth(scene: Scene, frame_index: int) -> np.ndarray:
    """Per-pixel nearest-intersection depth in meters, (H, W)."""
    return scene.depth(frame_index)


def render_id_map(scene: Scene, frame_index: int) -> np.ndarray:
    """Per-pixel id of the nearest object, -1 for background. Stands in for RGB."""
    return scene.id_map(frame_index)


def project_points(pose, points: np.ndarray, width: int, height: int):
    """Project world points to integer pixels.

    Returns (pixels (M,2) as (row, col), depths (M,), kept-index (M,)): only
    points in front of the camera and inside the image survive.
    """
    cam = pose.world_to_camera(np.atleast_2d(points))
    z = cam[:, 2]
    in_front = z > 1e-9
    idx = np.nonzero(in_front)[0]
    cam = cam[in_front]
    z = z[in_front]
    cols = np.floor(pose.fx * cam[:, 0] / z + pose.cx).astype(np.int64)
    rows = np.floor(pose.fy * cam[:, 1] / z + pose.cy).astype(np.int64)
    ok = (cols >= 0) & (cols < width) & (rows >= 0) & (rows < height)
    return np.stack([rows[ok], cols[ok]], axis=1), z[ok], idx[ok]


def _mask_pixel_sets(scene: Scene, object_id: int, frame_index: int):
    """(pre-depth-test pixel set, post-depth-test pixel set) for an object's mask.

    A projected point counts as visible when it sits at or in front of the
    depth buffer (within 1 cm) or when the buffer surface at its pixel belongs
    to the object itself; self-occlusion is not occlusion.
    """
    obj = scene.object_by_id(object_id)
    frame = scene.frame_by_index(frame_index)
    width, height = scene.resolution
    pixels, z, _ = project_points(frame.pose, obj.mask_points, width, height)
    if len(pixels) == 0:
        empty = np.zeros((0, 2), dtype=np.int64)
        return empty, empty
    depth = scene.depth(frame_index)
    idmap = scene.id_map(frame_index)
    buffered = depth[pixels[:, 0], pixels[:, 1]]
    owner = idmap[pixels[:, 0], pixels[:, 1]]
    visible = (z <= buffered + DEPTH_AGREEMENT) | (owner == object_id)
    pre = np.unique(pixels, axis=0)
    post = np.unique(pixels[visible], axis=0) if visible.any() else np.zeros((0, 2), dtype=np.int64)
    return pre, post


def project_mask(scene: Scene, object_id: int, frame_index: int) -> np.ndarray:
    """Binary (H, W) mask of the object's visible projected mask points."""
    width, height = scene.resolution
    mask = np.zeros((height, width), dtype=bool)
    _, post = _mask_pixel_sets(scene, object_id, frame_index)
    if len(post):
        mask[post[:, 0], post[:, 1]] = True
    return mask


def visibility(scene: Scene, object_id: int, frame_index: int) -> float:
    """Fraction of the object's projected mask pixels that survive the depth test."""
    cache = scene.__dict__.setdefault("_visibility_cache", {})
    key = (object_id, frame_index)
    if key not in cache:
        pre, post = _mask_pixel_sets(scene, object_id, frame_index)
        cache[key] = len(post) / len(pre) if len(pre) else 0.0
    return cache[key]
