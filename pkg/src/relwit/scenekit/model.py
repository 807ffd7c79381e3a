"""Core scene types: camera poses, oriented boxes, objects, labels, scenes.

World frame convention: z is up (gravity along -z), units are meters.
Camera frame convention: x right, y down, z forward (standard pinhole).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

# Depth value written where a ray hits no object.
BACKGROUND_DEPTH = np.inf

# Wall thickness of hollow containers (render shells and placement interiors).
SHELL_THICKNESS = 0.04

_ORTHO_TOL = 1e-6


class SceneValidationError(ValueError):
    """A scene component violates one of its structural invariants."""


def _as_f64(x, shape) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.shape != shape:
        raise SceneValidationError(f"expected shape {shape}, got {arr.shape}")
    return arr


@dataclass(frozen=True)
class CameraPose:
    """World-to-camera rigid transform plus pinhole intrinsics (pixels)."""

    rotation: np.ndarray  # (3,3), world -> camera
    translation: np.ndarray  # (3,), meters
    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        object.__setattr__(self, "rotation", _as_f64(self.rotation, (3, 3)))
        object.__setattr__(self, "translation", _as_f64(self.translation, (3,)))
        err = np.abs(self.rotation.T @ self.rotation - np.eye(3)).max()
        if err > _ORTHO_TOL:
            raise SceneValidationError(f"rotation not orthonormal (max |R^T R - I| = {err:.2e})")
        if self.fx <= 0 or self.fy <= 0:
            raise SceneValidationError("focal lengths must be positive")

    @property
    def camera_center(self) -> np.ndarray:
        """Camera position in world coordinates."""
        return -self.rotation.T @ self.translation

    def world_to_camera(self, points: np.ndarray) -> np.ndarray:
        return points @ self.rotation.T + self.translation

    def camera_to_world(self, points: np.ndarray) -> np.ndarray:
        return (points - self.translation) @ self.rotation


@dataclass(frozen=True)
class Frame:
    """One posed frame; depth and the object-id map are rendered lazily by the scene."""

    index: int
    pose: CameraPose


@dataclass
class OrientedBox:
    """Oriented 3D box: center, positive half extents and a box-to-world rotation."""

    center: np.ndarray
    half_extents: np.ndarray
    rotation: np.ndarray  # (3,3), box -> world

    def __post_init__(self):
        self.center = _as_f64(self.center, (3,))
        self.half_extents = _as_f64(self.half_extents, (3,))
        self.rotation = _as_f64(self.rotation, (3, 3))
        if (self.half_extents <= 0).any():
            raise SceneValidationError("half extents must be positive")
        err = np.abs(self.rotation.T @ self.rotation - np.eye(3)).max()
        if err > _ORTHO_TOL:
            raise SceneValidationError("box rotation not orthonormal")

    def volume(self) -> float:
        return float(8.0 * np.prod(self.half_extents))

    def corners(self) -> np.ndarray:
        """The 8 box corners in world coordinates, shape (8, 3)."""
        signs = np.array(
            [[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)],
            dtype=np.float64,
        )
        return self.center + (signs * self.half_extents) @ self.rotation.T

    def to_local(self, points: np.ndarray) -> np.ndarray:
        return (np.atleast_2d(points) - self.center) @ self.rotation

    def to_world(self, local: np.ndarray) -> np.ndarray:
        return np.atleast_2d(local) @ self.rotation.T + self.center

    def contains(
        self,
        points: np.ndarray,
        tol: float = 0.0,
        open_face: Optional[tuple[int, int]] = None,
        open_inflation: float = 0.0,
    ) -> np.ndarray:
        """Boolean per-point containment test in the (possibly tolerance-grown) box.

        ``open_face`` = (axis, sign) marks an access face; the box is inflated
        outward on that face by ``open_inflation`` so objects sitting at an open
        container's mouth still count as inside.
        """
        q = self.to_local(points)
        lo = -self.half_extents - tol
        hi = self.half_extents + tol
        if open_face is not None:
            axis, sign = open_face
            if sign > 0:
                hi[axis] += open_inflation
            else:
                lo[axis] -= open_inflation
        return np.all((q >= lo) & (q <= hi), axis=1)

    def surface_distance_outside(self, points: np.ndarray) -> np.ndarray:
        """Distance from each point to the box surface; 0 for interior points."""
        q = np.abs(self.to_local(points)) - self.half_extents
        return np.linalg.norm(np.maximum(q, 0.0), axis=1)

    def top(self) -> float:
        """Highest world-z reached by the box."""
        return float(self.corners()[:, 2].max())

    def bottom(self) -> float:
        """Lowest world-z reached by the box."""
        return float(self.corners()[:, 2].min())


def shell_boxes(obb: OrientedBox, open_face: tuple[int, int], thickness: float) -> list[OrientedBox]:
    """Decompose an open container into its 5 wall slabs (back + 4 sides).

    The open face is left uncovered so rays (and cameras) can see inside.
    """
    a, sign = open_face
    b, c = [k for k in range(3) if k != a]
    h = obb.half_extents
    w = min(thickness, 0.4 * h.min())
    slabs = []

    def add(center_local, half_local):
        slabs.append(
            OrientedBox(
                center=obb.to_world(np.asarray(center_local, dtype=np.float64)[None, :])[0],
                half_extents=np.asarray(half_local, dtype=np.float64),
                rotation=obb.rotation.copy(),
            )
        )

    back_center = np.zeros(3)
    back_center[a] = -sign * (h[a] - w / 2)
    back_half = h.copy()
    back_half[a] = w / 2
    add(back_center, back_half)
    for axis in (b, c):
        for s in (-1.0, 1.0):
            center = np.zeros(3)
            center[axis] = s * (h[axis] - w / 2)
            center[a] = sign * w / 2  # side walls span the interior, not the back slab
            half = h.copy()
            half[axis] = w / 2
            half[a] = h[a] - w / 2
            add(center, half)
    return slabs


class LabelStatus(Enum):
    ANNOTATED_POSITIVE = "annotated"
    UNLABELED = "unlabeled"


@dataclass
class ObjectInstance:
    """A placed object: category, box, sampled mask points, feature and orientation."""

    id: int
    category: str
    obb: OrientedBox
    mask_points: np.ndarray  # (N, 3) world frame
    feature: np.ndarray  # (32,)
    front_axis: np.ndarray  # unit 3-vector
    symmetric: bool = False
    open_face: Optional[tuple[int, int]] = None  # (axis, sign) in box frame
    visible_frames: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self):
        self.mask_points = np.asarray(self.mask_points, dtype=np.float64)
        self.feature = np.asarray(self.feature, dtype=np.float64)
        self.front_axis = _as_f64(self.front_axis, (3,))
        if abs(np.linalg.norm(self.front_axis) - 1.0) > _ORTHO_TOL:
            raise SceneValidationError(f"front_axis of object {self.id} is not unit length")
        if self.mask_points.ndim != 2 or self.mask_points.shape[1] != 3:
            raise SceneValidationError("mask_points must be (N, 3)")
        inside = self.obb.contains(self.mask_points, tol=1e-6)
        if not inside.all():
            raise SceneValidationError(
                f"{int((~inside).sum())} mask points of object {self.id} fall outside its box"
            )
        self.visible_frames = frozenset(int(t) for t in self.visible_frames)

    @property
    def render_boxes(self) -> list[OrientedBox]:
        """Solid geometry seen by the renderer: the box, or wall slabs when open."""
        if self.open_face is None:
            return [self.obb]
        return shell_boxes(self.obb, self.open_face, SHELL_THICKNESS)


@dataclass
class RelationLabel:
    """One (subject, phrase, object) annotation; ``truth`` is the hidden synthetic bit.

    The truth field is generator-side ground truth. It exists for oracles and
    evaluation only; learner-facing code must not read it (enforced by test).
    """

    subject_id: int
    object_id: int
    phrase: str
    status: LabelStatus
    truth: Optional[int] = None

    def __post_init__(self):
        if self.subject_id == self.object_id:
            raise SceneValidationError("relation label needs two distinct objects")
        if self.status is LabelStatus.ANNOTATED_POSITIVE and self.truth is not None:
            if self.truth != 1:
                raise SceneValidationError("annotated positive labels must carry truth=1")


@dataclass
class Scene:
    """Immutable posed-frame scene with objects and (incomplete) relation labels."""

    scene_id: str
    frames: list[Frame]
    objects: list[ObjectInstance]
    labels: list[RelationLabel]
    room_scale: float
    seed: int
    resolution: tuple[int, int]  # (width, height)
    proximity_radius: float = 0.5

    def __post_init__(self):
        ids = [o.id for o in self.objects]
        if len(set(ids)) != len(ids):
            raise SceneValidationError("object ids must be unique")
        if self.room_scale <= 0:
            raise SceneValidationError("room_scale must be positive")
        known = set(ids)
        for lab in self.labels:
            if lab.subject_id not in known or lab.object_id not in known:
                raise SceneValidationError(
                    f"label ({lab.subject_id},{lab.phrase},{lab.object_id}) references a missing object"
                )
        frame_ids = {f.index for f in self.frames}
        for obj in self.objects:
            if not obj.visible_frames <= frame_ids:
                raise SceneValidationError(f"visible_frames of object {obj.id} outside scene frames")
        self._by_id = {o.id: o for o in self.objects}
        self._depth_cache: dict[int, np.ndarray] = {}
        self._idmap_cache: dict[int, np.ndarray] = {}

    def object_by_id(self, object_id: int) -> ObjectInstance:
        try:
            return self._by_id[object_id]
        except KeyError:
            raise SceneValidationError(f"no object with id {object_id}") from None

    def frame_by_index(self, frame_index: int) -> Frame:
        for f in self.frames:
            if f.index == frame_index:
                return f
        raise SceneValidationError(f"no frame with index {frame_index}")

    # Rendering is cached per frame; scenes are immutable after construction so
    # the caches are safe for concurrent readers.
    def depth(self, frame_index: int) -> np.ndarray:
        if frame_index not in self._depth_cache:
            from relwit.scenekit.render import _render_buffers

            depth, idmap = _render_buffers(self, frame_index)
            self._depth_cache[frame_index] = depth
            self._idmap_cache[frame_index] = idmap
        return self._depth_cache[frame_index]

    def id_map(self, frame_index: int) -> np.ndarray:
        if frame_index not in self._idmap_cache:
            self.depth(frame_index)
        return self._idmap_cache[frame_index]
