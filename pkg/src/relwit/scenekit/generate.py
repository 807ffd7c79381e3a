"""Procedural desk-scale scene generator with known ground-truth relations.

Objects are placed in named configurations (stacked, contained, adjacent,
facing, mounted); ground-truth relation bits are then *derived* from the
resulting geometry by the oracle predicates, so every emitted truth bit is
consistent with the scene by construction. A configurable fraction of true
positives is demoted to Unlabeled to realize incomplete supervision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from relwit.scenekit.model import (
    SHELL_THICKNESS,
    CameraPose,
    Frame,
    LabelStatus,
    ObjectInstance,
    OrientedBox,
    RelationLabel,
    Scene,
)


class GenerationError(ValueError):
    """The spec cannot be realized (placement retries exhausted, bad ranges)."""


# Per-category half-extent ranges (meters) and placement roles.
@dataclass(frozen=True)
class _Cat:
    hx: tuple[float, float]
    hy: tuple[float, float]
    hz: tuple[float, float]
    base: bool = False  # placed directly on the floor as anchor furniture
    support: bool = False  # top face usable for stacking
    container: bool = False
    open_face: Optional[tuple[int, int]] = None  # (axis, sign) in box frame
    front: bool = False  # has a meaningful front axis
    mountable: bool = False  # thin, goes on walls


_CATEGORIES: dict[str, _Cat] = {
    "table": _Cat((0.45, 0.7), (0.35, 0.5), (0.35, 0.40), base=True, support=True),
    "desk": _Cat((0.5, 0.7), (0.3, 0.4), (0.36, 0.39), base=True, support=True),
    "shelf": _Cat((0.35, 0.5), (0.16, 0.22), (0.5, 0.8), base=True, container=True, open_face=(1, 1)),
    "cabinet": _Cat((0.3, 0.45), (0.2, 0.3), (0.4, 0.6), base=True, support=True, container=True, open_face=(1, 1)),
    "sofa": _Cat((0.65, 0.85), (0.35, 0.45), (0.35, 0.45), base=True, front=True),
    "bin": _Cat((0.15, 0.22), (0.15, 0.22), (0.15, 0.25), container=True, open_face=(2, 1)),
    "box": _Cat((0.15, 0.25), (0.12, 0.2), (0.1, 0.18), support=True),
    "chair": _Cat((0.2, 0.25), (0.2, 0.25), (0.4, 0.45), front=True),
    "cup": _Cat((0.03, 0.05), (0.03, 0.05), (0.04, 0.06)),
    "book": _Cat((0.09, 0.13), (0.07, 0.1), (0.013, 0.02), support=True),
    "bottle": _Cat((0.03, 0.04), (0.03, 0.04), (0.1, 0.14)),
    "lamp": _Cat((0.05, 0.08), (0.05, 0.08), (0.15, 0.25)),
    "monitor": _Cat((0.2, 0.3), (0.02, 0.04), (0.15, 0.2), front=True),
    "plant": _Cat((0.06, 0.12), (0.06, 0.12), (0.1, 0.2)),
    "picture": _Cat((0.15, 0.3), (0.01, 0.02), (0.1, 0.25), front=True, mountable=True),
    "clock": _Cat((0.08, 0.12), (0.01, 0.02), (0.08, 0.12), front=True, mountable=True),
    "wall": _Cat((0.03, 0.03), (0.03, 0.03), (1.15, 1.15)),
}

_BASE_CYCLE = ("table", "desk", "shelf", "cabinet", "sofa")
_STACK_ITEMS = ("cup", "book", "lamp", "monitor", "plant", "bottle")
_CONTAIN_ITEMS = ("cup", "book", "bottle", "plant")
_ADJACENT_ITEMS = ("chair", "box", "plant", "bin")
_MOUNT_ITEMS = ("picture", "clock")

DEFAULT_CONFIG_MIX: Mapping[str, float] = {
    "stacked": 0.3,
    "contained": 0.2,
    "adjacent": 0.2,
    "facing": 0.15,
    "mounted": 0.15,
}


@dataclass(frozen=True)
class SceneSpec:
    """Knobs for one synthetic scene family."""

    n_objects: tuple[int, int] = (8, 12)  # content objects, excluding the 4 walls
    config_mix: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_CONFIG_MIX))
    drop_rate: float = 0.3
    n_frames: int = 8
    resolution: tuple[int, int] = (96, 72)
    proximity_radius: float = 0.5
    room: tuple[float, float, float] = (4.0, 4.0, 2.5)
    synonym_rate: float = 0.35
    max_retries: int = 64
    mask_surface_points: int = 512
    mask_interior_points: int = 256
    base_categories: Optional[tuple[str, ...]] = None  # restrict anchor furniture
    item_categories: Optional[tuple[str, ...]] = None  # restrict placed items

    def validate(self) -> None:
        lo, hi = self.n_objects
        if lo < 2 or hi < lo:
            raise GenerationError("n_objects range must be nonempty with at least 2 objects")
        if not (0.0 <= self.drop_rate < 1.0):
            raise GenerationError("drop rate must lie in [0, 1)")
        if not self.config_mix or any(w < 0 for w in self.config_mix.values()):
            raise GenerationError("config mix must be nonempty with nonnegative weights")
        unknown = set(self.config_mix) - set(DEFAULT_CONFIG_MIX)
        if unknown:
            raise GenerationError(f"unknown placement configurations: {sorted(unknown)}")
        if sum(self.config_mix.values()) <= 0:
            raise GenerationError("config mix weights sum to zero")
        if self.n_frames < 0 or self.resolution[0] <= 0 or self.resolution[1] <= 0:
            raise GenerationError("bad frame count or resolution")


def _yaw_rotation(yaw: float) -> np.ndarray:
    c, s = math.cos(yaw), math.sin(yaw)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _obb_overlap(a: OrientedBox, b: OrientedBox, margin: float = 2e-3) -> bool:
    """Separating-axis test; face contact within ``margin`` counts as separated."""
    ra, rb = a.rotation, b.rotation
    t = b.center - a.center
    axes = [ra[:, k] for k in range(3)] + [rb[:, k] for k in range(3)]
    for i in range(3):
        for j in range(3):
            cx = np.cross(ra[:, i], rb[:, j])
            n = np.linalg.norm(cx)
            if n > 1e-9:
                axes.append(cx / n)
    for axis in axes:
        proj_a = np.abs(axis @ ra) @ a.half_extents
        proj_b = np.abs(axis @ rb) @ b.half_extents
        if abs(axis @ t) > proj_a + proj_b - margin:
            return False
    return True


def _sample_half_extents(rng: np.random.Generator, cat: _Cat) -> np.ndarray:
    return np.array(
        [
            rng.uniform(*cat.hx),
            rng.uniform(*cat.hy),
            rng.uniform(*cat.hz),
        ]
    )


def _category_feature(category: str) -> np.ndarray:
    import hashlib

    digest = hashlib.blake2b(category.encode(), digest_size=8).digest()
    sub = np.random.default_rng(int.from_bytes(digest, "big"))
    return sub.standard_normal(16) / 4.0


def _box_stats(obb: OrientedBox, symmetric: bool, has_open_face: bool) -> np.ndarray:
    hx, hy, hz = obb.half_extents
    return np.array(
        [
            obb.center[0] / 5.0,
            obb.center[1] / 5.0,
            obb.center[2] / 5.0,
            hx,
            hy,
            hz,
            math.log(obb.volume() + 1e-12) / 10.0,
            math.sqrt(hx * hy),
            obb.bottom() / 5.0,
            obb.top() / 5.0,
            min(hx / hy, 8.0),
            min(hz / hx, 8.0),
            float(symmetric),
            float(has_open_face),
            float(np.linalg.norm(obb.half_extents)),
            0.0,
        ]
    )


def _sample_solid_points(rng: np.random.Generator, obb: OrientedBox, n_surface: int, n_interior: int) -> np.ndarray:
    h = obb.half_extents
    areas = np.array([h[1] * h[2], h[1] * h[2], h[0] * h[2], h[0] * h[2], h[0] * h[1], h[0] * h[1]])
    face = rng.choice(6, size=n_surface, p=areas / areas.sum())
    local = rng.uniform(-1.0, 1.0, size=(n_surface, 3)) * h
    axis = face // 2
    sign = np.where(face % 2 == 0, -1.0, 1.0)
    local[np.arange(n_surface), axis] = sign * h[axis]
    interior = rng.uniform(-1.0, 1.0, size=(n_interior, 3)) * h
    return obb.to_world(np.vstack([local, interior]))


def _sample_mask_points(
    rng: np.random.Generator,
    obb: OrientedBox,
    open_face: Optional[tuple[int, int]],
    n_surface: int,
    n_interior: int,
) -> np.ndarray:
    """Solid objects sample their box; hollow containers sample their wall slabs."""
    if open_face is None:
        return _sample_solid_points(rng, obb, n_surface, n_interior)
    from relwit.scenekit.model import SHELL_THICKNESS, shell_boxes

    slabs = shell_boxes(obb, open_face, SHELL_THICKNESS)
    volumes = np.array([s.volume() for s in slabs])
    shares = volumes / volumes.sum()
    total = n_surface + n_interior
    counts = np.floor(shares * total).astype(int)
    counts[0] += total - counts.sum()
    parts = []
    for slab, n in zip(slabs, counts):
        if n <= 0:
            continue
        n_surf = max(1, int(round(n * n_surface / total)))
        parts.append(_sample_solid_points(rng, slab, n_surf, max(0, n - n_surf)))
    pts = np.vstack(parts)
    # Numerical safety: shells sit flush with the outer box; clamp into it.
    local = obb.to_local(pts)
    local = np.clip(local, -obb.half_extents, obb.half_extents)
    return obb.to_world(local)


class _Placer:
    """Mutable placement state while a scene is being generated."""

    def __init__(self, spec: SceneSpec, rng: np.random.Generator):
        self.spec = spec
        self.rng = rng
        self.objects: list[dict] = []  # staged: category, obb, front yaw info, parent id

    def occupied(self, obb: OrientedBox, ignore: set[int]) -> bool:
        for idx, staged in enumerate(self.objects):
            if idx in ignore:
                continue
            if _obb_overlap(obb, staged["obb"]):
                return True
        return False

    def stage(self, category: str, obb: OrientedBox, front_axis, symmetric: bool, parent: Optional[int]) -> int:
        cat = _CATEGORIES[category]
        self.objects.append(
            {
                "category": category,
                "obb": obb,
                "front_axis": front_axis,
                "symmetric": symmetric,
                "open_face": cat.open_face,
                "parent": parent,
            }
        )
        return len(self.objects) - 1

    def place_walls(self) -> None:
        w, d, _ = self.spec.room
        t = 0.03  # wall half thickness
        layout = [
            ((-t, d / 2), (t, d / 2 + 2 * t), (1.0, 0.0)),
            ((w + t, d / 2), (t, d / 2 + 2 * t), (-1.0, 0.0)),
            ((w / 2, -t), (w / 2 + 2 * t, t), (0.0, 1.0)),
            ((w / 2, d + t), (w / 2 + 2 * t, t), (0.0, -1.0)),
        ]
        for (cx, cy), (hx, hy), (nx, ny) in layout:
            obb = OrientedBox(np.array([cx, cy, 1.15]), np.array([hx, hy, 1.15]), np.eye(3))
            self.stage("wall", obb, np.array([nx, ny, 0.0]), True, None)

    def place_base(self, category: str) -> Optional[int]:
        w, d, _ = self.spec.room
        cat = _CATEGORIES[category]
        for _ in range(self.spec.max_retries):
            half = _sample_half_extents(self.rng, cat)
            yaw = self.rng.uniform(0, 2 * math.pi)
            r = math.hypot(half[0], half[1])
            if r + 0.15 >= w - r - 0.15 or r + 0.15 >= d - r - 0.15:
                continue  # room too small for this footprint
            cx = self.rng.uniform(r + 0.15, w - r - 0.15)
            cy = self.rng.uniform(r + 0.15, d - r - 0.15)
            obb = OrientedBox(np.array([cx, cy, half[2]]), half, _yaw_rotation(yaw))
            if self.occupied(obb, ignore=set()):
                continue
            front = _yaw_rotation(yaw) @ np.array([0.0, -1.0, 0.0]) if cat.front else self._random_front()
            return self.stage(category, obb, front, not cat.front, None)
        return None


    def _pick_item(self, pool: tuple[str, ...]) -> Optional[str]:
        allowed = pool
        if self.spec.item_categories is not None:
            allowed = tuple(c for c in pool if c in self.spec.item_categories)
        if not allowed:
            return None
        return str(self.rng.choice(allowed))

    def _random_front(self) -> np.ndarray:
        theta = self.rng.uniform(0, 2 * math.pi)
        return np.array([math.cos(theta), math.sin(theta), 0.0])

    def _supports(self) -> list[int]:
        out = []
        for idx, staged in enumerate(self.objects):
            if _CATEGORIES[staged["category"]].support:
                out.append(idx)
        return out

    def _containers(self) -> list[int]:
        return [i for i, s in enumerate(self.objects) if _CATEGORIES[s["category"]].container]

    def place_stacked(self) -> Optional[int]:
        supports = self._supports()
        if not supports:
            return None
        # Prefer already-stacked supports half the time so small towers form,
        # which yields contact-free vertical-order ground truth.
        elevated = [i for i in supports if self.objects[i]["parent"] is not None]
        for _ in range(self.spec.max_retries):
            if elevated and self.rng.random() < 0.5:
                parent = int(self.rng.choice(elevated))
            else:
                parent = int(self.rng.choice(supports))
            sup = self.objects[parent]
            category = self._pick_item(_STACK_ITEMS)
            if category is None:
                return None
            cat = _CATEGORIES[category]
            half = _sample_half_extents(self.rng, cat)
            r = math.hypot(half[0], half[1])
            s_obb: OrientedBox = sup["obb"]
            if s_obb.half_extents[0] - r < 0.01 or s_obb.half_extents[1] - r < 0.01:
                continue
            lx = self.rng.uniform(-(s_obb.half_extents[0] - r - 0.01), s_obb.half_extents[0] - r - 0.01)
            ly = self.rng.uniform(-(s_obb.half_extents[1] - r - 0.01), s_obb.half_extents[1] - r - 0.01)
            top = s_obb.top()
            center_xy = s_obb.to_world(np.array([[lx, ly, 0.0]]))[0][:2]
            yaw = self.rng.uniform(0, 2 * math.pi)
            obb = OrientedBox(np.array([center_xy[0], center_xy[1], top + half[2]]), half, _yaw_rotation(yaw))
            if self.occupied(obb, ignore={parent}):
                continue
            front = _yaw_rotation(yaw) @ np.array([0.0, -1.0, 0.0]) if cat.front else self._random_front()
            return self.stage(category, obb, front, not cat.front, parent)
        return None

    def place_contained(self) -> Optional[int]:
        containers = self._containers()
        if not containers:
            return None
        for _ in range(self.spec.max_retries):
            parent = int(self.rng.choice(containers))
            cont = self.objects[parent]
            c_obb: OrientedBox = cont["obb"]
            open_axis, open_sign = _CATEGORIES[cont["category"]].open_face
            category = self._pick_item(_CONTAIN_ITEMS)
            if category is None:
                return None
            half = _sample_half_extents(self.rng, _CATEGORIES[category])
            wt = SHELL_THICKNESS
            inner = c_obb.half_extents - wt
            r = math.hypot(half[0], half[1])
            if inner[0] - r < 0.005 or inner[1] - r < 0.005 or inner[2] - half[2] < 0.005:
                continue
            lo = np.array([-(inner[0] - r), -(inner[1] - r), 0.0])
            hi = np.array([inner[0] - r, inner[1] - r, 0.0])
            local = np.array(
                [
                    self.rng.uniform(lo[0], hi[0]),
                    self.rng.uniform(lo[1], hi[1]),
                    -c_obb.half_extents[2] + wt + half[2],
                ]
            )
            center = c_obb.to_world(local[None, :])[0]
            yaw = self.rng.uniform(0, 2 * math.pi)
            obb = OrientedBox(center, half, _yaw_rotation(yaw))
            if self.occupied(obb, ignore={parent}):
                continue
            return self.stage(category, obb, self._random_front(), True, parent)
        return None

    def place_adjacent(self) -> Optional[int]:
        bases = [i for i, s in enumerate(self.objects) if _CATEGORIES[s["category"]].base]
        if not bases:
            return None
        w, d, _ = self.spec.room
        for _ in range(self.spec.max_retries):
            anchor_idx = int(self.rng.choice(bases))
            anchor: OrientedBox = self.objects[anchor_idx]["obb"]
            category = self._pick_item(_ADJACENT_ITEMS)
            if category is None:
                return None
            cat = _CATEGORIES[category]
            half = _sample_half_extents(self.rng, cat)
            theta = self.rng.uniform(0, 2 * math.pi)
            gap = self.rng.uniform(0.02, 0.45 * self.spec.proximity_radius)
            dist = math.hypot(anchor.half_extents[0], anchor.half_extents[1]) + math.hypot(half[0], half[1]) + gap
            cx = anchor.center[0] + dist * math.cos(theta)
            cy = anchor.center[1] + dist * math.sin(theta)
            r = math.hypot(half[0], half[1])
            if not (r + 0.1 < cx < w - r - 0.1 and r + 0.1 < cy < d - r - 0.1):
                continue
            yaw = self.rng.uniform(0, 2 * math.pi)
            obb = OrientedBox(np.array([cx, cy, half[2]]), half, _yaw_rotation(yaw))
            if self.occupied(obb, ignore=set()):
                continue
            front = _yaw_rotation(yaw) @ np.array([0.0, -1.0, 0.0]) if cat.front else self._random_front()
            return self.stage(category, obb, front, not cat.front, anchor_idx)
        return None

    def place_facing(self) -> Optional[int]:
        targets = [
            i
            for i, s in enumerate(self.objects)
            if s["category"] in ("table", "desk", "sofa", "shelf", "cabinet")
        ]
        if not targets:
            return None
        w, d, _ = self.spec.room
        if self.spec.item_categories is not None and "chair" not in self.spec.item_categories:
            return None
        for _ in range(self.spec.max_retries):
            target_idx = int(self.rng.choice(targets))
            target: OrientedBox = self.objects[target_idx]["obb"]
            half = _sample_half_extents(self.rng, _CATEGORIES["chair"])
            theta = self.rng.uniform(0, 2 * math.pi)
            gap = self.rng.uniform(0.25, 1.0)
            dist = math.hypot(target.half_extents[0], target.half_extents[1]) + math.hypot(half[0], half[1]) + gap
            cx = target.center[0] + dist * math.cos(theta)
            cy = target.center[1] + dist * math.sin(theta)
            r = math.hypot(half[0], half[1])
            if not (r + 0.1 < cx < w - r - 0.1 and r + 0.1 < cy < d - r - 0.1):
                continue
            to_target = np.array([target.center[0] - cx, target.center[1] - cy, 0.0])
            to_target /= np.linalg.norm(to_target)
            jitter = self.rng.uniform(-0.12, 0.12)
            base_yaw = math.atan2(to_target[1], to_target[0]) + jitter
            front = np.array([math.cos(base_yaw), math.sin(base_yaw), 0.0])
            # Chair local front is -y, so yaw aligns local -y with the front direction.
            yaw = base_yaw + math.pi / 2
            obb = OrientedBox(np.array([cx, cy, half[2]]), half, _yaw_rotation(yaw))
            if self.occupied(obb, ignore=set()):
                continue
            return self.stage("chair", obb, front, False, target_idx)
        return None

    def place_mounted(self) -> Optional[int]:
        w, d, _ = self.spec.room
        up = np.array([0.0, 0.0, 1.0])
        walls = [i for i, s in enumerate(self.objects) if s["category"] == "wall"]
        for _ in range(self.spec.max_retries):
            wall_idx = int(self.rng.choice(walls))
            wall: OrientedBox = self.objects[wall_idx]["obb"]
            normal = np.asarray(self.objects[wall_idx]["front_axis"], dtype=np.float64)
            category = self._pick_item(_MOUNT_ITEMS)
            if category is None:
                return None
            half = _sample_half_extents(self.rng, _CATEGORIES[category])
            lateral = np.cross(normal, up)  # right-handed: lateral x normal = up
            length = w if abs(lateral[0]) > 0.5 else d
            if 0.4 + half[0] >= length - 0.4 - half[0]:
                continue
            along = self.rng.uniform(0.4 + half[0], length - 0.4 - half[0])
            height = self.rng.uniform(1.2, 1.9)
            thin = wall.half_extents[0] if abs(normal[0]) > 0.5 else wall.half_extents[1]
            inner_center = wall.center + normal * thin  # point on the inner wall plane
            center = inner_center + lateral * (along - length / 2.0) + normal * half[1]
            center[2] = height
            rot = np.stack([lateral, normal, up], axis=1)
            obb = OrientedBox(center, half, rot)
            if self.occupied(obb, ignore={wall_idx}):
                continue
            return self.stage(category, obb, normal.copy(), False, wall_idx)
        return None


def _look_at(eye: np.ndarray, target: np.ndarray, fx: float, fy: float, cx: float, cy: float) -> CameraPose:
    forward = target - eye
    forward = forward / np.linalg.norm(forward)
    up = np.array([0.0, 0.0, 1.0])
    if abs(forward @ up) > 0.999:
        up = np.array([0.0, 1.0, 0.0])
    right = np.cross(forward, up)
    right /= np.linalg.norm(right)
    down = np.cross(forward, right)
    rotation = np.stack([right, down, forward], axis=0)
    translation = -rotation @ eye
    return CameraPose(rotation=rotation, translation=translation, fx=fx, fy=fy, cx=cx, cy=cy)


def generate_scene(spec: SceneSpec, seed: int) -> Scene:
    """Deterministically generate one scene for (spec, seed)."""
    spec.validate()
    rng = np.random.default_rng(seed)
    placer = _Placer(spec, rng)
    placer.place_walls()

    n_total = int(rng.integers(spec.n_objects[0], spec.n_objects[1] + 1))
    n_bases = max(2, n_total // 3)
    n_items = n_total - n_bases

    base_order = list(spec.base_categories if spec.base_categories else _BASE_CYCLE)
    rng.shuffle(base_order)
    for k in range(n_bases):
        preferred = base_order[k % len(base_order)]
        fallback_pool = spec.base_categories if spec.base_categories else ("cabinet", "shelf", "desk")
        fallbacks = [preferred] + [c for c in fallback_pool if c != preferred]
        if not any(placer.place_base(c) is not None for c in fallbacks):
            raise GenerationError(
                f"could not place base object {k + 1}/{n_bases} within {spec.max_retries} retries"
            )

    config_names = sorted(spec.config_mix)
    weights = np.array([spec.config_mix[c] for c in config_names], dtype=np.float64)
    weights = weights / weights.sum()
    placers = {
        "stacked": placer.place_stacked,
        "contained": placer.place_contained,
        "adjacent": placer.place_adjacent,
        "facing": placer.place_facing,
        "mounted": placer.place_mounted,
    }
    for k in range(n_items):
        config = str(rng.choice(config_names, p=weights))
        if placers[config]() is not None:
            continue
        # The drawn configuration cannot fit; fall back across the others before
        # declaring the spec unsatisfiable.
        placed = False
        for fallback in config_names:
            if fallback != config and placers[fallback]() is not None:
                placed = True
                break
        if not placed:
            raise GenerationError(
                f"could not place item {k + 1}/{n_items} in any configuration "
                f"within {spec.max_retries} retries each"
            )

    objects = []
    for oid, staged in enumerate(placer.objects):
        obb = staged["obb"]
        mask = _sample_mask_points(
            rng, obb, staged["open_face"], spec.mask_surface_points, spec.mask_interior_points
        )
        feature = np.concatenate(
            [
                _category_feature(staged["category"]),
                _box_stats(obb, staged["symmetric"], staged["open_face"] is not None),
            ]
        )
        front = np.asarray(staged["front_axis"], dtype=np.float64)
        front = front / np.linalg.norm(front)
        objects.append(
            ObjectInstance(
                id=oid,
                category=staged["category"],
                obb=obb,
                mask_points=mask,
                feature=feature,
                front_axis=front,
                symmetric=staged["symmetric"],
                open_face=staged["open_face"],
            )
        )

    corners = np.vstack([o.obb.corners() for o in objects])
    centroid_all = corners.mean(axis=0)
    room_scale = float(2.0 * np.max(np.linalg.norm(corners - centroid_all, axis=1)))

    content = [o for o in objects if o.category != "wall"]
    centroid = np.mean([o.obb.center for o in content], axis=0)
    centroid[2] = min(centroid[2], 0.9)
    w, d, _ = spec.room
    frames = []
    fx = 0.9 * spec.resolution[0]
    for t in range(spec.n_frames):
        angle = 2 * math.pi * t / max(spec.n_frames, 1) + rng.uniform(-0.15, 0.15)
        radius = rng.uniform(1.6, 2.2)
        eye = np.array(
            [
                np.clip(w / 2 + radius * math.cos(angle), 0.25, w - 0.25),
                np.clip(d / 2 + radius * math.sin(angle), 0.25, d - 0.25),
                rng.uniform(1.2, 1.9),
            ]
        )
        # Alternate between the room centroid and individual objects so that
        # off-center objects are covered by at least some views.
        if t % 2 == 1 and content:
            focus = content[t % len(content)].obb.center
            target = 0.4 * centroid + 0.6 * focus
        else:
            target = centroid
        if np.linalg.norm(target - eye) < 0.3:
            target = centroid + np.array([0.1, 0.1, 0.0])
        pose = _look_at(eye, target, fx, fx, spec.resolution[0] / 2.0, spec.resolution[1] / 2.0)
        frames.append(Frame(index=t, pose=pose))

    scene = Scene(
        scene_id=f"scene-{seed:08d}",
        frames=frames,
        objects=objects,
        labels=[],
        room_scale=room_scale,
        seed=seed,
        resolution=spec.resolution,
        proximity_radius=spec.proximity_radius,
    )

    from relwit.scenekit.render import visibility

    for obj in scene.objects:
        vis_frames = {f.index for f in frames if visibility(scene, obj.id, f.index) > 0.05}
        obj.visible_frames = frozenset(vis_frames)

    from relwit.scenekit.oracle import SYNONYMS, derive_ground_truth

    triples = derive_ground_truth(objects, spec.proximity_radius)
    labels = []
    for subject_id, phrase, object_id in triples:
        status = LabelStatus.UNLABELED if rng.random() < spec.drop_rate else LabelStatus.ANNOTATED_POSITIVE
        labels.append(RelationLabel(subject_id, object_id, phrase, status, truth=1))
        synonyms = SYNONYMS.get(phrase, ())
        if synonyms and rng.random() < spec.synonym_rate:
            syn = str(rng.choice(synonyms))
            syn_status = (
                LabelStatus.UNLABELED if rng.random() < spec.drop_rate else LabelStatus.ANNOTATED_POSITIVE
            )
            labels.append(RelationLabel(subject_id, object_id, syn, syn_status, truth=1))
    scene.labels.extend(labels)
    return scene
