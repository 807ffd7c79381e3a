"""Hidden-truth oracle: strict geometric predicates over generated scenes.

Everything in this module may read ground truth. It backs label generation,
synthetic audit annotators and evaluation harnesses. Learner-facing modules
must never import it (enforced by a hygiene test).
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from relwit.scenekit.model import ObjectInstance, Scene

# Strict thresholds for deriving ground-truth bits. Deliberately tighter than
# the probes' soft scores: truth is by construction, probes are inference.
CONTACT_TOL = 0.025
SUPPORT_OVERLAP = 0.5
CONTAIN_FRACTION = 0.9
ABOVE_GAP = 0.02
ABOVE_OVERLAP = 0.3
FACING_HALF_ANGLE = np.deg2rad(12.0)
FACING_MAX_DIST = 1.5
TOUCH_TOL = 0.015
MOUNT_MIN_BOTTOM = 0.15
OPEN_FACE_INFLATION = 0.5  # fraction of the open axis' half extent

_GRID = 0.02  # footprint rasterization cell, meters

# Canonical generator phrase -> interchangeable true synonyms (same predicate).
SYNONYMS: dict[str, tuple[str, ...]] = {
    "on": ("standing on", "resting on", "on top of", "supported by"),
    "inside": ("in", "stored in"),
    "near": ("next to", "beside"),
    "above": ("over",),
    "below": ("under",),
    "facing": ("looking at",),
    "mounted on": ("attached to",),
}


def _min_distance(a: ObjectInstance, b: ObjectInstance) -> float:
    """Minimum mask-point-to-box distance, evaluated in both directions.

    Point-to-box is analytic on the target side, so face contact measures as
    exactly zero regardless of mask sampling density.
    """
    d_ab = b.obb.surface_distance_outside(a.mask_points).min()
    d_ba = a.obb.surface_distance_outside(b.mask_points).min()
    return float(min(d_ab, d_ba))


def _hull_2d(points: np.ndarray) -> np.ndarray:
    """Convex hull of 2D points, CCW, via Andrew's monotone chain."""
    pts = np.unique(points, axis=0)
    if len(pts) <= 2:
        return pts
    pts = pts[np.lexsort((pts[:, 1], pts[:, 0]))]

    def half(seq):
        out = []
        for p in seq:
            while len(out) >= 2:
                u, v = out[-1] - out[-2], p - out[-2]
                if u[0] * v[1] - u[1] * v[0] > 0:
                    break
                out.pop()
            out.append(p)
        return out

    lower = half(pts)
    upper = half(pts[::-1])
    return np.array(lower[:-1] + upper[:-1])


def _inside_hull(hull: np.ndarray, points: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    if len(hull) < 3:
        return np.zeros(len(points), dtype=bool)
    ok = np.ones(len(points), dtype=bool)
    for k in range(len(hull)):
        a, b = hull[k], hull[(k + 1) % len(hull)]
        edge = b - a
        ok &= (points[:, 0] - a[0]) * edge[1] - (points[:, 1] - a[1]) * edge[0] <= tol
    return ok


def _footprint_overlap(subject: ObjectInstance, target: ObjectInstance) -> float:
    """Fraction of the subject's mask points whose gravity-plane projection
    falls inside the target box's projected footprint."""
    hull = _hull_2d(target.obb.corners()[:, :2])
    return float(_inside_hull(hull, subject.mask_points[:, :2]).mean())


def containment_fraction_true(subject: ObjectInstance, container: ObjectInstance) -> float:
    inflation = 0.0
    if container.open_face is not None:
        inflation = OPEN_FACE_INFLATION * container.obb.half_extents[container.open_face[0]]
    inside = container.obb.contains(
        subject.mask_points, tol=1e-9, open_face=container.open_face, open_inflation=inflation
    )
    return float(inside.mean())


def is_supported_by(subject: ObjectInstance, target: ObjectInstance) -> bool:
    if subject.category == "wall" or target.category == "wall":
        return False
    if abs(subject.obb.bottom() - target.obb.top()) > CONTACT_TOL:
        return False
    if _footprint_overlap(subject, target) < SUPPORT_OVERLAP:
        return False
    return _min_distance(subject, target) <= CONTACT_TOL


def is_inside(subject: ObjectInstance, container: ObjectInstance) -> bool:
    if subject.category == "wall" or container.category == "wall":
        return False
    if container.obb.volume() <= subject.obb.volume():
        return False
    return containment_fraction_true(subject, container) >= CONTAIN_FRACTION


def is_above(subject: ObjectInstance, target: ObjectInstance) -> bool:
    if subject.category == "wall" or target.category == "wall":
        return False
    if subject.obb.bottom() < target.obb.top() + ABOVE_GAP:
        return False
    # Vertical columns overlap in either containment direction: a large book
    # is above a small cup when the cup sits under its footprint.
    overlap = max(_footprint_overlap(subject, target), _footprint_overlap(target, subject))
    return overlap >= ABOVE_OVERLAP


def is_near(subject: ObjectInstance, target: ObjectInstance, proximity_radius: float) -> bool:
    if subject.category == "wall" or target.category == "wall":
        return False
    if _min_distance(subject, target) > proximity_radius:
        return False
    # Stronger relations dominate: supported/contained pairs are not "near".
    for a, b in ((subject, target), (target, subject)):
        if is_supported_by(a, b) or is_inside(a, b):
            return False
    return True


def is_facing(subject: ObjectInstance, target: ObjectInstance) -> bool:
    if subject.symmetric or subject.category == "wall" or target.category == "wall":
        return False
    direction = target.obb.center - subject.obb.center
    direction[2] = 0.0
    norm = np.linalg.norm(direction)
    if norm < 0.05:
        return False
    front = subject.front_axis.copy()
    front[2] = 0.0
    fn = np.linalg.norm(front)
    if fn < 1e-9:
        return False
    cos = float(direction @ front / (norm * fn))
    if np.arccos(np.clip(cos, -1.0, 1.0)) > FACING_HALF_ANGLE:
        return False
    return _min_distance(subject, target) <= FACING_MAX_DIST


def is_mounted_on(subject: ObjectInstance, target: ObjectInstance) -> bool:
    if target.category != "wall" or subject.category == "wall":
        return False
    if subject.obb.bottom() < MOUNT_MIN_BOTTOM:
        return False
    return _min_distance(subject, target) <= CONTACT_TOL


def is_touching(subject: ObjectInstance, target: ObjectInstance) -> bool:
    if subject.category == "wall" or target.category == "wall":
        return False
    if _min_distance(subject, target) > TOUCH_TOL:
        return False
    for a, b in ((subject, target), (target, subject)):
        if is_supported_by(a, b) or is_inside(a, b) or is_mounted_on(a, b):
            return False
    return True


def derive_ground_truth(
    objects: list[ObjectInstance], proximity_radius: float
) -> list[tuple[int, str, int]]:
    """All true canonical (subject_id, phrase, object_id) triples in the scene."""
    triples = []
    for i, a in enumerate(objects):
        for j, b in enumerate(objects):
            if i == j:
                continue
            if a.category == "wall" and b.category == "wall":
                continue
            if is_supported_by(a, b):
                triples.append((a.id, "on", b.id))
            if is_inside(a, b):
                triples.append((a.id, "inside", b.id))
            if is_above(a, b):
                triples.append((a.id, "above", b.id))
                triples.append((b.id, "below", a.id))
            if is_facing(a, b):
                triples.append((a.id, "facing", b.id))
            if is_mounted_on(a, b):
                triples.append((a.id, "mounted on", b.id))
            if i < j and is_near(a, b, proximity_radius):
                triples.append((a.id, "near", b.id))
            if i < j and is_touching(a, b):
                triples.append((a.id, "touching", b.id))
    return sorted(set(triples))


def relation_truth(scene: Scene, subject_id: int, object_id: int, phrase: str) -> Optional[bool]:
    """Hidden truth of an arbitrary candidate; None when geometrically undecidable.

    Phrases are routed through the lexicon to the matching predicate. Camera-
    dependent polarities (front/behind) and functional phrases have no static
    3D truth and return None.
    """
    from relwit import phrasebank
    from relwit.families import WitnessFamily

    entry = phrasebank.default_lexicon().lookup(phrasebank.normalize_phrase(phrase))
    if entry is None:
        return None
    subject = scene.object_by_id(subject_id)
    target = scene.object_by_id(object_id)
    if subject.category == "wall" and target.category == "wall":
        return None
    fam = entry.family
    if fam is WitnessFamily.SUPPORT:
        return is_supported_by(subject, target)
    if fam is WitnessFamily.CONTAINMENT:
        return is_inside(subject, target)
    if fam is WitnessFamily.PROXIMITY:
        # Physical truth is metric closeness alone. Label emission and graph
        # decoding apply the stronger-relation exclusion, truth does not:
        # a book resting on a shelf genuinely is "near" it.
        return _min_distance(subject, target) <= scene.proximity_radius
    if fam is WitnessFamily.VERTICAL_ORDER:
        if entry.direction == "up":
            return is_above(subject, target)
        if entry.direction == "down":
            return is_above(target, subject)
        return None  # front/behind depend on the viewpoint
    if fam is WitnessFamily.ATTACHMENT:
        return is_mounted_on(subject, target)
    if fam is WitnessFamily.ORIENTATION:
        return is_facing(subject, target)
    if fam is WitnessFamily.INTERACTION:
        if entry.phrase == "holding":
            return False  # nothing grasps anything in a static desk scene
        return _min_distance(subject, target) <= TOUCH_TOL
    return None  # functional/uncertain: not observable in a static scan


def dropped_true_relations(scene: Scene) -> list[tuple[int, str, int]]:
    """True relations demoted to Unlabeled by the annotation-drop process."""
    from relwit.scenekit.model import LabelStatus

    out = []
    for lab in scene.labels:
        if lab.status is LabelStatus.UNLABELED and lab.truth == 1:
            out.append((lab.subject_id, lab.phrase, lab.object_id))
    return out
