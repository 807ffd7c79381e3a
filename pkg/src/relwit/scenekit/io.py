"""Bit-exact JSON-Lines scene serialization (schema_version 1).

Record kinds: ``meta``, ``frame``, ``object``, ``label``. Floats are written
with Python's shortest round-trip repr, so save -> load -> save is stable.
``include_truth=False`` produces the learner-facing view with all hidden
truth bits stripped.
"""

from __future__ import annotations

import json
from typing import Optional

import numpy as np

from relwit.scenekit.model import (
    CameraPose,
    Frame,
    LabelStatus,
    ObjectInstance,
    OrientedBox,
    RelationLabel,
    Scene,
)

SCHEMA_VERSION = 1


class SceneFormatError(ValueError):
    """Malformed scene file; message carries the 1-based line number."""


def _mat(m: np.ndarray) -> list[list[float]]:
    return [[float(x) for x in row] for row in m]


def _vec(v: np.ndarray) -> list[float]:
    return [float(x) for x in v]


def save_scene(scene: Scene, path, include_truth: bool = True) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        meta = {
            "kind": "meta",
            "schema_version": SCHEMA_VERSION,
            "scene_id": scene.scene_id,
            "seed": scene.seed,
            "room_scale": scene.room_scale,
            "resolution": list(scene.resolution),
            "proximity_radius": scene.proximity_radius,
        }
        fh.write(json.dumps(meta) + "\n")
        for frame in scene.frames:
            rec = {
                "kind": "frame",
                "index": frame.index,
                "rotation": _mat(frame.pose.rotation),
                "translation": _vec(frame.pose.translation),
                "intrinsics": {
                    "fx": frame.pose.fx,
                    "fy": frame.pose.fy,
                    "cx": frame.pose.cx,
                    "cy": frame.pose.cy,
                },
            }
            fh.write(json.dumps(rec) + "\n")
        for obj in scene.objects:
            rec = {
                "kind": "object",
                "id": obj.id,
                "category": obj.category,
                "obb": {
                    "center": _vec(obj.obb.center),
                    "half_extents": _vec(obj.obb.half_extents),
                    "rotation": _mat(obj.obb.rotation),
                },
                "mask_points": _mat(obj.mask_points),
                "feature": _vec(obj.feature),
                "front_axis": _vec(obj.front_axis),
                "symmetric": obj.symmetric,
                "open_face": list(obj.open_face) if obj.open_face is not None else None,
                "visible_frames": sorted(obj.visible_frames),
            }
            fh.write(json.dumps(rec) + "\n")
        for lab in scene.labels:
            rec = {
                "kind": "label",
                "subject_id": lab.subject_id,
                "object_id": lab.object_id,
                "phrase": lab.phrase,
                "status": lab.status.value,
            }
            if include_truth and lab.truth is not None:
                rec["truth"] = lab.truth
            fh.write(json.dumps(rec) + "\n")


def load_scene(path) -> Scene:
    meta: Optional[dict] = None
    frames: list[Frame] = []
    objects: list[ObjectInstance] = []
    labels: list[tuple[int, dict]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SceneFormatError(f"line {lineno}: invalid JSON ({exc.msg})") from None
            kind = rec.get("kind")
            try:
                if kind == "meta":
                    if rec.get("schema_version") != SCHEMA_VERSION:
                        raise SceneFormatError(
                            f"line {lineno}: unsupported schema_version {rec.get('schema_version')}"
                        )
                    meta = rec
                elif kind == "frame":
                    intr = rec["intrinsics"]
                    pose = CameraPose(
                        rotation=np.array(rec["rotation"]),
                        translation=np.array(rec["translation"]),
                        fx=intr["fx"],
                        fy=intr["fy"],
                        cx=intr["cx"],
                        cy=intr["cy"],
                    )
                    frames.append(Frame(index=int(rec["index"]), pose=pose))
                elif kind == "object":
                    obb = OrientedBox(
                        center=np.array(rec["obb"]["center"]),
                        half_extents=np.array(rec["obb"]["half_extents"]),
                        rotation=np.array(rec["obb"]["rotation"]),
                    )
                    open_face = rec.get("open_face")
                    objects.append(
                        ObjectInstance(
                            id=int(rec["id"]),
                            category=rec["category"],
                            obb=obb,
                            mask_points=np.array(rec["mask_points"]),
                            feature=np.array(rec["feature"]),
                            front_axis=np.array(rec["front_axis"]),
                            symmetric=bool(rec["symmetric"]),
                            open_face=tuple(open_face) if open_face is not None else None,
                            visible_frames=frozenset(rec["visible_frames"]),
                        )
                    )
                elif kind == "label":
                    labels.append((lineno, rec))
                else:
                    raise SceneFormatError(f"line {lineno}: unknown record kind {kind!r}")
            except (KeyError, TypeError) as exc:
                raise SceneFormatError(f"line {lineno}: malformed {kind} record ({exc})") from None
    if meta is None:
        raise SceneFormatError("line 1: missing meta record")

    known_ids = {o.id for o in objects}
    parsed_labels = []
    for lineno, rec in labels:
        sid, oid = int(rec["subject_id"]), int(rec["object_id"])
        if sid not in known_ids or oid not in known_ids:
            raise SceneFormatError(
                f"line {lineno}: label references missing object id {sid if sid not in known_ids else oid}"
            )
        parsed_labels.append(
            RelationLabel(
                subject_id=sid,
                object_id=oid,
                phrase=rec["phrase"],
                status=LabelStatus(rec["status"]),
                truth=rec.get("truth"),
            )
        )
    return Scene(
        scene_id=meta["scene_id"],
        frames=frames,
        objects=objects,
        labels=parsed_labels,
        room_scale=float(meta["room_scale"]),
        seed=int(meta["seed"]),
        resolution=tuple(meta["resolution"]),
        proximity_radius=float(meta.get("proximity_radius", 0.5)),
    )
